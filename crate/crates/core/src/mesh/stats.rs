use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CoverMesh;
use crate::geom::{corner_angle, corner_angle3, ExtPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    /// Maximal edge length: z-plane inside, w = 1/z outside.
    pub h: f64,
    /// Smallest face angle in the face charts (radians).
    pub min_angle: f64,
    /// Smallest angle of the flat chord triangles in R³.
    pub min_chord_angle: f64,
    /// Largest sum of the two angles opposite an edge.
    pub max_opposite_sum: f64,
    /// Largest number of vertices in a chart disk of radius h.
    pub max_local_density: usize,
    pub n_vertices: usize,
    pub n_faces: usize,
}

fn face_angles(mesh: &CoverMesh, f: usize) -> [f64; 3] {
    let c = mesh.face_chart(f);
    [0, 1, 2].map(|i| corner_angle(c[i], c[(i + 1) % 3], c[(i + 2) % 3]))
}

pub fn max_edge_length(mesh: &CoverMesh) -> f64 {
    let mut h: f64 = 0.0;
    for f in 0..mesh.n_faces() {
        let c = mesh.face_chart(f);
        for i in 0..3 {
            h = h.max((c[i] - c[(i + 1) % 3]).norm());
        }
    }
    h
}

pub fn mesh_stats(mesh: &CoverMesh) -> MeshStats {
    let topo = &mesh.topo;
    let h = max_edge_length(mesh);
    let mut min_angle = f64::INFINITY;
    let mut min_chord_angle = f64::INFINITY;
    for f in 0..mesh.n_faces() {
        for a in face_angles(mesh, f) {
            min_angle = min_angle.min(a);
        }
        let p = topo.faces[f].map(|v| mesh.sphere_pos(v));
        for i in 0..3 {
            min_chord_angle = min_chord_angle.min(corner_angle3(p[i], p[(i + 1) % 3], p[(i + 2) % 3]));
        }
    }
    let mut max_opposite_sum: f64 = 0.0;
    for &e in &topo.edges {
        let t = topo.twin[e];
        if t == super::NONE {
            continue;
        }
        let a = face_angles(mesh, e / 3)[(e % 3 + 2) % 3];
        let b = face_angles(mesh, t / 3)[(t % 3 + 2) % 3];
        max_opposite_sum = max_opposite_sum.max(a + b);
    }
    let max_local_density = (0..mesh.n_vertices()).map(|v| local_density(mesh, v, h)).max().unwrap_or(0);
    MeshStats {
        h,
        min_angle,
        min_chord_angle,
        max_opposite_sum,
        max_local_density,
        n_vertices: mesh.n_vertices(),
        n_faces: mesh.n_faces(),
    }
}

enum Chart {
    Plane { outer: bool },
    Branch { site_vertex: usize, center: ExtPoint, gamma: f64 },
}

fn local(center: ExtPoint, p: ExtPoint) -> Option<Complex64> {
    match center {
        ExtPoint::Finite(o) => p.as_finite().map(|z| z - o),
        ExtPoint::Infinity => p.inverted().as_finite(),
    }
}

/// Vertices within chart distance h of `v`, continuing the branch chart
/// (z − O)^γ across sheets inside the adaptation disks.
pub fn local_density(mesh: &CoverMesh, v: usize, h: f64) -> usize {
    let pos = |u: usize| mesh.vertices[u].pos;
    let mut chart = Chart::Plane { outer: !mesh.is_inside(v) };
    for s in &mesh.sites {
        if s.gamma >= 1.0 {
            continue;
        }
        if s.vertex == v || local(s.position, pos(v)).map(|w| w.norm() < s.r_o).unwrap_or(false) {
            chart = Chart::Branch { site_vertex: s.vertex, center: s.position, gamma: s.gamma };
            break;
        }
    }
    let n = mesh.n_vertices();
    let mut seen = vec![false; n];
    let mut coord = vec![Complex64::new(0.0, 0.0); n];
    let mut phi = vec![0.0f64; n];
    let plane = |u: usize, outer: bool| {
        let p = if outer { pos(u).inverted() } else { pos(u) };
        p.as_finite()
    };
    let root = match &chart {
        Chart::Plane { outer } => match plane(v, *outer) {
            Some(c) => c,
            None => return 1,
        },
        Chart::Branch { site_vertex, center, gamma } => {
            if *site_vertex == v {
                Complex64::new(0.0, 0.0)
            } else {
                let w = local(*center, pos(v)).unwrap();
                phi[v] = w.arg();
                Complex64::from_polar(w.norm().powf(*gamma), gamma * phi[v])
            }
        }
    };
    coord[v] = root;
    seen[v] = true;
    let mut count = 1;
    let mut queue = VecDeque::from([v]);
    let tol = h * (1.0 + 1e-9);
    while let Some(u) = queue.pop_front() {
        if let Chart::Branch { site_vertex, .. } = &chart {
            if *site_vertex == u && u != v {
                continue;
            }
        }
        for w in mesh.topo.neighbors(u) {
            if seen[w] {
                continue;
            }
            let c = match &chart {
                Chart::Plane { outer } => match plane(w, *outer) {
                    Some(c) => c,
                    None => continue,
                },
                Chart::Branch { site_vertex, center, gamma } => {
                    if w == *site_vertex {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let Some(lw) = local(*center, pos(w)) else { continue };
                        let aw = lw.arg();
                        phi[w] = if u == *site_vertex {
                            aw
                        } else {
                            let lu = local(*center, pos(u)).unwrap();
                            let mut d = aw - lu.arg();
                            d -= (d / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
                            phi[u] + d
                        };
                        Complex64::from_polar(lw.norm().powf(*gamma), gamma * phi[w])
                    }
                }
            };
            seen[w] = true;
            if (c - root).norm() <= tol {
                coord[w] = c;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count
}
