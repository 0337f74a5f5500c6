//! Point sampling, spherical Delaunay triangulation, adaptation near branch
//! points and lifting to the covering surface.

mod adapt;
mod delaunay;
mod lift;
mod rpm;
mod sample;
mod stats;
pub mod topology;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use adapt::{adapt_near_branch, default_h_target, h_target_bound, sample_spacing};
pub use delaunay::{spherical_delaunay, triangulate_extended, violates_circumcap, BaseMesh};
pub use lift::lift_to_cover;
pub use rpm::{from_rpm_str, read_rpm, to_rpm_string, write_rpm};
pub use sample::{fibonacci_points, random_points};
pub use stats::{local_density, max_edge_length, mesh_stats, MeshStats};
pub use topology::{Topology, NONE};

use crate::covering::BranchedCover;
use crate::error::{Error, Result};
use crate::geom::{orient2, ExtPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Inner,
    Outer,
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub sheet: usize,
    pub pos: ExtPoint,
    /// Index of the branch point in the cover's list.
    pub branch: Option<usize>,
}

/// A lift of a branch point to the covering surface.
#[derive(Clone, Debug)]
pub struct BranchSite {
    pub vertex: usize,
    pub index: usize,
    pub position: ExtPoint,
    pub gamma: f64,
    pub r_o: f64,
}

#[derive(Clone, Debug)]
pub struct CoverMesh {
    pub vertices: Vec<Vertex>,
    pub topo: Topology,
    pub rho: f64,
    pub degree: usize,
    pub sites: Vec<BranchSite>,
    pub regions: Vec<Region>,
}

impl CoverMesh {
    /// Assembles a mesh and derives regions; `r_o` is looked up per branch index.
    pub fn new(vertices: Vec<Vertex>, topo: Topology, rho: f64, degree: usize, r_o: &dyn Fn(usize) -> f64) -> Result<Self> {
        let mut mesh = CoverMesh { vertices, topo, rho, degree, sites: Vec::new(), regions: Vec::new() };
        mesh.regions = (0..mesh.topo.n_faces()).map(|f| mesh.classify(f)).collect();
        let mut sites = Vec::new();
        for (v, vert) in mesh.vertices.iter().enumerate() {
            if let Some(index) = vert.branch {
                let aperture = mesh.aperture(v);
                let turns = (aperture / (2.0 * std::f64::consts::PI)).round().max(1.0);
                sites.push(BranchSite { vertex: v, index, position: vert.pos, gamma: 1.0 / turns, r_o: r_o(index) });
            }
        }
        mesh.sites = sites;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.topo.n_faces()
    }

    pub fn is_inside(&self, v: usize) -> bool {
        match self.vertices[v].pos {
            ExtPoint::Finite(z) => z.norm() < self.rho,
            ExtPoint::Infinity => false,
        }
    }

    fn classify(&self, f: usize) -> Region {
        let n = self.topo.faces[f].iter().filter(|&&v| self.is_inside(v)).count();
        match n {
            0 => Region::Outer,
            1 => Region::Boundary,
            _ => Region::Inner,
        }
    }

    /// Face corners in the chart used for that face: z for inner and
    /// boundary faces, w = 1/z for outer faces and faces touching ∞.
    pub fn face_chart(&self, f: usize) -> [Complex64; 3] {
        let tri = self.topo.faces[f];
        let outer = self.regions[f] == Region::Outer || tri.iter().any(|&v| self.vertices[v].pos.is_infinite());
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let p = self.vertices[tri[i]].pos;
            let p = if outer { p.inverted() } else { p };
            out[i] = p.as_finite().unwrap_or(Complex64::new(f64::INFINITY, f64::INFINITY));
        }
        out
    }

    pub fn sphere_pos(&self, v: usize) -> [f64; 3] {
        self.vertices[v].pos.to_sphere()
    }

    /// Total corner angle at `v`, measured in z (or w at ∞).
    pub fn aperture(&self, v: usize) -> f64 {
        let at_inf = self.vertices[v].pos.is_infinite();
        let chart = |u: usize| {
            let p = self.vertices[u].pos;
            let p = if at_inf { p.inverted() } else { p };
            p.as_finite()
        };
        let mut total = 0.0;
        for h in self.topo.outgoing(v) {
            let a = chart(v);
            let b = chart(self.topo.dest(h));
            let c = chart(self.topo.opposite(h));
            if let (Some(a), Some(b), Some(c)) = (a, b, c) {
                total += crate::geom::corner_angle(a, b, c);
            } else {
                // A neighbour at ∞ of a finite vertex: the corner is the angle
                // between the two rays, one of them pointing radially outward.
                let a = a.unwrap();
                let dir = |p: Option<Complex64>| p.map(|p| p - a).unwrap_or(a);
                let (u, w) = (dir(b), dir(c));
                let p = u.conj() * w;
                total += p.im.abs().atan2(p.re);
            }
        }
        total
    }

    /// Checks manifoldness, orientation, and boundary-edge lengths.
    pub fn validate(&self) -> Result<()> {
        self.topo.check()?;
        if !self.topo.is_closed() {
            return Err(Error::Topology("cover mesh is not closed".into()));
        }
        for f in 0..self.n_faces() {
            if self.regions[f] != Region::Outer && self.topo.faces[f].iter().any(|&v| self.vertices[v].pos.is_infinite()) {
                return Err(Error::Geometry(format!("face {f} touches ∞ but has vertices inside B_ρ")));
            }
            let [a, b, c] = self.face_chart(f);
            if !(orient2(a, b, c) > 0.0) {
                return Err(Error::Geometry(format!("face {f} is not counterclockwise in its chart")));
            }
            if self.regions[f] == Region::Boundary {
                let lim = (self.rho / 2.0).max(1.0);
                for i in 0..3 {
                    let l = ([a, b, c][i] - [a, b, c][(i + 1) % 3]).norm();
                    if !(l < lim) {
                        return Err(Error::Geometry(format!("boundary face {f} has an edge of length {l} ≥ {lim}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    Fibonacci,
    Random,
}

#[derive(Clone, Debug)]
pub struct MeshOptions {
    pub sampler: Sampler,
    pub n: usize,
    pub seed: u64,
    pub adapt: bool,
    pub h_target: Option<f64>,
}

impl MeshOptions {
    pub fn new(sampler: Sampler, n: usize, seed: u64, adapt: bool) -> Self {
        MeshOptions { sampler, n, seed, adapt, h_target: None }
    }
}

/// Sample, triangulate, optionally adapt, and lift.
pub fn generate(cover: &BranchedCover, opts: &MeshOptions) -> Result<CoverMesh> {
    let pts = match opts.sampler {
        Sampler::Fibonacci => fibonacci_points(opts.n)?,
        Sampler::Random => random_points(opts.n, opts.seed)?,
    };
    let spacing = sample_spacing(opts.n);
    let mut base = delaunay::base_with_specials(&pts, cover, spacing)?;
    if opts.adapt {
        let h = match opts.h_target {
            Some(h) => h,
            None => default_h_target(cover, opts.n),
        };
        base = adapt_near_branch(&base, cover, h, spacing)?;
    }
    lift_to_cover(&base, cover)
}
