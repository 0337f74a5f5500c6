use std::collections::HashSet;

use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::topology::Topology;
use crate::covering::BranchedCover;
use crate::error::{Error, Result};
use crate::geom::{cross3, dot3, norm3, normalize3, orient2, sub3, ExtPoint};

/// Triangulation of the sphere before lifting.
#[derive(Clone, Debug)]
pub struct BaseMesh {
    pub points: Vec<ExtPoint>,
    /// Branch point index carried by each vertex.
    pub branch: Vec<Option<usize>>,
    pub topo: Topology,
}

impl BaseMesh {
    pub fn infinity_vertex(&self) -> Option<usize> {
        self.points.iter().position(|p| p.is_infinite())
    }
}

struct Site {
    p: Point2<f64>,
    idx: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.p
    }
}

/// Delaunay triangulation of points of the extended plane, exactly one of
/// which is ∞. Finite points are triangulated in the plane and ∞ is joined
/// to the convex hull, which is the hull of their stereographic images.
pub fn triangulate_extended(points: &[ExtPoint]) -> Result<Topology> {
    let inf: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_infinite()).collect();
    if inf.len() != 1 {
        return Err(Error::Argument(format!("expected exactly one point at ∞, found {}", inf.len())));
    }
    let inf = inf[0];
    if points.len() < 4 {
        return Err(Error::Argument(format!("need at least 4 points, got {}", points.len())));
    }
    let mut sites = Vec::with_capacity(points.len() - 1);
    for (idx, p) in points.iter().enumerate() {
        if let Some(z) = p.as_finite() {
            sites.push(Site { p: Point2::new(z.re, z.im), idx });
        }
    }
    check_duplicates(points)?;
    let n_sites = sites.len();
    let tri: DelaunayTriangulation<Site> =
        DelaunayTriangulation::bulk_load(sites).map_err(|e| Error::Degeneracy(format!("{e:?}")))?;
    if tri.num_vertices() != n_sites {
        return Err(Error::Degeneracy("coincident points".into()));
    }
    let z = |i: usize| points[i].as_finite().unwrap();
    let mut faces = Vec::with_capacity(2 * points.len());
    for f in tri.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.data().idx);
        if orient2(z(a), z(b), z(c)) > 0.0 {
            faces.push([a, b, c]);
        } else {
            faces.push([a, c, b]);
        }
    }
    if faces.is_empty() {
        return Err(Error::Degeneracy("all points lie on one circle through the projection pole".into()));
    }
    let mut directed = HashSet::with_capacity(faces.len() * 3);
    for t in &faces {
        for i in 0..3 {
            directed.insert((t[i], t[(i + 1) % 3]));
        }
    }
    let mut hull = Vec::new();
    for t in &faces {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            if !directed.contains(&(b, a)) {
                hull.push([b, a, inf]);
            }
        }
    }
    faces.extend(hull);
    let topo = Topology::from_faces(points.len(), faces)?;
    if !topo.is_closed() || topo.euler_characteristic() != 2 {
        return Err(Error::Degeneracy("triangulation is not a sphere".into()));
    }
    Ok(topo)
}

fn check_duplicates(points: &[ExtPoint]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let key = |i: usize| match points[i] {
        ExtPoint::Finite(z) => (z.re, z.im),
        ExtPoint::Infinity => (f64::INFINITY, f64::INFINITY),
    };
    order.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal));
    for w in order.windows(2) {
        if key(w[0]) == key(w[1]) {
            return Err(Error::Degeneracy(format!("points {} and {} coincide", w[0], w[1])));
        }
    }
    Ok(())
}

fn check_coplanar(points: &[[f64; 3]]) -> Result<()> {
    let p0 = points[0];
    let far = |from: &dyn Fn(usize) -> f64| (0..points.len()).max_by(|&a, &b| from(a).partial_cmp(&from(b)).unwrap()).unwrap();
    let i1 = far(&|i| norm3(sub3(points[i], p0)));
    let e1 = sub3(points[i1], p0);
    let i2 = far(&|i| norm3(cross3(e1, sub3(points[i], p0))));
    let n = cross3(e1, sub3(points[i2], p0));
    if norm3(n) < 1e-12 {
        return Err(Error::Degeneracy(format!("points 0, {i1}, {i2} span no plane")));
    }
    let n = normalize3(n);
    if points.iter().all(|&p| dot3(n, sub3(p, p0)).abs() < 1e-10) {
        return Err(Error::Degeneracy(format!("all points are coplanar with points 0, {i1}, {i2}")));
    }
    Ok(())
}

/// Rotation taking unit vector `p` to the north pole.
fn rotation_to_pole(p: [f64; 3]) -> impl Fn([f64; 3]) -> [f64; 3] {
    let n = [0.0, 0.0, 1.0];
    let axis = cross3(p, n);
    let s = norm3(axis);
    let c = dot3(p, n);
    let k = if s > 1e-300 { normalize3(axis) } else { [1.0, 0.0, 0.0] };
    let (s, c) = if s > 1e-300 { (s, c) } else if c > 0.0 { (0.0, 1.0) } else { (0.0, -1.0) };
    move |v: [f64; 3]| {
        let kv = cross3(k, v);
        let kd = dot3(k, v);
        [0, 1, 2].map(|i| v[i] * c + kv[i] * s + k[i] * kd * (1.0 - c))
    }
}

/// Convex hull triangulation of points on the unit sphere.
///
/// Faces index the input and are counterclockwise in the stereographic
/// chart, i.e. clockwise seen from outside the sphere.
pub fn spherical_delaunay(points: &[[f64; 3]]) -> Result<Topology> {
    if points.len() < 4 {
        return Err(Error::Argument(format!("need at least 4 points, got {}", points.len())));
    }
    check_coplanar(points)?;
    let top = (0..points.len()).max_by(|&a, &b| points[a][2].partial_cmp(&points[b][2]).unwrap()).unwrap();
    let rot = rotation_to_pole(normalize3(points[top]));
    let ext: Vec<ExtPoint> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == top { ExtPoint::Infinity } else { ExtPoint::from_sphere(rot(normalize3(p))) })
        .collect();
    triangulate_extended(&ext)
}

/// Converts samples to the plane, places every branch point and ∞ on a
/// vertex by snapping the nearest sample within half a spacing, and triangulates.
pub(crate) fn base_with_specials(samples: &[[f64; 3]], cover: &BranchedCover, spacing: f64) -> Result<BaseMesh> {
    let mut sphere: Vec<[f64; 3]> = samples.to_vec();
    let mut points: Vec<ExtPoint> = samples.iter().map(|&p| ExtPoint::from_sphere(p)).collect();
    let mut branch: Vec<Option<usize>> = vec![None; points.len()];
    let mut fixed = vec![false; points.len()];
    let mut specials: Vec<(ExtPoint, Option<usize>)> =
        cover.branch_points.iter().enumerate().map(|(k, b)| (b.position, Some(k))).collect();
    if cover.branch_index(&ExtPoint::Infinity).is_none() {
        specials.push((ExtPoint::Infinity, None));
    }
    for (pos, idx) in specials {
        let target = pos.to_sphere();
        let nearest = (0..sphere.len())
            .filter(|&i| !fixed[i])
            .map(|i| (i, norm3(sub3(sphere[i], target))))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match nearest {
            Some((i, d)) if d < 0.5 * spacing => {
                sphere[i] = target;
                points[i] = pos;
                branch[i] = idx;
                fixed[i] = true;
            }
            _ => {
                sphere.push(target);
                points.push(pos);
                branch.push(idx);
                fixed.push(true);
            }
        }
    }
    // A point projecting to ∞ by rounding must be the designated one.
    for (i, p) in points.iter().enumerate() {
        if p.is_infinite() && !fixed[i] {
            return Err(Error::Degeneracy(format!("sample {i} coincides with ∞")));
        }
    }
    let topo = triangulate_extended(&points)?;
    Ok(BaseMesh { points, branch, topo })
}

/// Empty-circumcap test of face `f`: no other point lies strictly beyond its plane.
pub fn violates_circumcap(sphere: &[[f64; 3]], tri: [usize; 3], tol: f64) -> Option<usize> {
    let [a, b, c] = tri.map(|i| sphere[i]);
    let mut n = cross3(sub3(b, a), sub3(c, a));
    if dot3(n, a) < 0.0 {
        n = n.map(|x| -x);
    }
    (0..sphere.len()).filter(|i| !tri.contains(i)).find(|&i| dot3(n, sub3(sphere[i], a)) > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::random_points;

    #[test]
    fn tetrahedron() {
        let p = vec![[0.0, 0.0, 1.0], [0.9428, 0.0, -1.0 / 3.0], [-0.4714, 0.8165, -1.0 / 3.0], [-0.4714, -0.8165, -1.0 / 3.0]];
        let p: Vec<[f64; 3]> = p.into_iter().map(normalize3).collect();
        let t = spherical_delaunay(&p).unwrap();
        assert_eq!(t.n_faces(), 4);
        assert_eq!(t.n_edges(), 6);
    }

    #[test]
    fn octahedron() {
        let p = vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        let t = spherical_delaunay(&p).unwrap();
        assert_eq!(t.n_faces(), 8);
        assert_eq!(t.n_vertices as i64 - t.n_edges() as i64 + t.n_faces() as i64, 2);
    }

    #[test]
    fn random_points_are_delaunay_and_outward() {
        let p = random_points(500, 3).unwrap();
        let t = spherical_delaunay(&p).unwrap();
        assert_eq!(t.euler_characteristic(), 2);
        for tri in &t.faces {
            assert_eq!(violates_circumcap(&p, *tri, 1e-12), None);
            let [a, b, c] = tri.map(|i| p[i]);
            let n = cross3(sub3(b, a), sub3(c, a));
            assert!(dot3(n, a) < 0.0);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let eq: Vec<[f64; 3]> = (0..8).map(|k| {
            let t = k as f64 * std::f64::consts::PI / 4.0;
            [t.cos(), t.sin(), 0.0]
        }).collect();
        assert!(matches!(spherical_delaunay(&eq), Err(Error::Degeneracy(_))));
        let mut dup = random_points(10, 1).unwrap();
        dup.push(dup[3]);
        assert!(matches!(spherical_delaunay(&dup), Err(Error::Degeneracy(_))));
    }
}
