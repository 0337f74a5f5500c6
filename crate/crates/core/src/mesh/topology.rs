//! Triangle half-edge connectivity. Half-edge `3f + i` runs from corner `i`
//! to corner `i + 1` of face `f`.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Topology {
    pub faces: Vec<[usize; 3]>,
    pub twin: Vec<usize>,
    pub n_vertices: usize,
    /// One outgoing half-edge per vertex; on an open patch the most clockwise one.
    pub out: Vec<usize>,
    /// Undirected edges as representative half-edges.
    pub edges: Vec<usize>,
    pub edge_of: Vec<usize>,
}

impl Topology {
    /// Builds twins by matching reversed directed edges.
    pub fn from_faces(n_vertices: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut map: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                if a >= n_vertices || b >= n_vertices || a == b {
                    return Err(Error::Topology(format!("face {f} has invalid corners {tri:?}")));
                }
                if map.insert((a, b), 3 * f + i).is_some() {
                    return Err(Error::Topology(format!("directed edge {a}->{b} used twice")));
                }
            }
        }
        let mut twin = vec![NONE; faces.len() * 3];
        for (&(a, b), &h) in &map {
            if let Some(&t) = map.get(&(b, a)) {
                twin[h] = t;
            }
        }
        Self::from_faces_and_twins(n_vertices, faces, twin)
    }

    pub fn from_faces_and_twins(n_vertices: usize, faces: Vec<[usize; 3]>, twin: Vec<usize>) -> Result<Self> {
        let nh = faces.len() * 3;
        if twin.len() != nh {
            return Err(Error::Topology("twin array has wrong length".into()));
        }
        let mut topo = Topology { faces, twin, n_vertices, out: vec![NONE; n_vertices], edges: Vec::new(), edge_of: vec![NONE; nh] };
        for h in 0..nh {
            let t = topo.twin[h];
            if t != NONE && (t >= nh || topo.twin[t] != h || topo.origin(t) != topo.dest(h) || topo.dest(t) != topo.origin(h)) {
                return Err(Error::Topology(format!("inconsistent twin at half-edge {h}")));
            }
            let v = topo.origin(h);
            if topo.out[v] == NONE || t == NONE {
                topo.out[v] = h;
            }
        }
        if let Some(v) = topo.out.iter().position(|&h| h == NONE) {
            return Err(Error::Topology(format!("vertex {v} is isolated")));
        }
        for h in 0..nh {
            let t = topo.twin[h];
            if t == NONE || h < t {
                topo.edge_of[h] = topo.edges.len();
                if t != NONE {
                    topo.edge_of[t] = topo.edges.len();
                }
                topo.edges.push(h);
            }
        }
        Ok(topo)
    }

    #[inline]
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn n_half_edges(&self) -> usize {
        self.faces.len() * 3
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn face(&self, h: usize) -> usize {
        h / 3
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        if h % 3 == 2 {
            h - 2
        } else {
            h + 1
        }
    }

    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        if h % 3 == 0 {
            h + 2
        } else {
            h - 1
        }
    }

    #[inline]
    pub fn origin(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    #[inline]
    pub fn dest(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    /// Corner opposite to half-edge `h` in its face.
    #[inline]
    pub fn opposite(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 2) % 3]
    }

    /// Next outgoing half-edge counterclockwise around the origin, or NONE at a border.
    #[inline]
    pub fn rotate_ccw(&self, h: usize) -> usize {
        self.twin[self.prev(h)]
    }

    #[inline]
    pub fn rotate_cw(&self, h: usize) -> usize {
        let t = self.twin[h];
        if t == NONE {
            NONE
        } else {
            self.next(t)
        }
    }

    /// Outgoing half-edges of `v` in counterclockwise order.
    pub fn outgoing(&self, v: usize) -> Vec<usize> {
        let start = self.out[v];
        let mut res = vec![start];
        let mut h = self.rotate_ccw(start);
        while h != NONE && h != start {
            res.push(h);
            h = self.rotate_ccw(h);
        }
        res
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.outgoing(v).into_iter().map(|h| self.dest(h)).collect();
        let last = self.prev(*self.outgoing(v).last().unwrap());
        if self.twin[last] == NONE {
            n.push(self.origin(last));
        }
        n
    }

    pub fn is_closed(&self) -> bool {
        self.twin.iter().all(|&t| t != NONE)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Checks the half-edge identities and that every vertex link is a single fan.
    pub fn check(&self) -> Result<()> {
        for h in 0..self.n_half_edges() {
            if self.next(self.next(self.next(h))) != h || self.prev(self.next(h)) != h {
                return Err(Error::Topology(format!("face cycle broken at {h}")));
            }
            let t = self.twin[h];
            if t != NONE && self.twin[t] != h {
                return Err(Error::Topology(format!("twin not an involution at {h}")));
            }
        }
        let mut count = vec![0usize; self.n_vertices];
        for v in 0..self.n_vertices {
            count[v] = self.outgoing(v).len();
        }
        let mut deg = vec![0usize; self.n_vertices];
        for h in 0..self.n_half_edges() {
            deg[self.origin(h)] += 1;
        }
        if let Some(v) = (0..self.n_vertices).find(|&v| count[v] != deg[v]) {
            return Err(Error::Topology(format!("vertex {v} is not a manifold vertex")));
        }
        Ok(())
    }

    /// Connected components of the vertex graph.
    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut n = 1;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    n += 1;
                    stack.push(w);
                }
            }
        }
        n == self.n_vertices
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn octahedron() -> Topology {
        // 0: +x, 1: +y, 2: -x, 3: -y, 4: top, 5: bottom
        let faces = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]];
        Topology::from_faces(6, faces).unwrap()
    }

    #[test]
    fn octahedron_is_closed_sphere() {
        let t = octahedron();
        t.check().unwrap();
        assert!(t.is_closed());
        assert_eq!(t.n_edges(), 12);
        assert_eq!(t.euler_characteristic(), 2);
        for h in 0..t.n_half_edges() {
            assert_eq!(t.twin[t.twin[h]], h);
            assert_eq!(t.next(t.next(t.next(h))), h);
            assert_eq!(t.rotate_cw(t.rotate_ccw(h)), h);
        }
        assert_eq!(t.outgoing(4).len(), 4);
        assert!(t.is_connected());
    }

    #[test]
    fn open_patch_rotation() {
        let t = Topology::from_faces(4, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(t.outgoing(0).len(), 2);
        let mut n = t.neighbors(0);
        n.sort();
        assert_eq!(n, vec![1, 2, 3]);
        assert_eq!(t.euler_characteristic(), 1);
    }

    #[test]
    fn duplicate_directed_edge_rejected() {
        assert!(Topology::from_faces(4, vec![[0, 1, 2], [0, 1, 3]]).is_err());
    }
}
