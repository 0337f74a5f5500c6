//! Plain-text mesh cache.
//!
//! ```text
//! RPM 1
//! RHO <rho>
//! V <count>
//! <id> <sheet> <re> <im> <flags>      (∞ is written as "inf" with an empty im field)
//! F <count>
//! <v0> <v1> <v2>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::topology::Topology;
use super::{CoverMesh, Vertex};
use crate::covering::default_radii;
use crate::error::{Error, Result};
use crate::geom::ExtPoint;

pub fn to_rpm_string(mesh: &CoverMesh) -> String {
    let mut s = String::new();
    writeln!(s, "RPM 1").unwrap();
    writeln!(s, "RHO {}", mesh.rho).unwrap();
    writeln!(s, "V {}", mesh.n_vertices()).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        let flags = match v.branch {
            Some(k) => format!("B:{k}"),
            None => "-".to_string(),
        };
        match v.pos {
            ExtPoint::Finite(z) => writeln!(s, "{i} {} {} {} {flags}", v.sheet, z.re, z.im).unwrap(),
            ExtPoint::Infinity => writeln!(s, "{i} {} inf  {flags}", v.sheet).unwrap(),
        }
    }
    writeln!(s, "F {}", mesh.n_faces()).unwrap();
    for t in &mesh.topo.faces {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

pub fn write_rpm(mesh: &CoverMesh, path: &Path) -> Result<()> {
    std::fs::write(path, to_rpm_string(mesh))?;
    Ok(())
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse(format!("line {}: {msg}", line + 1))
}

fn header(lines: &[&str], i: usize, key: &str) -> Result<String> {
    let l = lines.get(i).ok_or_else(|| parse_err(i, "unexpected end of file"))?;
    let rest = l.strip_prefix(key).ok_or_else(|| parse_err(i, &format!("expected {key}")))?;
    Ok(rest.trim().to_string())
}

pub fn from_rpm_str(text: &str) -> Result<CoverMesh> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some("RPM 1") {
        return Err(parse_err(0, "missing RPM 1 header"));
    }
    let rho: f64 = header(&lines, 1, "RHO ")?.parse().map_err(|_| parse_err(1, "bad RHO"))?;
    let nv: usize = header(&lines, 2, "V ")?.parse().map_err(|_| parse_err(2, "bad vertex count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let ln = 3 + i;
        let l = lines.get(ln).ok_or_else(|| parse_err(ln, "unexpected end of file"))?;
        let tok: Vec<&str> = l.split(' ').collect();
        let tok: Vec<&str> = if tok.len() == 5 { tok } else { l.split_whitespace().collect() };
        let (id, sheet, pos, flags) = match tok.as_slice() {
            [id, sheet, "inf", "", flags] | [id, sheet, "inf", flags] => (id, sheet, ExtPoint::Infinity, flags),
            [id, sheet, re, im, flags] => {
                let re: f64 = re.parse().map_err(|_| parse_err(ln, "bad real part"))?;
                let im: f64 = im.parse().map_err(|_| parse_err(ln, "bad imaginary part"))?;
                (id, sheet, ExtPoint::finite(re, im), flags)
            }
            _ => return Err(parse_err(ln, "expected 'id sheet re im flags'")),
        };
        if id.parse::<usize>().ok() != Some(i) {
            return Err(parse_err(ln, "vertex ids must be consecutive from 0"));
        }
        let sheet: usize = sheet.parse().map_err(|_| parse_err(ln, "bad sheet"))?;
        let branch = match *flags {
            "-" => None,
            f => Some(
                f.strip_prefix("B:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(ln, "bad flags"))?,
            ),
        };
        vertices.push(Vertex { sheet, pos, branch });
    }
    let fl = 3 + nv;
    let nf: usize = header(&lines, fl, "F ")?.parse().map_err(|_| parse_err(fl, "bad face count"))?;
    let mut faces = Vec::with_capacity(nf);
    for i in 0..nf {
        let ln = fl + 1 + i;
        let l = lines.get(ln).ok_or_else(|| parse_err(ln, "unexpected end of file"))?;
        let t: Vec<usize> = l
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| parse_err(ln, "bad face index")))
            .collect::<Result<_>>()?;
        if t.len() != 3 {
            return Err(parse_err(ln, "faces need three vertices"));
        }
        faces.push([t[0], t[1], t[2]]);
    }
    if lines[fl + 1 + nf..].iter().any(|l| !l.trim().is_empty()) {
        return Err(parse_err(fl + 1 + nf, "trailing content"));
    }
    let degree = vertices.iter().map(|v| v.sheet).max().unwrap_or(0) + 1;
    let topo = Topology::from_faces(nv, faces)?;
    let mut positions: Vec<(usize, ExtPoint)> = Vec::new();
    for v in &vertices {
        if let Some(k) = v.branch {
            if !positions.iter().any(|&(j, _)| j == k) {
                positions.push((k, v.pos));
            }
        }
    }
    positions.sort_by_key(|&(k, _)| k);
    let pts: Vec<ExtPoint> = positions.iter().map(|&(_, p)| p).collect();
    let radii = default_radii(&pts, rho);
    let lookup = move |k: usize| positions.iter().position(|&(j, _)| j == k).map(|i| radii[i]).unwrap_or(0.0);
    let mesh = CoverMesh::new(vertices, topo, rho, degree, &lookup)?;
    mesh.validate()?;
    Ok(mesh)
}

pub fn read_rpm(path: &Path) -> Result<CoverMesh> {
    let text = std::fs::read_to_string(path)?;
    from_rpm_str(&text)
}
