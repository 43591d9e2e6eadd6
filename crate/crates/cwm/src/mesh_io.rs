//! Triangle meshes as text: a line `nv nt`, then `nv` lines `x y flag`
//! with flag 1 on Dirichlet vertices, then `nt` lines `i j k` of 0-based
//! vertex indices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cwm_core::problems::TriMesh;

use crate::error::{Error, Result, Tag};

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_mesh(&text, path)
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, head) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty mesh file"))?;
    let head = numbers::<usize>(head, 2, path, ln)?;
    let (nv, nt) = (head[0], head[1]);
    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| Error::parse(path, 0, "missing vertex lines"))?;
        let f = numbers::<f64>(l, 3, path, ln)?;
        if f[2] != 0.0 && f[2] != 1.0 {
            return Err(Error::parse(path, ln, "boundary flag must be 0 or 1"));
        }
        vertices.push([f[0], f[1]]);
        boundary.push(f[2] == 1.0);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| Error::parse(path, 0, "missing triangle lines"))?;
        let t = numbers::<usize>(l, 3, path, ln)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(path, ln, "trailing data after triangles"));
    }
    let mesh = TriMesh { vertices, triangles, boundary };
    mesh.validate().tag("problems")?;
    Ok(mesh)
}

fn numbers<T: std::str::FromStr>(line: &str, count: usize, path: &Path, ln: usize) -> Result<Vec<T>> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::parse(path, ln, format!("bad field `{t}`"))))
        .collect::<Result<_>>()?;
    if v.len() != count {
        return Err(Error::parse(path, ln, format!("expected {count} fields, found {}", v.len())));
    }
    Ok(v)
}

pub fn format_mesh(mesh: &TriMesh) -> String {
    let mut s = format!("{} {}\n", mesh.vertices.len(), mesh.triangles.len());
    for (p, &b) in mesh.vertices.iter().zip(&mesh.boundary) {
        let _ = writeln!(s, "{:.16e} {:.16e} {}", p[0], p[1], b as u8);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    fs::write(path, format_mesh(mesh)).map_err(Error::io(path))
}
