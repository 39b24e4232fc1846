//! Wavefront OBJ (`v`/`f` subset) and OFF triangle meshes.
//!
//! Polygons are fan-triangulated around their first corner. Writers emit
//! the shortest decimal that reads back to the same `f64`, so
//! `parse(write(m)) == m` bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use meshdn_core::Mesh;

use crate::error::{Error, Result};

fn fan(line: usize, corners: &[usize], faces: &mut Vec<[usize; 3]>) -> Result<()> {
    if corners.len() < 3 {
        return Err(Error::parse(line, format!("face has {} corners, need at least 3", corners.len())));
    }
    for i in 1..corners.len() - 1 {
        let f = [corners[0], corners[i], corners[i + 1]];
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::parse(line, format!("face repeats a vertex: {f:?}")));
        }
        faces.push(f);
    }
    Ok(())
}

fn number(line: usize, token: Option<&str>, what: &str) -> Result<f64> {
    let token = token.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    let x: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} `{token}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("{what} `{token}` is not finite")));
    }
    Ok(x)
}

fn text(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "invalid UTF-8")
    })
}

pub fn parse_obj(bytes: &[u8]) -> Result<Mesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text(bytes)?.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let p = [
                    number(line, tokens.next(), "x coordinate")?,
                    number(line, tokens.next(), "y coordinate")?,
                    number(line, tokens.next(), "z coordinate")?,
                ];
                positions.push(p);
            }
            Some("f") => {
                let corners = tokens
                    .map(|t| {
                        let index = t.split('/').next().unwrap_or("");
                        let k: i64 = index
                            .parse()
                            .map_err(|_| Error::parse(line, format!("face index `{t}` is not an integer")))?;
                        let resolved = if k > 0 {
                            k - 1
                        } else if k < 0 {
                            positions.len() as i64 + k
                        } else {
                            -1
                        };
                        if resolved < 0 || resolved >= positions.len() as i64 {
                            return Err(Error::parse(
                                line,
                                format!("face index {k} out of range ({} vertices so far)", positions.len()),
                            ));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<_>>>()?;
                fan(line, &corners, &mut faces)?;
            }
            _ => {}
        }
    }
    Ok(Mesh::new(positions, faces)?)
}

pub fn write_obj(mesh: &Mesh) -> Vec<u8> {
    let mut out = String::new();
    for p in mesh.positions() {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out.into_bytes()
}

/// Tokens of an OFF file with their line numbers, comments removed.
fn off_tokens(src: &str) -> Vec<(usize, &str)> {
    src.lines()
        .enumerate()
        .flat_map(|(i, raw)| {
            raw.split('#')
                .next()
                .unwrap_or("")
                .split_whitespace()
                .map(move |t| (i + 1, t))
        })
        .collect()
}

pub fn parse_off(bytes: &[u8]) -> Result<Mesh> {
    let src = text(bytes)?;
    let tokens = off_tokens(src);
    let last_line = src.lines().count().max(1);
    let mut it = tokens.into_iter().peekable();
    match it.next() {
        Some((_, "OFF")) => {}
        Some((line, t)) => return Err(Error::parse(line, format!("expected `OFF` header, found `{t}`"))),
        None => return Err(Error::parse(1, "empty file, missing `OFF` header")),
    }
    let mut count = |what: &str| -> Result<usize> {
        let (line, t) = it
            .next()
            .ok_or_else(|| Error::parse(last_line, format!("truncated header: missing {what}")))?;
        t.parse()
            .map_err(|_| Error::parse(line, format!("{what} `{t}` is not a count")))
    };
    let n = count("vertex count")?;
    let f = count("face count")?;
    let _edges = count("edge count")?;

    let mut positions = Vec::with_capacity(n);
    for v in 0..n {
        let mut p = [0.0; 3];
        let mut line = last_line;
        for c in &mut p {
            let (l, t) = it
                .next()
                .ok_or_else(|| Error::parse(last_line, format!("truncated vertex section: vertex {v} of {n}")))?;
            line = l;
            *c = number(l, Some(t), "coordinate")?;
        }
        // Extra per-vertex values (colors) on the same line are skipped.
        while matches!(it.peek(), Some(&(l, _)) if l == line) {
            it.next();
        }
        positions.push(p);
    }

    let mut faces = Vec::with_capacity(f);
    for s in 0..f {
        let missing = || Error::parse(last_line, format!("truncated face section: face {s} of {f}"));
        let (line, t) = it.next().ok_or_else(missing)?;
        let k: usize = t
            .parse()
            .map_err(|_| Error::parse(line, format!("corner count `{t}` is not a count")))?;
        let mut corners = Vec::with_capacity(k);
        for _ in 0..k {
            let (l, t) = it.next().ok_or_else(missing)?;
            let v: usize = t
                .parse()
                .map_err(|_| Error::parse(l, format!("vertex index `{t}` is not an index")))?;
            if v >= n {
                return Err(Error::parse(l, format!("vertex index {v} out of range ({n} vertices)")));
            }
            corners.push(v);
        }
        while matches!(it.peek(), Some(&(l, _)) if l == line) {
            it.next();
        }
        fan(line, &corners, &mut faces)?;
    }
    if let Some((line, t)) = it.next() {
        return Err(Error::parse(line, format!("unexpected data `{t}` after {f} faces")));
    }
    Ok(Mesh::new(positions, faces)?)
}

pub fn write_off(mesh: &Mesh) -> Vec<u8> {
    let mut out = String::from("OFF\n");
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count()).unwrap();
    for p in mesh.positions() {
        writeln!(out, "{} {} {}", p[0], p[1], p[2]).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    out.into_bytes()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("off") => Ok(MeshFormat::Off),
            _ => Err(Error::Invalid(format!(
                "{}: unknown mesh format (expected .obj or .off)",
                path.display()
            ))),
        }
    }
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let format = MeshFormat::from_path(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    let parsed = match format {
        MeshFormat::Obj => parse_obj(&bytes),
        MeshFormat::Off => parse_off(&bytes),
    };
    parsed.map_err(|e| e.in_file(path))
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    let bytes = match MeshFormat::from_path(path)? {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::Off => write_off(mesh),
    };
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}
