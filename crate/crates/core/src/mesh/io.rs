//! Plain-text mesh format.
//!
//! ```text
//! dim n_vertices n_cells n_periodic_pairs
//! <n_vertices lines of dim coordinates>
//! <n_cells lines of dim+1 zero-based vertex indices>
//! <n_periodic_pairs lines "slave master">
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::Mesh;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next_record = |what: &str| {
        lines.next().ok_or_else(|| Error::MeshParse {
            line: text.lines().count(),
            message: format!("unexpected end of file while reading {what}"),
        })
    };

    let (line, header) = next_record("header")?;
    let header: Vec<usize> = parse_tokens(line, header, 4)?;
    let (dim, n_vertices, n_cells, n_pairs) = (header[0], header[1], header[2], header[3]);
    if dim != 2 && dim != 3 {
        return Err(Error::MeshParse {
            line,
            message: format!("dimension must be 2 or 3, got {dim}"),
        });
    }

    let mut coords = Vec::with_capacity(dim * n_vertices);
    for _ in 0..n_vertices {
        let (line, rec) = next_record("vertices")?;
        coords.extend(parse_tokens::<f64>(line, rec, dim)?);
    }
    let mut cells = Vec::with_capacity((dim + 1) * n_cells);
    for _ in 0..n_cells {
        let (line, rec) = next_record("cells")?;
        cells.extend(parse_tokens::<usize>(line, rec, dim + 1)?);
    }
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let (line, rec) = next_record("periodic pairs")?;
        let p: Vec<usize> = parse_tokens(line, rec, 2)?;
        pairs.push((p[0], p[1]));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::MeshParse {
            line,
            message: "trailing data after the last periodic pair".into(),
        });
    }

    Mesh::new(dim, coords, cells, &pairs)
}

fn parse_tokens<T: FromStr>(line: usize, record: &str, expected: usize) -> Result<Vec<T>> {
    let tokens: Vec<&str> = record.split_whitespace().collect();
    if tokens.len() != expected {
        return Err(Error::MeshParse {
            line,
            message: format!("expected {expected} values, found {}", tokens.len()),
        });
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::MeshParse {
                line,
                message: format!("cannot parse '{t}'"),
            })
        })
        .collect()
}

/// Renders a mesh in the text format read by [`parse_mesh`].
pub fn write_mesh(mesh: &Mesh) -> String {
    let pairs = mesh.periodic_pairs();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        mesh.dim(),
        mesh.n_vertices(),
        mesh.n_cells(),
        pairs.len()
    );
    for v in 0..mesh.n_vertices() {
        let row: Vec<String> = mesh.vertex(v).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    for c in 0..mesh.n_cells() {
        let row: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    for (s, m) in pairs {
        let _ = writeln!(out, "{s} {m}");
    }
    out
}
