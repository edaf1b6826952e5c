//! Edge-list and spin-file formats.
//!
//! Edge list: first line `# n=<n> m=<m>`, then one `u v` per line with `u < v`,
//! 0-indexed. Spin file: one `1` or `-1` per line. In both, further lines
//! starting with `#` are comments.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sbm::SpinAssignment;

pub fn write_edge_list<W: Write>(g: &Graph, comments: &[String], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# n={} m={}", g.n(), g.m())?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_spins<W: Write>(s: &SpinAssignment, comments: &[String], mut out: W) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    for &x in s.as_slice() {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

fn parse_err(path: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.to_string(), msg: format!("line {line}: {msg}") }
}

pub fn parse_edge_list(text: &str, path: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (n, m) = match lines.next() {
        Some((_, header)) => parse_header(header).ok_or_else(|| {
            parse_err(path, 1, format!("expected header '# n=<n> m=<m>', got '{header}'"))
        })?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let mut edges = Vec::with_capacity(m);
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| parse_err(path, k + 1, "expected two node ids"))?
                .parse::<usize>()
                .map_err(|e| parse_err(path, k + 1, e))
        };
        let (u, v) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(parse_err(path, k + 1, "trailing fields"));
        }
        if u >= v {
            return Err(parse_err(path, k + 1, format!("expected u < v, got {u} {v}")));
        }
        if v >= n {
            return Err(parse_err(path, k + 1, format!("node {v} out of range for n = {n}")));
        }
        edges.push((u, v));
    }
    let g = Graph::from_edges(n, edges)?;
    if g.m() != m {
        return Err(Error::Parse {
            path: path.to_string(),
            msg: format!("header says m={m} but file has {} distinct edges", g.m()),
        });
    }
    Ok(g)
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let mut n = None;
    let mut m = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("m=") {
            m = v.parse().ok();
        }
    }
    Some((n?, m?))
}

pub fn parse_spins(text: &str, path: &str) -> Result<SpinAssignment> {
    let mut spins = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = match line {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(parse_err(path, k + 1, format!("expected +-1, got '{other}'"))),
        };
        spins.push(v);
    }
    SpinAssignment::new(spins)
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn read_spins(path: &Path) -> Result<SpinAssignment> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spins(&text, &path.display().to_string())
}
