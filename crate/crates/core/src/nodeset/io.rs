//! CSV node files: header `x,y,role`, role optional and defaulting to interior.
//! Coordinates are written with 17 significant digits so a write/read cycle is
//! bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{NodeSet, Point, Role};
use crate::error::{Error, Result};

pub fn parse_nodes(text: &str) -> Result<NodeSet> {
    let mut coords: Vec<Point> = Vec::new();
    let mut roles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.to_ascii_lowercase().starts_with('x') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: line_number,
                message: format!("expected 2 or 3 fields, found {}", fields.len()),
            });
        }
        let coord = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: line_number,
                message: format!("bad coordinate {s:?}: {e}"),
            })
        };
        let x = coord(fields[0])?;
        let y = coord(fields[1])?;
        let role = match fields.get(2).copied() {
            None | Some("") | Some("interior") => Role::Interior,
            Some("boundary") => Role::Boundary,
            Some(other) => {
                return Err(Error::Parse {
                    line: line_number,
                    message: format!("unknown role {other:?}"),
                })
            }
        };
        coords.push([x, y]);
        roles.push(role);
    }
    NodeSet::new(coords, roles)
}

pub fn format_nodes(nodes: &NodeSet) -> String {
    let mut out = String::with_capacity(nodes.len() * 56 + 16);
    out.push_str("x,y,role\n");
    for (p, r) in nodes.coords().iter().zip(nodes.roles()) {
        out.push_str(&format!("{:.16e},{:.16e},{}\n", p[0], p[1], r.as_str()));
    }
    out
}

pub fn read_nodes(path: impl AsRef<Path>) -> Result<NodeSet> {
    parse_nodes(&fs::read_to_string(path)?)
}

pub fn write_nodes(nodes: &NodeSet, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_nodes(nodes).as_bytes())
}

/// Writes to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
