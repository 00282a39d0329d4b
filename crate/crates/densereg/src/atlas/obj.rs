//! Minimal OBJ reader: `v x y z` and `f i j k [l]` lines only. Quads are
//! fan-triangulated as (v1,v2,v3) + (v1,v3,v4).

use super::TemplateMesh;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub fn load_mesh(text: &str) -> Result<TemplateMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() != 3 {
                    return Err(Error::Parse { line, msg: "vertex needs exactly 3 coordinates".into() });
                }
                let mut v = [0.0; 3];
                for (k, c) in coords.iter().enumerate() {
                    v[k] = c.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad coordinate '{c}'"),
                    })?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| parse_face_index(t, line, vertices.len()))
                    .collect::<Result<_>>()?;
                match idx.len() {
                    3 => faces.push([idx[0], idx[1], idx[2]]),
                    4 => {
                        faces.push([idx[0], idx[1], idx[2]]);
                        faces.push([idx[0], idx[2], idx[3]]);
                    }
                    n => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("face needs 3 or 4 indices, found {n}"),
                        })
                    }
                }
            }
            Some(other) => {
                return Err(Error::Parse { line, msg: format!("unsupported directive '{other}'") })
            }
            None => unreachable!("blank lines were filtered"),
        }
    }

    TemplateMesh::new(vertices, faces, None)
}

/// Parses a 1-based face index, accepting the `i/t/n` form by using the
/// leading position index.
fn parse_face_index(token: &str, line: usize, vertex_count: usize) -> Result<usize> {
    let first = token.split('/').next().unwrap_or("");
    let one_based: usize = first
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad face index '{token}'") })?;
    if one_based == 0 {
        return Err(Error::Parse { line, msg: "face indices are 1-based".into() });
    }
    if one_based > vertex_count {
        return Err(Error::Parse {
            line,
            msg: format!("face index {one_based} out of range ({vertex_count} vertices so far)"),
        });
    }
    Ok(one_based - 1)
}
