//! Template meshes and their deformation-free UV coordinate systems.
//!
//! An atlas assigns each template vertex a patch index and a pair of
//! unitless coordinates in [0, 1]^2; the mapping restricted to each patch
//! is injective on vertices. Single-patch atlases come from cylindrical
//! unwrapping, multi-patch ones from per-patch multidimensional scaling.

mod cylinder;
mod mds;
mod obj;

pub use cylinder::{cylindrical_unwrap, CylinderAxis};
pub use mds::patch_mds_unwrap;
pub use obj::load_mesh;

use crate::codec;
use crate::error::{Error, Result};
use crate::geometry::{triangle_area, Vec3};
use std::collections::VecDeque;
use std::fmt::Write as _;

/// Triangulated 3D template surface with optional per-vertex patch labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub patch_of_vertex: Option<Vec<usize>>,
}

const DEGENERATE_AREA: f64 = 1e-12;

impl TemplateMesh {
    /// Validates face indices, triangle areas, and patch connectivity.
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        patch_of_vertex: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mesh = TemplateMesh { vertices, faces, patch_of_vertex };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &vi in f {
                if vi >= n {
                    return Err(Error::Validation(format!(
                        "face {fi} references vertex {vi} but mesh has {n} vertices"
                    )));
                }
            }
            let area = triangle_area(self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
            if area <= DEGENERATE_AREA {
                return Err(Error::Validation(format!("face {fi} is degenerate (area {area:e})")));
            }
        }
        if let Some(labels) = &self.patch_of_vertex {
            if labels.len() != n {
                return Err(Error::Shape(format!(
                    "{} patch labels for {n} vertices",
                    labels.len()
                )));
            }
            let patches = labels.iter().max().map_or(0, |m| m + 1);
            for p in 0..patches {
                let members: Vec<usize> =
                    (0..n).filter(|&v| labels[v] == p).collect();
                if members.is_empty() {
                    return Err(Error::Validation(format!("patch {p} has no vertices")));
                }
                if !is_connected(&members, &self.edges_within(labels, p)) {
                    return Err(Error::Validation(format!("patch {p} is not connected")));
                }
            }
        }
        Ok(())
    }

    /// Undirected edge list of the triangle graph.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    fn edges_within(&self, labels: &[usize], patch: usize) -> Vec<(usize, usize)> {
        self.edges()
            .into_iter()
            .filter(|&(a, b)| labels[a] == patch && labels[b] == patch)
            .collect()
    }
}

fn is_connected(members: &[usize], edges: &[(usize, usize)]) -> bool {
    if members.len() <= 1 {
        return true;
    }
    let mut adj: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
    let mut queue = VecDeque::from([members[0]]);
    seen.insert(members[0]);
    while let Some(v) = queue.pop_front() {
        if let Some(nbrs) = adj.get(&v) {
            for &nb in nbrs {
                if seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
    }
    members.iter().all(|m| seen.contains(m))
}

/// Per-vertex patch index and (u, v) coordinates in [0, 1]^2.
#[derive(Debug, Clone, PartialEq)]
pub struct UVAtlas {
    pub patch: Vec<usize>,
    pub uv: Vec<[f64; 2]>,
}

const INJECTIVITY_TOL: f64 = 1e-9;

impl UVAtlas {
    pub fn new(patch: Vec<usize>, uv: Vec<[f64; 2]>) -> Result<Self> {
        let atlas = UVAtlas { patch, uv };
        atlas.validate()?;
        Ok(atlas)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch.len() != self.uv.len() {
            return Err(Error::Shape("patch and uv lengths differ".into()));
        }
        for (i, uv) in self.uv.iter().enumerate() {
            if !(0.0..=1.0).contains(&uv[0]) || !(0.0..=1.0).contains(&uv[1]) {
                return Err(Error::Validation(format!(
                    "vertex {i}: uv ({}, {}) outside [0,1]",
                    uv[0], uv[1]
                )));
            }
        }
        // Injectivity per patch: no two vertices closer than the tolerance
        // on both axes. Window scan over a u-sorted order.
        let mut order: Vec<usize> = (0..self.uv.len()).collect();
        order.sort_by(|&a, &b| {
            self.patch[a]
                .cmp(&self.patch[b])
                .then(self.uv[a][0].total_cmp(&self.uv[b][0]))
        });
        for (oi, &i) in order.iter().enumerate() {
            for &j in order[oi + 1..].iter() {
                if self.patch[j] != self.patch[i]
                    || self.uv[j][0] - self.uv[i][0] > INJECTIVITY_TOL
                {
                    break;
                }
                if (self.uv[j][1] - self.uv[i][1]).abs() <= INJECTIVITY_TOL {
                    return Err(Error::Validation(format!(
                        "vertices {i} and {j} share uv within {INJECTIVITY_TOL:e} in patch {}",
                        self.patch[i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.uv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uv.is_empty()
    }

    /// Number of patches (highest index plus one).
    pub fn patch_count(&self) -> usize {
        self.patch.iter().max().map_or(1, |p| p + 1)
    }

    /// CSV export: header `vertex,patch,u,v`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,patch,u,v\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{:.8e},{:.8e}",
                i, self.patch[i], self.uv[i][0], self.uv[i][1]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut patch = Vec::new();
        let mut uv = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 {
                if line.trim() != "vertex,patch,u,v" {
                    return Err(Error::Format("atlas CSV must start with vertex,patch,u,v".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse { line: ln + 1, msg: "expected 4 columns".into() });
            }
            let vid: usize = cols[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, msg: "bad vertex id".into() })?;
            if vid != uv.len() {
                return Err(Error::Parse { line: ln + 1, msg: "vertex ids must be sequential".into() });
            }
            let p: usize = cols[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, msg: "bad patch id".into() })?;
            let u: f64 = cols[2]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, msg: "bad u".into() })?;
            let v: f64 = cols[3]
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, msg: "bad v".into() })?;
            patch.push(p);
            uv.push([u, v]);
        }
        UVAtlas::new(patch, uv)
    }
}

/// K x K cartesian partition of the UV square, materialized on vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub bins: usize,
    pub step: f64,
    /// Per-vertex (horizontal bin, vertical bin).
    pub cells: Vec<[usize; 2]>,
}

/// Assigns each atlas vertex its grid cell using the codec's encode rule,
/// so vertex bins and pixel-level targets always agree.
pub fn tessellate(atlas: &UVAtlas, bins: usize) -> Result<Tessellation> {
    if bins == 0 {
        return Err(Error::Validation("bin count must be >= 1".into()));
    }
    let mut cells = Vec::with_capacity(atlas.len());
    for uv in &atlas.uv {
        let (qh, _) = codec::encode(uv[0], bins)?;
        let (qv, _) = codec::encode(uv[1], bins)?;
        cells.push([qh, qv]);
    }
    Ok(Tessellation { bins, step: 1.0 / bins as f64, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_mesh() -> TemplateMesh {
        TemplateMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_face_index() {
        let err = TemplateMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 3]], None);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_degenerate_face() {
        let err = TemplateMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2]],
            None,
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_disconnected_patch() {
        // two triangles not sharing any vertex, same patch label
        let err = TemplateMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [5.0, 0.0, 0.0],
                [6.0, 0.0, 0.0],
                [5.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
            Some(vec![0; 6]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn atlas_rejects_duplicate_uv_in_patch() {
        let err = UVAtlas::new(vec![0, 0], vec![[0.5, 0.5], [0.5, 0.5 + 1e-10]]);
        assert!(err.is_err());
        // same uv in different patches is fine
        UVAtlas::new(vec![0, 1], vec![[0.5, 0.5], [0.5, 0.5]]).unwrap();
    }

    #[test]
    fn tessellate_worked_example() {
        let atlas = UVAtlas::new(vec![0], vec![[0.3, 0.7]]).unwrap();
        let t = tessellate(&atlas, 2).unwrap();
        assert_eq!(t.cells[0], [0, 1]);
        assert_eq!(t.step, 0.5);
    }

    #[test]
    fn tessellate_clamps_and_degenerates() {
        let atlas = UVAtlas::new(vec![0, 0], vec![[1.0, 0.0], [0.25, 0.99]]).unwrap();
        let t = tessellate(&atlas, 10).unwrap();
        assert_eq!(t.cells[0], [9, 0]);
        let t1 = tessellate(&atlas, 1).unwrap();
        assert!(t1.cells.iter().all(|c| *c == [0, 0]));
        assert!(tessellate(&atlas, 0).is_err());
    }

    #[test]
    fn tessellation_matches_codec_encode() {
        let uv: Vec<[f64; 2]> = (0..200)
            .map(|i| [(i as f64 * 0.005).min(1.0), ((i * 7 % 201) as f64 / 200.0)])
            .collect();
        let atlas = UVAtlas::new(vec![0; 200], uv.clone()).unwrap();
        for k in [1usize, 2, 4, 8, 16] {
            let t = tessellate(&atlas, k).unwrap();
            for (i, uv) in uv.iter().enumerate() {
                assert_eq!(t.cells[i][0], codec::encode(uv[0], k).unwrap().0);
                assert_eq!(t.cells[i][1], codec::encode(uv[1], k).unwrap().0);
            }
        }
    }

    #[test]
    fn atlas_csv_round_trip() {
        let atlas = UVAtlas::new(
            vec![0, 0, 1],
            vec![[0.123456789, 0.5], [1.0, 0.0], [0.25, 0.75]],
        )
        .unwrap();
        let csv = atlas.to_csv();
        assert!(csv.starts_with("vertex,patch,u,v\n"));
        let back = UVAtlas::from_csv(&csv).unwrap();
        for i in 0..3 {
            assert!((back.uv[i][0] - atlas.uv[i][0]).abs() < 1e-8);
            assert!((back.uv[i][1] - atlas.uv[i][1]).abs() < 1e-8);
            assert_eq!(back.patch[i], atlas.patch[i]);
        }
    }

    #[test]
    fn quad_mesh_edges_are_deduped() {
        let edges = quad_mesh().edges();
        assert_eq!(edges.len(), 5);
    }
}
