//! Per-patch flattening by classical multidimensional scaling on graph
//! geodesics: squared shortest-path distances over the patch's edge graph
//! are double-centered and eigendecomposed; the top two components give
//! the planar chart, min-max normalized so every patch spans [0, 1]^2.

use super::{TemplateMesh, UVAtlas};
use crate::error::{Error, Result};
use crate::geometry::{norm, sub};
use nalgebra::DMatrix;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Flattens each patch of `partition` independently. Every patch needs at
/// least 3 vertices and a connected edge subgraph.
pub fn patch_mds_unwrap(mesh: &TemplateMesh, partition: &[usize]) -> Result<UVAtlas> {
    if partition.len() != mesh.vertices.len() {
        return Err(Error::Shape(format!(
            "{} patch labels for {} vertices",
            partition.len(),
            mesh.vertices.len()
        )));
    }
    let patches = partition.iter().max().map_or(0, |p| p + 1);
    let mut uv = vec![[0.0, 0.0]; mesh.vertices.len()];

    let edges = mesh.edges();
    for patch in 0..patches {
        let members: Vec<usize> = (0..mesh.vertices.len())
            .filter(|&v| partition[v] == patch)
            .collect();
        if members.len() < 3 {
            return Err(Error::Validation(format!(
                "patch {patch} has {} vertices, need at least 3",
                members.len()
            )));
        }
        let mut coords = embed_patch(mesh, &edges, patch, &members)?;
        normalize_patch(&mut coords, patch)?;
        for (local, &vertex) in members.iter().enumerate() {
            uv[vertex] = coords[local];
        }
    }
    UVAtlas::new(partition.to_vec(), uv)
}

/// The raw (centered, unnormalized) 2D MDS embedding of one patch, in
/// ascending vertex order. Unlike the atlas coordinates this preserves the
/// patch's metric up to a similarity transform, which is what the planar
/// recovery checks compare against.
pub fn mds_patch_embedding(
    mesh: &TemplateMesh,
    partition: &[usize],
    patch: usize,
) -> Result<Vec<[f64; 2]>> {
    if partition.len() != mesh.vertices.len() {
        return Err(Error::Shape("partition length must match vertex count".into()));
    }
    let members: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&v| partition[v] == patch)
        .collect();
    if members.len() < 3 {
        return Err(Error::Validation(format!(
            "patch {patch} has {} vertices, need at least 3",
            members.len()
        )));
    }
    embed_patch(mesh, &mesh.edges(), patch, &members)
}

fn embed_patch(
    mesh: &TemplateMesh,
    edges: &[(usize, usize)],
    patch: usize,
    members: &[usize],
) -> Result<Vec<[f64; 2]>> {
    let n = members.len();
    let local_of: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(l, &v)| (v, l)).collect();

    // weighted adjacency restricted to the patch
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if let (Some(&la), Some(&lb)) = (local_of.get(&a), local_of.get(&b)) {
            let w = norm(sub(mesh.vertices[a], mesh.vertices[b]));
            adj[la].push((lb, w));
            adj[lb].push((la, w));
        }
    }

    // all-pairs geodesics by repeated Dijkstra
    let mut dist = vec![vec![0.0f64; n]; n];
    for (src, row) in dist.iter_mut().enumerate() {
        dijkstra(&adj, src, row);
        if row.iter().any(|d| !d.is_finite()) {
            return Err(Error::Validation(format!("patch {patch} is not connected")));
        }
    }

    // double-centered squared distances: B = -1/2 J D^2 J
    let mut sq = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sq[(i, j)] = dist[i][j] * dist[i][j];
        }
    }
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand);
        }
    }

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let (i1, i2) = (order[0], order[1]);
    let (l1, l2) = (eig.eigenvalues[i1], eig.eigenvalues[i2]);
    if l1 <= 0.0 || l2 <= 0.0 {
        return Err(Error::Numerical(format!(
            "patch {patch}: leading eigenvalues not positive ({l1:e}, {l2:e})"
        )));
    }

    let mut coords: Vec<[f64; 2]> = (0..n)
        .map(|i| [eig.eigenvectors[(i, i1)] * l1.sqrt(), eig.eigenvectors[(i, i2)] * l2.sqrt()])
        .collect();

    // orientation: put the patch's first vertex in the lower-left quadrant
    for axis in 0..2 {
        if coords[0][axis] > 0.0 {
            for c in coords.iter_mut() {
                c[axis] = -c[axis];
            }
        }
    }
    Ok(coords)
}

/// Min-max normalizes each axis in place so the patch spans [0, 1]^2.
fn normalize_patch(coords: &mut [[f64; 2]], patch: usize) -> Result<()> {
    for axis in 0..2 {
        let lo = coords.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
        let hi = coords.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span <= 1e-12 {
            return Err(Error::Numerical(format!(
                "patch {patch}: axis {axis} collapsed to a point after MDS"
            )));
        }
        for c in coords.iter_mut() {
            c[axis] = ((c[axis] - lo) / span).clamp(0.0, 1.0);
        }
    }
    Ok(())
}

struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // min-heap on distance via reversed comparison
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize, out: &mut [f64]) {
    out.fill(f64::INFINITY);
    out[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { dist: 0.0, node: src });
    while let Some(HeapEntry { dist, node }) = heap.pop() {
        if dist > out[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let cand = dist + w;
            if cand < out[next] {
                out[next] = cand;
                heap.push(HeapEntry { dist: cand, node: next });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{euler_rotation, mat_vec, Vec3};

    /// Rectangle triangulated through its center vertex: all pairwise graph
    /// distances equal the planar Euclidean ones, so MDS is exact.
    pub fn center_fan_rectangle(w: f64, h: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [w, 0.0, 0.0],
            [w, h, 0.0],
            [0.0, h, 0.0],
            [w / 2.0, h / 2.0, 0.0],
        ];
        let faces = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        (vertices, faces)
    }

    fn procrustes_residual(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        // complex least squares z' = s*z + t, allowing reflection
        let to_c = |p: &[f64; 2]| (p[0], p[1]);
        let fit = |reflect: bool| -> f64 {
            let n = a.len() as f64;
            let (mut axm, mut aym, mut bxm, mut bym) = (0.0, 0.0, 0.0, 0.0);
            for (pa, pb) in a.iter().zip(b) {
                axm += pa[0];
                aym += pa[1];
                bxm += pb[0];
                bym += pb[1];
            }
            let (axm, aym, bxm, bym) = (axm / n, aym / n, bxm / n, bym / n);
            // s = sum(conj(za)*zb) / sum(|za|^2) on centered points
            let (mut nr, mut ni, mut den) = (0.0, 0.0, 0.0);
            for (pa, pb) in a.iter().zip(b) {
                let (zax, mut zay) = to_c(&[pa[0] - axm, pa[1] - aym]);
                if reflect {
                    zay = -zay;
                }
                let (zbx, zby) = to_c(&[pb[0] - bxm, pb[1] - bym]);
                nr += zax * zbx + zay * zby;
                ni += zax * zby - zay * zbx;
                den += zax * zax + zay * zay;
            }
            let (sr, si) = (nr / den, ni / den);
            let mut sse = 0.0;
            for (pa, pb) in a.iter().zip(b) {
                let (zax, mut zay) = (pa[0] - axm, pa[1] - aym);
                if reflect {
                    zay = -zay;
                }
                let fx = sr * zax - si * zay + bxm;
                let fy = sr * zay + si * zax + bym;
                sse += (fx - pb[0]).powi(2) + (fy - pb[1]).powi(2);
            }
            (sse / n).sqrt()
        };
        fit(false).min(fit(true))
    }

    #[test]
    fn flat_rectangle_recovers_plane() {
        let (vertices, faces) = center_fan_rectangle(2.0, 1.0);
        let planar: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
        let rot = euler_rotation(0.5, 0.3, -0.8);
        let moved: Vec<Vec3> = vertices
            .iter()
            .map(|v| {
                let r = mat_vec(&rot, *v);
                [r[0] + 1.0, r[1] - 2.0, r[2] + 0.5]
            })
            .collect();
        let mesh = TemplateMesh::new(moved, faces, None).unwrap();
        let embedding = mds_patch_embedding(&mesh, &[0; 5], 0).unwrap();
        let res = procrustes_residual(&embedding, &planar);
        assert!(res < 1e-8, "procrustes residual {res}");
        // the atlas is the same chart min-max normalized per axis
        let atlas = patch_mds_unwrap(&mesh, &[0; 5]).unwrap();
        for axis in 0..2 {
            let lo = embedding.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
            let hi = embedding.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
            for i in 0..5 {
                let expect = (embedding[i][axis] - lo) / (hi - lo);
                assert!((atlas.uv[i][axis] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn every_patch_spans_unit_square() {
        let (mut vertices, mut faces) = center_fan_rectangle(1.0, 1.0);
        // second patch: shifted copy, connected internally
        let base = vertices.len();
        let (v2, f2) = center_fan_rectangle(0.5, 2.0);
        vertices.extend(v2.iter().map(|v| [v[0] + 10.0, v[1], v[2] + 3.0]));
        faces.extend(f2.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        let labels: Vec<usize> = (0..vertices.len()).map(|i| usize::from(i >= base)).collect();
        let mesh = TemplateMesh::new(vertices, faces, Some(labels.clone())).unwrap();
        let atlas = patch_mds_unwrap(&mesh, &labels).unwrap();
        for p in 0..2 {
            for axis in 0..2 {
                let vals: Vec<f64> = (0..atlas.len())
                    .filter(|&i| atlas.patch[i] == p)
                    .map(|i| atlas.uv[i][axis])
                    .collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_patch_is_rejected() {
        let (vertices, faces) = center_fan_rectangle(1.0, 1.0);
        let mut labels = vec![0; 5];
        labels[4] = 1; // lone-vertex patch
        let mesh = TemplateMesh { vertices, faces, patch_of_vertex: None };
        assert!(patch_mds_unwrap(&mesh, &labels).is_err());
    }

    #[test]
    fn rigid_motion_leaves_chart_unchanged() {
        let (vertices, faces) = center_fan_rectangle(1.5, 0.8);
        let mesh = TemplateMesh::new(vertices.clone(), faces.clone(), None).unwrap();
        let base = patch_mds_unwrap(&mesh, &vec![0; 5]).unwrap();
        let rot = euler_rotation(-0.4, 1.0, 0.2);
        let moved: Vec<Vec3> = vertices
            .iter()
            .map(|v| {
                let r = mat_vec(&rot, *v);
                [r[0] - 4.0, r[1] + 0.7, r[2] + 2.2]
            })
            .collect();
        let mesh2 = TemplateMesh::new(moved, faces, None).unwrap();
        let turned = patch_mds_unwrap(&mesh2, &vec![0; 5]).unwrap();
        let res = procrustes_residual(&base.uv, &turned.uv);
        assert!(res < 1e-8, "residual {res}");
    }
}
