//! Single-patch atlas by unwrapping the surface around a cylinder axis:
//! the horizontal coordinate is the angle around the axis, the vertical
//! one the normalized height along it.

use super::{TemplateMesh, UVAtlas};
use crate::error::{Error, Result};
use crate::geometry::{cross, dot, norm, normalize, scale, sub, Vec3};

const ON_AXIS_TOL: f64 = 1e-9;

/// Oriented cylinder axis. The seam direction fixes where the angular
/// coordinate wraps (u_h = 0), so the unwrap is invariant under rigid
/// motions applied to the mesh and the full axis frame together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderAxis {
    pub origin: Vec3,
    pub direction: Vec3,
    pub seam: Vec3,
}

impl CylinderAxis {
    /// Axis with a deterministic seam: the canonical basis vector least
    /// aligned with `direction`, projected into the axis-normal plane.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        if norm(direction) < ON_AXIS_TOL {
            return Err(Error::Validation("axis direction has zero length".into()));
        }
        let d = normalize(direction);
        let mut best = 0;
        for i in 1..3 {
            if d[i].abs() < d[best].abs() {
                best = i;
            }
        }
        let mut seam = [0.0; 3];
        seam[best] = 1.0;
        Self::with_seam(origin, direction, seam)
    }

    /// Axis with an explicit seam direction (must not be parallel to it).
    pub fn with_seam(origin: Vec3, direction: Vec3, seam: Vec3) -> Result<Self> {
        if norm(direction) < ON_AXIS_TOL {
            return Err(Error::Validation("axis direction has zero length".into()));
        }
        let d = normalize(direction);
        let planar = sub(seam, scale(d, dot(seam, d)));
        if norm(planar) < ON_AXIS_TOL {
            return Err(Error::Validation("seam direction is parallel to the axis".into()));
        }
        Ok(CylinderAxis { origin, direction: d, seam: normalize(planar) })
    }
}

/// Unwraps `mesh` around `axis` into a single-patch atlas:
/// u_h = angle / 2pi measured from the seam (angle grows from the seam
/// toward seam x direction), u_v = height along the axis min-max
/// normalized to [0, 1].
pub fn cylindrical_unwrap(mesh: &TemplateMesh, axis: &CylinderAxis) -> Result<UVAtlas> {
    if mesh.vertices.is_empty() {
        return Err(Error::Validation("cannot unwrap an empty mesh".into()));
    }
    let d = axis.direction;
    let e1 = axis.seam;
    let e2 = cross(e1, d);

    let mut heights = Vec::with_capacity(mesh.vertices.len());
    let mut angles = Vec::with_capacity(mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let rel = sub(*v, axis.origin);
        let h = dot(rel, d);
        let radial = sub(rel, scale(d, h));
        if norm(radial) <= ON_AXIS_TOL {
            return Err(Error::Validation(format!("vertex {i} lies on the axis")));
        }
        let mut angle = dot(radial, e2).atan2(dot(radial, e1));
        if angle < 0.0 {
            angle += 2.0 * std::f64::consts::PI;
        }
        angles.push(angle / (2.0 * std::f64::consts::PI));
        heights.push(h);
    }

    let h_min = heights.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = h_max - h_min;
    if range <= 1e-12 {
        return Err(Error::Validation("zero height range along the axis".into()));
    }

    let uv: Vec<[f64; 2]> = angles
        .iter()
        .zip(&heights)
        .map(|(&a, &h)| [a.min(1.0), ((h - h_min) / range).clamp(0.0, 1.0)])
        .collect();
    UVAtlas::new(vec![0; uv.len()], uv)
}
