//! Image-shaped dense correspondence container: a foreground mask plus
//! per-pixel (patch, u, v) template coordinates, optionally with depth.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceField {
    pub width: usize,
    pub height: usize,
    /// Foreground flag per pixel, row-major.
    pub mask: Vec<bool>,
    /// Patch index per pixel; meaningful only where `mask` is true.
    pub patch: Vec<usize>,
    /// Horizontal template coordinate in [0, 1]; meaningful where `mask` is true.
    pub u: Vec<f64>,
    /// Vertical template coordinate in [0, 1]; meaningful where `mask` is true.
    pub v: Vec<f64>,
    /// Camera-frame z per pixel, when rasterization recorded it.
    pub depth: Option<Vec<f64>>,
}

impl CorrespondenceField {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        CorrespondenceField {
            width,
            height,
            mask: vec![false; n],
            patch: vec![0; n],
            u: vec![0.0; n],
            v: vec![0.0; n],
            depth: None,
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Highest patch index present plus one, or 1 for an empty mask.
    pub fn patch_count(&self) -> usize {
        self.mask
            .iter()
            .zip(&self.patch)
            .filter_map(|(m, p)| m.then_some(*p))
            .max()
            .map_or(1, |p| p + 1)
    }

    /// Checks the container invariants: coordinate ranges and mask agreement.
    pub fn validate(&self) -> Result<()> {
        let n = self.pixels();
        if self.mask.len() != n || self.patch.len() != n || self.u.len() != n || self.v.len() != n {
            return Err(Error::Shape("field plane lengths disagree with width*height".into()));
        }
        if let Some(d) = &self.depth {
            if d.len() != n {
                return Err(Error::Shape("depth plane length disagrees".into()));
            }
        }
        for i in 0..n {
            if self.mask[i] {
                let (u, v) = (self.u[i], self.v[i]);
                if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!(
                        "pixel {i}: uv ({u}, {v}) outside [0,1]"
                    )));
                }
            }
        }
        Ok(())
    }
}
