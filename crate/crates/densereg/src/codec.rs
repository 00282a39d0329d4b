//! Quantized-regression codec: a coordinate u in [0, 1] is carried as a
//! discrete bin q (classification) plus a residual r (regression) with
//! u = q*d + r and d = 1/K. Decoding selects the responsible residual unit
//! (hard), mixes all units under the classification softmax (soft), or
//! snaps to the bin center (quantized-only). The two training losses and
//! their analytic gradients live here as well.

use crate::error::{Error, Result};
use crate::field::CorrespondenceField;
use crate::tensor::Tensor;

/// Bin count and patch count for one codec instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerConfig {
    /// Bins per axis; 1 degenerates to plain regression.
    pub bins: usize,
    /// Patch count of the template atlas.
    pub patches: usize,
}

impl QuantizerConfig {
    pub fn new(bins: usize, patches: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Validation("bin count must be >= 1".into()));
        }
        if patches == 0 {
            return Err(Error::Validation("patch count must be >= 1".into()));
        }
        Ok(QuantizerConfig { bins, patches })
    }

    /// Quantization step size.
    pub fn step(&self) -> f64 {
        1.0 / self.bins as f64
    }
}

/// Weights for the classification and residual losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub w_cls: f64,
    pub w_res: f64,
    /// Cutover between the quadratic and linear smooth-L1 branches.
    pub smooth_l1_threshold: f64,
}

impl LossConfig {
    /// Defaults keyed on the bin count: residual weight 40 when quantized,
    /// 70 for plain (K=1) regression.
    pub fn for_bins(bins: usize) -> Self {
        LossConfig {
            w_cls: 1.0,
            w_res: if bins > 1 { 40.0 } else { 70.0 },
            smooth_l1_threshold: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_cls <= 0.0 || self.w_res <= 0.0 || self.smooth_l1_threshold <= 0.0 {
            return Err(Error::Validation("loss weights must be positive".into()));
        }
        Ok(())
    }
}

/// Splits u in [0, 1] into (bin, residual) with u = q*d + r reconstructed
/// exactly. u = 1 lands in bin K-1 with r = d.
pub fn encode(u: f64, bins: usize) -> Result<(usize, f64)> {
    if bins == 0 {
        return Err(Error::Validation("bin count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Validation(format!("coordinate {u} outside [0,1]")));
    }
    let d = 1.0 / bins as f64;
    let mut q = ((u / d).floor() as usize).min(bins - 1);
    let mut r = u - q as f64 * d;
    // u/d can round up across an integer boundary; step back so r stays in [0, d].
    if r < 0.0 && q > 0 {
        q -= 1;
        r = u - q as f64 * d;
    }
    Ok((q, r))
}

/// Reconstruction from the selected residual unit: u = q*d + bank[q].
pub fn decode_hard(q: usize, bank: &[f64], bins: usize) -> Result<f64> {
    if q >= bins {
        return Err(Error::Validation(format!("bin {q} out of range for K={bins}")));
    }
    if bank.len() != bins {
        return Err(Error::Shape(format!("bank length {} != K={bins}", bank.len())));
    }
    let d = 1.0 / bins as f64;
    Ok(q as f64 * d + bank[q])
}

/// Softmax-gated mixture over the residual units:
/// u = sum_i softmax(logits)_i * (i*d + bank[i]).
pub fn decode_soft(logits: &[f64], bank: &[f64]) -> Result<f64> {
    if logits.len() != bank.len() || logits.is_empty() {
        return Err(Error::Shape("logits and bank lengths must match and be nonzero".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite logit".into()));
    }
    let bins = logits.len();
    let d = 1.0 / bins as f64;
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut acc = 0.0;
    for i in 0..bins {
        let w = (logits[i] - m).exp();
        z += w;
        acc += w * (i as f64 * d + bank[i]);
    }
    Ok(acc / z)
}

/// Bin-center reconstruction, used to evaluate the classification branch
/// on its own: u = (q + 1/2)*d.
pub fn decode_quantized_only(q: usize, bins: usize) -> Result<f64> {
    if q >= bins {
        return Err(Error::Validation(format!("bin {q} out of range for K={bins}")));
    }
    let d = 1.0 / bins as f64;
    Ok((q as f64 + 0.5) * d)
}

/// Value, gradient, and the number of pixels that contributed.
#[derive(Debug, Clone)]
pub struct MaskedLoss {
    pub value: f64,
    pub grad: Tensor,
    /// Contributing pixel count; 0 flags an empty mask (loss 0 by convention).
    pub pixels: usize,
}

/// Softmax cross entropy averaged over masked pixels. Background pixels
/// contribute zero loss and zero gradient.
///
/// `logits` is K x H x W; `targets` and `mask` are row-major H*W.
pub fn loss_classification(logits: &Tensor, targets: &[usize], mask: &[bool]) -> Result<MaskedLoss> {
    let (k, h, w) = (logits.channels, logits.height, logits.width);
    let n = h * w;
    if targets.len() != n || mask.len() != n {
        return Err(Error::Shape("targets/mask length must equal H*W".into()));
    }
    let count = mask.iter().filter(|m| **m).count();
    let mut grad = Tensor::zeros(k, h, w);
    if count == 0 {
        return Ok(MaskedLoss { value: 0.0, grad, pixels: 0 });
    }
    let inv = 1.0 / count as f64;
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let pix = y * w + x;
            if !mask[pix] {
                continue;
            }
            let t = targets[pix];
            if t >= k {
                return Err(Error::Validation(format!("target class {t} out of range K={k}")));
            }
            // log-sum-exp with max subtraction
            let mut m = f64::NEG_INFINITY;
            for c in 0..k {
                m = m.max(logits.get(c, y, x));
            }
            let mut z = 0.0;
            for c in 0..k {
                z += (logits.get(c, y, x) - m).exp();
            }
            let lse = m + z.ln();
            total += lse - logits.get(t, y, x);
            for c in 0..k {
                let p = (logits.get(c, y, x) - lse).exp();
                let g = (p - if c == t { 1.0 } else { 0.0 }) * inv;
                grad.set(c, y, x, g);
            }
        }
    }
    Ok(MaskedLoss { value: total * inv, grad, pixels: count })
}

fn smooth_l1(x: f64, t: f64) -> f64 {
    let a = x.abs();
    if a < t {
        0.5 * x * x / t
    } else {
        a - 0.5 * t
    }
}

fn smooth_l1_grad(x: f64, t: f64) -> f64 {
    if x.abs() < t {
        x / t
    } else {
        x.signum()
    }
}

/// Normalized smooth-L1 over the responsible residual units only:
/// w_res * sum_masked smoothL1(bank[q] - r) / #masked. Units other than the
/// responsible one receive exactly zero gradient.
///
/// `bank` is K x H x W; `target`, `responsible`, `mask` are row-major H*W.
pub fn loss_residual(
    bank: &Tensor,
    target: &[f64],
    responsible: &[usize],
    mask: &[bool],
    config: &LossConfig,
) -> Result<MaskedLoss> {
    config.validate()?;
    let (k, h, w) = (bank.channels, bank.height, bank.width);
    let n = h * w;
    if target.len() != n || responsible.len() != n || mask.len() != n {
        return Err(Error::Shape("target/responsible/mask length must equal H*W".into()));
    }
    let count = mask.iter().filter(|m| **m).count();
    let mut grad = Tensor::zeros(k, h, w);
    if count == 0 {
        return Ok(MaskedLoss { value: 0.0, grad, pixels: 0 });
    }
    let inv = 1.0 / count as f64;
    let t = config.smooth_l1_threshold;
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let pix = y * w + x;
            if !mask[pix] {
                continue;
            }
            let q = responsible[pix];
            if q >= k {
                return Err(Error::Validation(format!("responsible bin {q} out of range K={k}")));
            }
            let diff = bank.get(q, y, x) - target[pix];
            total += smooth_l1(diff, t);
            grad.set(q, y, x, config.w_res * smooth_l1_grad(diff, t) * inv);
        }
    }
    Ok(MaskedLoss { value: config.w_res * total * inv, grad, pixels: count })
}

/// Per-pixel encoding of a correspondence field: bin and residual per axis
/// plus the patch target.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTarget {
    pub config: QuantizerConfig,
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub patch: Vec<usize>,
    pub qh: Vec<usize>,
    pub qv: Vec<usize>,
    pub rh: Vec<f64>,
    pub rv: Vec<f64>,
}

impl QuantizedTarget {
    /// Reconstructs (u, v) at a foreground pixel; exact by the encode contract.
    pub fn decode_pixel(&self, pix: usize) -> (f64, f64) {
        let d = self.config.step();
        (self.qh[pix] as f64 * d + self.rh[pix], self.qv[pix] as f64 * d + self.rv[pix])
    }

    /// Dense channel layout grouped by patch: for each patch p the four
    /// planes (qh, qv, rh, rv) masked to that patch's pixels. With the
    /// patch-indicator plane this realizes the P x (1 + 2) per-axis layout
    /// (25 patches -> 75 I/U/V channels; 1 patch -> 3).
    pub fn to_patch_channels(&self) -> Tensor {
        let p = self.config.patches;
        let (h, w) = (self.height, self.width);
        let mut t = Tensor::zeros(4 * p, h, w);
        for pix in 0..h * w {
            if !self.mask[pix] {
                continue;
            }
            let patch = self.patch[pix];
            let (y, x) = (pix / w, pix % w);
            t.set(4 * patch, y, x, self.qh[pix] as f64);
            t.set(4 * patch + 1, y, x, self.qv[pix] as f64);
            t.set(4 * patch + 2, y, x, self.rh[pix]);
            t.set(4 * patch + 3, y, x, self.rv[pix]);
        }
        t
    }
}

/// Encodes every foreground pixel of `field` with `encode` on both axes.
pub fn encode_field(field: &CorrespondenceField, config: &QuantizerConfig) -> Result<QuantizedTarget> {
    field.validate()?;
    let n = field.pixels();
    let mut out = QuantizedTarget {
        config: *config,
        width: field.width,
        height: field.height,
        mask: field.mask.clone(),
        patch: field.patch.clone(),
        qh: vec![0; n],
        qv: vec![0; n],
        rh: vec![0.0; n],
        rv: vec![0.0; n],
    };
    for pix in 0..n {
        if !field.mask[pix] {
            continue;
        }
        if field.patch[pix] >= config.patches {
            return Err(Error::Validation(format!(
                "pixel {pix}: patch {} out of range P={}",
                field.patch[pix], config.patches
            )));
        }
        let (qh, rh) = encode(field.u[pix], config.bins)?;
        let (qv, rv) = encode(field.v[pix], config.bins)?;
        out.qh[pix] = qh;
        out.rh[pix] = rh;
        out.qv[pix] = qv;
        out.rv[pix] = rv;
    }
    Ok(out)
}
