//! Photometric losses with analytic gradients.

use crate::img::{ImageGray, ImageRgb};
use crate::splat::GBuffer;
use crate::Result;

use super::ssim::ssim_masked;

/// Weight of the D-SSIM term in the RGB loss (2DGS convention).
pub const RGB_DSSIM_WEIGHT: f64 = 0.2;
/// Weight of the D-SSIM term in the clay loss.
pub const CLAY_DSSIM_WEIGHT: f64 = 0.8;
/// Weight of the alpha-vs-mask regularizer when masks are in use.
pub const MASK_LOSS_WEIGHT: f64 = 0.1;

/// Mean absolute error over unmasked pixels; gradient w.r.t. `a`.
pub fn l1_loss(a: &ImageRgb, b: &ImageRgb, mask: Option<&ImageGray>) -> Result<(f64, ImageRgb)> {
    a.same_dims(b)?;
    let mut grad = ImageRgb::new(a.width, a.height);
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in 0..a.pixels() {
        if let Some(m) = mask {
            if m.data[p] <= 0.5 {
                continue;
            }
        }
        count += 1;
        for c in 0..3 {
            let d = a.data[p * 3 + c] - b.data[p * 3 + c];
            sum += d.abs();
            grad.data[p * 3 + c] = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
        }
    }
    if count == 0 {
        return Ok((0.0, grad));
    }
    let norm = 1.0 / (count as f64 * 3.0);
    for g in &mut grad.data {
        *g *= norm;
    }
    Ok((sum * norm, grad))
}

fn l1_dssim(
    rendered: &ImageRgb,
    target: &ImageRgb,
    mask: Option<&ImageGray>,
    dssim_weight: f64,
) -> Result<(f64, ImageRgb)> {
    let (l1, g1) = l1_loss(rendered, target, mask)?;
    let (s, gs) = ssim_masked(rendered, target, mask)?;
    let value = (1.0 - dssim_weight) * l1 + dssim_weight * (1.0 - s);
    let mut grad = g1;
    for (g, d) in grad.data.iter_mut().zip(&gs.data) {
        *g = *g * (1.0 - dssim_weight) - d * dssim_weight;
    }
    Ok((value, grad))
}

/// Reconstruction loss 0.8 L1 + 0.2 D-SSIM.
pub fn rgb_loss(
    rendered: &ImageRgb,
    target: &ImageRgb,
    mask: Option<&ImageGray>,
) -> Result<(f64, ImageRgb)> {
    l1_dssim(rendered, target, mask, RGB_DSSIM_WEIGHT)
}

/// Clay supervision loss (1 - lambda) L1 + lambda D-SSIM with the high
/// SSIM weight.
pub fn clay_loss(
    rendered: &ImageRgb,
    target: &ImageRgb,
    lambda_dssim: f64,
    mask: Option<&ImageGray>,
) -> Result<(f64, ImageRgb)> {
    l1_dssim(rendered, target, mask, lambda_dssim)
}

/// Simple coverage regularizer: mean |accum_alpha - mask| with gradient on
/// the accumulated-alpha channel. Stands in for a full mask loss.
pub fn alpha_mask_loss(gbuffer: &GBuffer, mask: &ImageGray) -> (f64, Vec<f64>) {
    let n = gbuffer.pixels.len();
    let mut grad = vec![0.0; n];
    let mut sum = 0.0;
    for (p, px) in gbuffer.pixels.iter().enumerate() {
        let d = px.accum_alpha - mask.data[p];
        sum += d.abs();
        grad[p] = if d > 0.0 {
            1.0 / n as f64
        } else if d < 0.0 {
            -1.0 / n as f64
        } else {
            0.0
        };
    }
    (sum / n as f64, grad)
}
