//! Image similarity and deformation quality measures.
//!
//! Intensity-based measures assume the `[0, 255]` dynamic range.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::Deformation;
use crate::grid::{GridError, ScalarField};
use crate::jacobian::{folding_indicator, jacobian_det};

/// Peak intensity of the 8-bit range.
pub const PEAK: f64 = 255.0;
/// Side of the square SSIM window.
pub const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("relative SSD is undefined: template and reference are identical")]
    IdenticalInputs,
}

/// Summary of one registration result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` when the input pair is identical.
    pub re_ssd: Option<f64>,
    pub ssim: f64,
    /// `+∞` when the images agree exactly.
    pub psnr: f64,
    pub det_mean: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub r_min: f64,
    pub gfr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianStats {
    pub det_mean: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub r_min: f64,
    pub gfr: f64,
}

fn ssd(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// `Σ(warped − R)² / Σ(T − R)²`.
pub fn re_ssd(t: &ScalarField, r: &ScalarField, warped: &ScalarField) -> Result<f64, MetricsError> {
    t.ensure_same_grid(r)?;
    t.ensure_same_grid(warped)?;
    let denom = ssd(t, r);
    if denom == 0.0 {
        return Err(MetricsError::IdenticalInputs);
    }
    Ok(ssd(warped, r) / denom)
}

/// Peak signal-to-noise ratio in dB; `+∞` for identical images.
pub fn psnr(r: &ScalarField, warped: &ScalarField) -> Result<f64, MetricsError> {
    r.ensure_same_grid(warped)?;
    let mse = ssd(r, warped) / r.spec().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

fn ssim_block(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    va /= n;
    vb /= n;
    cov /= n;
    ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
}

/// Mean structural similarity over all 8×8 windows (stride 1, uniform
/// weights, population moments). Images smaller than the window fall back
/// to a single global window.
pub fn ssim(r: &ScalarField, warped: &ScalarField) -> Result<f64, MetricsError> {
    r.ensure_same_grid(warped)?;
    let spec = r.spec();
    let (m, n) = (spec.m(), spec.n());
    if m < SSIM_WINDOW || n < SSIM_WINDOW {
        return Ok(ssim_block(r.values(), warped.values()));
    }
    let mut wa = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut wb = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut total = 0.0;
    let mut count = 0usize;
    for j0 in 0..=n - SSIM_WINDOW {
        for i0 in 0..=m - SSIM_WINDOW {
            wa.clear();
            wb.clear();
            for j in j0..j0 + SSIM_WINDOW {
                for i in i0..i0 + SSIM_WINDOW {
                    wa.push(r.get(i, j));
                    wb.push(warped.get(i, j));
                }
            }
            total += ssim_block(&wa, &wb);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Determinant statistics over all cells; `r_min` and `gfr` over interior
/// cells.
pub fn jacobian_stats(phi: &Deformation) -> JacobianStats {
    let det = jacobian_det(phi);
    let report = folding_indicator(phi);
    JacobianStats {
        det_mean: det.mean(),
        det_min: det.min(),
        det_max: det.max(),
        r_min: report.r_min,
        gfr: report.gfr,
    }
}

/// Full report for a registered pair on the `[0, 255]` scale.
pub fn evaluate(
    t: &ScalarField,
    r: &ScalarField,
    warped: &ScalarField,
    phi: &Deformation,
) -> Result<MetricsReport, MetricsError> {
    let re = match re_ssd(t, r, warped) {
        Ok(v) => Some(v),
        Err(MetricsError::IdenticalInputs) => None,
        Err(e) => return Err(e),
    };
    let js = jacobian_stats(phi);
    Ok(MetricsReport {
        re_ssd: re,
        ssim: ssim(r, warped)?,
        psnr: psnr(r, warped)?,
        det_mean: js.det_mean,
        det_min: js.det_min,
        det_max: js.det_max,
        r_min: js.r_min,
        gfr: js.gfr,
    })
}
