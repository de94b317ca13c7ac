//! Whole-volume PSNR and per-frame SSIM.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{Plane, Tensor3};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// `10·log10(peak² / MSE)` over every voxel. Identical inputs give
/// `f64::INFINITY`.
pub fn psnr(reference: &Tensor3, test: &Tensor3, peak: f64) -> Result<f64> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidParam("peak must be finite and > 0"));
    }
    reference.check_dims(test)?;
    let sse: f64 = reference
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / reference.as_slice().len() as f64;
    Ok(10.0 * libm::log10(peak * peak / mse))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = libm::exp(-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable valid-region filtering: output is `(rows−10)×(cols−10)`.
fn filter_valid(p: &Plane, w: &[f64; SSIM_WINDOW]) -> Plane {
    let out_cols = p.cols + 1 - SSIM_WINDOW;
    let out_rows = p.rows + 1 - SSIM_WINDOW;
    let horiz = Plane::from_fn(p.rows, out_cols, |r, c| {
        w.iter()
            .enumerate()
            .map(|(d, wv)| wv * p.get(r, c + d))
            .sum()
    });
    Plane::from_fn(out_rows, out_cols, |r, c| {
        w.iter()
            .enumerate()
            .map(|(d, wv)| wv * horiz.get(r + d, c))
            .sum()
    })
}

fn elementwise(a: &Plane, b: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
    Plane {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

/// Mean SSIM of two frames with data range 1: 11×11 Gaussian window
/// (σ = 1.5), `C1 = 0.01²`, `C2 = 0.03²`, averaged over valid positions.
pub fn ssim_frame(reference: &Plane, test: &Plane) -> Result<f64> {
    if (reference.rows, reference.cols) != (test.rows, test.cols) {
        return Err(Error::InvalidParam("SSIM frames must have equal dims"));
    }
    let small = reference.rows.min(reference.cols);
    if small < SSIM_WINDOW {
        return Err(Error::TooSmall {
            what: "SSIM frame side",
            extent: small,
            min: SSIM_WINDOW,
        });
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let w = gaussian_window();
    let mu_a = filter_valid(reference, &w);
    let mu_b = filter_valid(test, &w);
    let aa = filter_valid(&elementwise(reference, reference, |x, _| x * x), &w);
    let bb = filter_valid(&elementwise(test, test, |x, _| x * x), &w);
    let ab = filter_valid(&elementwise(reference, test, |x, y| x * y), &w);

    let n = mu_a.data.len();
    let mut acc = 0.0;
    for p in 0..n {
        let (ma, mb) = (mu_a.data[p], mu_b.data[p]);
        let var_a = aa.data[p] - ma * ma;
        let var_b = bb.data[p] - mb * mb;
        let cov = ab.data[p] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        acc += num / den;
    }
    Ok(acc / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// dB over the whole volume; `f64::INFINITY` for identical inputs.
    pub psnr: f64,
    pub ssim_mean: f64,
    pub ssim_per_frame: Vec<f64>,
}

/// PSNR (peak 1) and per-frame SSIM of `test` against `reference`.
pub fn quality_report(reference: &Tensor3, test: &Tensor3) -> Result<QualityReport> {
    let psnr = psnr(reference, test, 1.0)?;
    let ssim_per_frame = (0..reference.dims().t)
        .map(|k| ssim_frame(&reference.frame(k), &test.frame(k)))
        .collect::<Result<Vec<_>>>()?;
    let ssim_mean = ssim_per_frame.iter().sum::<f64>() / ssim_per_frame.len().max(1) as f64;
    Ok(QualityReport {
        psnr,
        ssim_mean,
        ssim_per_frame,
    })
}
