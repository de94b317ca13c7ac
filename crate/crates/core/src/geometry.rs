//! Streak-angle detection and the row-shift normalisation for oblique rain.
//!
//! Angle convention: a streak at angle `θ` runs along `(cos θ, −sin θ)` in
//! `(row, column)` coordinates, so positive angles lean like `/` and `θ = 0`
//! is vertical. Sliding row `i` right by `i` pixels makes a 45° streak
//! vertical.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::tensor::{Dims, Plane, Tensor3};

/// 3×3 median of every horizontal slice `O(i, :, :)` (an n×t image, replicate
/// border), subtracted from the input: `R0 = O − med(O)`.
pub fn median_residual(o: &Tensor3) -> Result<Tensor3> {
    let Dims { m, n, t } = o.dims();
    if n < 3 {
        return Err(Error::TooSmall {
            what: "column count",
            extent: n,
            min: 3,
        });
    }
    if t < 3 {
        return Err(Error::TooSmall {
            what: "frame count",
            extent: t,
            min: 3,
        });
    }
    let mut out = Tensor3::zeros(o.dims());
    let mut window = [0.0f64; 9];
    for k in 0..t {
        for i in 0..m {
            for j in 0..n {
                let mut w = 0;
                for dk in [-1isize, 0, 1] {
                    let kk = (k as isize + dk).clamp(0, t as isize - 1) as usize;
                    for dj in [-1isize, 0, 1] {
                        let jj = (j as isize + dj).clamp(0, n as isize - 1) as usize;
                        window[w] = o.get(i, jj, kk);
                        w += 1;
                    }
                }
                let (_, median, _) = window.select_nth_unstable_by(4, f64::total_cmp);
                out.set(i, j, k, o.get(i, j, k) - *median);
            }
        }
    }
    Ok(out)
}

/// A rotated frame and the pixels whose source location fell inside the
/// original support.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedFrame {
    pub plane: Plane,
    pub mask: Vec<bool>,
}

/// Keys cubic convolution weight (`a = −0.5`).
fn keys(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        (1.5 * x - 2.5) * x * x + 1.0
    } else if x < 2.0 {
        ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
    } else {
        0.0
    }
}

/// Bicubic sample at a point inside the frame, replicating the border.
fn cubic_sample(frame: &Plane, sr: f64, sc: f64) -> f64 {
    let (r0, c0) = (libm::floor(sr), libm::floor(sc));
    let (fr, fc) = (sr - r0, sc - c0);
    let (r0, c0) = (r0 as isize, c0 as isize);
    let last_r = frame.rows as isize - 1;
    let last_c = frame.cols as isize - 1;
    let mut acc = 0.0;
    for dr in -1..=2isize {
        let wr = keys(dr as f64 - fr);
        if wr == 0.0 {
            continue;
        }
        let rr = (r0 + dr).clamp(0, last_r) as usize;
        for dc in -1..=2isize {
            let wc = keys(dc as f64 - fc);
            if wc != 0.0 {
                acc += wr * wc * frame.get(rr, (c0 + dc).clamp(0, last_c) as usize);
            }
        }
    }
    acc
}

/// Rotates the frame content by `theta` degrees about its centre (bicubic,
/// zero fill). A streak at angle `α` ends up at angle `α + θ`.
pub fn rotate_frame(frame: &Plane, theta: f64) -> RotatedFrame {
    let (rows, cols) = (frame.rows, frame.cols);
    let (sin, cos) = libm::sincos(theta * PI / 180.0);
    let cr = (rows as f64 - 1.0) / 2.0;
    let cc = (cols as f64 - 1.0) / 2.0;
    let eps = 1e-9;
    let mut plane = Plane::zeros(rows, cols);
    let mut mask = vec![false; rows * cols];
    for r in 0..rows {
        let dr = r as f64 - cr;
        for c in 0..cols {
            let dc = c as f64 - cc;
            let sr = cr + cos * dr - sin * dc;
            let sc = cc + sin * dr + cos * dc;
            if sr < -eps
                || sc < -eps
                || sr > rows as f64 - 1.0 + eps
                || sc > cols as f64 - 1.0 + eps
            {
                continue;
            }
            let sr = sr.clamp(0.0, rows as f64 - 1.0);
            let sc = sc.clamp(0.0, cols as f64 - 1.0);
            plane.set(r, c, cubic_sample(frame, sr, sc));
            mask[r * cols + c] = true;
        }
    }
    RotatedFrame { plane, mask }
}

/// `Σ |f(r+1,c) − f(r,c)|` over vertically adjacent pairs that are both valid.
pub fn masked_vertical_l1(frame: &RotatedFrame) -> f64 {
    masked_vertical_sum(frame).0
}

/// The masked vertical ℓ1 sum and the number of pairs it covers.
fn masked_vertical_sum(frame: &RotatedFrame) -> (f64, usize) {
    let RotatedFrame { plane, mask } = frame;
    let cols = plane.cols;
    let mut acc = 0.0;
    let mut pairs = 0;
    for r in 0..plane.rows.saturating_sub(1) {
        for c in 0..cols {
            if mask[r * cols + c] && mask[(r + 1) * cols + c] {
                acc += (plane.get(r + 1, c) - plane.get(r, c)).abs();
                pairs += 1;
            }
        }
    }
    (acc, pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    /// Detected streak angle in degrees.
    pub theta_hat: f64,
    /// `(θ, y(θ))` samples of the sweep, in sweep order.
    pub curve: Vec<(f64, f64)>,
}

/// Width of the isotropic prefilter applied before the sweep. Resampling
/// smooths every angle except multiples of 90°, which lowers their vertical
/// variation; on a frame that is already smooth that effect is negligible,
/// so all angles are compared on equal terms.
pub const DETECT_SIGMA: f64 = 1.0;

/// Separable Gaussian blur with replicate border, radius `⌈3σ⌉`.
pub fn gaussian_smooth(frame: &Plane, sigma: f64) -> Plane {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|w| *w /= total);
    let (rows, cols) = (frame.rows as isize, frame.cols as isize);
    let blur = |p: &Plane, along_rows: bool| {
        Plane::from_fn(p.rows, p.cols, |r, c| {
            taps.iter()
                .zip(-radius..=radius)
                .map(|(w, d)| {
                    let (rr, cc) = if along_rows {
                        ((r as isize + d).clamp(0, rows - 1), c as isize)
                    } else {
                        (r as isize, (c as isize + d).clamp(0, cols - 1))
                    };
                    w * p.get(rr as usize, cc as usize)
                })
                .sum()
        })
    };
    blur(&blur(frame, false), true)
}

/// Default sweep covering `(−90°, 90°)` at 1° steps.
pub const FULL_SWEEP: RangeInclusive<i32> = -89..=89;

/// Detects the dominant streak angle.
///
/// For each candidate `θ` the median residual of every frame is rotated by
/// `−θ` (undoing a `θ` tilt) and `y(θ)` is the mean absolute vertical
/// difference over pixel pairs that stay inside the frame; the argmin wins, ties going to the smaller `|θ|`.
pub fn detect_angle(o: &Tensor3, sweep: RangeInclusive<i32>) -> Result<AngleEstimate> {
    detect_angle_subsampled(o, sweep, 1)
}

/// As [`detect_angle`], evaluating only every `frame_stride`-th frame.
pub fn detect_angle_subsampled(
    o: &Tensor3,
    sweep: RangeInclusive<i32>,
    frame_stride: usize,
) -> Result<AngleEstimate> {
    if sweep.is_empty() {
        return Err(Error::EmptySweep);
    }
    if let Some(bad) = [*sweep.start(), *sweep.end()]
        .into_iter()
        .find(|a| a.abs() >= 90)
    {
        return Err(Error::AngleOutOfRange(bad as f64));
    }
    if frame_stride == 0 {
        return Err(Error::InvalidParam("frame stride must be >= 1"));
    }
    let residual = median_residual(o)?;
    let frames: Vec<Plane> = (0..o.dims().t)
        .step_by(frame_stride)
        .map(|k| gaussian_smooth(&residual.frame(k), DETECT_SIGMA))
        .collect();

    let mut curve = Vec::with_capacity(sweep.clone().count());
    for theta in sweep {
        let theta = theta as f64;
        // rotation crops the corners, so the sum is taken per valid pair to
        // keep angles with a smaller support from looking artificially smooth
        let (sum, pairs) = frames
            .iter()
            .map(|f| masked_vertical_sum(&rotate_frame(f, -theta)))
            .fold((0.0, 0), |(s, p), (fs, fp)| (s + fs, p + fp));
        curve.push((theta, sum / pairs.max(1) as f64));
    }
    let theta_hat = curve
        .iter()
        .copied()
        .reduce(|best, cand| {
            let better = cand.1 < best.1
                || (cand.1 == best.1
                    && (cand.0.abs() < best.0.abs()
                        || (cand.0.abs() == best.0.abs() && cand.0 > best.0)));
            if better {
                cand
            } else {
                best
            }
        })
        .map(|(theta, _)| theta)
        .expect("sweep is non-empty");
    Ok(AngleEstimate { theta_hat, curve })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    #[default]
    None,
    /// Row `i` (0-based) slides `i` pixels right.
    ShiftI,
    /// Row `i` (0-based) slides `⌊i/2⌋` pixels right.
    ShiftII,
}

/// Flip/transpose/shift recipe that brings streaks at a detected angle close
/// to vertical. Every step is a pixel permutation, so it inverts exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShiftPlan {
    pub flip_lr: bool,
    pub transpose: bool,
    pub shift_mode: ShiftMode,
}

impl ShiftPlan {
    pub const IDENTITY: ShiftPlan = ShiftPlan {
        flip_lr: false,
        transpose: false,
        shift_mode: ShiftMode::None,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Rightward displacement of each of `rows` rows.
    pub fn row_offsets(&self, rows: usize) -> Vec<usize> {
        (0..rows)
            .map(|i| match self.shift_mode {
                ShiftMode::None => 0,
                ShiftMode::ShiftI => i,
                ShiftMode::ShiftII => i / 2,
            })
            .collect()
    }

    /// Dims after [`apply_plan`].
    pub fn output_dims(&self, dims: Dims) -> Dims {
        if self.transpose {
            dims.transposed()
        } else {
            dims
        }
    }
}

/// Chooses the normalisation for a detected angle: flip negative angles,
/// transpose angles above 45°, then Shift II on `[15, 35)` and Shift I on
/// `[35, 45]`.
pub fn plan_normalization(theta_hat: f64) -> Result<ShiftPlan> {
    if !(theta_hat > -90.0 && theta_hat < 90.0) {
        return Err(Error::AngleOutOfRange(theta_hat));
    }
    let flip_lr = theta_hat < 0.0;
    let mut theta = theta_hat.abs();
    let transpose = theta > 45.0;
    if transpose {
        theta = 90.0 - theta;
    }
    let shift_mode = if theta < 15.0 {
        ShiftMode::None
    } else if theta < 35.0 {
        ShiftMode::ShiftII
    } else {
        ShiftMode::ShiftI
    };
    Ok(ShiftPlan {
        flip_lr,
        transpose,
        shift_mode,
    })
}

fn map_frames(x: &Tensor3, out_dims: Dims, f: impl Fn(&Plane) -> Plane) -> Tensor3 {
    let mut out = Tensor3::zeros(out_dims);
    for k in 0..x.dims().t {
        out.set_frame(k, &f(&x.frame(k)));
    }
    out
}

fn flip_lr(p: &Plane) -> Plane {
    Plane::from_fn(p.rows, p.cols, |r, c| p.get(r, p.cols - 1 - c))
}

fn transpose(p: &Plane) -> Plane {
    Plane::from_fn(p.cols, p.rows, |r, c| p.get(c, r))
}

fn shift_rows(p: &Plane, offsets: &[usize], forward: bool) -> Plane {
    let cols = p.cols;
    Plane::from_fn(p.rows, cols, |r, c| {
        let off = offsets[r] % cols;
        let src = if forward {
            (c + cols - off) % cols
        } else {
            (c + off) % cols
        };
        p.get(r, src)
    })
}

/// Flip, then transpose, then circular row shifts, frame by frame.
pub fn apply_plan(x: &Tensor3, plan: &ShiftPlan) -> Tensor3 {
    let out_dims = plan.output_dims(x.dims());
    let offsets = plan.row_offsets(out_dims.m);
    map_frames(x, out_dims, |f| {
        let mut f = if plan.flip_lr { flip_lr(f) } else { f.clone() };
        if plan.transpose {
            f = transpose(&f);
        }
        if plan.shift_mode != ShiftMode::None {
            f = shift_rows(&f, &offsets, true);
        }
        f
    })
}

/// Exact inverse of [`apply_plan`]; `x` has the normalised dims.
pub fn invert_plan(x: &Tensor3, plan: &ShiftPlan) -> Tensor3 {
    let in_dims = x.dims();
    let out_dims = plan.output_dims(in_dims);
    let offsets = plan.row_offsets(in_dims.m);
    map_frames(x, out_dims, |f| {
        let mut f = if plan.shift_mode != ShiftMode::None {
            shift_rows(f, &offsets, false)
        } else {
            f.clone()
        };
        if plan.transpose {
            f = transpose(&f);
        }
        if plan.flip_lr {
            f = flip_lr(&f);
        }
        f
    })
}
