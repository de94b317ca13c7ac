//! Procedural rain layers and degraded observations.
//!
//! Each frame scatters `⌈r·m·n⌉` seed dots with random amplitudes and smears
//! them with a unit-mass line kernel at the frame's (or dot's) angle; the
//! frame is then scaled so its peak equals the requested intensity. Frames
//! are generated independently from per-frame sub-streams of one seed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::{Dims, Plane, Tensor3};

#[derive(Debug, Clone, PartialEq)]
pub enum AngleMode {
    /// One angle per frame; a single entry applies to every frame.
    FixedPerFrame(Vec<f64>),
    /// Each streak draws its angle uniformly from `[lo, hi]`.
    UniformRange(f64, f64),
}

impl AngleMode {
    pub fn fixed(theta: f64) -> Self {
        AngleMode::FixedPerFrame(alloc::vec![theta])
    }

    /// Angle moving linearly from `from` to `to` over `t` frames.
    pub fn ramp(from: f64, to: f64, t: usize) -> Self {
        let steps = t.saturating_sub(1).max(1) as f64;
        AngleMode::FixedPerFrame(
            (0..t.max(1))
                .map(|k| from + (to - from) * k as f64 / steps)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RainSpec {
    /// Fraction of pixels per frame that seed a streak.
    pub density: f64,
    /// Streak length in pixels along its dominant axis.
    pub length: usize,
    /// Per-streak length varies uniformly in `length ± length_jitter`.
    pub length_jitter: usize,
    pub angle_mode: AngleMode,
    /// Peak value of each frame's rain layer.
    pub intensity: f64,
    /// Dot amplitudes are drawn uniformly from this range.
    pub amplitude: (f64, f64),
    pub seed: u64,
}

impl Default for RainSpec {
    fn default() -> Self {
        Self {
            density: 0.02,
            length: 12,
            length_jitter: 0,
            angle_mode: AngleMode::fixed(0.0),
            intensity: 0.4,
            amplitude: (0.5, 1.0),
            seed: 0,
        }
    }
}

impl RainSpec {
    /// Heavier rain with widely varying amplitude and length, loosely
    /// imitating photographed rain layers.
    pub fn case3_like(seed: u64) -> Self {
        Self {
            density: 0.05,
            length: 14,
            length_jitter: 8,
            angle_mode: AngleMode::UniformRange(-10.0, 10.0),
            intensity: 0.5,
            amplitude: (0.05, 1.0),
            seed,
        }
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::InvalidParam("density must lie in (0, 1)"));
        }
        if self.length < 2 {
            return Err(Error::InvalidParam("streak length must be >= 2"));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(Error::InvalidParam("intensity must lie in (0, 1]"));
        }
        let (lo, hi) = self.amplitude;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite() && hi > 0.0) {
            return Err(Error::InvalidParam(
                "amplitude range must satisfy 0 <= lo <= hi, hi > 0",
            ));
        }
        let in_range = |a: f64| a > -90.0 && a < 90.0;
        match &self.angle_mode {
            AngleMode::FixedPerFrame(list) => {
                if list.len() != 1 && list.len() != t {
                    return Err(Error::InvalidParam(
                        "per-frame angle list must have 1 or t entries",
                    ));
                }
                if let Some(&bad) = list.iter().find(|&&a| !in_range(a)) {
                    return Err(Error::AngleOutOfRange(bad));
                }
            }
            AngleMode::UniformRange(lo, hi) => {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::InvalidParam("angle range must satisfy lo <= hi"));
                }
                if let Some(bad) = [*lo, *hi].into_iter().find(|&a| !in_range(a)) {
                    return Err(Error::AngleOutOfRange(bad));
                }
            }
        }
        Ok(())
    }
}

/// Weighted pixel taps of a centred anti-aliased line of `len` samples at
/// `theta` degrees. Samples step one pixel along the dominant axis; the
/// fractional cross-axis position is split linearly between two pixels, so
/// each sample carries unit weight.
pub fn line_taps(len: usize, theta: f64) -> Vec<(isize, isize, f64)> {
    let rad = theta * PI / 180.0;
    let (sin, cos) = libm::sincos(rad);
    let half = (len as isize - 1) / 2;
    let mut taps = Vec::with_capacity(2 * len);
    for s in 0..len as isize {
        let step = (s - half) as f64;
        // direction (cos, −sin), scaled to a unit step on the dominant axis
        let (major, minor, vertical) = if cos.abs() >= sin.abs() {
            (s - half, -step * sin / cos, true)
        } else {
            (s - half, -step * cos / sin, false)
        };
        let base = libm::floor(minor + 1e-9);
        let frac = (minor - base).max(0.0);
        let base = base as isize;
        for (off, w) in [(base, 1.0 - frac), (base + 1, frac)] {
            if w > 1e-9 {
                taps.push(if vertical {
                    (major, off, w)
                } else {
                    (off, major, w)
                });
            }
        }
    }
    taps
}

fn frame_rain(rows: usize, cols: usize, k: usize, spec: &RainSpec, rng: &mut ChaCha8Rng) -> Plane {
    let mut plane = Plane::zeros(rows, cols);
    let dots = libm::ceil(spec.density * (rows * cols) as f64) as usize;
    let (amp_lo, amp_hi) = spec.amplitude;
    for _ in 0..dots {
        let r0 = rng.random_range(0..rows) as isize;
        let c0 = rng.random_range(0..cols) as isize;
        let amp = if amp_hi > amp_lo {
            rng.random_range(amp_lo..=amp_hi)
        } else {
            amp_lo
        };
        let theta = match &spec.angle_mode {
            AngleMode::FixedPerFrame(list) => list[if list.len() == 1 { 0 } else { k }],
            AngleMode::UniformRange(lo, hi) if hi > lo => rng.random_range(*lo..=*hi),
            AngleMode::UniformRange(lo, _) => *lo,
        };
        let len = if spec.length_jitter > 0 {
            let j = spec.length_jitter as i64;
            (spec.length as i64 + rng.random_range(-j..=j)).max(2) as usize
        } else {
            spec.length
        };
        let weight = amp / len as f64;
        for (dr, dc, w) in line_taps(len, theta) {
            let (r, c) = (r0 + dr, c0 + dc);
            if r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols {
                let (r, c) = (r as usize, c as usize);
                plane.set(r, c, plane.get(r, c) + w * weight);
            }
        }
    }
    let peak = plane.data.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        let s = spec.intensity / peak;
        for v in plane.data.iter_mut() {
            *v = (*v * s).clamp(0.0, 1.0);
        }
    }
    plane
}

/// Generates a nonnegative rain layer of the given dims.
pub fn simulate_rain(dims: Dims, spec: &RainSpec) -> Result<Tensor3> {
    spec.validate(dims.t)?;
    let mut out = Tensor3::zeros(dims);
    for k in 0..dims.t {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        out.set_frame(k, &frame_rain(dims.m, dims.n, k, spec, &mut rng));
    }
    Ok(out)
}

/// `O = clamp[0,1](B + R + N)` with `N ~ 𝒩(0, σ²)` i.i.d.
pub fn composite(
    background: &Tensor3,
    rain: &Tensor3,
    noise_sigma: f64,
    seed: u64,
) -> Result<Tensor3> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParam("noise sigma must be finite and >= 0"));
    }
    let mut out = background.add(rain)?;
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("sigma checked above");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in out.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out.map(|v| v.clamp(0.0, 1.0)))
}

/// Smooth test scene: a diagonal ramp drifting half a pixel per frame,
/// valued in `[0.25, 0.65]`.
pub fn moving_gradient(dims: Dims) -> Tensor3 {
    let span = (dims.m + dims.n) as f64 + 0.5 * dims.t as f64;
    Tensor3::from_fn(dims, |i, j, k| {
        0.25 + 0.4 * (i as f64 + j as f64 + 0.5 * k as f64) / span
    })
}
