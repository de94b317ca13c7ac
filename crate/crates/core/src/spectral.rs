//! 3-D discrete Fourier transforms on the tensor grid.
//!
//! The solver only needs "divide by a real nonnegative spectrum in the DFT
//! domain"; the transform itself is pluggable so this crate stays free of
//! `std`. [`DirectDft3`] evaluates each 1-D DFT by direct summation and is
//! meant for small volumes and as a reference.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

use crate::diffops::Axis;
use crate::tensor::{Dims, Tensor3};

/// A separable 3-D DFT on buffers in tensor storage order.
///
/// `forward` computes `X(f) = Σ x(p)·e^{−2πi f·p/N}` per axis; `inverse` is
/// its exact inverse, including the `1/(m·n·t)` factor.
pub trait Fft3 {
    fn forward(&mut self, dims: Dims, buf: &mut [Complex64]);
    fn inverse(&mut self, dims: Dims, buf: &mut [Complex64]);

    /// Solves `A x = rhs` for the circulant `A` whose DFT eigenvalues are
    /// `spectrum` (must be nonzero everywhere).
    fn solve_circulant(&mut self, rhs: &Tensor3, spectrum: &Tensor3) -> Tensor3 {
        let dims = rhs.dims();
        debug_assert_eq!(dims, spectrum.dims());
        let mut buf: Vec<Complex64> = rhs
            .as_slice()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward(dims, &mut buf);
        for (z, &s) in buf.iter_mut().zip(spectrum.as_slice()) {
            *z /= s;
        }
        self.inverse(dims, &mut buf);
        let mut out = Tensor3::zeros(dims);
        for (o, z) in out.as_mut_slice().iter_mut().zip(&buf) {
            *o = z.re;
        }
        out
    }
}

/// Runs `f` on every 1-D lane of `buf` along `axis`. Lanes are gathered into
/// a contiguous scratch buffer and scattered back afterwards.
pub fn for_each_lane(
    dims: Dims,
    axis: Axis,
    buf: &mut [Complex64],
    mut f: impl FnMut(&mut [Complex64]),
) {
    let (outer, len, stride) = axis.layout(dims);
    let mut lane = vec![Complex64::new(0.0, 0.0); len];
    for o in 0..outer {
        let block = o * len * stride;
        for q in 0..stride {
            for (p, slot) in lane.iter_mut().enumerate() {
                *slot = buf[block + p * stride + q];
            }
            f(&mut lane);
            for (p, &v) in lane.iter().enumerate() {
                buf[block + p * stride + q] = v;
            }
        }
    }
}

/// Direct-summation DFT, `O(m·n·t·(m+n+t))`.
#[derive(Debug, Default, Clone)]
pub struct DirectDft3 {
    twiddles: Vec<(usize, Vec<Complex64>)>,
}

impl DirectDft3 {
    pub fn new() -> Self {
        Self::default()
    }

    fn twiddle_table(&mut self, len: usize) -> Vec<Complex64> {
        if let Some((_, t)) = self.twiddles.iter().find(|(l, _)| *l == len) {
            return t.clone();
        }
        let table: Vec<Complex64> = (0..len)
            .map(|p| {
                let a = -2.0 * PI * p as f64 / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        self.twiddles.push((len, table.clone()));
        table
    }

    fn transform(&mut self, dims: Dims, buf: &mut [Complex64], inverse: bool) {
        for axis in Axis::ALL {
            let len = axis.extent(dims);
            if len < 2 {
                continue;
            }
            let table = self.twiddle_table(len);
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            for_each_lane(dims, axis, buf, |lane| {
                for (f, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (p, &x) in lane.iter().enumerate() {
                        let w = table[(f * p) % len];
                        acc += x * if inverse { w.conj() } else { w };
                    }
                    *o = acc;
                }
                lane.copy_from_slice(&out);
            });
        }
        if inverse {
            let scale = 1.0 / dims.len() as f64;
            for z in buf.iter_mut() {
                *z *= scale;
            }
        }
    }
}

impl Fft3 for DirectDft3 {
    fn forward(&mut self, dims: Dims, buf: &mut [Complex64]) {
        self.transform(dims, buf, false);
    }

    fn inverse(&mut self, dims: Dims, buf: &mut [Complex64]) {
        self.transform(dims, buf, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::{apply_diff, apply_diff_adjoint, normal_spectrum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Triple-sum DFT straight from the definition.
    fn naive_dft(dims: Dims, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); dims.len()];
        for fk in 0..dims.t {
            for fi in 0..dims.m {
                for fj in 0..dims.n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..dims.t {
                        for i in 0..dims.m {
                            for j in 0..dims.n {
                                let phase = (fi * i) as f64 / dims.m as f64
                                    + (fj * j) as f64 / dims.n as f64
                                    + (fk * k) as f64 / dims.t as f64;
                                acc += x[dims.offset(i, j, k)]
                                    * Complex64::from_polar(1.0, -2.0 * PI * phase);
                            }
                        }
                    }
                    out[dims.offset(fi, fj, fk)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn forward_matches_definition_and_inverts() {
        let dims = Dims::new(3, 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Complex64> = (0..dims.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut buf = x.clone();
        let mut dft = DirectDft3::new();
        dft.forward(dims, &mut buf);
        for (a, b) in buf.iter().zip(naive_dft(dims, &x)) {
            assert!((a - b).norm() < 1e-10);
        }
        dft.inverse(dims, &mut buf);
        for (a, b) in buf.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn normal_operator_is_diagonalised() {
        let dims = Dims::new(4, 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0));
        let mut dft = DirectDft3::new();
        let to_c = |t: &Tensor3| -> Vec<Complex64> {
            t.as_slice()
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect()
        };
        for axis in Axis::ALL {
            let nn = apply_diff_adjoint(&apply_diff(&x, axis).unwrap(), axis).unwrap();
            let mut lhs = to_c(&nn);
            dft.forward(dims, &mut lhs);
            let mut rhs = to_c(&x);
            dft.forward(dims, &mut rhs);
            let spec = normal_spectrum(axis, dims);
            for ((a, b), s) in lhs.iter().zip(&rhs).zip(spec.as_slice()) {
                assert!((a - b * s).norm() < 1e-9);
            }
        }
    }
}
