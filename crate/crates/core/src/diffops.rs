//! First-order circular differences along the three tensor axes.
//!
//! `∇` is the forward difference with periodic boundary, so every operator
//! here is circulant and diagonalised by the 3-D DFT. The adjoint is derived
//! from the forward stencil (a backward difference with the opposite sign).

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Rows (`∇1`, along the rain direction).
    Vertical,
    /// Columns (`∇2`, across the rain direction).
    Horizontal,
    /// Frames (`∇t`).
    Temporal,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Vertical, Axis::Horizontal, Axis::Temporal];

    pub fn extent(self, dims: Dims) -> usize {
        match self {
            Axis::Vertical => dims.m,
            Axis::Horizontal => dims.n,
            Axis::Temporal => dims.t,
        }
    }

    /// `(outer, len, stride)` such that the element at position `p` along this
    /// axis in block `o`, lane `q < stride` sits at `(o·len + p)·stride + q`.
    pub fn layout(self, dims: Dims) -> (usize, usize, usize) {
        match self {
            Axis::Vertical => (dims.t, dims.m, dims.n),
            Axis::Horizontal => (dims.m * dims.t, dims.n, 1),
            Axis::Temporal => (1, dims.t, dims.m * dims.n),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Axis::Vertical => "vertical",
            Axis::Horizontal => "horizontal",
            Axis::Temporal => "temporal",
        }
    }
}

fn check_extent(dims: Dims, axis: Axis) -> Result<()> {
    let extent = axis.extent(dims);
    if extent < 2 {
        return Err(Error::TooSmall {
            what: axis.name(),
            extent,
            min: 2,
        });
    }
    Ok(())
}

/// `out[p] = x[p ± 1] − x[p]` along `axis`, indices taken mod len.
fn circular_diff(x: &Tensor3, axis: Axis, ahead: bool) -> Tensor3 {
    let dims = x.dims();
    let (outer, len, stride) = axis.layout(dims);
    let src = x.as_slice();
    let mut out = Tensor3::zeros(dims);
    let dst = out.as_mut_slice();
    for o in 0..outer {
        let block = o * len * stride;
        for p in 0..len {
            let here = block + p * stride;
            let there = if ahead {
                block + ((p + 1) % len) * stride
            } else {
                block + ((p + len - 1) % len) * stride
            };
            for q in 0..stride {
                dst[here + q] = src[there + q] - src[here + q];
            }
        }
    }
    out
}

/// Forward circular difference `∇x` along `axis`, e.g. for
/// [`Axis::Vertical`] `out(i,j,k) = x(i+1 mod m, j, k) − x(i,j,k)`.
pub fn apply_diff(x: &Tensor3, axis: Axis) -> Result<Tensor3> {
    check_extent(x.dims(), axis)?;
    Ok(circular_diff(x, axis, true))
}

/// Adjoint `∇ᵀy`: `out(p) = y(p−1) − y(p)` along `axis`.
pub fn apply_diff_adjoint(y: &Tensor3, axis: Axis) -> Result<Tensor3> {
    check_extent(y.dims(), axis)?;
    Ok(circular_diff(y, axis, false))
}

/// Eigenvalue of `∇ᵀ∇` for a circular difference of length `len` at DFT
/// frequency `f`: `|1 − e^{−2πif/len}|² = 2 − 2cos(2πf/len)`.
#[inline]
pub fn normal_eigenvalue(f: usize, len: usize) -> f64 {
    2.0 - 2.0 * libm::cos(2.0 * PI * f as f64 / len as f64)
}

/// Eigenvalue field of `∇ᵀ∇` along `axis` laid out on the 3-D DFT grid of
/// `dims` (frequency index at the same position as the spatial index).
pub fn normal_spectrum(axis: Axis, dims: Dims) -> Tensor3 {
    let (m, n, t) = (dims.m, dims.n, dims.t);
    Tensor3::from_fn(dims, |i, j, k| match axis {
        Axis::Vertical => normal_eigenvalue(i, m),
        Axis::Horizontal => normal_eigenvalue(j, n),
        Axis::Temporal => normal_eigenvalue(k, t),
    })
}
