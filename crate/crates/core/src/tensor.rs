//! Dense m×n×t volumes.
//!
//! Index convention: `i` is the row (vertical, y), `j` the column
//! (horizontal, x) and `k` the frame. Storage is frame-major, then row, then
//! column, so the element `(i, j, k)` lives at offset `(k·m + i)·n + j`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub t: usize,
}

impl Dims {
    pub const fn new(m: usize, n: usize, t: usize) -> Self {
        Self { m, n, t }
    }

    pub const fn len(&self) -> usize {
        self.m * self.n * self.t
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.m + i) * self.n + j
    }

    /// Rows and columns swapped, frame count kept.
    pub const fn transposed(&self) -> Self {
        Self::new(self.n, self.m, self.t)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.t)
    }
}

/// A real 3-mode tensor. Holds observations, layers, gradient fields and
/// multipliers alike, so values are not range-restricted.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        assert!(value.is_finite(), "fill value must be finite");
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Wraps a buffer laid out in storage order. Rejects wrong lengths and
    /// non-finite entries.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::BadLength {
                dims,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, data })
    }

    /// Builds a tensor from `f(i, j, k)`.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..dims.t {
            for i in 0..dims.m {
                for j in 0..dims.n {
                    data.push(f(i, j, k));
                }
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { dims, data }
    }

    /// Stacks equally sized frames along the temporal axis.
    pub fn from_frames(frames: &[Plane]) -> Result<Self> {
        let first = frames.first().ok_or(Error::TooSmall {
            what: "frame count",
            extent: 0,
            min: 1,
        })?;
        let dims = Dims::new(first.rows, first.cols, frames.len());
        let mut data = Vec::with_capacity(dims.len());
        for f in frames {
            if f.rows != first.rows || f.cols != first.cols {
                return Err(Error::DimMismatch {
                    left: dims,
                    right: Dims::new(f.rows, f.cols, frames.len()),
                });
            }
            data.extend_from_slice(&f.data);
        }
        Self::from_vec(dims, data)
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let off = self.dims.offset(i, j, k);
        self.data[off] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Raw mutable access. Callers must keep every entry finite.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn frame(&self, k: usize) -> Plane {
        let len = self.dims.m * self.dims.n;
        Plane {
            rows: self.dims.m,
            cols: self.dims.n,
            data: self.data[k * len..(k + 1) * len].to_vec(),
        }
    }

    pub fn set_frame(&mut self, k: usize, frame: &Plane) {
        assert_eq!((frame.rows, frame.cols), (self.dims.m, self.dims.n));
        let len = self.dims.m * self.dims.n;
        self.data[k * len..(k + 1) * len].copy_from_slice(&frame.data);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self += s · other`
    pub fn add_scaled(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_dims(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                left: self.dims,
                right: other.dims,
            })
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum::<f64>())
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Projects every entry onto `[0, upper(i,j,k)]`.
    pub fn clamp_box(&self, upper: &Self) -> Result<Self> {
        self.zip_map(upper, |x, u| x.max(0.0).min(u))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.dims.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let off = self.dims.offset(i, j, k);
        &mut self.data[off]
    }
}

/// Row-major 2-D field, used for single frames and horizontal slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Three-channel video, each channel clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorVideo {
    r: Tensor3,
    g: Tensor3,
    b: Tensor3,
}

impl ColorVideo {
    pub fn new(r: Tensor3, g: Tensor3, b: Tensor3) -> Result<Self> {
        r.check_dims(&g)?;
        r.check_dims(&b)?;
        let unit = |x: f64| x.clamp(0.0, 1.0);
        Ok(Self {
            r: r.map(unit),
            g: g.map(unit),
            b: b.map(unit),
        })
    }

    pub fn dims(&self) -> Dims {
        self.r.dims()
    }

    pub fn channels(&self) -> [&Tensor3; 3] {
        [&self.r, &self.g, &self.b]
    }

    pub fn into_channels(self) -> [Tensor3; 3] {
        [self.r, self.g, self.b]
    }
}
