//! `rustfft`-backed implementation of the core's 3-D DFT interface.

use std::fmt;

use fastderain_core::spectral::{Complex64, Fft3};
use fastderain_core::{Axis, Dims};
use rustfft::FftPlanner;

/// Lanes gathered per batch along strided axes.
const LANE_BATCH: usize = 64;

/// Mixed-radix FFT along each axis; plans are cached by the planner.
pub struct RustFft3 {
    planner: FftPlanner<f64>,
    scratch: Vec<Complex64>,
    batch: Vec<Complex64>,
}

impl fmt::Debug for RustFft3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RustFft3").finish_non_exhaustive()
    }
}

impl Default for RustFft3 {
    fn default() -> Self {
        Self {
            planner: FftPlanner::new(),
            scratch: Vec::new(),
            batch: Vec::new(),
        }
    }
}

impl RustFft3 {
    pub fn new() -> Self {
        Self::default()
    }

    fn transform(&mut self, dims: Dims, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), dims.len(), "buffer does not match dims");
        for axis in Axis::ALL {
            let len = axis.extent(dims);
            if len < 2 {
                continue;
            }
            let fft = if inverse {
                self.planner.plan_fft_inverse(len)
            } else {
                self.planner.plan_fft_forward(len)
            };
            let need = fft.get_inplace_scratch_len();
            if self.scratch.len() < need {
                self.scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            let scratch = &mut self.scratch[..need];
            let (outer, _, stride) = axis.layout(dims);
            if stride == 1 {
                // lanes are contiguous, so the whole buffer is one batch
                fft.process_with_scratch(buf, scratch);
                continue;
            }
            // Strided lanes are gathered a block at a time: each read of
            // `LANE_BATCH` neighbouring lanes at one position is contiguous.
            self.batch
                .resize(LANE_BATCH * len, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                let block = o * len * stride;
                for q0 in (0..stride).step_by(LANE_BATCH) {
                    let width = LANE_BATCH.min(stride - q0);
                    let batch = &mut self.batch[..width * len];
                    for p in 0..len {
                        let row = &buf[block + p * stride + q0..][..width];
                        for (l, &z) in row.iter().enumerate() {
                            batch[l * len + p] = z;
                        }
                    }
                    fft.process_with_scratch(batch, scratch);
                    for p in 0..len {
                        let row = &mut buf[block + p * stride + q0..][..width];
                        for (l, z) in row.iter_mut().enumerate() {
                            *z = batch[l * len + p];
                        }
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / dims.len() as f64;
            buf.iter_mut().for_each(|z| *z *= scale);
        }
    }
}

impl Fft3 for RustFft3 {
    fn forward(&mut self, dims: Dims, buf: &mut [Complex64]) {
        self.transform(dims, buf, false);
    }

    fn inverse(&mut self, dims: Dims, buf: &mut [Complex64]) {
        self.transform(dims, buf, true);
    }
}
