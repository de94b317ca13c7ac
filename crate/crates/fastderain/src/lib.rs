//! Video rain-streak removal on top of `fastderain-core`: an FFT backend,
//! file formats, the detect/normalise/solve pipeline and the command line.

pub mod cli;
pub mod fft;
pub mod pipeline;
pub mod videoio;

pub use fastderain_core as core;
pub use fft::RustFft3;
pub use pipeline::{derain, derain_luma, derain_video, AngleChoice, PipelineConfig};
pub use videoio::{IoError, Video};
