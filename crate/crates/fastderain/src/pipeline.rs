//! End-to-end deraining: detect the streak angle, normalise streaks to
//! vertical, solve on the luma plane, undo the normalisation and put the
//! color channels back.

use fastderain_core::geometry::{
    apply_plan, detect_angle, invert_plan, plan_normalization, ShiftPlan, FULL_SWEEP,
};
use fastderain_core::{ColorVideo, DerainResult, Result, SolverParams, Tensor3};

use crate::fft::RustFft3;
use crate::videoio::{rgb_to_yuv, yuv_to_rgb, Video};

/// Runs the solver on `o` with the FFT backend of this crate.
pub fn derain(o: &Tensor3, params: &SolverParams) -> Result<DerainResult> {
    fastderain_core::solver::derain(o, params, RustFft3::new())
}

/// How the streak angle is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AngleChoice {
    #[default]
    Auto,
    /// Use this angle in degrees; `0` disables normalisation.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub params: SolverParams,
    pub angle: AngleChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumaOutput {
    pub background: Tensor3,
    pub rain: Tensor3,
    /// Angle used for the plan, detected or given.
    pub theta: f64,
    pub plan: ShiftPlan,
    pub iterations: usize,
    pub converged: bool,
    /// Constraint residuals after the last iteration.
    pub residuals: [f64; 4],
}

/// The pipeline on a single plane.
pub fn derain_luma(y: &Tensor3, config: &PipelineConfig) -> Result<LumaOutput> {
    config.params.validate()?;
    let theta = match config.angle {
        AngleChoice::Auto => detect_angle(y, FULL_SWEEP)?.theta_hat,
        AngleChoice::Fixed(theta) => theta,
    };
    let plan = plan_normalization(theta)?;
    let result = derain(&apply_plan(y, &plan), &config.params)?;
    let residuals = result.history.last().map_or([0.0; 4], |r| r.residuals);
    Ok(LumaOutput {
        background: invert_plan(&result.background, &plan),
        rain: invert_plan(&result.rain, &plan),
        theta,
        plan,
        iterations: result.iterations,
        converged: result.converged,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoOutput {
    /// Derained video in the input's color space.
    pub background: Video,
    /// The rain layer; it lives in luma only, so it is always gray.
    pub rain: Video,
    pub luma: LumaOutput,
}

/// The pipeline on a gray or RGB video. Color input is converted to YUV,
/// only Y is derained, and U and V are passed through.
pub fn derain_video(video: &Video, config: &PipelineConfig) -> Result<VideoOutput> {
    match video {
        Video::Gray(x) => {
            let luma = derain_luma(x, config)?;
            Ok(VideoOutput {
                background: Video::Gray(luma.background.clone()),
                rain: Video::Gray(luma.rain.clone()),
                luma,
            })
        }
        Video::Color(c) => {
            let [y, u, v] = rgb_to_yuv(c);
            let luma = derain_luma(&y, config)?;
            let background: ColorVideo = yuv_to_rgb(&luma.background, &u, &v)?;
            Ok(VideoOutput {
                background: Video::Color(background),
                rain: Video::Gray(luma.rain.clone()),
                luma,
            })
        }
    }
}
