//! The `fastderain` command line: `derain`, `detect-angle`, `simulate` and
//! `metrics`.
//!
//! Exit codes are 0 on success, 1 for usage errors, 2 for I/O errors and 3
//! for numeric failures (solver preconditions, degenerate inputs).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastderain_core::geometry::{detect_angle_subsampled, ShiftMode, FULL_SWEEP};
use fastderain_core::metrics::{quality_report, QualityReport};
use fastderain_core::synth::{composite, moving_gradient, simulate_rain, AngleMode, RainSpec};
use fastderain_core::{Dims, ShrinkMode, SolverParams, Tensor3};

use crate::pipeline::{derain_video, AngleChoice, PipelineConfig};
use crate::videoio::{self, IoError, Staged, Video};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("numeric failure: {0}")]
    Numeric(#[from] fastderain_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "fastderain",
    version,
    about = "Remove rain streaks from videos"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate a video into background and rain layers.
    Derain(DerainArgs),
    /// Estimate the dominant streak angle in degrees.
    DetectAngle(DetectAngleArgs),
    /// Generate a synthetic rainy video with its ground truth.
    Simulate(SimulateArgs),
    /// PSNR and SSIM of a video against a reference.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Single-channel FDR1 tensor file.
    Raw,
    /// Directory of numbered PNG frames.
    Frames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shrink {
    Signed,
    Paper,
}

impl From<Shrink> for ShrinkMode {
    fn from(s: Shrink) -> Self {
        match s {
            Shrink::Signed => ShrinkMode::Signed,
            Shrink::Paper => ShrinkMode::OneSidedPaper,
        }
    }
}

/// Four comma-separated weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha(pub [f64; 4]);

impl FromStr for Alpha {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        <[f64; 4]>::try_from(vals)
            .map(Alpha)
            .map_err(|v| format!("expected 4 weights, got {}", v.len()))
    }
}

/// `MxNxT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimsArg(pub Dims);

impl FromStr for DimsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = s
            .split('x')
            .map(|p| p.parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        match parts[..] {
            [m, n, t] if m > 0 && n > 0 && t > 0 => Ok(DimsArg(Dims::new(m, n, t))),
            _ => Err("expected MxNxT with positive extents".into()),
        }
    }
}

/// `fixed:θ[,θ…]`, `ramp:FROM:TO` or `uniform:LO:HI`, in degrees.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleModeArg {
    Fixed(Vec<f64>),
    Ramp(f64, f64),
    Uniform(f64, f64),
}

impl FromStr for AngleModeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let (kind, rest) = s.split_once(':').ok_or("expected KIND:VALUES")?;
        let pair = || -> Result<(f64, f64), String> {
            let (a, b) = rest.split_once(':').ok_or("expected two values A:B")?;
            Ok((num(a)?, num(b)?))
        };
        match kind {
            "fixed" => Ok(AngleModeArg::Fixed(
                rest.split(',').map(num).collect::<Result<_, _>>()?,
            )),
            "ramp" => pair().map(|(a, b)| AngleModeArg::Ramp(a, b)),
            "uniform" => pair().map(|(a, b)| AngleModeArg::Uniform(a, b)),
            other => Err(format!(
                "unknown angle mode {other:?}; use fixed, ramp or uniform"
            )),
        }
    }
}

impl AngleModeArg {
    fn to_mode(&self, t: usize) -> AngleMode {
        match self {
            AngleModeArg::Fixed(v) => AngleMode::FixedPerFrame(v.clone()),
            AngleModeArg::Ramp(a, b) => AngleMode::ramp(*a, *b, t),
            AngleModeArg::Uniform(a, b) => AngleMode::UniformRange(*a, *b),
        }
    }
}

#[derive(Debug, Args)]
pub struct DerainArgs {
    /// FDR1 file or frame directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_bg: PathBuf,
    #[arg(long)]
    pub out_rain: Option<PathBuf>,
    /// Weights a1,a2,a3,a4.
    #[arg(long)]
    pub alpha: Option<Alpha>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Detect the streak angle (the default).
    #[arg(long, conflicts_with = "angle")]
    pub auto_angle: bool,
    /// Use a fixed streak angle in degrees; 0 disables normalisation.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: Option<f64>,
    #[arg(long, value_enum, default_value_t = Shrink::Signed)]
    pub shrink: Shrink,
    /// Output format; defaults to the input's.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Rain-free reference; when given, quality before and after is reported.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectAngleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Write the sweep curve as CSV (theta_deg,y).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Evaluate only every N-th frame.
    #[arg(long, default_value_t = 1)]
    pub frame_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Light rain, angle ramping from −15° to 15° over time.
    Case1,
    /// Heavier rain, angles uniform in [−15°, 15°].
    Case2,
    /// Mixed lengths and amplitudes.
    #[value(name = "case3-like")]
    Case3Like,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "64x64x16")]
    pub dims: DimsArg,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub length: Option<usize>,
    /// fixed:θ[,θ…], ramp:FROM:TO or uniform:LO:HI (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub angle_mode: Option<AngleModeArg>,
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rainy observation.
    #[arg(long)]
    pub out: PathBuf,
    /// Rain-free background.
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
    /// Rain layer alone.
    #[arg(long)]
    pub out_rain: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Raw)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Also write the report as a CSV header and row.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Regular output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render();
            let _ = if informational {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return if informational { 0 } else { 1 };
        }
    };
    let result = match &cli.command {
        Command::Derain(a) => cmd_derain(a),
        Command::DetectAngle(a) => cmd_detect_angle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match result.and_then(|text| {
        out.write_all(text.as_bytes()).map_err(|source| {
            IoError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }
            .into()
        })
    }) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "fastderain: {e}");
            e.exit_code()
        }
    }
}

/// Mixed into the seed so the noise stream differs from the rain stream.
const NOISE_STREAM: u64 = 0x6e_6f69_7365;

fn read_video(path: &Path) -> CliResult<Video> {
    if path.is_dir() {
        Ok(videoio::read_frames(path)?)
    } else {
        Ok(Video::Gray(videoio::read_raw(path)?))
    }
}

fn stage_video(path: &Path, video: &Video, format: Format) -> CliResult<Staged> {
    match (format, video) {
        (Format::Frames, v) => Ok(videoio::stage_frames(path, v)?),
        (Format::Raw, Video::Gray(x)) => Ok(videoio::stage_raw(path, x)?),
        (Format::Raw, Video::Color(_)) => Err(CliError::Usage(format!(
            "{}: raw files hold one channel; use --format frames for color video",
            path.display()
        ))),
    }
}

fn commit_all(staged: Vec<Staged>) -> CliResult<()> {
    for s in staged {
        s.commit()?;
    }
    Ok(())
}

fn solver_params(a: &DerainArgs) -> CliResult<SolverParams> {
    let params = SolverParams {
        alpha: a.alpha.map_or(SolverParams::default().alpha, |x| x.0),
        mu: a.mu,
        tol: a.tol,
        max_iter: a.max_iter,
        mode: a.shrink.into(),
    };
    params
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(params)
}

fn angle_choice(angle: Option<f64>) -> CliResult<AngleChoice> {
    match angle {
        None => Ok(AngleChoice::Auto),
        Some(theta) if theta > -90.0 && theta < 90.0 => Ok(AngleChoice::Fixed(theta)),
        Some(theta) => Err(CliError::Usage(format!(
            "--angle {theta} outside (-90, 90)"
        ))),
    }
}

fn plan_label(mode: ShiftMode) -> &'static str {
    match mode {
        ShiftMode::None => "none",
        ShiftMode::ShiftI => "shift-i",
        ShiftMode::ShiftII => "shift-ii",
    }
}

fn cmd_derain(a: &DerainArgs) -> CliResult<String> {
    let config = PipelineConfig {
        params: solver_params(a)?,
        angle: angle_choice(a.angle)?,
    };
    let format = a.format.unwrap_or(if a.input.is_dir() {
        Format::Frames
    } else {
        Format::Raw
    });
    let input = read_video(&a.input)?;
    let truth = a.truth.as_deref().map(read_video).transpose()?;
    let result = derain_video(&input, &config)?;

    let mut staged = vec![stage_video(&a.out_bg, &result.background, format)?];
    if let Some(path) = &a.out_rain {
        staged.push(stage_video(path, &result.rain, format)?);
    }

    let luma = &result.luma;
    let mut text = String::new();
    let _ = writeln!(text, "theta={}", luma.theta);
    let _ = writeln!(
        text,
        "plan=flip_lr:{} transpose:{} shift:{}",
        luma.plan.flip_lr,
        luma.plan.transpose,
        plan_label(luma.plan.shift_mode)
    );
    let _ = writeln!(text, "iterations={}", luma.iterations);
    let _ = writeln!(text, "converged={}", luma.converged);
    for (i, r) in luma.residuals.iter().enumerate() {
        let _ = writeln!(text, "residual_{}={r:e}", i + 1);
    }
    if let Some(truth) = truth {
        let truth = truth.luma();
        let before = quality_report(&truth, &input.luma())?;
        let after = quality_report(&truth, &result.background.luma())?;
        let _ = writeln!(text, "psnr_input={:?}", before.psnr);
        let _ = writeln!(text, "psnr_output={:?}", after.psnr);
        let _ = writeln!(text, "psnr_gain={:?}", after.psnr - before.psnr);
        let _ = writeln!(text, "ssim_input={:?}", before.ssim_mean);
        let _ = writeln!(text, "ssim_output={:?}", after.ssim_mean);
    }
    commit_all(staged)?;
    Ok(text)
}

fn cmd_detect_angle(a: &DetectAngleArgs) -> CliResult<String> {
    if a.frame_stride == 0 {
        return Err(CliError::Usage("--frame-stride must be >= 1".into()));
    }
    let y = read_video(&a.input)?.luma();
    let est = detect_angle_subsampled(&y, FULL_SWEEP, a.frame_stride)?;
    if let Some(path) = &a.curve {
        let mut csv = String::from("theta_deg,y\n");
        for (theta, val) in &est.curve {
            let _ = writeln!(csv, "{theta},{val:?}");
        }
        videoio::write_bytes_atomic(path, csv.as_bytes())?;
    }
    Ok(format!("{}\n", est.theta_hat))
}

fn rain_spec(a: &SimulateArgs) -> CliResult<RainSpec> {
    let t = a.dims.0.t;
    let mut spec = match a.preset {
        None => RainSpec::default(),
        Some(Preset::Case1) => RainSpec {
            density: 0.03,
            angle_mode: AngleMode::ramp(-15.0, 15.0, t),
            ..RainSpec::default()
        },
        Some(Preset::Case2) => RainSpec {
            density: 0.06,
            angle_mode: AngleMode::UniformRange(-15.0, 15.0),
            ..RainSpec::default()
        },
        Some(Preset::Case3Like) => RainSpec::case3_like(0),
    };
    spec.seed = a.seed;
    if let Some(d) = a.density {
        spec.density = d;
    }
    if let Some(l) = a.length {
        spec.length = l;
    }
    if let Some(m) = &a.angle_mode {
        spec.angle_mode = m.to_mode(t);
    }
    if let Some(i) = a.intensity {
        spec.intensity = i;
    }
    spec.validate(t)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
        return Err(CliError::Usage("--sigma must be finite and >= 0".into()));
    }
    Ok(spec)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<String> {
    let spec = rain_spec(a)?;
    let dims = a.dims.0;
    let truth = moving_gradient(dims);
    let rain = simulate_rain(dims, &spec)?;
    let rainy = composite(&truth, &rain, a.sigma, a.seed ^ NOISE_STREAM)?;

    let mut staged = vec![stage_video(&a.out, &Video::Gray(rainy), a.format)?];
    for (path, x) in [(&a.out_truth, truth), (&a.out_rain, rain)] {
        if let Some(path) = path {
            staged.push(stage_video(path, &Video::Gray(x), a.format)?);
        }
    }
    commit_all(staged)?;
    Ok(format!("dims={dims}\n"))
}

fn report_text(rep: &QualityReport) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "psnr={:?}", rep.psnr);
    let _ = writeln!(text, "ssim_mean={:?}", rep.ssim_mean);
    let _ = writeln!(text, "frames={}", rep.ssim_per_frame.len());
    for (k, s) in rep.ssim_per_frame.iter().enumerate() {
        let _ = writeln!(text, "ssim_frame_{k}={s:?}");
    }
    text
}

fn report_csv(rep: &QualityReport) -> String {
    let mut header = String::from("psnr,ssim_mean");
    let mut row = format!("{:?},{:?}", rep.psnr, rep.ssim_mean);
    for (k, s) in rep.ssim_per_frame.iter().enumerate() {
        let _ = write!(header, ",ssim_frame_{k}");
        let _ = write!(row, ",{s:?}");
    }
    format!("{header}\n{row}\n")
}

fn cmd_metrics(a: &MetricsArgs) -> CliResult<String> {
    let reference = read_video(&a.reference)?.luma();
    let test: Tensor3 = read_video(&a.test)?.luma();
    if reference.dims() != test.dims() {
        return Err(CliError::Usage(format!(
            "--ref is {} but --test is {}",
            reference.dims(),
            test.dims()
        )));
    }
    let rep = quality_report(&reference, &test)?;
    if let Some(path) = &a.csv {
        videoio::write_bytes_atomic(path, report_csv(&rep).as_bytes())?;
    }
    Ok(report_text(&rep))
}
