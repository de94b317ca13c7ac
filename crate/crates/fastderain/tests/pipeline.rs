use fastderain::core::geometry::ShiftMode;
use fastderain::core::metrics::psnr;
use fastderain::core::synth::{composite, moving_gradient, simulate_rain, AngleMode, RainSpec};
use fastderain::core::{ColorVideo, Dims, SolverParams, Tensor3};
use fastderain::videoio::{rgb_to_yuv, Video};
use fastderain::{derain_luma, derain_video, AngleChoice, PipelineConfig};

fn oblique_scene(theta: f64) -> (Tensor3, Tensor3) {
    let dims = Dims::new(48, 48, 6);
    let truth = moving_gradient(dims);
    let spec = RainSpec {
        angle_mode: AngleMode::fixed(theta),
        intensity: 0.2,
        length: 10,
        seed: 9,
        ..RainSpec::default()
    };
    let o = composite(&truth, &simulate_rain(dims, &spec).unwrap(), 0.0, 1).unwrap();
    (truth, o)
}

#[test]
fn steep_negative_angle_is_flipped_and_transposed() {
    let (truth, o) = oblique_scene(-60.0);
    let out = derain_luma(&o, &PipelineConfig::default()).unwrap();
    assert!((out.theta + 60.0).abs() <= 2.0, "{}", out.theta);
    assert!(out.plan.flip_lr && out.plan.transpose);
    assert_eq!(out.background.dims(), o.dims());
    let gain = psnr(&truth, &out.background, 1.0).unwrap() - psnr(&truth, &o, 1.0).unwrap();
    assert!(gain > 2.0, "{gain}");
}

#[test]
fn fixed_angle_overrides_detection() {
    let (_, o) = oblique_scene(40.0);
    let config = PipelineConfig {
        angle: AngleChoice::Fixed(20.0),
        ..PipelineConfig::default()
    };
    let out = derain_luma(&o, &config).unwrap();
    assert_eq!(out.theta, 20.0);
    assert_eq!(out.plan.shift_mode, ShiftMode::ShiftII);
}

#[test]
fn outputs_stay_in_the_box_after_inversion() {
    let (_, o) = oblique_scene(30.0);
    let out = derain_luma(&o, &PipelineConfig::default()).unwrap();
    for p in 0..o.as_slice().len() {
        let (b, r, ov) = (
            out.background.as_slice()[p],
            out.rain.as_slice()[p],
            o.as_slice()[p],
        );
        assert!(0.0 <= b && b <= ov && 0.0 <= r && r <= ov);
    }
}

#[test]
fn color_video_keeps_chroma() {
    let (_, y) = oblique_scene(0.0);
    let dims = y.dims();
    let tint = |s: f64| y.map(|v| (v * s).clamp(0.0, 1.0));
    let video = Video::Color(ColorVideo::new(tint(1.0), tint(0.9), tint(0.7)).unwrap());
    let config = PipelineConfig {
        params: SolverParams {
            max_iter: 20,
            ..SolverParams::default()
        },
        angle: AngleChoice::Fixed(0.0),
    };
    let out = derain_video(&video, &config).unwrap();
    let Video::Color(bg) = &out.background else {
        panic!("color in, color out")
    };
    assert!(matches!(out.rain, Video::Gray(_)));
    assert_eq!(bg.dims(), dims);
    let Video::Color(orig) = &video else {
        unreachable!()
    };
    let [_, u0, v0] = rgb_to_yuv(orig);
    let [y1, u1, v1] = rgb_to_yuv(bg);
    // chroma survives up to the clamp to [0, 1]
    assert!(u0.max_abs_diff(&u1).unwrap() < 2e-2 && v0.max_abs_diff(&v1).unwrap() < 2e-2);
    assert!(y1.max_abs_diff(&out.luma.background).unwrap() < 2e-2);
}

#[test]
fn invalid_parameters_are_rejected_before_work() {
    let (_, o) = oblique_scene(0.0);
    let config = PipelineConfig {
        params: SolverParams {
            mu: -1.0,
            ..SolverParams::default()
        },
        ..PipelineConfig::default()
    };
    assert!(derain_luma(&o, &config).is_err());
    let config = PipelineConfig {
        angle: AngleChoice::Fixed(90.0),
        ..PipelineConfig::default()
    };
    assert!(derain_luma(&o, &config).is_err());
}
