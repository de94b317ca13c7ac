//! Split augmented Lagrangian solver for the directional-TV rain model.
//!
//! Splitting `V1 = ∇1R`, `V2 = R`, `V3 = ∇2B`, `V4 = ∇tB` with scaled
//! multipliers `D1..D4`, one iteration is
//!
//! ```text
//! Vi ← S_{αi/μ}(Ai + Di)            Ai ∈ {∇1R, R, ∇2B, ∇tB}
//! B  ← clamp[0,O]( (O − R + μ∇2ᵀ(V3 − D3) + μ∇tᵀ(V4 − D4)) / (1 + μ∇2ᵀ∇2 + μ∇tᵀ∇t) )
//! R  ← clamp[0,O]( (O − B + μ∇1ᵀ(V1 − D1) + μ(V2 − D2))    / (1 + μ∇1ᵀ∇1 + μ) )
//! Di ← Di + Ai − Vi
//! ```
//!
//! The divisions are elementwise in the 3-D DFT domain. `R` is solved with the
//! freshly updated `B`.

use alloc::vec::Vec;

use crate::diffops::{apply_diff, apply_diff_adjoint, normal_spectrum, Axis};
use crate::error::{Error, Result};
use crate::shrinkage::{soft_threshold_in_place, ShrinkMode};
use crate::spectral::Fft3;
use crate::tensor::{Dims, Tensor3};

/// Guard for the relative-change denominator.
const REL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Weights of `‖∇1R‖1`, `‖R‖1`, `‖∇2B‖1`, `‖∇tB‖1`.
    pub alpha: [f64; 4],
    pub mu: f64,
    /// Stop once `‖B⁺ − B‖F / ‖B‖F` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub mode: ShrinkMode,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            alpha: [0.01, 1e-5, 1e-5, 0.01],
            mu: 1.0,
            tol: 1e-4,
            max_iter: 100,
            mode: ShrinkMode::Signed,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidParam("alpha weights must be finite and >= 0"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParam("mu must be finite and > 0"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParam("tol must be finite and > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParam("max_iter must be >= 1"));
        }
        Ok(())
    }

    fn thresholds(&self) -> [f64; 4] {
        self.alpha.map(|a| a / self.mu)
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// `‖B⁺ − B‖F / max(‖B‖F, ε)`.
    pub rel_change: f64,
    /// `‖∇1R − V1‖F`, `‖R − V2‖F`, `‖∇2B − V3‖F`, `‖∇tB − V4‖F`.
    pub residuals: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerainState {
    pub o: Tensor3,
    pub b: Tensor3,
    pub r: Tensor3,
    pub v: [Tensor3; 4],
    pub d: [Tensor3; 4],
    pub iter: usize,
    pub history: Vec<IterationRecord>,
}

impl DerainState {
    pub fn dims(&self) -> Dims {
        self.o.dims()
    }

    /// The split variables' targets `[∇1R, R, ∇2B, ∇tB]` at the current iterate.
    pub fn split_targets(&self) -> [Tensor3; 4] {
        [
            diff(&self.r, Axis::Vertical),
            self.r.clone(),
            diff(&self.b, Axis::Horizontal),
            diff(&self.b, Axis::Temporal),
        ]
    }

    /// Constraint residuals `‖Ai − Vi‖F`.
    pub fn residuals(&self) -> [f64; 4] {
        let targets = self.split_targets();
        core::array::from_fn(|i| {
            targets[i]
                .sub(&self.v[i])
                .expect("state tensors share dims")
                .frobenius_norm()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerainResult {
    pub background: Tensor3,
    pub rain: Tensor3,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

// Extents are validated once in `init_state`.
fn diff(x: &Tensor3, axis: Axis) -> Tensor3 {
    apply_diff(x, axis).expect("extent checked at init")
}

fn diff_adjoint(x: &Tensor3, axis: Axis) -> Tensor3 {
    apply_diff_adjoint(x, axis).expect("extent checked at init")
}

/// `B = O`, `R = 0`, all auxiliaries and multipliers zero.
pub fn init_state(o: &Tensor3) -> Result<DerainState> {
    let dims = o.dims();
    for axis in Axis::ALL {
        let extent = axis.extent(dims);
        if extent < 2 {
            return Err(Error::TooSmall {
                what: match axis {
                    Axis::Vertical => "row count",
                    Axis::Horizontal => "column count",
                    Axis::Temporal => "frame count",
                },
                extent,
                min: 2,
            });
        }
    }
    if let Some((offset, &value)) = o.as_slice().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeObservation { offset, value });
    }
    let zero = Tensor3::zeros(dims);
    Ok(DerainState {
        o: o.clone(),
        b: o.clone(),
        r: zero.clone(),
        v: core::array::from_fn(|_| zero.clone()),
        d: core::array::from_fn(|_| zero.clone()),
        iter: 0,
        history: Vec::new(),
    })
}

/// Shrinkage step: `Vi = S_{αi/μ}(Ai + Di)`.
pub fn update_auxiliaries(state: &mut DerainState, params: &SolverParams) {
    let thresholds = params.thresholds();
    let targets = state.split_targets();
    for (i, mut arg) in targets.into_iter().enumerate() {
        arg.add_scaled(1.0, &state.d[i]).expect("dims");
        soft_threshold_in_place(&mut arg, thresholds[i], params.mode);
        state.v[i] = arg;
    }
}

/// Right-hand side of the background normal equations.
pub fn background_rhs(state: &DerainState, mu: f64) -> Tensor3 {
    let mut rhs = state.o.sub(&state.r).expect("dims");
    let v3 = state.v[2].sub(&state.d[2]).expect("dims");
    let v4 = state.v[3].sub(&state.d[3]).expect("dims");
    rhs.add_scaled(mu, &diff_adjoint(&v3, Axis::Horizontal))
        .expect("dims");
    rhs.add_scaled(mu, &diff_adjoint(&v4, Axis::Temporal))
        .expect("dims");
    rhs
}

/// Right-hand side of the rain normal equations.
pub fn rain_rhs(state: &DerainState, mu: f64) -> Tensor3 {
    let mut rhs = state.o.sub(&state.b).expect("dims");
    let v1 = state.v[0].sub(&state.d[0]).expect("dims");
    let v2 = state.v[1].sub(&state.d[1]).expect("dims");
    rhs.add_scaled(mu, &diff_adjoint(&v1, Axis::Vertical))
        .expect("dims");
    rhs.add_scaled(mu, &v2).expect("dims");
    rhs
}

/// DFT eigenvalues of `1 + μ∇2ᵀ∇2 + μ∇tᵀ∇t`.
pub fn background_spectrum(dims: Dims, mu: f64) -> Tensor3 {
    let h = normal_spectrum(Axis::Horizontal, dims);
    let t = normal_spectrum(Axis::Temporal, dims);
    h.zip_map(&t, |a, b| 1.0 + mu * (a + b)).expect("dims")
}

/// DFT eigenvalues of `1 + μ + μ∇1ᵀ∇1`.
pub fn rain_spectrum(dims: Dims, mu: f64) -> Tensor3 {
    normal_spectrum(Axis::Vertical, dims).map(|a| 1.0 + mu + mu * a)
}

/// Unconstrained minimiser of the background sub-problem (before clamping).
pub fn solve_background_unclamped<F: Fft3 + ?Sized>(
    state: &DerainState,
    params: &SolverParams,
    fft: &mut F,
) -> Tensor3 {
    let spectrum = background_spectrum(state.dims(), params.mu);
    fft.solve_circulant(&background_rhs(state, params.mu), &spectrum)
}

/// Unconstrained minimiser of the rain sub-problem (before clamping).
pub fn solve_rain_unclamped<F: Fft3 + ?Sized>(
    state: &DerainState,
    params: &SolverParams,
    fft: &mut F,
) -> Tensor3 {
    let spectrum = rain_spectrum(state.dims(), params.mu);
    fft.solve_circulant(&rain_rhs(state, params.mu), &spectrum)
}

pub fn update_background<F: Fft3 + ?Sized>(
    state: &mut DerainState,
    params: &SolverParams,
    fft: &mut F,
) {
    let b = solve_background_unclamped(state, params, fft);
    state.b = b.clamp_box(&state.o).expect("dims");
}

pub fn update_rain<F: Fft3 + ?Sized>(state: &mut DerainState, params: &SolverParams, fft: &mut F) {
    let r = solve_rain_unclamped(state, params, fft);
    state.r = r.clamp_box(&state.o).expect("dims");
}

/// `Di += Ai − Vi`.
pub fn update_multipliers(state: &mut DerainState) {
    let targets = state.split_targets();
    for (i, target) in targets.iter().enumerate() {
        state.d[i].add_scaled(1.0, target).expect("dims");
        state.d[i].add_scaled(-1.0, &state.v[i]).expect("dims");
    }
}

/// Iterates the solver on one observation, caching the two DFT spectra.
#[derive(Debug)]
pub struct DerainSolver<F> {
    fft: F,
    params: SolverParams,
    state: DerainState,
    bg_spectrum: Tensor3,
    rain_spectrum: Tensor3,
    converged: bool,
}

impl<F: Fft3> DerainSolver<F> {
    pub fn new(o: &Tensor3, params: SolverParams, fft: F) -> Result<Self> {
        params.validate()?;
        let state = init_state(o)?;
        let dims = o.dims();
        Ok(Self {
            fft,
            params,
            bg_spectrum: background_spectrum(dims, params.mu),
            rain_spectrum: rain_spectrum(dims, params.mu),
            state,
            converged: false,
        })
    }

    pub fn state(&self) -> &DerainState {
        &self.state
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Runs one full iteration and records its diagnostics.
    pub fn step(&mut self) -> IterationRecord {
        let mu = self.params.mu;
        update_auxiliaries(&mut self.state, &self.params);

        let b_prev_norm = self.state.b.frobenius_norm();
        let b_new = self
            .fft
            .solve_circulant(&background_rhs(&self.state, mu), &self.bg_spectrum)
            .clamp_box(&self.state.o)
            .expect("dims");
        let change = b_new.sub(&self.state.b).expect("dims").frobenius_norm();
        self.state.b = b_new;

        self.state.r = self
            .fft
            .solve_circulant(&rain_rhs(&self.state, mu), &self.rain_spectrum)
            .clamp_box(&self.state.o)
            .expect("dims");

        update_multipliers(&mut self.state);

        let record = IterationRecord {
            rel_change: change / b_prev_norm.max(REL_EPS),
            residuals: self.state.residuals(),
        };
        self.state.iter += 1;
        self.state.history.push(record);
        self.converged = record.rel_change < self.params.tol;
        record
    }

    /// Iterates until the relative change of `B` falls below `tol` or
    /// `max_iter` is reached.
    pub fn run(mut self) -> DerainResult {
        while !self.converged && self.state.iter < self.params.max_iter {
            self.step();
        }
        let DerainState {
            b,
            r,
            iter,
            history,
            ..
        } = self.state;
        DerainResult {
            background: b,
            rain: r,
            iterations: iter,
            converged: self.converged,
            history,
        }
    }
}

pub fn derain<F: Fft3>(o: &Tensor3, params: &SolverParams, fft: F) -> Result<DerainResult> {
    Ok(DerainSolver::new(o, *params, fft)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DirectDft3;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: Dims, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor3 {
        Tensor3::from_fn(dims, |_, _, _| rng.random_range(lo..hi))
    }

    fn random_state(dims: Dims, seed: u64) -> DerainState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random(dims, 0.2, 1.0, &mut rng);
        let mut s = init_state(&o).unwrap();
        s.b = random(dims, 0.0, 0.5, &mut rng);
        s.r = random(dims, 0.0, 0.5, &mut rng);
        for i in 0..4 {
            s.v[i] = random(dims, -0.3, 0.3, &mut rng);
            s.d[i] = random(dims, -0.3, 0.3, &mut rng);
        }
        s
    }

    /// Dense operator matrix of a linear map on tensors, column by column.
    fn dense(dims: Dims, f: impl Fn(&Tensor3) -> Tensor3) -> DMatrix<f64> {
        let n = dims.len();
        let mut a = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = Tensor3::zeros(dims);
            e.as_mut_slice()[c] = 1.0;
            let col = f(&e);
            for (r, v) in col.as_slice().iter().enumerate() {
                a[(r, c)] = *v;
            }
        }
        a
    }

    fn dense_solve(dims: Dims, op: DMatrix<f64>, rhs: &Tensor3) -> Tensor3 {
        let x = op
            .lu()
            .solve(&DVector::from_column_slice(rhs.as_slice()))
            .unwrap();
        Tensor3::from_vec(dims, x.as_slice().to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        let bad = [
            SolverParams {
                mu: 0.0,
                ..Default::default()
            },
            SolverParams {
                tol: 0.0,
                ..Default::default()
            },
            SolverParams {
                max_iter: 0,
                ..Default::default()
            },
            SolverParams {
                alpha: [0.1, -1.0, 0.0, 0.0],
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::InvalidParam(_))));
        }
    }

    #[test]
    fn init_examples() {
        let dims = Dims::new(3, 4, 2);
        let s = init_state(&Tensor3::zeros(dims)).unwrap();
        assert!(s
            .v
            .iter()
            .chain(&s.d)
            .chain([&s.b, &s.r])
            .all(|x| x.max_abs_diff(&Tensor3::zeros(dims)).unwrap() == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let o = random(dims, 0.0, 1.0, &mut rng);
        let s = init_state(&o).unwrap();
        assert_eq!(s.b.as_slice(), o.as_slice());
        assert_eq!(s.iter, 0);
        let res = s.residuals();
        assert_eq!(res[0], 0.0);
        assert_eq!(res[1], 0.0);
        assert!((res[2] - diff(&o, Axis::Horizontal).frobenius_norm()).abs() < 1e-15);
        assert!((res[3] - diff(&o, Axis::Temporal).frobenius_norm()).abs() < 1e-15);
    }

    #[test]
    fn init_rejects_negative_and_degenerate() {
        let mut o = Tensor3::filled(Dims::new(2, 2, 2), 0.5);
        o.set(1, 0, 1, -0.1);
        assert!(matches!(
            init_state(&o),
            Err(Error::NegativeObservation { .. })
        ));
        assert!(matches!(
            init_state(&Tensor3::zeros(Dims::new(4, 4, 1))),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn auxiliaries_examples() {
        let dims = Dims::new(3, 3, 2);
        let mut s = random_state(dims, 1);
        let zero_alpha = SolverParams {
            alpha: [0.0; 4],
            ..Default::default()
        };
        update_auxiliaries(&mut s, &zero_alpha);
        let targets = s.split_targets();
        for ((v, t), d) in s.v.iter().zip(&targets).zip(&s.d) {
            assert_eq!(*v, t.add(d).unwrap());
        }

        let mut s = init_state(&Tensor3::filled(dims, 0.5)).unwrap();
        update_auxiliaries(&mut s, &SolverParams::default());
        assert_eq!(s.v[0], Tensor3::zeros(dims));

        // ∇1R = 0.8 at row 0, threshold α1/μ = 0.5.
        let o = Tensor3::filled(Dims::new(2, 2, 2), 1.0);
        let mut s = init_state(&o).unwrap();
        s.r = Tensor3::from_fn(o.dims(), |i, _, _| if i == 1 { 0.8 } else { 0.0 });
        let p = SolverParams {
            alpha: [0.5, 0.0, 0.0, 0.0],
            ..Default::default()
        };
        update_auxiliaries(&mut s, &p);
        assert!((s.v[0][(0, 0, 0)] - 0.3).abs() < 1e-12);
        assert!((s.v[0][(1, 0, 0)] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn background_matches_dense_solve() {
        let dims = Dims::new(4, 4, 3);
        for (seed, mu) in [(10, 0.1), (11, 1.0), (12, 10.0)] {
            let s = random_state(dims, seed);
            let p = SolverParams {
                mu,
                ..Default::default()
            };
            let op = dense(dims, |x| {
                let mut y = x.clone();
                y.add_scaled(
                    mu,
                    &diff_adjoint(&diff(x, Axis::Horizontal), Axis::Horizontal),
                )
                .unwrap();
                y.add_scaled(mu, &diff_adjoint(&diff(x, Axis::Temporal), Axis::Temporal))
                    .unwrap();
                y
            });
            let want = dense_solve(dims, op, &background_rhs(&s, mu));
            let got = solve_background_unclamped(&s, &p, &mut DirectDft3::new());
            assert!(got.max_abs_diff(&want).unwrap() < 1e-9);

            let mut s2 = s.clone();
            update_background(&mut s2, &p, &mut DirectDft3::new());
            let clamped = want.clamp_box(&s.o).unwrap();
            assert!(s2.b.max_abs_diff(&clamped).unwrap() < 1e-9);
        }
    }

    #[test]
    fn rain_matches_dense_solve() {
        let dims = Dims::new(4, 4, 3);
        for (seed, mu) in [(20, 0.1), (21, 1.0), (22, 10.0)] {
            let s = random_state(dims, seed);
            let p = SolverParams {
                mu,
                ..Default::default()
            };
            let op = dense(dims, |x| {
                let mut y = x.scale(1.0 + mu);
                y.add_scaled(mu, &diff_adjoint(&diff(x, Axis::Vertical), Axis::Vertical))
                    .unwrap();
                y
            });
            let want = dense_solve(dims, op, &rain_rhs(&s, mu));
            let got = solve_rain_unclamped(&s, &p, &mut DirectDft3::new());
            assert!(got.max_abs_diff(&want).unwrap() < 1e-9);
        }
    }

    #[test]
    fn small_mu_reduces_to_residual_clamp() {
        let dims = Dims::new(3, 4, 3);
        let s = random_state(dims, 5);
        let p = SolverParams {
            mu: 1e-12,
            ..Default::default()
        };
        let mut bs = s.clone();
        update_background(&mut bs, &p, &mut DirectDft3::new());
        let want = s.o.sub(&s.r).unwrap().clamp_box(&s.o).unwrap();
        assert!(bs.b.max_abs_diff(&want).unwrap() < 1e-9);

        let mut rs = s.clone();
        update_rain(&mut rs, &p, &mut DirectDft3::new());
        let want = s.o.sub(&s.b).unwrap().clamp_box(&s.o).unwrap();
        assert!(rs.r.max_abs_diff(&want).unwrap() < 1e-9);
    }

    #[test]
    fn constant_observation_is_a_fixed_point() {
        let dims = Dims::new(4, 3, 3);
        let o = Tensor3::filled(dims, 0.6);
        let mut s = init_state(&o).unwrap();
        let p = SolverParams::default();
        update_background(&mut s, &p, &mut DirectDft3::new());
        assert!(s.b.max_abs_diff(&o).unwrap() < 1e-12);
        update_rain(&mut s, &p, &mut DirectDft3::new());
        assert!(s.r.max_abs_diff(&Tensor3::zeros(dims)).unwrap() < 1e-12);
    }

    #[test]
    fn multiplier_examples() {
        let dims = Dims::new(3, 3, 3);
        let mut s = random_state(dims, 6);
        s.v = s.split_targets();
        let before = s.d.clone();
        update_multipliers(&mut s);
        for (d, b) in s.d.iter().zip(&before) {
            assert!(d.max_abs_diff(b).unwrap() < 1e-15);
        }

        let mut s = random_state(dims, 7);
        s.v = core::array::from_fn(|_| Tensor3::zeros(dims));
        s.d = core::array::from_fn(|_| Tensor3::zeros(dims));
        update_multipliers(&mut s);
        assert_eq!(s.d[0], diff(&s.r, Axis::Vertical));
    }

    #[test]
    fn zero_observation_converges_immediately() {
        let o = Tensor3::zeros(Dims::new(3, 3, 3));
        let res = derain(&o, &SolverParams::default(), DirectDft3::new()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.background, o);
        assert_eq!(res.rain, o);
    }

    #[test]
    fn constant_observation_stays_clean() {
        let o = Tensor3::filled(Dims::new(6, 6, 4), 0.4);
        let res = derain(&o, &SolverParams::default(), DirectDft3::new()).unwrap();
        assert!(res.converged);
        assert!(res.background.max_abs_diff(&o).unwrap() < 1e-3);
        assert!(res.rain.max_value() < 1e-3);
    }

    #[test]
    fn derain_rejects_bad_params() {
        let o = Tensor3::zeros(Dims::new(3, 3, 3));
        let p = SolverParams {
            mu: -1.0,
            ..Default::default()
        };
        assert!(derain(&o, &p, DirectDft3::new()).is_err());
    }
}
