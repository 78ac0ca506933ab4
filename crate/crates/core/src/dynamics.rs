//! The viscosity-regularized SQG right-hand side and its integrating-factor
//! Heun time stepper.
//!
//! `d/dt theta + u . grad theta + Lambda^gamma theta - eps Delta theta = f`,
//! `u = R^perp theta`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{diagnose, DiagnosticsRecord};
use crate::error::{Result, SqgError};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::operators::{gradient, riesz_perp_velocity, truncate, PaddedProducts};
use crate::quadrature::QuadratureSpec;

/// Blow-up threshold relative to the initial scale.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Tolerance for time-grid alignment checks.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub forcing: SpectralField,
}

impl ModelParams {
    pub fn new(gamma: f64, epsilon: f64, mut forcing: SpectralField) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 2.0) {
            return Err(SqgError::Config(format!("model.gamma out of (0,2] (got {gamma})")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(SqgError::Config(format!("model.epsilon must be >= 0 (got {epsilon})")));
        }
        forcing.project_mean_free();
        Ok(ModelParams {
            gamma,
            epsilon,
            forcing,
        })
    }

    pub fn unforced(grid: &Grid, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(gamma, epsilon, SpectralField::zeros(grid))
    }

    pub fn grid(&self) -> &Grid {
        self.forcing.grid()
    }

    /// Linear symbol `|k|^gamma + eps |k|^2`.
    pub fn symbol(&self, k1: i64, k2: i64) -> f64 {
        let k2sum = (k1 * k1 + k2 * k2) as f64;
        k2sum.powf(0.5 * self.gamma) + self.epsilon * k2sum
    }

    pub fn is_unforced(&self) -> bool {
        self.forcing.max_abs_coeff() == 0.0
    }
}

/// `N(theta) = P(u . grad theta)` with both factors built from the resolved
/// modes of `theta`, together with `max |u|` on the padded grid.
pub fn nonlinear_term_with_speed(theta: &SpectralField) -> (SpectralField, f64) {
    let resolved = truncate(theta);
    let u = riesz_perp_velocity(&resolved);
    let g = gradient(&resolved);
    let pp = PaddedProducts::new(theta.grid());
    let first = pp.pack(&u.u1, &g.u1);
    let second = pp.pack(&u.u2, &g.u2);
    let mut speed: f64 = 0.0;
    let values = first
        .iter()
        .zip(&second)
        .map(|(a, b)| {
            speed = speed.max((a.re * a.re + b.re * b.re).sqrt());
            a.re * a.im + b.re * b.im
        })
        .collect();
    (pp.unpack(values), speed)
}

/// Advection term `P(u . grad theta)`, mean-free, skew with respect to `theta`.
pub fn nonlinear_term(theta: &SpectralField) -> SpectralField {
    nonlinear_term_with_speed(theta).0
}

/// `<N(theta), theta>`, zero up to round-off.
pub fn nonlinear_pairing(theta: &SpectralField) -> f64 {
    nonlinear_term(theta).inner(theta).expect("same grid")
}

/// Integrating-factor Heun (second order) for a fixed `dt`.
pub struct IfHeun {
    dt: f64,
    decay: Vec<f64>,
}

impl IfHeun {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SqgError::Config(format!("time step must be positive (got {dt})")));
        }
        let grid = params.grid();
        let decay = (0..grid.len())
            .map(|i| {
                let (k1, k2) = grid.wavevector(i);
                (-params.symbol(k1, k2) * dt).exp()
            })
            .collect();
        Ok(IfHeun { dt, decay })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; also returns `max |u|` at the start of the step.
    pub fn advance(&self, theta: &SpectralField, params: &ModelParams) -> Result<(SpectralField, f64)> {
        theta.check_same_grid(&params.forcing)?;
        let dt = self.dt;
        let f = params.forcing.coeffs();
        let (n0, speed) = nonlinear_term_with_speed(theta);
        // G = f - N
        let g0: Vec<Complex64> = f.iter().zip(n0.coeffs()).map(|(f, n)| f - n).collect();
        let mut predictor = SpectralField::zeros(theta.grid());
        for (i, p) in predictor.coeffs_mut().iter_mut().enumerate() {
            *p = self.decay[i] * (theta.coeffs()[i] + dt * g0[i]);
        }
        predictor.project_mean_free();
        let n1 = nonlinear_term(&predictor);
        let mut next = SpectralField::zeros(theta.grid());
        for (i, v) in next.coeffs_mut().iter_mut().enumerate() {
            let g1 = f[i] - n1.coeffs()[i];
            *v = self.decay[i] * (theta.coeffs()[i] + 0.5 * dt * g0[i]) + 0.5 * dt * g1;
        }
        next.project_mean_free();
        Ok((next, speed))
    }
}

/// One integrating-factor Heun step of size `dt`.
pub fn step(theta: &SpectralField, params: &ModelParams, dt: f64) -> Result<SpectralField> {
    let stepper = IfHeun::new(params, dt)?;
    let (next, _) = stepper.advance(theta, params)?;
    if !next.is_finite() {
        return Err(SqgError::BlowUp {
            t: dt,
            last_valid: Box::new((0.0, theta.clone())),
        });
    }
    Ok(next)
}

/// `A e^{-(|k|^gamma + eps |k|^2) t} cos(k . x)` for unforced parameters.
pub fn single_mode_exact(k: [i64; 2], amplitude: f64, params: &ModelParams, t: f64) -> Result<SpectralField> {
    if k == [0, 0] {
        return Err(SqgError::Domain("single-mode solution needs k != 0".into()));
    }
    if !params.is_unforced() {
        return Err(SqgError::Domain("single-mode solution requires f = 0".into()));
    }
    let a = amplitude * (-params.symbol(k[0], k[1]) * t).exp();
    SpectralField::single_mode(params.grid(), k, a)
}

/// Time-integration and output settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub dt: f64,
    pub t_end: f64,
    /// CFL safety factor when adaptive stepping is on; `dt` is then an upper bound.
    pub adaptive_cfl: Option<f64>,
    pub snapshot_every: f64,
    pub diagnostics_every: f64,
    pub beta: f64,
    pub quad: QuadratureSpec,
    /// Compute the Hölder seminorm in diagnostics records (the costliest column).
    pub holder_in_diagnostics: bool,
}

impl RunSpec {
    pub fn fixed(dt: f64, t_end: f64) -> Self {
        RunSpec {
            dt,
            t_end,
            adaptive_cfl: None,
            snapshot_every: t_end,
            diagnostics_every: t_end,
            beta: 0.2,
            quad: QuadratureSpec::default(),
            holder_in_diagnostics: true,
        }
    }

    pub fn with_snapshots(mut self, every: f64) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_diagnostics(mut self, every: f64) -> Self {
        self.diagnostics_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(SqgError::Config(format!("time.dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(SqgError::Config(format!(
                "time.t_end must be >= 0 (got {})",
                self.t_end
            )));
        }
        if let Some(c) = self.adaptive_cfl {
            if !(c > 0.0 && c <= 1.0) {
                return Err(SqgError::Config(format!("time.cfl_safety out of (0,1] (got {c})")));
            }
        }
        if !(self.snapshot_every > 0.0) || !(self.diagnostics_every > 0.0) {
            return Err(SqgError::Config("output cadences must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SqgError::Config(format!(
                "analysis.beta out of (0,1) (got {})",
                self.beta
            )));
        }
        self.quad.validate()
    }
}

/// Per-step energy bookkeeping, integral convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    /// `||theta||^2_{H^{gamma/2}}`.
    pub h_gamma_sq: f64,
    /// `<f, theta>`.
    pub forcing_work: f64,
}

impl EnergySample {
    fn of(theta: &SpectralField, params: &ModelParams, t: f64) -> Self {
        let grid = theta.grid();
        let (mut l2, mut h1, mut hg) = (0.0, 0.0, 0.0);
        for (i, c) in theta.coeffs().iter().enumerate().skip(1) {
            let (k1, k2) = grid.wavevector(i);
            let kk = (k1 * k1 + k2 * k2) as f64;
            let a = c.norm_sqr();
            l2 += a;
            h1 += kk * a;
            hg += kk.powf(0.5 * params.gamma) * a;
        }
        let area = crate::field::TORUS_AREA;
        EnergySample {
            t,
            l2_sq: area * l2,
            h1_sq: area * h1,
            h_gamma_sq: area * hg,
            forcing_work: params.forcing.inner(theta).unwrap_or(f64::NAN),
        }
    }

    /// Rate `eps ||theta||_{H^1}^2 + ||theta||_{H^{gamma/2}}^2 - <f, theta>`.
    pub fn loss_rate(&self, epsilon: f64) -> f64 {
        epsilon * self.h1_sq + self.h_gamma_sq - self.forcing_work
    }
}

/// Snapshots, diagnostics and per-step energy samples of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: ModelParams,
    pub run: RunSpec,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub energy: Vec<EnergySample>,
    pub dt_history: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.params.grid()
    }

    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }

    pub fn state_index_at(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|s| (s - t).abs() <= ALIGN_TOL * t.abs().max(1.0))
    }

    pub fn state_at(&self, t: f64) -> Option<&SpectralField> {
        self.state_index_at(t).map(|i| &self.states[i])
    }
}

fn steps_for(span: f64, dt: f64, what: &str) -> Result<usize> {
    let ratio = span / dt;
    let n = ratio.round();
    if (ratio - n).abs() > ALIGN_TOL * ratio.abs().max(1.0) {
        return Err(SqgError::Config(format!(
            "{what} = {span} is not a whole number of steps dt = {dt}"
        )));
    }
    Ok(n as usize)
}

fn blowup_scale(theta0: &SpectralField, params: &ModelParams) -> f64 {
    let s = theta0
        .to_physical()
        .max_abs()
        .max(params.forcing.to_physical().max_abs());
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

struct Recorder<'a> {
    params: &'a ModelParams,
    run: &'a RunSpec,
    traj: Trajectory,
    energy_loss: f64,
}

impl<'a> Recorder<'a> {
    fn energy_residual(&self) -> f64 {
        let e = &self.traj.energy;
        let (first, last) = (e[0], e[e.len() - 1]);
        crate::analysis::normalized_energy_residual(first, last, self.energy_loss, self.energy_dissipation())
    }

    fn energy_dissipation(&self) -> f64 {
        let e = &self.traj.energy;
        e.windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].h_gamma_sq + w[1].h_gamma_sq))
            .sum()
    }

    fn push_energy(&mut self, theta: &SpectralField, t: f64) {
        let sample = EnergySample::of(theta, self.params, t);
        if let Some(prev) = self.traj.energy.last() {
            let eps = self.params.epsilon;
            self.energy_loss += 0.5 * (t - prev.t) * (prev.loss_rate(eps) + sample.loss_rate(eps));
        }
        self.traj.energy.push(sample);
    }

    fn snapshot(&mut self, theta: &SpectralField, t: f64) {
        self.traj.times.push(t);
        self.traj.states.push(theta.clone());
    }

    fn diagnostics(&mut self, theta: &SpectralField, t: f64) {
        let residual = self.energy_residual();
        let beta = self.run.holder_in_diagnostics.then_some(self.run.beta);
        let record = diagnose(theta, t, beta, &self.run.quad, residual);
        self.traj.diagnostics.push(record);
    }
}

/// Integrates from `theta0` at time `t0` to `run.t_end`.
///
/// With fixed stepping every output time must be a whole number of steps;
/// times are `t0 + i dt` so that restarts reproduce the straight-through
/// time grid. Adaptive stepping shortens steps to land on output times.
pub fn simulate_from(theta0: &SpectralField, params: &ModelParams, run: &RunSpec, t0: f64) -> Result<Trajectory> {
    run.validate()?;
    theta0.check_same_grid(&params.forcing)?;
    if run.t_end < t0 {
        return Err(SqgError::Config(format!(
            "t_end = {} precedes start time {t0}",
            run.t_end
        )));
    }
    let mut theta = theta0.clone();
    theta.project_mean_free();
    let threshold = BLOWUP_FACTOR * blowup_scale(&theta, params);

    let mut rec = Recorder {
        params,
        run,
        traj: Trajectory {
            params: params.clone(),
            run: run.clone(),
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
            energy: Vec::new(),
            dt_history: Vec::new(),
        },
        energy_loss: 0.0,
    };
    rec.push_energy(&theta, t0);
    rec.snapshot(&theta, t0);
    rec.diagnostics(&theta, t0);

    let check = |next: &SpectralField, t: f64, prev: &SpectralField, t_prev: f64| -> Result<()> {
        let mut bad = !next.is_finite();
        if !bad {
            let bound: f64 = next.coeffs().iter().map(|c| c.norm()).sum();
            if bound > threshold {
                bad = next.to_physical().max_abs() > threshold;
            }
        }
        if bad {
            return Err(SqgError::BlowUp {
                t,
                last_valid: Box::new((t_prev, prev.clone())),
            });
        }
        Ok(())
    };

    match run.adaptive_cfl {
        None => {
            let total = steps_for(run.t_end - t0, run.dt, "run length")?;
            let snap = steps_for(run.snapshot_every, run.dt, "output.snapshot_every")?.max(1);
            let diag = steps_for(run.diagnostics_every, run.dt, "output.diagnostics_every")?.max(1);
            let stepper = IfHeun::new(params, run.dt)?;
            let mut t_prev = t0;
            for i in 1..=total {
                let (next, _) = stepper.advance(&theta, params)?;
                let t = t0 + i as f64 * run.dt;
                check(&next, t, &theta, t_prev)?;
                theta = next;
                t_prev = t;
                rec.traj.dt_history.push(run.dt);
                rec.push_energy(&theta, t);
                if i % snap == 0 || i == total {
                    rec.snapshot(&theta, t);
                }
                if i % diag == 0 || i == total {
                    rec.diagnostics(&theta, t);
                }
            }
        }
        Some(cfl) => {
            let dx = params.grid().spacing();
            let mut t = t0;
            let mut next_snap = t0 + run.snapshot_every;
            let mut next_diag = t0 + run.diagnostics_every;
            let (_, mut speed) = nonlinear_term_with_speed(&theta);
            let end_tol = ALIGN_TOL * run.t_end.abs().max(1.0);
            while t < run.t_end - end_tol {
                let mut dt = run.dt;
                if speed > 0.0 {
                    dt = dt.min(cfl * dx / speed);
                }
                let target = next_snap.min(next_diag).min(run.t_end);
                let mut landed = false;
                if t + dt >= target - end_tol {
                    dt = target - t;
                    landed = true;
                }
                let stepper = IfHeun::new(params, dt)?;
                let (next, s) = stepper.advance(&theta, params)?;
                let t_new = if landed { target } else { t + dt };
                check(&next, t_new, &theta, t)?;
                speed = s;
                theta = next;
                t = t_new;
                rec.traj.dt_history.push(dt);
                rec.push_energy(&theta, t);
                let at_end = (t - run.t_end).abs() <= end_tol;
                if (t - next_snap).abs() <= end_tol || at_end {
                    rec.snapshot(&theta, t);
                    next_snap += run.snapshot_every;
                }
                if (t - next_diag).abs() <= end_tol || at_end {
                    rec.diagnostics(&theta, t);
                    next_diag += run.diagnostics_every;
                }
            }
        }
    }
    Ok(rec.traj)
}

/// Runs a parsed configuration from `t = 0`.
pub fn simulate(config: &crate::persistence::SolverConfig) -> Result<Trajectory> {
    let grid = config.grid()?;
    let params = config.model_params(&grid)?;
    let theta0 = config.initial_state(&grid)?;
    simulate_from(&theta0, &params, &config.run_spec(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    /// u . grad theta evaluated pointwise from closed-form sums over modes.
    fn brute_force_advection(theta: &SpectralField, x: [f64; 2]) -> f64 {
        let g = theta.grid();
        let (mut u1, mut u2, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0);
        for (i, c) in theta.coeffs().iter().enumerate() {
            let (k1, k2) = g.wavevector(i);
            if i == 0 || c.norm() == 0.0 {
                continue;
            }
            let e = c * Complex64::from_polar(1.0, k1 as f64 * x[0] + k2 as f64 * x[1]);
            let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
            // i k e, real part is -k Im(e)
            u1 += k2 as f64 / kn * e.im;
            u2 -= k1 as f64 / kn * e.im;
            t1 -= k1 as f64 * e.im;
            t2 -= k2 as f64 * e.im;
        }
        u1 * t1 + u2 * t2
    }

    #[test]
    fn single_modes_do_not_self_advect() {
        let g = grid(32);
        let c = SpectralField::single_mode(&g, [1, 0], 1.0).unwrap();
        assert!(nonlinear_term(&c).max_abs_coeff() < 1e-15);
        let two = SpectralField::from_modes(&g, &[([1, 0], 1.0, 0.0), ([0, 1], 1.0, 0.0)]).unwrap();
        assert!(nonlinear_term(&two).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn triad_matches_symbolic_expansion() {
        let g = grid(32);
        let theta = SpectralField::from_modes(&g, &[([1, 0], 1.0, 0.0), ([1, 1], 1.0, 0.0)]).unwrap();
        let n = nonlinear_term(&theta);
        let a = (1.0 - 2f64.powf(-0.5)) / 2.0;
        assert!((a - 0.1464466).abs() < 1e-7);
        let expected = SpectralField::from_modes(&g, &[([0, 1], a, 0.0), ([2, 1], -a, 0.0)]).unwrap();
        let err = n.sub(&expected).unwrap().max_abs_coeff();
        assert!(err < 1e-15, "{err}");
        // and against pointwise evaluation of u . grad theta
        let phys = n.to_physical();
        for (i, j) in [(0, 0), (3, 7), (20, 11)] {
            let x = [g.coord(i), g.coord(j)];
            assert!((phys.at(i, j) - brute_force_advection(&theta, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn pairing_vanishes() {
        let g = grid(64);
        for seed in 0..4 {
            let theta = crate::presets::random_band(&g, 1.0, 18.0, 3.0, seed).unwrap();
            let n = nonlinear_term(&theta);
            let pairing = n.inner(&theta).unwrap();
            assert!(pairing.abs() <= 1e-11 * theta.l2_norm().powi(2), "{pairing}");
        }
    }

    #[test]
    fn single_mode_step_is_exact_decay() {
        let g = grid(16);
        let params = ModelParams::unforced(&g, 1.0, 0.01).unwrap();
        let theta = SpectralField::single_mode(&g, [1, 0], 1.0).unwrap();
        let dt = 0.05;
        let next = step(&theta, &params, dt).unwrap();
        let expect = 0.5 * (-1.01 * dt).exp();
        assert!((next.coeff(1, 0).re - expect).abs() < 1e-16);
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid(16);
        let params = ModelParams::unforced(&g, 1.0, 0.0).unwrap();
        let next = step(&SpectralField::zeros(&g), &params, 0.1).unwrap();
        assert_eq!(next.max_abs_coeff(), 0.0);
    }

    #[test]
    fn forced_step_and_second_order_convergence() {
        let g = grid(16);
        let f = SpectralField::single_mode(&g, [1, 0], 1.0).unwrap();
        let params = ModelParams::new(1.0, 0.0, f).unwrap();
        let dt = 0.1;
        let one = step(&SpectralField::zeros(&g), &params, dt).unwrap();
        let amp = 2.0 * one.coeff(1, 0).re;
        assert!((amp - 0.5 * dt * (1.0 + (-dt).exp())).abs() < 1e-15);

        let error = |dt: f64| {
            let run = RunSpec::fixed(dt, 1.0);
            let traj = simulate_from(&SpectralField::zeros(&g), &params, &run, 0.0).unwrap();
            (2.0 * traj.final_state().coeff(1, 0).re - (1.0 - (-1.0f64).exp())).abs()
        };
        let (e1, e2, e3) = (error(0.1), error(0.05), error(0.025));
        assert!(e1 / e2 > 3.5 && e2 / e3 > 3.5, "{e1} {e2} {e3}");
    }

    #[test]
    fn single_mode_exact_values() {
        let g = grid(16);
        let p = ModelParams::unforced(&g, 1.0, 0.0).unwrap();
        let s = single_mode_exact([1, 0], 1.0, &p, 1.0).unwrap();
        assert!((2.0 * s.coeff(1, 0).re - (-1.0f64).exp()).abs() < 1e-15);
        let s = single_mode_exact([1, 1], 2.0, &p, 0.0).unwrap();
        assert!((s.coeff(1, 1).re - 1.0).abs() < 1e-15);
        let p = ModelParams::unforced(&g, 1.0, 0.01).unwrap();
        let s = single_mode_exact([2, 0], 1.0, &p, 0.5).unwrap();
        assert!((2.0 * s.coeff(2, 0).re - 0.360595).abs() < 1e-6);
        assert!(single_mode_exact([0, 0], 1.0, &p, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let g = grid(16);
        assert!(ModelParams::unforced(&g, 2.5, 0.0).is_err());
        assert!(ModelParams::unforced(&g, 0.0, 0.0).is_err());
        assert!(ModelParams::unforced(&g, 1.0, -1.0).is_err());
        let p = ModelParams::unforced(&g, 1.0, 0.0).unwrap();
        assert!(step(&SpectralField::zeros(&g), &p, 0.0).is_err());
    }

    #[test]
    fn misaligned_output_cadence_is_rejected() {
        let g = grid(16);
        let p = ModelParams::unforced(&g, 1.0, 0.0).unwrap();
        let run = RunSpec::fixed(0.3, 1.0);
        assert!(matches!(
            simulate_from(&SpectralField::zeros(&g), &p, &run, 0.0),
            Err(SqgError::Config(_))
        ));
    }

    #[test]
    fn blowup_reports_last_valid_state() {
        let g = grid(16);
        // a huge step on a large field makes the explicit advection unstable
        let theta = crate::presets::random_band(&g, 1.0, 5.0, 200.0, 1).unwrap();
        let p = ModelParams::unforced(&g, 0.5, 0.0).unwrap();
        let mut run = RunSpec::fixed(0.5, 50.0);
        run.holder_in_diagnostics = false;
        match simulate_from(&theta, &p, &run, 0.0) {
            Err(SqgError::BlowUp { t, last_valid }) => {
                assert!(t > 0.0);
                assert!(last_valid.1.is_finite());
                assert!(last_valid.0 < t);
            }
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.final_time())),
        }
    }

    #[test]
    fn adaptive_steps_land_on_outputs() {
        let g = grid(32);
        let theta = crate::presets::random_band(&g, 1.0, 4.0, 2.0 * PI, 3).unwrap();
        let p = ModelParams::unforced(&g, 1.0, 0.01).unwrap();
        let mut run = RunSpec::fixed(0.05, 0.5).with_snapshots(0.1).with_diagnostics(0.25);
        run.adaptive_cfl = Some(0.2);
        run.holder_in_diagnostics = false;
        let traj = simulate_from(&theta, &p, &run, 0.0).unwrap();
        let expected = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(traj.times.len(), expected.len());
        for (t, e) in traj.times.iter().zip(expected) {
            assert!((t - e).abs() < 1e-9);
        }
        assert!(traj.dt_history.iter().all(|&dt| dt <= 0.05 + 1e-15));
        assert!(traj.dt_history.iter().any(|&dt| dt < 0.05 - 1e-9));
    }
}
