//! Oracle checks behind `sqg verify` and the acceptance suite.
//!
//! Every check returns an [`AuditReport`]; the suites only choose sizes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    absorbing_entry_check, decay_envelope_check, dissipation_integral, dissipation_lower_bound_ratio,
    energy_balance_residual, gagliardo_seminorm_sq, h32_identity_check, riesz_increment_bound_ratio,
    sob_inequality_audit, sob_refinement_check, sobolev_norm_sq, stability_report, AuditReport, SobAudit,
};
use crate::dynamics::{nonlinear_pairing, simulate_from, single_mode_exact, ModelParams, RunSpec, Trajectory};
use crate::error::Result;
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::operators::{apply_fractional_laplacian, riesz_perp_velocity};
use crate::presets::random_band;
use crate::quadrature::{lambda_singular_integral_at, normalization_constant, QuadratureSpec, TrigPoly};

pub const OPERATOR_TOL: f64 = 1e-11;
pub const SINGULAR_TOL: f64 = 0.01;
pub const IDENTITY_TOL: f64 = 0.02;
pub const RESIDUAL_TOL: f64 = 1e-4;
pub const PAIRING_TOL: f64 = 1e-11;
pub const SINGLE_MODE_TOL: f64 = 1e-6;
pub const MIN_HALVING_GAIN: f64 = 3.5;
/// Observed order `log2(r(dt) / r(dt/2))` accepted as second order.
pub const MIN_ORDER: f64 = 1.95;
pub const REFINEMENT_FACTOR: f64 = 2.0;
pub const MC_DRIFT: f64 = 0.3;
pub const ENTRY_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Spectral,
    Energy,
    Estimates,
    All,
}

fn unforced_params(grid: &Grid, gamma: f64, eps: f64) -> Result<ModelParams> {
    ModelParams::unforced(grid, gamma, eps)
}

fn quiet_run(dt: f64, t_end: f64) -> RunSpec {
    let mut run = RunSpec::fixed(dt, t_end);
    run.holder_in_diagnostics = false;
    run
}

/// `Lambda^sigma cos(k.x) = |k|^sigma cos(k.x)` for a spread of modes.
pub fn eigenfunction_check(grid: &Grid) -> Result<AuditReport> {
    let mut report = AuditReport::new("eigenfunction", OPERATOR_TOL, "multiplier |k|^sigma");
    let top = (grid.dealias_cutoff() as i64).max(1);
    let modes = [[1, 0], [0, 1], [2, 3], [-3, 5], [top, 0], [top / 2, -top / 2]];
    let mut worst: f64 = 0.0;
    for sigma in [-1.0, 0.5, 1.0, 1.5, 2.0] {
        for k in modes {
            if k == [0, 0] {
                continue;
            }
            let mode = SpectralField::single_mode(grid, k, 1.0)?;
            let lam = apply_fractional_laplacian(&mode, sigma)?;
            let eig = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt().powf(sigma);
            let diff = lam.sub(&mode.scaled(eig))?;
            worst = worst.max(diff.max_abs_coeff() / (eig * mode.max_abs_coeff()));
        }
    }
    report.observe("max_relative_error", worst);
    report.passed = worst <= OPERATOR_TOL;
    Ok(report)
}

/// `Lambda^a Lambda^b = Lambda^{a+b}` on a random field.
pub fn semigroup_check(grid: &Grid, seed: u64) -> Result<AuditReport> {
    let mut report = AuditReport::new("semigroup", OPERATOR_TOL, "composition of multipliers");
    report.seed = Some(seed);
    let kmax = (grid.dealias_cutoff() as f64).min(12.0);
    let theta = random_band(grid, 1.0, kmax, 1.0, seed)?;
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.5, 1.0), (0.3, 1.2), (1.0, 1.0), (-1.0, 1.0), (0.75, -1.5)] {
        let lhs = apply_fractional_laplacian(&apply_fractional_laplacian(&theta, b)?, a)?;
        let rhs = apply_fractional_laplacian(&theta, a + b)?;
        worst = worst.max(lhs.sub(&rhs)?.l2_norm() / rhs.l2_norm());
    }
    report.observe("max_relative_error", worst);
    report.passed = worst <= OPERATOR_TOL;
    Ok(report)
}

/// `||R^perp theta|| = ||theta||` and `k . u_k = 0`.
pub fn riesz_check(grid: &Grid, seed: u64) -> Result<AuditReport> {
    let mut report = AuditReport::new("riesz_transform", OPERATOR_TOL, "unit-modulus odd multiplier");
    report.seed = Some(seed);
    let kmax = (grid.dealias_cutoff() as f64).min(12.0);
    let theta = random_band(grid, 1.0, kmax, 3.0, seed)?;
    let u = riesz_perp_velocity(&theta);
    let isometry = (u.l2_norm() - theta.l2_norm()).abs() / theta.l2_norm();
    let scale = (0..grid.len())
        .map(|i| {
            let (k1, k2) = grid.wavevector(i);
            ((k1 * k1 + k2 * k2) as f64).sqrt() * theta.coeffs()[i].norm()
        })
        .fold(0.0, f64::max);
    let divergence = u.max_divergence() / scale;
    report
        .observe("isometry_error", isometry)
        .observe("divergence", divergence);
    report.passed = isometry <= OPERATOR_TOL && divergence <= OPERATOR_TOL;
    Ok(report)
}

/// Singular-integral quadrature against spectral `Lambda^sigma` at `points`
/// seeded points, pointwise relative error.
pub fn singular_integral_check(
    grid: &Grid,
    sigma: f64,
    points: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<AuditReport> {
    let mut report = AuditReport::new(
        format!("singular_integral[sigma={sigma}]"),
        SINGULAR_TOL,
        "spectral multiplier |k|^sigma",
    );
    report.seed = Some(seed);
    let kmax = (grid.dealias_cutoff() as f64).min(4.0);
    let theta = random_band(grid, 1.0, kmax, 3.0, seed)?;
    let phys = theta.to_physical();
    let exact = TrigPoly::new(&apply_fractional_laplacian(&theta, sigma)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<[f64; 2]> = (0..points)
        .map(|_| [rng.random_range(-PI..PI), rng.random_range(-PI..PI)])
        .collect();
    let errors = xs
        .par_iter()
        .map(|&x| {
            let q = lambda_singular_integral_at(&phys, sigma, x, quad)?.value;
            let s = exact.value(x);
            Ok(((q - s) / s).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    report
        .observe("max_relative_error", worst)
        .observe("points", points as f64);
    report.passed = points > 0 && worst <= SINGULAR_TOL;
    Ok(report)
}

/// Unforced `cos x1` against `e^{-(1 + eps) t}`. The integrating factor
/// makes this exact, so the convergence order is measured on the forced
/// mode `theta0 = 0, f = cos x1`, whose amplitude is `(1 - e^{-lambda t}) / lambda`.
pub fn single_mode_check(n: usize, dt: f64) -> Result<AuditReport> {
    let grid = Grid::new(n)?;
    let mut report = AuditReport::new("single_mode", SINGLE_MODE_TOL, "closed-form decay e^{-(1 + eps) t}");
    let (gamma, eps, t_end) = (1.0, 0.01, 1.0);
    let params = unforced_params(&grid, gamma, eps)?;
    let theta0 = SpectralField::single_mode(&grid, [1, 0], 1.0)?;
    let exact = single_mode_exact([1, 0], 1.0, &params, t_end)?;
    let amp_exact = 2.0 * exact.coeff(1, 0).re;
    let error = |dt: f64| -> Result<f64> {
        let traj = simulate_from(&theta0, &params, &quiet_run(dt, t_end), 0.0)?;
        Ok((traj.final_state().sub(&exact)?.l2_norm() / exact.l2_norm()).abs())
    };
    let (e1, e2) = (error(dt)?, error(0.5 * dt)?);

    let forcing = SpectralField::single_mode(&grid, [1, 0], 1.0)?;
    let forced = ModelParams::new(gamma, eps, forcing)?;
    let lambda = forced.symbol(1, 0);
    let a_exact = (1.0 - (-lambda * t_end).exp()) / lambda;
    let forced_error = |dt: f64| -> Result<f64> {
        let traj = simulate_from(&SpectralField::zeros(&grid), &forced, &quiet_run(dt, t_end), 0.0)?;
        Ok((2.0 * traj.final_state().coeff(1, 0).re - a_exact).abs() / a_exact)
    };
    let (f1, f2) = (forced_error(dt)?, forced_error(0.5 * dt)?);
    let gain = f1 / f2;
    report
        .observe("relative_error", e1)
        .observe("relative_error_half_dt", e2)
        .observe("amplitude", amp_exact)
        .observe("forced_relative_error", f1)
        .observe("forced_halving_gain", gain);
    report.note("unforced single mode is integrated exactly; order measured on the forced mode");
    report.passed = e1 <= SINGLE_MODE_TOL && e2 <= SINGLE_MODE_TOL && gain >= MIN_HALVING_GAIN;
    Ok(report)
}

/// Seeded forced run: band-limited initial data on `1 <= |k| <= 8`, forcing
/// on `2 <= |k| <= 4`, `gamma = 1`, `eps = 0.01`.
pub fn forced_random_problem(grid: &Grid, seed: u64) -> Result<(SpectralField, ModelParams)> {
    let kmax = (grid.dealias_cutoff() as f64).min(8.0);
    let theta0 = random_band(grid, 1.0, kmax, 1.0, seed)?;
    let forcing = random_band(grid, 2.0, 4.0f64.min(kmax), 1.0, seed.wrapping_add(1))?;
    Ok((theta0, ModelParams::new(1.0, 0.01, forcing)?))
}

fn max_pairing(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .map(|s| {
            let l2 = s.l2_norm().powi(2);
            if l2 == 0.0 {
                0.0
            } else {
                nonlinear_pairing(s).abs() / l2
            }
        })
        .fold(0.0, f64::max)
}

/// Energy balance residual at `dt`, its observed order under halving, and
/// the nonlinear pairing at every recorded state.
pub fn energy_equality_check(n: usize, dt: f64, t_end: f64, seed: u64) -> Result<AuditReport> {
    let grid = Grid::new(n)?;
    let mut report = AuditReport::new("energy_equality", RESIDUAL_TOL, "normalized energy balance residual");
    report.seed = Some(seed);
    let (theta0, params) = forced_random_problem(&grid, seed)?;
    let every = 0.1 * t_end;
    let run = |dt: f64| quiet_run(dt, t_end).with_snapshots(every).with_diagnostics(every);
    let coarse = simulate_from(&theta0, &params, &run(dt), 0.0)?;
    let fine = simulate_from(&theta0, &params, &run(0.5 * dt), 0.0)?;
    let r1 = energy_balance_residual(&coarse, 0.0, t_end)?;
    let r2 = energy_balance_residual(&fine, 0.0, t_end)?;
    let order = (r1 / r2).log2();
    let pairing = max_pairing(&coarse).max(max_pairing(&fine));
    let recorded = coarse.diagnostics.iter().map(|d| d.energy_residual).fold(0.0, f64::max);
    report
        .observe("residual", r1)
        .observe("residual_half_dt", r2)
        .observe("observed_order", order)
        .observe("max_recorded_residual", recorded)
        .observe("max_relative_pairing", pairing);
    report.passed = r1 <= RESIDUAL_TOL && order >= MIN_ORDER && pairing <= PAIRING_TOL;
    Ok(report)
}

/// Poincaré envelope on unforced seeded runs, one observation per seed.
pub fn decay_envelope_runs(n: usize, seeds: &[u64], dt: f64, t_end: f64) -> Result<AuditReport> {
    let grid = Grid::new(n)?;
    let mut report = AuditReport::new("decay_envelope_unforced", crate::analysis::ENVELOPE_SLACK, "c0 = 1");
    let kmax = (grid.dealias_cutoff() as f64).min(8.0);
    let params = unforced_params(&grid, 1.0, 0.01)?;
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let theta0 = random_band(&grid, 1.0, kmax, 5.0, seed)?;
            let traj = simulate_from(&theta0, &params, &quiet_run(dt, t_end).with_snapshots(t_end), 0.0)?;
            Ok(decay_envelope_check(&traj, 0.0))
        })
        .collect::<Result<Vec<AuditReport>>>()?;
    let mut worst: f64 = 0.0;
    for (seed, r) in seeds.iter().zip(&reports) {
        let v = r.value("max_envelope_ratio").unwrap_or(f64::NAN);
        worst = worst.max(v);
        report.observe(format!("ratio[seed={seed}]"), v);
    }
    report.observed.insert(0, ("max_envelope_ratio".into(), worst));
    report.passed = !reports.is_empty() && reports.iter().all(|r| r.passed);
    Ok(report)
}

/// Forced run from large data: the envelope holds and the run enters the
/// ball of radius `(1 + ENTRY_MARGIN) ||f||`.
pub fn forced_entry_check(n: usize, seed: u64, dt: f64, t_end: f64) -> Result<AuditReport> {
    let grid = Grid::new(n)?;
    let (theta0, params) = forced_random_problem(&grid, seed)?;
    let theta0 = theta0.scaled(10.0);
    let traj = simulate_from(&theta0, &params, &quiet_run(dt, t_end).with_snapshots(t_end), 0.0)?;
    let f_l2 = params.forcing.l2_norm();
    let envelope = decay_envelope_check(&traj, f_l2);
    let mut report = absorbing_entry_check(&traj, f_l2, ENTRY_MARGIN);
    report.name = "forced_entry".into();
    report.seed = Some(seed);
    report.observe(
        "max_envelope_ratio",
        envelope.value("max_envelope_ratio").unwrap_or(f64::NAN),
    );
    report.passed = report.passed && envelope.passed;
    Ok(report)
}

/// Three test fields of differing spectral content.
pub fn identity_fields(grid: &Grid, seed: u64) -> Result<Vec<SpectralField>> {
    let kmax = (grid.dealias_cutoff() as f64).min(6.0);
    let mut product = SpectralField::zeros(grid);
    // cos x1 cos 2 x2 = (cos(x1 + 2 x2) + cos(x1 - 2 x2)) / 2
    product.add_cosine([1, 2], 0.5, 0.0)?;
    product.add_cosine([1, -2], 0.5, 0.0)?;
    Ok(vec![
        product,
        random_band(grid, 1.0, 3.0f64.min(kmax), 1.0, seed)?,
        random_band(grid, 2.0, kmax, 2.0, seed.wrapping_add(1))?,
    ])
}

/// Gagliardo seminorm over `||.||^2_{H^alpha}`: the ratio is the same for
/// every field and equals `2 / c_{2 alpha}`.
pub fn gagliardo_check(fields: &[SpectralField], alphas: &[f64], quad: &QuadratureSpec) -> Result<AuditReport> {
    let mut report = AuditReport::new("gagliardo_ratio", IDENTITY_TOL, "analytic constant 2 / c_{2 alpha}");
    let mut worst_spread: f64 = 0.0;
    let mut worst_constant: f64 = 0.0;
    for &alpha in alphas {
        let ratios = fields
            .par_iter()
            .map(|f| Ok(gagliardo_seminorm_sq(&f.to_physical(), alpha, quad)? / sobolev_norm_sq(f, alpha)))
            .collect::<Result<Vec<f64>>>()?;
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let spread = (hi - lo) / hi;
        let constant = 2.0 / normalization_constant(2.0 * alpha);
        let off = ratios.iter().map(|r| (r / constant - 1.0).abs()).fold(0.0, f64::max);
        worst_spread = worst_spread.max(spread);
        worst_constant = worst_constant.max(off);
        report.observe(format!("ratio_spread[alpha={alpha}]"), spread);
    }
    report.observed.insert(0, ("max_spread".into(), worst_spread));
    report.observe("max_constant_error", worst_constant);
    report.passed = !alphas.is_empty() && worst_spread <= IDENTITY_TOL && worst_constant <= IDENTITY_TOL;
    Ok(report)
}

/// `\int D_gamma[psi] = 2 ||psi||^2_{H^{gamma/2}}` for every field and exponent.
pub fn dissipation_identity_check(
    fields: &[SpectralField],
    gammas: &[f64],
    quad: &QuadratureSpec,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("dissipation_identity", IDENTITY_TOL, "spectral H^{gamma/2} norm");
    let mut worst: f64 = 0.0;
    for &gamma in gammas {
        let errors = fields
            .par_iter()
            .map(|f| {
                let exact = 2.0 * sobolev_norm_sq(f, 0.5 * gamma);
                Ok((dissipation_integral(f, gamma, quad)? - exact).abs() / exact)
            })
            .collect::<Result<Vec<f64>>>()?;
        let e = errors.iter().copied().fold(0.0, f64::max);
        worst = worst.max(e);
        report.observe(format!("relative_error[gamma={gamma}]"), e);
    }
    report.observed.insert(0, ("max_relative_error".into(), worst));
    report.passed = !gammas.is_empty() && worst <= IDENTITY_TOL;
    Ok(report)
}

/// The `H^{3/2}` identity on every field.
pub fn h32_check(fields: &[SpectralField], quad: &QuadratureSpec) -> Result<AuditReport> {
    let reports = fields
        .iter()
        .map(|f| h32_identity_check(f, quad))
        .collect::<Result<Vec<AuditReport>>>()?;
    let mut report = AuditReport::new("h32_identity", IDENTITY_TOL, "spectral H^{3/2} norm");
    let worst = reports
        .iter()
        .map(|r| r.value("relative_error").unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    report.observe("max_relative_error", worst);
    report.passed = reports.iter().all(|r| r.passed);
    Ok(report)
}

/// Sobolev inequality audit of the seeded forced run at resolution `n`, with
/// initial data and forcing multiplied by `scale`.
pub fn sob_audit_at(
    n: usize,
    seed: u64,
    scale: f64,
    dt: f64,
    t_end: f64,
    every: f64,
) -> Result<(Trajectory, SobAudit)> {
    let grid = Grid::new(n)?;
    let (theta0, params) = forced_random_problem(&grid, seed)?;
    let theta0 = theta0.scaled(scale);
    let params = ModelParams::new(params.gamma, params.epsilon, params.forcing.scaled(scale))?;
    let run = quiet_run(dt, t_end).with_snapshots(every);
    let traj = simulate_from(&theta0, &params, &run, 0.0)?;
    let audit = sob_inequality_audit(&traj, 0.5, 1.0, 0.2, &params.forcing)?;
    Ok((traj, audit))
}

/// `c_emp` at `n` and `2n` within [`REFINEMENT_FACTOR`].
pub fn sob_refinement(
    n: usize,
    seed: u64,
    scale: f64,
    dt: f64,
    t_end: f64,
    every: f64,
) -> Result<(AuditReport, SobAudit)> {
    let (_, coarse) = sob_audit_at(n, seed, scale, dt, t_end, every)?;
    let (_, fine) = sob_audit_at(2 * n, seed, scale, dt, t_end, every)?;
    let mut report = sob_refinement_check(&coarse, &fine, REFINEMENT_FACTOR);
    report.seed = Some(seed);
    Ok((report, fine))
}

/// Unforced single mode: `L(t) < 0 <= R` at every interior snapshot.
pub fn sob_sign_case(n: usize) -> Result<AuditReport> {
    let grid = Grid::new(n)?;
    let theta0 = SpectralField::single_mode(&grid, [1, 0], 1.0)?;
    let params = unforced_params(&grid, 1.0, 0.01)?;
    let traj = simulate_from(&theta0, &params, &quiet_run(0.01, 1.0).with_snapshots(0.1), 0.0)?;
    let audit = sob_inequality_audit(&traj, 0.5, 1.0, 0.2, &params.forcing)?;
    let mut report = AuditReport::new("sobolev_inequality_sign_case", 0.0, "single decaying mode");
    let max_l = audit.rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min_r = audit.rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    report.observe("max_lhs", max_l).observe("min_rhs", min_r);
    report.passed = !audit.rows.is_empty() && audit.rows.iter().all(|&(_, l, r)| l < 0.0 && 0.0 <= r);
    Ok(report)
}

/// Monte-Carlo stability of the dissipation lower bound and the Riesz
/// increment bound: `samples` and `2 samples` for each seed.
pub fn increment_bounds_stability(
    theta: &SpectralField,
    samples: usize,
    seeds: &[u64],
    quad: &QuadratureSpec,
) -> Result<(AuditReport, AuditReport)> {
    let phys = theta.to_physical();
    let (gamma, beta, r) = (1.0, 0.2, 1.0);
    let configs: Vec<QuadratureSpec> = seeds
        .iter()
        .flat_map(|&seed| {
            [samples, 2 * samples].map(|count| QuadratureSpec {
                samples: count,
                seed,
                ..quad.clone()
            })
        })
        .collect();
    let lower = configs
        .iter()
        .map(|q| dissipation_lower_bound_ratio(&phys, gamma, beta, q))
        .collect::<Result<Vec<AuditReport>>>()?;
    let upper = configs
        .iter()
        .map(|q| {
            let mut rep = riesz_increment_bound_ratio(&phys, gamma, beta, r, q)?;
            rep.observe("retained", q.samples as f64);
            Ok(rep)
        })
        .collect::<Result<Vec<AuditReport>>>()?;
    let mut a = stability_report("dissipation_lower_bound_stability", &lower, "min_ratio", MC_DRIFT);
    let mut b = stability_report("riesz_increment_bound_stability", &upper, "max_ratio", MC_DRIFT);
    let min = lower
        .iter()
        .filter_map(|r| r.value("min_ratio"))
        .fold(f64::INFINITY, f64::min);
    let max = upper.iter().filter_map(|r| r.value("max_ratio")).fold(0.0, f64::max);
    a.observed.insert(1, ("min_ratio".into(), min));
    b.observed.insert(1, ("max_ratio".into(), max));
    a.passed = a.passed && min > 0.0;
    b.passed = b.passed && max.is_finite();
    Ok((a, b))
}

/// Quick-sized checks of one suite on an `n`-point grid.
pub fn run_suite(suite: Suite, n: usize) -> Result<Vec<AuditReport>> {
    let grid = Grid::new(n)?;
    let quad = QuadratureSpec::default();
    let mut reports = Vec::new();
    if matches!(suite, Suite::Spectral | Suite::All) {
        reports.push(eigenfunction_check(&grid)?);
        reports.push(semigroup_check(&grid, 1)?);
        reports.push(riesz_check(&grid, 2)?);
        for sigma in [0.5, 1.0, 1.5] {
            reports.push(singular_integral_check(&grid, sigma, 10, 3, &quad)?);
        }
    }
    if matches!(suite, Suite::Energy | Suite::All) {
        reports.push(single_mode_check(n, 1e-3)?);
        reports.push(energy_equality_check(n, 1e-3, 1.0, 7)?);
        reports.push(decay_envelope_runs(n, &[1, 2, 3, 4, 5], 1e-2, 5.0)?);
        reports.push(forced_entry_check(n, 7, 1e-2, 10.0)?);
    }
    if matches!(suite, Suite::Estimates | Suite::All) {
        let fields = identity_fields(&grid, 4)?;
        reports.push(gagliardo_check(&fields, &[0.25, 0.5, 0.75], &quad)?);
        reports.push(dissipation_identity_check(&fields, &[0.5, 1.0, 1.5], &quad)?);
        reports.push(h32_check(&fields, &quad)?);
        reports.push(sob_sign_case(n)?);
        reports.push(sob_refinement(n, 7, 1.0, 1e-2, 1.0, 0.1)?.0);
        let (a, b) = increment_bounds_stability(&fields[1], 100, &[1, 2], &quad)?;
        reports.push(a);
        reports.push(b);
    }
    Ok(reports)
}
