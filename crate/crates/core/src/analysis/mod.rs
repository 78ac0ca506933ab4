//! Norms, seminorms and the per-time diagnostics of a run.
//!
//! All norms use the integral convention
//! `||theta||_{H^s}^2 = (2 pi)^2 sum |k|^{2s} |theta_k|^2`.

mod audits;

pub use audits::*;

use rayon::prelude::*;

use crate::dynamics::{nonlinear_pairing, EnergySample, Trajectory};
use crate::error::{Result, SqgError};
use crate::field::{PhysicalField, SpectralField, TORUS_AREA};
use crate::grid::Grid;
use crate::quadrature::{normalization_constant, KernelQuadrature, QuadratureSpec};

/// Denominator floor of normalized residuals.
pub const MACHINE_FLOOR: f64 = f64::MIN_POSITIVE;

pub fn sobolev_norm_sq(theta: &SpectralField, s: f64) -> f64 {
    let grid = theta.grid();
    let sum: f64 = theta
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            ((k1 * k1 + k2 * k2) as f64).powf(s) * c.norm_sqr()
        })
        .sum();
    TORUS_AREA * sum
}

pub fn sobolev_norm(theta: &SpectralField, s: f64) -> f64 {
    sobolev_norm_sq(theta, s).sqrt()
}

pub(crate) fn significant_bandwidth(field: &SpectralField) -> usize {
    field.bandwidth(1e-14 * field.max_abs_coeff())
}

/// Hölder seminorm over the offsets `h = (a, b) 2 pi / m`, `m = quad.h_grid`,
/// `|a|, |b| <= m/2`, after resampling the field onto the `m` grid.
///
/// The result is a lower bound of the true seminorm of the resampled field;
/// it is independent of the field's own grid size once that exceeds `m`.
pub fn holder_seminorm(theta: &PhysicalField, beta: f64, quad: &QuadratureSpec) -> Result<f64> {
    holder_seminorm_spectral(&theta.to_spectral(), beta, quad)
}

pub fn holder_seminorm_spectral(theta: &SpectralField, beta: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SqgError::Domain(format!("beta = {beta} outside (0, 1)")));
    }
    quad.validate()?;
    let grid = Grid::new(quad.h_grid)?;
    let values = theta.resample(&grid).to_physical().into_values();
    Ok(holder_on_grid(&values, quad.h_grid, beta))
}

fn holder_on_grid(v: &[f64], m: usize, beta: f64) -> f64 {
    let half = (m / 2) as i64;
    let dx = 2.0 * std::f64::consts::PI / m as f64;
    let offsets: Vec<(usize, usize, f64)> = (0..=half)
        .flat_map(|a| {
            (1 - half..=half).filter_map(move |b| {
                if a == 0 && b <= 0 {
                    return None;
                }
                let r = dx * ((a * a + b * b) as f64).sqrt();
                Some((a as usize, b.rem_euclid(m as i64) as usize, r.powf(-beta)))
            })
        })
        .collect();
    offsets
        .par_iter()
        .map(|&(a, b, w)| {
            let mut worst: f64 = 0.0;
            for i in 0..m {
                let row = &v[i * m..(i + 1) * m];
                let ii = (i + a) % m;
                let shifted = &v[ii * m..(ii + 1) * m];
                for j in 0..m {
                    worst = worst.max((shifted[(j + b) % m] - row[j]).abs());
                }
            }
            worst * w
        })
        .reduce(|| 0.0, f64::max)
}

/// `\int_{T^2} \int_{R^2} |theta(x+h) - theta(x)|^2 / |h|^{2+2 alpha} dh dx`.
pub fn gagliardo_seminorm_sq(theta: &PhysicalField, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SqgError::Domain(format!("alpha = {alpha} outside (0, 1)")));
    }
    let spectral = theta.to_spectral();
    if spectral.max_abs_coeff() == 0.0 {
        return Ok(0.0);
    }
    let rule = KernelQuadrature::new(2.0 * alpha, quad, significant_bandwidth(&spectral))?;
    Ok(rule.quadratic_integrated(&spectral))
}

/// `D_gamma[psi](x) = c_gamma \int (psi(x) - psi(x+y))^2 / |y|^{2+gamma} dy`.
pub fn dissipation_functional_at(psi: &PhysicalField, gamma: f64, x: [f64; 2], quad: &QuadratureSpec) -> Result<f64> {
    check_gamma(gamma)?;
    let spectral = psi.to_spectral();
    if spectral.max_abs_coeff() == 0.0 {
        return Ok(0.0);
    }
    let rule = KernelQuadrature::new(gamma, quad, significant_bandwidth(&spectral))?;
    Ok(normalization_constant(gamma) * rule.quadratic_at(&spectral, x))
}

/// `\int_{T^2} D_gamma[psi] dx`.
pub fn dissipation_integral(psi: &SpectralField, gamma: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_gamma(gamma)?;
    if psi.max_abs_coeff() == 0.0 {
        return Ok(0.0);
    }
    let rule = KernelQuadrature::new(gamma, quad, significant_bandwidth(psi))?;
    Ok(normalization_constant(gamma) * rule.quadratic_integrated(psi))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(SqgError::Domain(format!("gamma = {gamma} outside (0, 2)")));
    }
    Ok(())
}

/// One time-stamped row of norms and balance residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub h_half: f64,
    pub h1: f64,
    pub h_three_half: f64,
    /// Hölder seminorm at the run's beta; NaN when not computed.
    pub c_beta: f64,
    /// Normalized energy residual accumulated since the start of the run.
    pub energy_residual: f64,
    /// `<N(theta), theta>`.
    pub nonlinear_pairing: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 9] = [
        "t",
        "l2",
        "linf",
        "h_half",
        "h1",
        "h_three_half",
        "c_beta",
        "energy_residual",
        "nonlinear_pairing",
    ];

    pub fn zero(t: f64) -> Self {
        DiagnosticsRecord::from_array([t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.t,
            self.l2,
            self.linf,
            self.h_half,
            self.h1,
            self.h_three_half,
            self.c_beta,
            self.energy_residual,
            self.nonlinear_pairing,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            l2: v[1],
            linf: v[2],
            h_half: v[3],
            h1: v[4],
            h_three_half: v[5],
            c_beta: v[6],
            energy_residual: v[7],
            nonlinear_pairing: v[8],
        }
    }
}

/// Diagnostics of one state. `beta = None` skips the Hölder seminorm.
pub fn diagnose(
    theta: &SpectralField,
    t: f64,
    beta: Option<f64>,
    quad: &QuadratureSpec,
    energy_residual: f64,
) -> DiagnosticsRecord {
    let c_beta = beta
        .and_then(|b| holder_seminorm_spectral(theta, b, quad).ok())
        .unwrap_or(f64::NAN);
    DiagnosticsRecord {
        t,
        l2: theta.l2_norm(),
        linf: theta.to_physical().max_abs(),
        h_half: sobolev_norm(theta, 0.5),
        h1: sobolev_norm(theta, 1.0),
        h_three_half: sobolev_norm(theta, 1.5),
        c_beta,
        energy_residual,
        nonlinear_pairing: nonlinear_pairing(theta),
    }
}

/// `|E(t1) - E(t0) + loss| / (E(t0) + dissipation + floor)` with `E = ||theta||^2 / 2`.
pub fn normalized_energy_residual(first: EnergySample, last: EnergySample, loss: f64, dissipation: f64) -> f64 {
    let defect = 0.5 * last.l2_sq - 0.5 * first.l2_sq + loss;
    defect.abs() / (0.5 * first.l2_sq + dissipation + MACHINE_FLOOR)
}

/// Energy balance residual over `[t0, t1]` from the per-step samples, with
/// trapezoidal time integrals of `eps ||theta||_{H^1}^2 + ||theta||_{H^{gamma/2}}^2 - <f, theta>`.
pub fn energy_balance_residual(traj: &Trajectory, t0: f64, t1: f64) -> Result<f64> {
    let tol = 1e-9 * t1.abs().max(1.0);
    let samples: Vec<EnergySample> = traj
        .energy
        .iter()
        .copied()
        .filter(|s| s.t >= t0 - tol && s.t <= t1 + tol)
        .collect();
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) if (a.t - t0).abs() <= tol && (b.t - t1).abs() <= tol => (*a, *b),
        _ => {
            return Err(SqgError::Range(format!(
                "interval [{t0}, {t1}] not covered by the trajectory's samples"
            )))
        }
    };
    let eps = traj.params.epsilon;
    let mut loss = 0.0;
    let mut dissipation = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        loss += 0.5 * dt * (w[0].loss_rate(eps) + w[1].loss_rate(eps));
        dissipation += 0.5 * dt * (w[0].h_gamma_sq + w[1].h_gamma_sq);
    }
    Ok(normalized_energy_residual(first, last, loss, dissipation))
}
