//! Real-variable quadrature of the singular integrals behind `Lambda^sigma`
//! and the dissipation functional, used as an oracle independent of the
//! Fourier multipliers.
//!
//! The kernel `|y|^{-2-s}` on `R^2` is split with a smooth radial cutoff
//! `chi` (1 below [`NEAR_INNER`], 0 above [`NEAR_OUTER`]):
//!
//! * near part `chi K`: polar Gauss-Legendre x trapezoid rule around the
//!   evaluation point, with the disc `|y| < rho` replaced by its second order
//!   Taylor contribution;
//! * far part `(1 - chi) K`: summed over the lattice translates `y + 2 pi k`,
//!   `max(|k1|, |k2|) <= k_lat`, and integrated against grid samples of the
//!   periodic field (smooth periodic integrand, trapezoid rule);
//! * beyond the lattice square the field averages to zero, leaving a closed
//!   form tail proportional to the local value.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, SqgError};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::Grid;
use crate::operators::{gradient, shift};

pub const NEAR_INNER: f64 = 1.0;
pub const NEAR_OUTER: f64 = 2.0;

/// Resolution parameters shared by every quadrature-based estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Points per dimension of the offset grid (Hölder offsets, far-field
    /// samples).
    pub h_grid: usize,
    /// Inner exclusion radius; `None` means one offset-grid spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Lattice truncation `max(|k1|, |k2|) <= k_lat` of the periodic sum.
    pub k_lat: usize,
    /// Monte-Carlo sample count for `(x, h)` audits.
    pub samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            h_grid: 64,
            rho: None,
            k_lat: 8,
            samples: 200,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.h_grid < 8 || !self.h_grid.is_multiple_of(2) {
            return Err(SqgError::Config(format!(
                "quad.h_grid must be even and >= 8 (got {})",
                self.h_grid
            )));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho < 0.5 * NEAR_INNER) {
                return Err(SqgError::Config(format!(
                    "quad.rho must lie in (0, {}) (got {rho})",
                    0.5 * NEAR_INNER
                )));
            }
        }
        if self.k_lat == 0 {
            return Err(SqgError::Config("quad.k_lat must be positive".into()));
        }
        if self.samples == 0 {
            return Err(SqgError::Config("quad.samples must be positive".into()));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(2.0 * PI / self.h_grid as f64)
    }
}

/// Normalization `c_s` making `c_s P.V.\int (phi(x) - phi(x+y)) |y|^{-2-s} dy`
/// equal `(-Delta)^{s/2}` on `R^2`:
/// `c_s = 2^s Gamma(1 + s/2) / (pi |Gamma(-s/2)|)`.
pub fn normalization_constant(s: f64) -> f64 {
    let half = 0.5 * s;
    // |Gamma(-s/2)| = Gamma(1 - s/2) / (s/2) on (0, 2)
    2f64.powf(s) * gamma(1.0 + half) * half / (PI * gamma(1.0 - half))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 inside [`NEAR_INNER`], 0 outside [`NEAR_OUTER`].
pub fn near_cutoff(r: f64) -> f64 {
    1.0 - smooth_step((r - NEAR_INNER) / (NEAR_OUTER - NEAR_INNER))
}

/// `\int` of `|y|^{-2-s}` outside the square `[-half_width, half_width]^2`.
pub fn square_tail(half_width: f64, s: f64) -> f64 {
    let (x, w) = gauss_legendre(48);
    let q = PI / 8.0;
    let octant: f64 = x
        .iter()
        .zip(&w)
        .map(|(t, wt)| wt * q * (q * (t + 1.0)).cos().powf(s))
        .sum();
    8.0 * octant * half_width.powf(-s) / s
}

/// Band-limited trigonometric polynomial for off-grid evaluation.
/// Nyquist lines are not representable off the grid and are dropped.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    modes: Vec<(i64, i64, Complex64)>,
    kmax1: usize,
    kmax2: usize,
}

impl TrigPoly {
    pub fn new(field: &SpectralField) -> Self {
        let grid = field.grid();
        let mut modes = Vec::new();
        for (i, c) in field.coeffs().iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let (k1, k2) = grid.wavevector(i);
            if grid.is_nyquist(k1, k2) {
                continue;
            }
            if k1 > 0 || (k1 == 0 && k2 > 0) {
                modes.push((k1, k2, *c));
            }
        }
        let kmax1 = modes.iter().map(|m| m.0.unsigned_abs()).max().unwrap_or(0) as usize;
        let kmax2 = modes.iter().map(|m| m.1.unsigned_abs()).max().unwrap_or(0) as usize;
        TrigPoly { modes, kmax1, kmax2 }
    }

    pub fn bandwidth(&self) -> usize {
        self.kmax1.max(self.kmax2)
    }

    /// Coefficients `c_k e^{i k.x}` so that later evaluation at `x + y`
    /// only needs `e^{i k.y}`.
    fn phased(&self, x: [f64; 2]) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|&(k1, k2, c)| c * Complex64::from_polar(1.0, k1 as f64 * x[0] + k2 as f64 * x[1]))
            .collect()
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.phased(x).iter().map(|d| 2.0 * d.re).sum()
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.phased(x);
        let mut g = [0.0; 2];
        for (&(k1, k2, _), d) in self.modes.iter().zip(&d) {
            // d/dx Re(d e^{ik.x}) -> Re(i k d) = -k Im(d)
            g[0] -= 2.0 * k1 as f64 * d.im;
            g[1] -= 2.0 * k2 as f64 * d.im;
        }
        g
    }

    pub fn laplacian(&self, x: [f64; 2]) -> f64 {
        let d = self.phased(x);
        self.modes
            .iter()
            .zip(&d)
            .map(|(&(k1, k2, _), d)| -2.0 * ((k1 * k1 + k2 * k2) as f64) * d.re)
            .sum()
    }

    /// Values at `x + y` for every offset `y`, given `phased(x)`.
    fn values_at_offsets(&self, phased: &[Complex64], offsets: &[[f64; 2]], out: &mut Vec<f64>) {
        out.clear();
        let k1n = self.kmax1;
        let k2n = self.kmax2;
        let mut p1 = vec![Complex64::new(1.0, 0.0); k1n + 1];
        let mut p2 = vec![Complex64::new(1.0, 0.0); 2 * k2n + 1];
        for y in offsets {
            let e1 = Complex64::from_polar(1.0, y[0]);
            let e2 = Complex64::from_polar(1.0, y[1]);
            for k in 1..=k1n {
                p1[k] = if k % 16 == 0 {
                    Complex64::from_polar(1.0, k as f64 * y[0])
                } else {
                    p1[k - 1] * e1
                };
            }
            p2[k2n] = Complex64::new(1.0, 0.0);
            for k in 1..=k2n {
                let pos = if k % 16 == 0 {
                    Complex64::from_polar(1.0, k as f64 * y[1])
                } else {
                    p2[k2n + k - 1] * e2
                };
                p2[k2n + k] = pos;
                p2[k2n - k] = pos.conj();
            }
            let mut acc = 0.0;
            for (&(k1, k2, _), d) in self.modes.iter().zip(phased) {
                let e = p1[k1 as usize] * p2[(k2 + k2n as i64) as usize];
                acc += d.re * e.re - d.im * e.im;
            }
            out.push(2.0 * acc);
        }
    }
}

/// Quadrature value with the exclusion radius that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    pub rho: f64,
}

/// Precomputed near and far rules for one kernel exponent `s` in `(0, 2)`.
pub struct KernelQuadrature {
    s: f64,
    rho: f64,
    near_offsets: Vec<[f64; 2]>,
    near_weights: Vec<f64>,
    /// Index of the first node of the half set `phi in [0, pi)` per radius.
    half_mask: Vec<bool>,
    far_grid: Grid,
    far_weights: Vec<f64>,
    far_weight_sum: f64,
    tail: f64,
}

impl KernelQuadrature {
    /// Rule sized for fields with `max(|k1|, |k2|) <= bandwidth`.
    pub fn new(s: f64, quad: &QuadratureSpec, bandwidth: usize) -> Result<Self> {
        if !(s > 0.0 && s < 2.0) {
            return Err(SqgError::Domain(format!("kernel exponent {s} outside (0, 2)")));
        }
        quad.validate()?;
        let rho = quad.rho();
        if rho >= 0.5 * NEAR_INNER {
            return Err(SqgError::Config(format!(
                "exclusion radius {rho} too large for the near rule"
            )));
        }
        let band = bandwidth.max(1) as f64;

        // radial panels: geometric from rho, then uniform up to NEAR_OUTER
        let mut edges = vec![rho];
        while *edges.last().unwrap() * 2.0 < 0.5 {
            let e = edges.last().unwrap() * 2.0;
            edges.push(e);
        }
        let width = (0.25f64).min(1.0 / (band + 1.0));
        let start = *edges.last().unwrap();
        let panels = ((NEAR_OUTER - start) / width).ceil() as usize;
        for p in 1..=panels {
            edges.push(start + (NEAR_OUTER - start) * p as f64 / panels as f64);
        }
        let (gx, gw) = gauss_legendre(8);
        let mut radii = Vec::new();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for (t, w) in gx.iter().zip(&gw) {
                radii.push((0.5 * (a + b) + 0.5 * (b - a) * t, 0.5 * (b - a) * w));
            }
        }
        let mut n_phi = (6.0 * band * NEAR_OUTER).ceil() as usize + 24;
        n_phi += n_phi % 2;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut near_offsets = Vec::with_capacity(radii.len() * n_phi);
        let mut near_weights = Vec::with_capacity(radii.len() * n_phi);
        let mut half_mask = Vec::with_capacity(radii.len() * n_phi);
        for &(r, wr) in &radii {
            let w = wr * r * dphi * near_cutoff(r) * r.powf(-2.0 - s);
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                near_offsets.push([r * phi.cos(), r * phi.sin()]);
                near_weights.push(w);
                half_mask.push(j < n_phi / 2);
            }
        }

        let mut m = quad.h_grid.max(4 * bandwidth + 8);
        m += m % 2;
        let far_grid = Grid::new(m)?;
        let dx = far_grid.spacing();
        let kl = quad.k_lat as i64;
        let mut far_weights = vec![0.0; m * m];
        for i in 0..m {
            let y1 = far_grid.coord(i);
            for j in 0..m {
                let y2 = far_grid.coord(j);
                let mut acc = 0.0;
                for a in -kl..=kl {
                    let z1 = y1 + 2.0 * PI * a as f64;
                    for b in -kl..=kl {
                        let z2 = y2 + 2.0 * PI * b as f64;
                        let r = (z1 * z1 + z2 * z2).sqrt();
                        if r <= NEAR_INNER {
                            continue;
                        }
                        acc += (1.0 - near_cutoff(r)) * r.powf(-2.0 - s);
                    }
                }
                far_weights[i * m + j] = acc * dx * dx;
            }
        }
        let far_weight_sum = far_weights.iter().sum();
        let tail = square_tail((2 * quad.k_lat + 1) as f64 * PI, s);
        Ok(KernelQuadrature {
            s,
            rho,
            near_offsets,
            near_weights,
            half_mask,
            far_grid,
            far_weights,
            far_weight_sum,
            tail,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn far_samples(&self, field: &SpectralField, x: [f64; 2]) -> Vec<f64> {
        shift(&field.resample(&self.far_grid), x).to_physical().into_values()
    }

    /// `P.V. \int (phi(x) - phi(x+y)) |y|^{-2-s} dy`, unnormalized.
    pub fn linear_at(&self, field: &SpectralField, x: [f64; 2]) -> f64 {
        let poly = TrigPoly::new(field);
        let phased = poly.phased(x);
        let center = poly.value(x);
        let mut vals = Vec::new();
        poly.values_at_offsets(&phased, &self.near_offsets, &mut vals);
        let near: f64 = vals.iter().zip(&self.near_weights).map(|(v, w)| w * (center - v)).sum();
        let disc = -0.5 * PI * poly.laplacian(x) * self.rho.powf(2.0 - self.s) / (2.0 - self.s);
        let samples = self.far_samples(field, x);
        let far: f64 =
            center * self.far_weight_sum - samples.iter().zip(&self.far_weights).map(|(v, w)| v * w).sum::<f64>();
        near + disc + far + center * self.tail
    }

    /// `\int (psi(x) - psi(x+y))^2 |y|^{-2-s} dy`, unnormalized.
    pub fn quadratic_at(&self, field: &SpectralField, x: [f64; 2]) -> f64 {
        let poly = TrigPoly::new(field);
        let phased = poly.phased(x);
        let center = poly.value(x);
        let mut vals = Vec::new();
        poly.values_at_offsets(&phased, &self.near_offsets, &mut vals);
        let near: f64 = vals
            .iter()
            .zip(&self.near_weights)
            .map(|(v, w)| w * (center - v).powi(2))
            .sum();
        let g = poly.gradient(x);
        let disc = PI * (g[0] * g[0] + g[1] * g[1]) * self.rho.powf(2.0 - self.s) / (2.0 - self.s);
        let samples = self.far_samples(field, x);
        let far: f64 = samples
            .iter()
            .zip(&self.far_weights)
            .map(|(v, w)| w * (center - v).powi(2))
            .sum();
        let mean_sq = samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64;
        near + disc + far + (center * center + mean_sq) * self.tail
    }

    /// `\int_{T^2} \int (psi(x) - psi(x+y))^2 |y|^{-2-s} dy dx`, unnormalized.
    /// The x integral is the trapezoid rule on the far grid, exact for the
    /// quadratic form of a field with bandwidth below half the grid.
    pub fn quadratic_integrated(&self, field: &SpectralField) -> f64 {
        let m = self.far_grid.n();
        let area = self.far_grid.spacing().powi(2);
        let base_field = field.resample(&self.far_grid);
        let base = base_field.to_physical().into_values();

        // near part: integrand is even in y, so only the half set is needed
        let mut near = 0.0;
        for ((y, w), half) in self.near_offsets.iter().zip(&self.near_weights).zip(&self.half_mask) {
            if !*half {
                continue;
            }
            let shifted = shift(&base_field, *y).to_physical().into_values();
            let g: f64 = base.iter().zip(&shifted).map(|(a, b)| (a - b).powi(2)).sum();
            near += 2.0 * w * g * area;
        }

        let grad = gradient(&base_field);
        let grad_sq = grad.u1.l2_norm().powi(2) + grad.u2.l2_norm().powi(2);
        let disc = PI * grad_sq * self.rho.powf(2.0 - self.s) / (2.0 - self.s);

        // far part: x and y on the same grid, increments are index shifts
        let mut far = 0.0;
        for a in 0..m {
            for b in 0..m {
                let w = self.far_weights[a * m + b];
                if w == 0.0 {
                    continue;
                }
                // offset y = coord(a), coord(b); index shift relative to y = 0
                let da = (a + m / 2) % m;
                let db = (b + m / 2) % m;
                let mut g = 0.0;
                for i in 0..m {
                    let ii = (i + da) % m;
                    let row = &base[i * m..(i + 1) * m];
                    let srow = &base[ii * m..(ii + 1) * m];
                    for j in 0..m {
                        let d = row[j] - srow[(j + db) % m];
                        g += d * d;
                    }
                }
                far += w * g * area;
            }
        }

        let l2_sq: f64 = base.iter().map(|v| v * v).sum::<f64>() * area;
        near + disc + far + 2.0 * l2_sq * self.tail
    }
}

/// Quadrature value of `Lambda^sigma theta(x)` from the real-variable
/// singular integral with closed-form normalization.
pub fn lambda_singular_integral_at(
    theta: &PhysicalField,
    sigma: f64,
    x: [f64; 2],
    quad: &QuadratureSpec,
) -> Result<QuadratureValue> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(SqgError::Domain(format!("sigma = {sigma} outside (0, 2)")));
    }
    let spectral = theta.to_spectral();
    let rule = KernelQuadrature::new(sigma, quad, spectral.bandwidth(1e-14 * spectral.max_abs_coeff()))?;
    Ok(QuadratureValue {
        value: normalization_constant(sigma) * rule.linear_at(&spectral, x),
        rho: rule.rho(),
    })
}

/// Recovers `c_sigma` empirically from the single mode `cos(x1)` at `x = 0`,
/// where `Lambda^sigma cos(x1) = cos(x1)`.
pub fn calibrate_normalization(sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(SqgError::Domain(format!("sigma = {sigma} outside (0, 2)")));
    }
    let grid = Grid::new(quad.h_grid)?;
    let field = SpectralField::single_mode(&grid, [1, 0], 1.0)?;
    let rule = KernelQuadrature::new(sigma, quad, 1)?;
    Ok(1.0 / rule.linear_at(&field, [0.0, 0.0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn normalization_closed_form() {
        assert!((normalization_constant(1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // s -> 2 limit: c_s ~ 2 (2 - s) / pi
        let c = normalization_constant(1.999);
        assert!((c / (0.002 / PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn square_tail_matches_disc_bound() {
        // the tail outside a square lies between the tails outside its
        // inscribed and circumscribed discs
        let (l, s) = (10.0, 0.7);
        let disc = |r: f64| 2.0 * PI * r.powf(-s) / s;
        let t = square_tail(l, s);
        assert!(t < disc(l) && t > disc(l * 2f64.sqrt()));
    }

    #[test]
    fn trig_poly_point_values() {
        let g = Grid::new(16).unwrap();
        let f = SpectralField::from_modes(&g, &[([1, 2], 0.7, 0.3), ([3, -1], -1.2, 1.0)]).unwrap();
        let p = TrigPoly::new(&f);
        let x: [f64; 2] = [0.37, -2.1];
        let exact = 0.7 * (x[0] + 2.0 * x[1] + 0.3).cos() - 1.2 * (3.0 * x[0] - x[1] + 1.0).cos();
        assert!((p.value(x) - exact).abs() < 1e-14);
        let gx = -0.7 * (x[0] + 2.0 * x[1] + 0.3).sin() + 3.6 * (3.0 * x[0] - x[1] + 1.0).sin();
        assert!((p.gradient(x)[0] - gx).abs() < 1e-13);
        let lap = -5.0 * 0.7 * (x[0] + 2.0 * x[1] + 0.3).cos() + 10.0 * 1.2 * (3.0 * x[0] - x[1] + 1.0).cos();
        assert!((p.laplacian(x) - lap).abs() < 1e-12);
        let mut out = Vec::new();
        let y = [[0.5, -0.25], [-1.5, 2.0]];
        p.values_at_offsets(&p.phased(x), &y, &mut out);
        for (o, y) in out.iter().zip(&y) {
            assert!((o - p.value([x[0] + y[0], x[1] + y[1]])).abs() < 1e-13);
        }
    }

    #[test]
    fn calibration_recovers_closed_form() {
        let quad = QuadratureSpec::default();
        for sigma in [0.5, 1.0, 1.5] {
            let c = calibrate_normalization(sigma, &quad).unwrap();
            let exact = normalization_constant(sigma);
            assert!((c / exact - 1.0).abs() < 1e-3, "sigma {sigma}: {c} vs {exact}");
        }
    }

    #[test]
    fn singular_integral_rejects_bad_sigma() {
        let g = Grid::new(16).unwrap();
        let p = PhysicalField::from_fn(&g, |x, _| x.cos());
        assert!(lambda_singular_integral_at(&p, 2.0, [0.0, 0.0], &QuadratureSpec::default()).is_err());
        assert!(lambda_singular_integral_at(&p, 0.0, [0.0, 0.0], &QuadratureSpec::default()).is_err());
    }
}
