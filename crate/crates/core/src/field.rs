//! Scalar and vector fields in spectral and collocation form.
//!
//! Spectral coefficients follow `phi_k = (2 pi)^-2 \int phi(x) e^{-i k.x} dx`,
//! discretized by the collocation sum over `x_ij = (-pi + 2 pi i/n, -pi + 2 pi j/n)`,
//! so `phi(x) = sum_k phi_k e^{i k.x}`. Coefficients are stored in FFT order,
//! row index for `k1`, column index for `k2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SqgError};
use crate::grid::Grid;

/// `(2 pi)^2`, the measure of the torus.
pub const TORUS_AREA: f64 = 4.0 * PI * PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn parity_sign(a: usize, b: usize) -> f64 {
    if (a + b).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Mean-free Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Wraps raw FFT-ordered coefficients; the mean mode is cleared.
    pub fn from_coeffs(grid: &Grid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(SqgError::Shape(format!(
                "expected {} coefficients for n = {}, got {}",
                grid.len(),
                grid.n(),
                coeffs.len()
            )));
        }
        coeffs[0] = ZERO;
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Sum of `amplitude * cos(k.x + phase)` over the given modes.
    pub fn from_modes(grid: &Grid, modes: &[([i64; 2], f64, f64)]) -> Result<Self> {
        let mut field = SpectralField::zeros(grid);
        for &(k, amplitude, phase) in modes {
            field.add_cosine(k, amplitude, phase)?;
        }
        Ok(field)
    }

    pub fn single_mode(grid: &Grid, k: [i64; 2], amplitude: f64) -> Result<Self> {
        Self::from_modes(grid, &[(k, amplitude, 0.0)])
    }

    pub fn add_cosine(&mut self, k: [i64; 2], amplitude: f64, phase: f64) -> Result<()> {
        if k == [0, 0] {
            return Err(SqgError::Domain("wavevector k = (0,0) is the mean mode".into()));
        }
        let half = (self.grid.n() / 2) as i64;
        if k[0].abs() >= half || k[1].abs() >= half {
            return Err(SqgError::Domain(format!(
                "mode ({}, {}) not representable on n = {}",
                k[0],
                k[1],
                self.grid.n()
            )));
        }
        let c = Complex64::from_polar(0.5 * amplitude, phase);
        let p = self.grid.flat_index(k[0], k[1]).expect("checked range");
        let m = self.grid.flat_index(-k[0], -k[1]).expect("checked range");
        self.coeffs[p] += c;
        self.coeffs[m] += c.conj();
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at wavevector `k`; zero when `k` is outside the lattice.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid.flat_index(k1, k2).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SqgError::Shape(format!(
                "grid mismatch: n = {} vs n = {}",
                self.grid.n(),
                other.grid.n()
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_same_grid(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        Ok(())
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn project_mean_free(&mut self) {
        self.coeffs[0] = ZERO;
    }

    /// Integral pairing `\int_{T^2} a b dx`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(TORUS_AREA * s)
    }

    /// Integral L2 norm.
    pub fn l2_norm(&self) -> f64 {
        (TORUS_AREA * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest deviation from `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let ma = (n - a) % n;
                let mb = (n - b) % n;
                let d = (self.coeffs[a * n + b] - self.coeffs[ma * n + mb].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest `max(|k1|, |k2|)` over coefficients with modulus above `tol`.
    pub fn bandwidth(&self, tol: f64) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(i, _)| {
                let (k1, k2) = self.grid.wavevector(i);
                k1.unsigned_abs().max(k2.unsigned_abs()) as usize
            })
            .max()
            .unwrap_or(0)
    }

    /// Samples on the collocation grid.
    pub fn to_physical(&self) -> PhysicalField {
        inverse_transform(self)
    }

    /// Same field on another grid: coefficients are copied where both lattices
    /// have them (Nyquist lines dropped), everything else is zero.
    pub fn resample(&self, target: &Grid) -> SpectralField {
        let mut out = SpectralField::zeros(target);
        let n = self.grid.n();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let (k1, k2) = self.grid.wavevector(i);
            if self.grid.is_nyquist(k1, k2) || target.is_nyquist(k1, k2) {
                continue;
            }
            if let Some(j) = target.flat_index(k1, k2) {
                out.coeffs[j] = *c;
            }
        }
        debug_assert_eq!(self.coeffs.len(), n * n);
        out
    }
}

/// Real samples on the collocation grid, row-major with row index along `x1`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SqgError::Shape(format!(
                "expected {} values for n = {}, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn to_spectral(&self) -> SpectralField {
        transform(self)
    }
}

/// Forward transform; the mean mode is zeroed on output.
pub fn transform(field: &PhysicalField) -> SpectralField {
    let grid = field.grid();
    let n = grid.n();
    let mut buf: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft().forward(&mut buf);
    let norm = 1.0 / (n * n) as f64;
    for a in 0..n {
        for b in 0..n {
            buf[a * n + b] *= norm * parity_sign(a, b);
        }
    }
    buf[0] = ZERO;
    SpectralField {
        grid: grid.clone(),
        coeffs: buf,
    }
}

pub fn inverse_transform(field: &SpectralField) -> PhysicalField {
    let grid = field.grid();
    let n = grid.n();
    let mut buf = field.coeffs.clone();
    for a in 0..n {
        for b in 0..n {
            buf[a * n + b] *= parity_sign(a, b);
        }
    }
    grid.fft().inverse(&mut buf);
    PhysicalField {
        grid: grid.clone(),
        values: buf.into_iter().map(|c| c.re).collect(),
    }
}

/// Two-component field `(u1, u2)` kept in spectral form.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VectorField {
    pub fn to_physical(&self) -> (PhysicalField, PhysicalField) {
        (self.u1.to_physical(), self.u2.to_physical())
    }

    /// Integral L2 norm of the vector field.
    pub fn l2_norm(&self) -> f64 {
        (self.u1.l2_norm().powi(2) + self.u2.l2_norm().powi(2)).sqrt()
    }

    /// `max_k |k . u_k|`.
    pub fn max_divergence(&self) -> f64 {
        let grid = self.u1.grid();
        (0..grid.len())
            .map(|i| {
                let (k1, k2) = grid.wavevector(i);
                (self.u1.coeffs[i] * k1 as f64 + self.u2.coeffs[i] * k2 as f64).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.u1.max_abs_coeff().max(self.u2.max_abs_coeff())
    }
}
