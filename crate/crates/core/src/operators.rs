//! Fourier-multiplier operators and dealiased products.

use num_complex::Complex64;

use crate::error::{Result, SqgError};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn modulus(k1: i64, k2: i64) -> f64 {
    ((k1 * k1 + k2 * k2) as f64).sqrt()
}

/// Applies a real multiplier `m(k1, k2)` to every non-mean mode.
pub fn apply_multiplier(field: &SpectralField, m: impl Fn(i64, i64) -> f64) -> SpectralField {
    let grid = field.grid().clone();
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                ZERO
            } else {
                let (k1, k2) = grid.wavevector(i);
                c * m(k1, k2)
            }
        })
        .collect();
    SpectralField::from_coeffs(&grid, coeffs).expect("same grid")
}

/// Odd (imaginary) multiplier `i m(k)`; Nyquist lines are zeroed so real
/// fields stay real.
fn apply_odd_multiplier(field: &SpectralField, m: impl Fn(i64, i64) -> f64) -> SpectralField {
    let grid = field.grid().clone();
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            if i == 0 || grid.is_nyquist(k1, k2) {
                ZERO
            } else {
                c * I * m(k1, k2)
            }
        })
        .collect();
    SpectralField::from_coeffs(&grid, coeffs).expect("same grid")
}

/// `Lambda^sigma = (-Delta)^{sigma/2}`, multiplier `|k|^sigma`.
pub fn apply_fractional_laplacian(field: &SpectralField, sigma: f64) -> Result<SpectralField> {
    if !(-2.0..=2.0).contains(&sigma) || !sigma.is_finite() {
        return Err(SqgError::Domain(format!("fractional exponent {sigma} outside [-2, 2]")));
    }
    if sigma == 0.0 {
        return Ok(apply_multiplier(field, |_, _| 1.0));
    }
    Ok(apply_multiplier(field, |k1, k2| modulus(k1, k2).powf(sigma)))
}

/// `u = R^perp theta`, i.e. `u_k = (-i k2/|k|, i k1/|k|) theta_k`.
pub fn riesz_perp_velocity(theta: &SpectralField) -> VectorField {
    VectorField {
        u1: apply_odd_multiplier(theta, |k1, k2| -(k2 as f64) / modulus(k1, k2)),
        u2: apply_odd_multiplier(theta, |k1, k2| k1 as f64 / modulus(k1, k2)),
    }
}

pub fn gradient(theta: &SpectralField) -> VectorField {
    VectorField {
        u1: apply_odd_multiplier(theta, |k1, _| k1 as f64),
        u2: apply_odd_multiplier(theta, |_, k2| k2 as f64),
    }
}

/// `theta(. + h)`.
pub fn shift(field: &SpectralField, h: [f64; 2]) -> SpectralField {
    let grid = field.grid().clone();
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            c * Complex64::from_polar(1.0, k1 as f64 * h[0] + k2 as f64 * h[1])
        })
        .collect();
    SpectralField::from_coeffs(&grid, coeffs).expect("same grid")
}

/// Finite difference `delta_h theta = theta(. + h) - theta`.
pub fn increment(field: &SpectralField, h: [f64; 2]) -> SpectralField {
    let grid = field.grid().clone();
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            c * (Complex64::from_polar(1.0, k1 as f64 * h[0] + k2 as f64 * h[1]) - 1.0)
        })
        .collect();
    SpectralField::from_coeffs(&grid, coeffs).expect("same grid")
}

/// Galerkin projection onto the 2/3-rule resolved set.
pub fn truncate(field: &SpectralField) -> SpectralField {
    let grid = field.grid().clone();
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.wavevector(i);
            if grid.is_resolved(k1, k2) {
                *c
            } else {
                ZERO
            }
        })
        .collect();
    SpectralField::from_coeffs(&grid, coeffs).expect("same grid")
}

/// Padded-grid workspace for exact products of resolved modes.
///
/// Inputs are cut to `|k_i| <= n/3` and evaluated on the `3n/2` grid, where
/// products of resolved modes alias only above the cutoff.
pub(crate) struct PaddedProducts<'a> {
    grid: &'a Grid,
    m: usize,
}

impl<'a> PaddedProducts<'a> {
    pub(crate) fn new(grid: &'a Grid) -> Self {
        PaddedProducts {
            grid,
            m: grid.padded_size(),
        }
    }

    /// Evaluates `a + i b` on the padded grid from two real spectra.
    pub(crate) fn pack(&self, a: &SpectralField, b: &SpectralField) -> Vec<Complex64> {
        let grid = self.grid;
        let m = self.m;
        let c = grid.dealias_cutoff() as i64;
        let mut buf = vec![ZERO; m * m];
        let pad_index = |k: i64| if k >= 0 { k as usize } else { (k + m as i64) as usize };
        for k1 in -c..=c {
            for k2 in -c..=c {
                let src = grid.flat_index(k1, k2).expect("cutoff below n/2");
                let v = a.coeffs()[src] + I * b.coeffs()[src];
                buf[pad_index(k1) * m + pad_index(k2)] = v;
            }
        }
        self.grid.padded_fft().inverse(&mut buf);
        buf
    }

    /// Forward transform of padded real samples, cut back to resolved modes on
    /// the base grid, mean removed.
    pub(crate) fn unpack(&self, values: Vec<f64>) -> SpectralField {
        let grid = self.grid;
        let m = self.m;
        let c = grid.dealias_cutoff() as i64;
        let mut buf: Vec<Complex64> = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        self.grid.padded_fft().forward(&mut buf);
        let norm = 1.0 / (m * m) as f64;
        let pad_index = |k: i64| if k >= 0 { k as usize } else { (k + m as i64) as usize };
        let mut out = SpectralField::zeros(grid);
        for k1 in -c..=c {
            for k2 in -c..=c {
                let dst = grid.flat_index(k1, k2).expect("cutoff below n/2");
                out.coeffs_mut()[dst] = buf[pad_index(k1) * m + pad_index(k2)] * norm;
            }
        }
        out.project_mean_free();
        out
    }
}

/// Pseudospectral product `P(a b)` with 2/3-rule dealiasing and the mean
/// projected out.
pub fn dealiased_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.check_same_grid(b)?;
    let pp = PaddedProducts::new(a.grid());
    let packed = pp.pack(a, b);
    let values = packed.into_iter().map(|z| z.re * z.im).collect();
    Ok(pp.unpack(values))
}
