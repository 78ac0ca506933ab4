//! Initial-condition and forcing presets.
//!
//! Random presets draw amplitudes and phases from ChaCha8 (`rand_chacha`)
//! seeded with `seed_from_u64`, which is specified independently of the
//! platform, so a seed reproduces the same field everywhere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::field::SpectralField;
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    SingleMode {
        k: [i64; 2],
        amplitude: f64,
    },
    TwoMode {
        k: [i64; 2],
        amplitude: f64,
        k_b: [i64; 2],
        amplitude_b: f64,
    },
    RandomBand {
        k_min: f64,
        k_max: f64,
        l2_norm: f64,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub k1: i64,
    pub k2: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing {
    None,
    Modes {
        modes: Vec<ForcingMode>,
    },
    RandomBand {
        k_min: f64,
        k_max: f64,
        l2_norm: f64,
        seed: u64,
    },
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid) -> Result<SpectralField> {
        match *self {
            InitialCondition::Zero => Ok(SpectralField::zeros(grid)),
            InitialCondition::SingleMode { k, amplitude } => SpectralField::single_mode(grid, k, amplitude),
            InitialCondition::TwoMode {
                k,
                amplitude,
                k_b,
                amplitude_b,
            } => SpectralField::from_modes(grid, &[(k, amplitude, 0.0), (k_b, amplitude_b, 0.0)]),
            InitialCondition::RandomBand {
                k_min,
                k_max,
                l2_norm,
                seed,
            } => random_band(grid, k_min, k_max, l2_norm, seed),
        }
    }
}

impl Forcing {
    /// Forcing field, always mean-free.
    pub fn build(&self, grid: &Grid) -> Result<SpectralField> {
        let mut f = match self {
            Forcing::None => SpectralField::zeros(grid),
            Forcing::Modes { modes } => {
                let mut f = SpectralField::zeros(grid);
                for m in modes {
                    if m.k1 == 0 && m.k2 == 0 {
                        // a constant forcing is removed by the mean-free projection
                        continue;
                    }
                    f.add_cosine([m.k1, m.k2], m.amplitude, m.phase)?;
                }
                f
            }
            Forcing::RandomBand {
                k_min,
                k_max,
                l2_norm,
                seed,
            } => random_band(grid, *k_min, *k_max, *l2_norm, *seed)?,
        };
        f.project_mean_free();
        Ok(f)
    }
}

/// Random-phase field supported on `k_min <= |k| <= k_max`, scaled to the
/// requested integral L2 norm.
pub fn random_band(grid: &Grid, k_min: f64, k_max: f64, l2_norm: f64, seed: u64) -> Result<SpectralField> {
    if !(k_min >= 1.0 && k_max >= k_min) {
        return Err(SqgError::Config(format!(
            "random band needs 1 <= k_min <= k_max (got {k_min}, {k_max})"
        )));
    }
    if l2_norm < 0.0 || !l2_norm.is_finite() {
        return Err(SqgError::Config(format!("l2_norm must be >= 0 (got {l2_norm})")));
    }
    let kk = k_max.floor() as i64;
    if kk >= (grid.n() / 2) as i64 {
        return Err(SqgError::Config(format!(
            "k_max = {k_max} not representable on n = {}",
            grid.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = SpectralField::zeros(grid);
    for k1 in 0..=kk {
        for k2 in -kk..=kk {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if r < k_min || r > k_max {
                continue;
            }
            let amplitude: f64 = rng.random_range(0.0..1.0);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            field.add_cosine([k1, k2], amplitude, phase)?;
        }
    }
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Err(SqgError::Config(format!(
            "random band [{k_min}, {k_max}] contains no modes"
        )));
    }
    Ok(field.scaled(l2_norm / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_band_is_reproducible_and_normalized() {
        let g = Grid::new(32).unwrap();
        let a = random_band(&g, 1.0, 4.0, 2.5, 7).unwrap();
        let b = random_band(&g, 1.0, 4.0, 2.5, 7).unwrap();
        let c = random_band(&g, 1.0, 4.0, 2.5, 8).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert_ne!(a.coeffs(), c.coeffs());
        assert!((a.l2_norm() - 2.5).abs() < 1e-12);
        assert!(a.bandwidth(1e-15) <= 4);
        assert!(a.hermitian_defect() == 0.0);
    }

    #[test]
    fn random_band_rejects_unrepresentable_modes() {
        let g = Grid::new(8).unwrap();
        assert!(random_band(&g, 1.0, 5.0, 1.0, 0).is_err());
        assert!(random_band(&g, 0.0, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn forcing_modes_are_mean_free() {
        let g = Grid::new(16).unwrap();
        let f = Forcing::Modes {
            modes: vec![
                ForcingMode {
                    k1: 0,
                    k2: 0,
                    amplitude: 3.0,
                    phase: 0.0,
                },
                ForcingMode {
                    k1: 1,
                    k2: 0,
                    amplitude: 1.0,
                    phase: 0.0,
                },
            ],
        }
        .build(&g)
        .unwrap();
        assert_eq!(f.coeffs()[0].norm(), 0.0);
        assert!((f.coeff(1, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_mode_at_origin_is_an_error() {
        let g = Grid::new(16).unwrap();
        let ic = InitialCondition::SingleMode {
            k: [0, 0],
            amplitude: 1.0,
        };
        assert!(matches!(ic.build(&g), Err(SqgError::Domain(_))));
    }
}
