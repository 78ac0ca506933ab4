//! Collocation grids on the periodic square `(-pi, pi)^2` and the 2-D FFT
//! plans attached to them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SqgError};

pub const MIN_GRID: usize = 8;
pub const MAX_GRID: usize = 4096;

/// Square 2-D FFT of side `m`, row-major, unnormalized in both directions.
pub(crate) struct Fft2 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.m
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.forward, buf);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inverse, buf);
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.m * self.m);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.m);
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.m);
    }
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

struct GridInner {
    n: usize,
    cutoff: usize,
    fft: Fft2,
    padded: Fft2,
}

/// Uniform `n x n` grid on the torus with its integer wavenumber lattice
/// `{-n/2+1, ..., n/2}^2`. Cloning is cheap; clones share FFT plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("dealias_cutoff", &self.inner.cutoff)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n
    }
}

impl Eq for Grid {}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(SqgError::Config(format!("grid size must be even (got {n})")));
        }
        if !(MIN_GRID..=MAX_GRID).contains(&n) {
            return Err(SqgError::Config(format!(
                "grid size {n} outside [{MIN_GRID}, {MAX_GRID}]"
            )));
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                cutoff: n / 3,
                fft: Fft2::new(n),
                padded: Fft2::new(3 * n / 2),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained wavenumber component under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.inner.cutoff
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.inner.n as f64
    }

    /// Collocation coordinate `-pi + 2 pi i / n`.
    pub fn coord(&self, i: usize) -> f64 {
        -PI + self.spacing() * i as f64
    }

    /// Signed wavenumber stored at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.inner.n;
        if idx <= n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    /// FFT index holding wavenumber `k`, if `k` is on the lattice.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.inner.n / 2) as i64;
        if k > half || k <= -half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.inner.n as i64) as usize)
        }
    }

    pub fn flat_index(&self, k1: i64, k2: i64) -> Option<usize> {
        Some(self.index_of(k1)? * self.inner.n + self.index_of(k2)?)
    }

    /// Wavevector at flat coefficient index.
    pub fn wavevector(&self, flat: usize) -> (i64, i64) {
        let n = self.inner.n;
        (self.wavenumber(flat / n), self.wavenumber(flat % n))
    }

    /// True when either component sits on the unpaired Nyquist line `n/2`.
    pub fn is_nyquist(&self, k1: i64, k2: i64) -> bool {
        let half = (self.inner.n / 2) as i64;
        k1 == half || k2 == half
    }

    /// Mode kept by the 2/3 rule.
    pub fn is_resolved(&self, k1: i64, k2: i64) -> bool {
        let c = self.inner.cutoff as i64;
        k1.abs() <= c && k2.abs() <= c
    }

    pub fn padded_size(&self) -> usize {
        self.inner.padded.size()
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.inner.fft
    }

    pub(crate) fn padded_fft(&self) -> &Fft2 {
        &self.inner.padded
    }
}
