//! SQG1 binary snapshots.
//!
//! Layout, little-endian: magic `SQG1`, version `u16`, `n` as `u32`, then
//! `gamma`, `epsilon`, `t` as `f64`, then the `n * n` physical values
//! row-major (row index along `x1`).

use std::fs;
use std::path::Path;

use crate::error::{Result, SqgError};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"SQG1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 4 + 3 * 8;

/// Largest admissible `|mean| / max|value|` of a payload.
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub values: PhysicalField,
}

impl Snapshot {
    pub fn state(&self) -> SpectralField {
        self.values.to_spectral()
    }
}

pub fn encode_snapshot(values: &PhysicalField, t: f64, gamma: f64, epsilon: f64) -> Vec<u8> {
    let n = values.grid().n();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in [gamma, epsilon, t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in values.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(SqgError::Format(format!(
            "truncated header: expected at least {HEADER_LEN} bytes, found {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(SqgError::Format(format!(
            "bad magic {:?}, expected \"SQG1\"",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(SqgError::Format(format!(
            "unsupported snapshot version {version} (this build reads version {VERSION})"
        )));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let grid = Grid::new(n).map_err(|e| SqgError::Format(format!("snapshot grid: {e}")))?;
    let gamma = f64_at(bytes, 10);
    let epsilon = f64_at(bytes, 18);
    let t = f64_at(bytes, 26);
    let expected = HEADER_LEN + 8 * n * n;
    if bytes.len() != expected {
        return Err(SqgError::Format(format!(
            "payload length mismatch: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = PhysicalField::new(&grid, values)?;
    let max = field.max_abs();
    if field.mean().abs() > MEAN_TOLERANCE * max {
        return Err(SqgError::Format(format!(
            "payload mean {:e} exceeds {MEAN_TOLERANCE:e} of max |value| {max:e}",
            field.mean()
        )));
    }
    Ok(Snapshot {
        t,
        gamma,
        epsilon,
        values: field,
    })
}

pub fn write_snapshot(path: &Path, state: &SpectralField, t: f64, gamma: f64, epsilon: f64) -> Result<()> {
    let bytes = encode_snapshot(&state.to_physical(), t, gamma, epsilon);
    fs::write(path, bytes).map_err(|e| SqgError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| SqgError::io(path, e))?;
    decode_snapshot(&bytes).map_err(|e| match e {
        SqgError::Format(m) => SqgError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(16).unwrap();
        let state = crate::presets::random_band(&g, 1.0, 5.0, 2.0, 4).unwrap();
        let values = state.to_physical();
        let bytes = encode_snapshot(&values, 0.75, 1.0, 0.01);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 256);
        let back = decode_snapshot(&bytes).unwrap();
        assert_eq!((back.t, back.gamma, back.epsilon), (0.75, 1.0, 0.01));
        for (a, b) in values.values().iter().zip(back.values.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_magic_version_and_length() {
        let g = Grid::new(8).unwrap();
        let good = encode_snapshot(&SpectralField::zeros(&g).to_physical(), 0.0, 1.0, 0.0);
        let mut bad = good.clone();
        bad[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_snapshot(&bad), Err(SqgError::Format(m)) if m.contains("magic")));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_snapshot(&bad), Err(SqgError::Format(m)) if m.contains("version 2")));
        let cut = &good[..good.len() - 5];
        match decode_snapshot(cut) {
            Err(SqgError::Format(m)) => {
                assert!(m.contains(&format!("expected {}", good.len())), "{m}");
                assert!(m.contains(&format!("found {}", cut.len())), "{m}");
            }
            other => panic!("{other:?}"),
        }
        assert!(decode_snapshot(&good[..10]).is_err());
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let g = Grid::new(8).unwrap();
        let values = PhysicalField::new(&g, vec![1.0; 64]).unwrap();
        let bytes = encode_snapshot(&values, 0.0, 1.0, 0.0);
        assert!(matches!(decode_snapshot(&bytes), Err(SqgError::Format(m)) if m.contains("mean")));
    }
}
