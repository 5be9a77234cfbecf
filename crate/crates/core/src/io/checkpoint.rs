//! Binary checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "DNSE" | version: u32 | count: u32 | count × record
//! record = L, ν, μ, Δt, t: f64 | N: u32 | 3 × N³ × (re, im): f64
//! ```
//!
//! Coefficients are written component by component in row-major mode order.
//! A single field is a file with `count = 1`.

use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::linearized::Trajectory;
use crate::spectral::{Lattice, SpectralField};

pub const MAGIC: &[u8; 4] = b"DNSE";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes at offset {offset}: expected \"DNSE\", found {found:02x?}")]
    Magic { offset: usize, found: Vec<u8> },

    #[error("unsupported version {0} (this build reads version {VERSION})")]
    Version(u32),

    #[error("truncated checkpoint: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated { offset: usize, needed: usize, available: usize },

    #[error("inconsistent header in record {record}: {message}")]
    Inconsistent { record: usize, message: String },

    #[error("{0} trailing bytes after the last record")]
    Trailing(usize),

    #[error("checkpoint i/o on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Per-record header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordHeader {
    pub period: f64,
    pub nu: f64,
    pub mu: f64,
    pub dt: f64,
    pub t: f64,
    pub n: u32,
}

#[derive(Clone, Debug)]
pub struct Record {
    pub header: RecordHeader,
    pub field: SpectralField,
}

/// Run parameters stored alongside the fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMeta {
    pub nu: f64,
    pub mu: f64,
    pub dt: f64,
}

fn header_for(field: &SpectralField, meta: RunMeta, t: f64) -> RecordHeader {
    let lat = field.lattice();
    RecordHeader { period: lat.period(), nu: meta.nu, mu: meta.mu, dt: meta.dt, t, n: lat.n() as u32 }
}

fn encode_record(out: &mut Vec<u8>, header: &RecordHeader, field: &SpectralField) {
    for x in [header.period, header.nu, header.mu, header.dt, header.t] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&header.n.to_le_bytes());
    for comp in field.components() {
        for z in comp {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
}

/// Serializes records into the checkpoint layout.
pub fn encode(records: &[(RecordHeader, &SpectralField)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (header, field) in records {
        encode_record(&mut out, header, field);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(CheckpointError::Truncated { offset: self.pos, needed: n, available });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }
}

/// Parses a checkpoint image.
pub fn decode(bytes: &[u8]) -> Result<Vec<Record>, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4).map_err(|_| CheckpointError::Magic { offset: 0, found: bytes[..bytes.len().min(4)].to_vec() })?;
    if let Some(offset) = magic.iter().zip(MAGIC).position(|(a, b)| a != b) {
        return Err(CheckpointError::Magic { offset, found: magic.to_vec() });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = r.u32()? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 16));
    let mut lattice: Option<Lattice> = None;
    for record in 0..count {
        let inconsistent = |message: String| CheckpointError::Inconsistent { record, message };
        let header = RecordHeader { period: r.f64()?, nu: r.f64()?, mu: r.f64()?, dt: r.f64()?, t: r.f64()?, n: r.u32()? };
        let lat = match &lattice {
            Some(l) if l.n() == header.n as usize && l.period().to_bits() == header.period.to_bits() => l.clone(),
            Some(l) => {
                return Err(inconsistent(format!(
                    "lattice (L = {}, N = {}) differs from the first record (L = {}, N = {})",
                    header.period,
                    header.n,
                    l.period(),
                    l.n()
                )))
            }
            None => Lattice::new(header.period, header.n as usize).map_err(|e| inconsistent(e.to_string()))?,
        };
        if !(header.nu > 0.0 && header.dt > 0.0 && header.mu >= 0.0 && header.t.is_finite()) {
            return Err(inconsistent(format!("nonphysical parameters nu = {}, mu = {}, dt = {}, t = {}", header.nu, header.mu, header.dt, header.t)));
        }
        let len = lat.len();
        let mut coeffs: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::with_capacity(len));
        for comp in coeffs.iter_mut() {
            for _ in 0..len {
                comp.push(Complex64::new(r.f64()?, r.f64()?));
            }
        }
        let field = SpectralField::from_parts(&lat, coeffs);
        if field.reality_defect() != 0.0 || !field.is_finite() {
            return Err(inconsistent("coefficients are not those of a real, mean-zero field".into()));
        }
        lattice = Some(lat);
        records.push(Record { header, field });
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Trailing(bytes.len() - r.pos));
    }
    Ok(records)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CheckpointError> {
    std::fs::write(path, bytes).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })
}

/// Writes one field at time `t`.
pub fn write_field(path: &Path, field: &SpectralField, meta: RunMeta, t: f64) -> Result<(), CheckpointError> {
    write_bytes(path, &encode(&[(header_for(field, meta, t), field)]))
}

/// Writes every stored state of a trajectory.
pub fn write_trajectory(path: &Path, traj: &Trajectory, meta: RunMeta) -> Result<(), CheckpointError> {
    let records: Vec<_> = traj.states.iter().enumerate().map(|(k, s)| (header_for(s, meta, traj.time(k)), s)).collect();
    write_bytes(path, &encode(&records))
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<Record>, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_solenoidal_field;
    use std::f64::consts::TAU;

    const META: RunMeta = RunMeta { nu: 1.0, mu: 0.05, dt: 1e-3 };

    fn sample() -> SpectralField {
        random_solenoidal_field(&Lattice::new(TAU, 8).unwrap(), -2.0, 1.0, 5)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let u = sample();
        let bytes = encode(&[(header_for(&u, META, 0.25), &u)]);
        assert_eq!(bytes.len(), 12 + 44 + 3 * 512 * 16);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back[0].field.bitwise_eq(&u));
        assert_eq!(back[0].header.t, 0.25);
        assert_eq!(encode(&[(back[0].header, &back[0].field)]), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.dnse");
        let u = sample();
        write_field(&path, &u, META, 1.5).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back[0].header, header_for(&u, META, 1.5));
        assert_eq!(std::fs::read(&path).unwrap(), encode(&[(back[0].header, &back[0].field)]));
    }

    #[test]
    fn wrong_magic_names_offset() {
        let u = sample();
        let mut bytes = encode(&[(header_for(&u, META, 0.0), &u)]);
        bytes[2] = b'X';
        let err = decode(&bytes).unwrap_err();
        assert!(matches!(err, CheckpointError::Magic { offset: 2, .. }));
        assert!(err.to_string().contains("offset 2"));
    }

    #[test]
    fn newer_version_is_unsupported() {
        let u = sample();
        let mut bytes = encode(&[(header_for(&u, META, 0.0), &u)]);
        bytes[4..8].copy_from_slice(&(VERSION + 1).to_le_bytes());
        assert!(decode(&bytes).unwrap_err().to_string().contains("unsupported version"));
    }

    #[test]
    fn truncation_is_detected() {
        let u = sample();
        let bytes = encode(&[(header_for(&u, META, 0.0), &u)]);
        for cut in [2, 10, 40, bytes.len() - 1] {
            let err = decode(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, CheckpointError::Truncated { .. } | CheckpointError::Magic { .. }), "{cut}: {err}");
        }
    }

    #[test]
    fn inconsistent_headers_are_rejected() {
        let u = sample();
        let mut bytes = encode(&[(header_for(&u, META, 0.0), &u)]);
        // N = 7 at the N slot of the first record
        bytes[12 + 40..12 + 44].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(CheckpointError::Inconsistent { .. } | CheckpointError::Truncated { .. })));

        let other = random_solenoidal_field(&Lattice::new(TAU, 4).unwrap(), -2.0, 1.0, 5);
        let mixed = encode(&[(header_for(&u, META, 0.0), &u), (header_for(&other, META, 0.1), &other)]);
        assert!(matches!(decode(&mixed), Err(CheckpointError::Inconsistent { record: 1, .. })));

        let mut broken = encode(&[(header_for(&u, META, 0.0), &u)]);
        let at = 12 + 44 + 16 * 3; // re of mode 3, component 0
        broken[at..at + 8].copy_from_slice(&123.0f64.to_le_bytes());
        assert!(matches!(decode(&broken), Err(CheckpointError::Inconsistent { .. })));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let u = sample();
        let mut bytes = encode(&[(header_for(&u, META, 0.0), &u)]);
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(CheckpointError::Trailing(1))));
    }
}
