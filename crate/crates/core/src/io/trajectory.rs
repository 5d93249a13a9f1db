//! Versioned binary trajectory format.
//!
//! Layout (all little-endian):
//!
//! ```text
//!   magic   8 bytes  "GLTRAJ\0\0"
//!   version u32      (currently 1)
//!   n       u32      scaling parameter
//!   m       u32      ring size
//!   stride  u32      steps between records
//!   records          repeated (t, phi[0..m), j0) as f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::IoError;
use crate::lattice::FieldState;
use crate::Real;

pub const TRAJECTORY_MAGIC: [u8; 8] = *b"GLTRAJ\0\0";
pub const TRAJECTORY_VERSION: u32 = 1;

/// Streaming writer.
pub struct TrajectoryWriter<W: Write> {
    sink: W,
    m: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn create(mut sink: W, n: u32, m: usize, stride: u32) -> Result<Self, IoError> {
        sink.write_all(&TRAJECTORY_MAGIC)?;
        sink.write_all(&TRAJECTORY_VERSION.to_le_bytes())?;
        sink.write_all(&n.to_le_bytes())?;
        sink.write_all(&(m as u32).to_le_bytes())?;
        sink.write_all(&stride.to_le_bytes())?;
        Ok(Self { sink, m })
    }

    pub fn record(&mut self, state: &FieldState<Real>) -> Result<(), IoError> {
        debug_assert_eq!(state.phi.len(), self.m);
        self.sink.write_all(&state.t.to_le_bytes())?;
        for v in &state.phi {
            self.sink.write_all(&v.to_le_bytes())?;
        }
        self.sink.write_all(&state.j0.to_le_bytes())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.sink.flush()?;
        Ok(())
    }
}

/// Parsed header plus records.
#[derive(Debug, Clone)]
pub struct TrajectoryReader {
    pub n: u32,
    pub m: usize,
    pub stride: u32,
    pub records: Vec<(Real, Vec<Real>, Real)>,
}

/// Read a whole trajectory file.
pub fn read_trajectory(path: &Path) -> Result<TrajectoryReader, IoError> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse_trajectory(&bytes)
}

pub(crate) fn parse_trajectory(bytes: &[u8]) -> Result<TrajectoryReader, IoError> {
    if bytes.len() < 24 {
        return Err(IoError::BadTrajectory("truncated header".into()));
    }
    if bytes[..8] != TRAJECTORY_MAGIC {
        return Err(IoError::BadTrajectory("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != TRAJECTORY_VERSION {
        return Err(IoError::BadTrajectory(format!(
            "unsupported version {version}"
        )));
    }
    let n = u32_at(12);
    let m = u32_at(16) as usize;
    let stride = u32_at(20);
    let record_bytes = 8 * (m + 2);
    let body = &bytes[24..];
    if body.len() % record_bytes != 0 {
        return Err(IoError::BadTrajectory(format!(
            "body of {} bytes is not a whole number of {record_bytes}-byte records",
            body.len()
        )));
    }
    let f64_at = |s: &[u8], o: usize| Real::from_le_bytes(s[o..o + 8].try_into().unwrap());
    let mut records = Vec::with_capacity(body.len() / record_bytes);
    for chunk in body.chunks_exact(record_bytes) {
        let t = f64_at(chunk, 0);
        let phi: Vec<Real> = (0..m).map(|x| f64_at(chunk, 8 * (x + 1))).collect();
        let j0 = f64_at(chunk, 8 * (m + 1));
        records.push((t, phi, j0));
    }
    Ok(TrajectoryReader {
        n,
        m,
        stride,
        records,
    })
}
