//! Checkpoint files: magic `NDTS`, version u32, n_channels u32, n_radial u32, t f64,
//! pulse hash u64, config hash u64, then (re, im) f64 pairs in channel-major order.
//! All little-endian.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::WavefunctionState;
use crate::pulse::Pulse;

const MAGIC: &[u8; 4] = b"NDTS";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub n_channels: u32,
    pub n_radial: u32,
    pub t: f64,
    pub pulse_hash: u64,
    pub config_hash: u64,
}

/// First eight bytes of SHA-256 as a little-endian integer.
pub fn hash64(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn pulse_hash(pulse: &Pulse) -> u64 {
    hash64(serde_json::to_string(pulse).expect("pulse serializes").as_bytes())
}

pub fn write_checkpoint(path: &Path, psi: &WavefunctionState, pulse_hash: u64, config_hash: u64) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * psi.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(psi.n_channels() as u32).to_le_bytes());
    buf.extend_from_slice(&(psi.n_radial() as u32).to_le_bytes());
    buf.extend_from_slice(&psi.t.to_le_bytes());
    buf.extend_from_slice(&pulse_hash.to_le_bytes());
    buf.extend_from_slice(&config_hash.to_le_bytes());
    for c in 0..psi.n_channels() {
        for i in 0..psi.n_radial() {
            let z = psi.get(c, i);
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, &buf).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, WavefunctionState)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Format { what: "checkpoint", reason };
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("wrong magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let header = CheckpointHeader {
        n_channels: u32_at(8),
        n_radial: u32_at(12),
        t: f64::from_bits(u64_at(16)),
        pulse_hash: u64_at(24),
        config_hash: u64_at(32),
    };
    let (nc, nr) = (header.n_channels as usize, header.n_radial as usize);
    let expected = HEADER_LEN + 16 * nc * nr;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut psi = WavefunctionState::zeros(nc, nr, header.t);
    let mut o = HEADER_LEN;
    for c in 0..nc {
        for i in 0..nr {
            let re = f64::from_bits(u64_at(o));
            let im = f64::from_bits(u64_at(o + 8));
            psi.set(c, i, num_complex::Complex64::new(re, im));
            o += 16;
        }
    }
    Ok((header, psi))
}
