//! Binary cache for channel spectra.
//!
//! Layout (all little-endian): magic `NDT1`, version u32, then the key
//! (r_max f64, order u32, knot-law tag u32, matching radius f64, n_splines u32,
//! l u32, Z f64), eigenpair count u32, eigenvalues, eigenvectors column-major.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::{ChannelSpectrum, KnotLaw, RadialBasis};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NDT1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumKey {
    pub r_max: f64,
    pub order: u32,
    pub knot_law: KnotLaw,
    pub n_splines: u32,
    pub l: u32,
    pub z: f64,
}

impl SpectrumKey {
    pub fn new(basis: &RadialBasis, l: usize, z: f64) -> Self {
        Self {
            r_max: basis.r_max(),
            order: basis.order() as u32,
            knot_law: basis.params().knot_law,
            n_splines: basis.n_splines() as u32,
            l: l as u32,
            z,
        }
    }

    fn law_fields(&self) -> (u32, f64) {
        match self.knot_law {
            KnotLaw::Linear => (0, 0.0),
            KnotLaw::SqrtRamp { r_match } => (1, r_match),
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let (tag, r_match) = self.law_fields();
        out.extend_from_slice(&self.r_max.to_le_bytes());
        out.extend_from_slice(&self.order.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&r_match.to_le_bytes());
        out.extend_from_slice(&self.n_splines.to_le_bytes());
        out.extend_from_slice(&self.l.to_le_bytes());
        out.extend_from_slice(&self.z.to_le_bytes());
    }

    fn file_stem(&self) -> String {
        let mut bytes = Vec::new();
        self.encode(&mut bytes);
        let digest = Sha256::digest(&bytes);
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("spectrum-l{}-{hex}", self.l)
    }
}

pub fn spectrum_cache_path(dir: &Path, key: &SpectrumKey) -> PathBuf {
    dir.join(format!("{}.ndt1", key.file_stem()))
}

pub fn write_spectrum(path: &Path, basis: &RadialBasis, spec: &ChannelSpectrum) -> Result<()> {
    if spec.fingerprint != basis.fingerprint() {
        return Err(Error::BasisMismatch("spectrum does not belong to this basis".into()));
    }
    let key = SpectrumKey::new(basis, spec.l, spec.z);
    let n = spec.vectors.nrows();
    let m = spec.len();
    let mut buf = Vec::with_capacity(64 + 8 * m * (n + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    key.encode(&mut buf);
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    for e in &spec.energies {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    for x in spec.vectors.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a cached spectrum, checking that its key matches `basis`, `l` and `z`.
pub fn read_spectrum(path: &Path, basis: &RadialBasis, l: usize, z: f64) -> Result<ChannelSpectrum> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        what: "spectrum cache",
        reason: reason.to_string(),
    };
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4).ok_or_else(|| bad("truncated header"))? != MAGIC {
        return Err(bad("wrong magic"));
    }
    let version = cur.u32().ok_or_else(|| bad("truncated header"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let expected = SpectrumKey::new(basis, l, z);
    let mut key_bytes = Vec::new();
    expected.encode(&mut key_bytes);
    if cur.take(key_bytes.len()).ok_or_else(|| bad("truncated key"))? != key_bytes.as_slice() {
        return Err(bad("key does not match the requested basis/channel"));
    }
    let m = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let n = basis.n_splines();
    let energies = (0..m)
        .map(|_| cur.f64())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad("truncated eigenvalues"))?;
    let data = (0..n * m)
        .map(|_| cur.f64())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad("truncated eigenvectors"))?;
    if cur.pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(ChannelSpectrum {
        l,
        z,
        energies,
        vectors: DMatrix::from_vec(n, m, data),
        fingerprint: basis.fingerprint(),
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}
