//! Binary container for near-field data.
//!
//! Layout, all little-endian: magic `LSMNF1`, `u64 n`, `f64` k1, k2, a, b,
//! 32-byte scenario hash, then for `us` and `g0s` in turn a `u64` entry count
//! followed by row-major `(f64 re, f64 im)` pairs. A JSON sidecar next to the
//! file carries the scenario.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Scenario;

pub const MAGIC: &[u8; 6] = b"LSMNF1";

#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldDataset {
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub b: f64,
    pub fingerprint: [u8; 32],
    /// `us[(j, l)] = u^s(x_j, y_l)`
    pub us: DMatrix<Complex64>,
    pub g0s: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub fingerprint: String,
    pub scenario: Scenario,
    pub unknowns: usize,
    pub cells: usize,
    pub boundary_nodes: usize,
    pub condition_estimate: Option<f64>,
}

impl NearFieldDataset {
    pub fn n(&self) -> usize {
        self.us.nrows()
    }

    /// `us - g0s`
    pub fn near_field(&self) -> DMatrix<Complex64> {
        &self.us - &self.g0s
    }

    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint)
    }

    pub fn check_fingerprint(&self, scenario: &Scenario) -> Result<()> {
        let expected = scenario.fingerprint()?;
        if expected != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: hex::encode(expected),
                found: self.fingerprint_hex(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n();
        let mut out = Vec::with_capacity(6 + 8 * 5 + 32 + 2 * (8 + 16 * n * n));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for v in [self.k1, self.k2, self.a, self.b] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.fingerprint);
        for m in [&self.us, &self.g0s] {
            out.extend_from_slice(&((m.nrows() * m.ncols()) as u64).to_le_bytes());
            for j in 0..m.nrows() {
                for l in 0..m.ncols() {
                    out.extend_from_slice(&m[(j, l)].re.to_le_bytes());
                    out.extend_from_slice(&m[(j, l)].im.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(6)? != MAGIC {
            return Err(Error::Format("bad magic, expected LSMNF1".into()));
        }
        let n = r.u64()? as usize;
        let (k1, k2, a, b) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let mut fingerprint = [0u8; 32];
        fingerprint.copy_from_slice(r.take(32)?);
        let mut mats = Vec::with_capacity(2);
        for name in ["us", "g0s"] {
            let len = r.u64()? as usize;
            if Some(len) != n.checked_mul(n) {
                return Err(Error::Format(format!("{name} holds {len} entries, expected {n}x{n}")));
            }
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for l in 0..n {
                    m[(j, l)] = Complex64::new(r.f64()?, r.f64()?);
                }
            }
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Format(format!("{name} contains non-finite entries")));
            }
            mats.push(m);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let g0s = mats.pop().unwrap_or_default();
        let us = mats.pop().unwrap_or_default();
        Ok(Self {
            k1,
            k2,
            a,
            b,
            fingerprint,
            us,
            g0s,
        })
    }

    pub fn write(&self, path: &Path, sidecar: &Sidecar) -> Result<()> {
        write_atomic(path, &self.to_bytes())?;
        write_atomic(&sidecar_path(path), serde_json::to_string_pretty(sidecar)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    Ok(serde_json::from_slice(&fs::read(sidecar_path(path))?)?)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos + k;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
