//! Binary checkpoint of a [`SpectralField`], little-endian:
//!
//! ```text
//! magic   4 bytes  "TSNS"
//! version u32      1
//! L       f64
//! N       u32
//! count   u64      number of mode records
//! flags   u32      bit 0: coefficients use the volume-normalized (mean-square) convention
//! count × { j1 j2 j3: i32, re0 im0 re1 im1 re2 im2: f64 }
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::output::write_atomic;
use crate::spectral::{Complex64, Lattice, SpectralField, DEFAULT_DEALIAS};

pub const MAGIC: &[u8; 4] = b"TSNS";
pub const VERSION: u32 = 1;
pub const FLAG_MEAN_SQUARE: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 8 + 4;
const RECORD_LEN: usize = 3 * 4 + 6 * 8;
const DIVERGENCE_TOL: f64 = 1e-10;

pub fn encode(field: &SpectralField) -> Vec<u8> {
    let lat = field.lattice();
    let mut out = Vec::with_capacity(HEADER_LEN + lat.mode_count() * RECORD_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&lat.length().to_le_bytes());
    out.extend_from_slice(&(lat.truncation() as u32).to_le_bytes());
    out.extend_from_slice(&(lat.mode_count() as u64).to_le_bytes());
    out.extend_from_slice(&FLAG_MEAN_SQUARE.to_le_bytes());
    for (j, c) in lat.modes().iter().zip(field.coeffs()) {
        for x in j {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let end = self.pos + K;
        let s = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::Corrupt(format!("file truncated while reading {what} at byte {}", self.pos))
        })?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }
    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(what)?))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(what)?))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }
}

/// Decode onto the lattice named in the header (2/3 dealiasing).
pub fn decode(bytes: &[u8]) -> Result<SpectralField> {
    decode_with(bytes, None)
}

/// Decode onto `lattice`, which must match the header's `L` and `N`.
pub fn decode_on(bytes: &[u8], lattice: &Lattice) -> Result<SpectralField> {
    decode_with(bytes, Some(lattice))
}

fn decode_with(bytes: &[u8], lattice: Option<&Lattice>) -> Result<SpectralField> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take("magic")?;
    if &magic != MAGIC {
        return Err(Error::Corrupt(format!("bad magic {magic:?}")));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let length = r.f64("L")?;
    let n = r.u32("N")? as usize;
    let count = r.u64("count")?;
    let flags = r.u32("flags")?;
    if flags != FLAG_MEAN_SQUARE {
        return Err(Error::Corrupt(format!("unsupported flags {flags:#x}")));
    }
    let lat = match lattice {
        Some(l) => {
            if l.length() != length || l.truncation() != n {
                return Err(Error::LatticeMismatch(format!(
                    "checkpoint has L = {length}, N = {n}; expected L = {}, N = {}",
                    l.length(),
                    l.truncation()
                )));
            }
            l.clone()
        }
        None => Lattice::new(length, n, DEFAULT_DEALIAS)
            .map_err(|e| Error::Corrupt(format!("invalid lattice in header: {e}")))?,
    };
    let expected = bytes.len().saturating_sub(HEADER_LEN) / RECORD_LEN;
    if (count as usize) > expected {
        return Err(Error::Corrupt(format!(
            "file truncated: header announces {count} modes, {expected} complete records present"
        )));
    }
    let mut coeffs = vec![[Complex64::new(0.0, 0.0); 3]; lat.mode_count()];
    let mut seen = vec![false; lat.mode_count()];
    for _ in 0..count {
        let j = [r.i32("mode")?, r.i32("mode")?, r.i32("mode")?];
        let mut c = [Complex64::new(0.0, 0.0); 3];
        for z in c.iter_mut() {
            *z = Complex64::new(r.f64("coefficient")?, r.f64("coefficient")?);
        }
        if !c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Invariant(format!("mode {j:?} has a non-finite coefficient")));
        }
        if j == [0, 0, 0] {
            if c.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                return Err(Error::Invariant(format!("mode {j:?} (the mean) is nonzero")));
            }
            continue;
        }
        let (slot, conj) = lat
            .slot(j)
            .ok_or_else(|| Error::Invariant(format!("mode {j:?} lies outside the truncation N = {n}")))?;
        if seen[slot] {
            return Err(Error::Invariant(format!("mode {j:?} appears twice")));
        }
        seen[slot] = true;
        let c = if conj { c.map(|z| z.conj()) } else { c };
        let dot = c[0] * j[0] as f64 + c[1] * j[1] as f64 + c[2] * j[2] as f64;
        let jn = j.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let cn = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if dot.norm() > DIVERGENCE_TOL * jn * cn.max(f64::MIN_POSITIVE) {
            return Err(Error::Invariant(format!("mode {j:?} is not divergence-free")));
        }
        coeffs[slot] = c;
    }
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(SpectralField::from_coeffs_unchecked(&lat, coeffs))
}

pub fn save_checkpoint(field: &SpectralField, path: &Path) -> Result<()> {
    write_atomic(path, &encode(field))
}

pub fn load_checkpoint(path: &Path) -> Result<SpectralField> {
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn load_checkpoint_on(path: &Path, lattice: &Lattice) -> Result<SpectralField> {
    decode_on(&std::fs::read(path).map_err(|e| Error::io(path, e))?, lattice)
}
