//! Binary field snapshots.
//!
//! Layout (little-endian): `b"OSGDSNAP"`, `u32` version, 4 reserved bytes,
//! `u64` N, `f64` L, `u32` name length, name bytes (UTF-8), then `N²` `f64`
//! samples in storage order. A `.meta.txt` sidecar records the multiplier.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Grid, SpectralField};
use crate::error::{Error, Result};
use crate::multiplier::Multiplier;

pub const MAGIC: &[u8; 8] = b"OSGDSNAP";
pub const VERSION: u32 = 1;

pub fn encode(field: &SpectralField, name: &str) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(40 + name.len() + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < k {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(SpectralField, String)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    r.take(4)?;
    let n = u64::from_le_bytes(r.array()?);
    let length = f64::from_le_bytes(r.array()?);
    let n = usize::try_from(n).map_err(|_| Error::Format("N does not fit in memory".into()))?;
    let grid = Grid::new(n, length).map_err(|e| Error::Format(e.to_string()))?;
    let name_len = u32::from_le_bytes(r.array()?) as usize;
    let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| Error::Format("name is not UTF-8".into()))?;
    let data = r.take(8 * grid.len())?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((SpectralField::from_values(grid, values)?, name))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.txt");
    PathBuf::from(s)
}

pub fn sidecar_text(field: &SpectralField, name: &str, m: &Multiplier, t: f64) -> String {
    let g = field.grid();
    format!(
        "field = {name}\nt = {t:e}\nN = {}\nL = {:e}\ndomain = periodic torus\nmultiplier = {}\nclamp_floor = {:e}\nmultiplier_json = {}\n",
        g.n(),
        g.length(),
        m.label(),
        m.clamp_floor,
        serde_json::to_string(m).unwrap_or_default(),
    )
}

/// Write the snapshot and its sidecar.
pub fn write_snapshot(path: &Path, field: &SpectralField, name: &str, m: &Multiplier, t: f64) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field, name))?;
    fs::write(sidecar_path(path), sidecar_text(field, name, m, t))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, String)> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(16, 3.5).unwrap();
        let f = SpectralField::from_fn(g, |x, y| (x * 1.3).sin() * y.exp() + 1e-300);
        let bytes = encode(&f, "omega");
        assert_eq!(&bytes[..8], MAGIC);
        let (back, name) = decode(&bytes).unwrap();
        assert_eq!(name, "omega");
        assert_eq!(back.grid(), f.grid());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let g = Grid::periodic(16).unwrap();
        let bytes = encode(&SpectralField::zeros(g), "phi");
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode(&long).is_err());
    }

    #[test]
    fn files_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.snap");
        let g = Grid::periodic(16).unwrap();
        let f = SpectralField::from_fn(g, |x, _| x.cos());
        write_snapshot(&p, &f, "omega", &Multiplier::classical(), 0.5).unwrap();
        let (back, _) = read_snapshot(&p).unwrap();
        assert_eq!(back.values(), f.values());
        let meta = fs::read_to_string(sidecar_path(&p)).unwrap();
        assert!(meta.contains("multiplier = constant(1)"));
    }
}
