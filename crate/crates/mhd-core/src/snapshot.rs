//! Field snapshot binary format.
//!
//! Layout: magic "MHDF", u32 version, three u32 axis sizes, three f64 axis
//! lengths, f64 time stamp, u32 field count, then per field a u32 name
//! length, the UTF-8 name, and row-major little-endian f64 values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{MhdError, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"MHDF";
pub const FORMAT_VERSION: u32 = 1;

/// A named-field snapshot at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub time: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn new(grid: Grid, time: f64) -> Self {
        Self {
            grid,
            time,
            fields: Vec::new(),
        }
    }

    pub fn push_scalar(&mut self, name: &str, f: &ScalarField) {
        assert_eq!(f.grid(), &self.grid, "snapshot grid mismatch");
        self.fields.push((name.to_string(), f.values().to_vec()));
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn scalar_field(&self, name: &str) -> Result<ScalarField> {
        let values = self
            .field(name)
            .ok_or_else(|| MhdError::SnapshotFormat(format!("missing field '{name}'")))?;
        ScalarField::from_values(&self.grid, values.to_vec())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let dims = self.grid.dims();
        for d in dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for l in self.grid.lengths() {
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&(self.fields.len() as u32).to_le_bytes())?;
        for (name, values) in &self.fields {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(MhdError::SnapshotFormat("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(MhdError::SnapshotFormat(format!(
                "unsupported format version {version}"
            )));
        }
        let dims = [
            read_u32(&mut r)? as usize,
            read_u32(&mut r)? as usize,
            read_u32(&mut r)? as usize,
        ];
        let lengths = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
        let grid = Grid::new(dims, lengths)?;
        let time = read_f64(&mut r)?;
        let count = read_u32(&mut r)? as usize;
        let mut fields = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|_| MhdError::SnapshotFormat("field name is not UTF-8".into()))?;
            let mut values = vec![0.0f64; grid.len()];
            for v in values.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            fields.push((name, values));
        }
        Ok(Self { grid, time, fields })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        use rand::{Rng, SeedableRng};
        let g = Grid::new([4, 5, 6], [1.0, 2.5, std::f64::consts::TAU]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f =
            ScalarField::from_values(&g, (0..g.len()).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .unwrap();
        let mut snap = Snapshot::new(g.clone(), 0.25);
        snap.push_scalar("rho", &f);
        snap.push_scalar("ux", &f.scale(-3.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.mhdf");
        snap.write(&path).unwrap();
        let back = Snapshot::read(&path).unwrap();
        assert_eq!(snap, back);
        // bit-exact value check
        for ((_, a), (_, b)) in snap.fields.iter().zip(&back.fields) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.mhdf");
        std::fs::write(&path, b"NOPEimmediately wrong").unwrap();
        assert!(matches!(
            Snapshot::read(&path),
            Err(MhdError::SnapshotFormat(_))
        ));
    }
}
