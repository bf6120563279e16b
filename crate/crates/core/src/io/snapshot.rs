//! Binary field snapshots and their CSV export.
//!
//! Layout, all little-endian: `b"BCPS"`, version `u32`, nx `u32`, ny `u32`,
//! time `f64`, name length `u32`, UTF-8 name, then nx·ny `f64` values with
//! y outer and x inner.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::spectral::{Grid2D, ScalarField};

pub const MAGIC: &[u8; 4] = b"BCPS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub field: ScalarField,
}

pub fn encode_snapshot(name: &str, time: f64, field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(28 + name.len() + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| IoError::Format(format!("truncated snapshot while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, IoError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(IoError::Format("not a snapshot file (bad magic)".into()));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(IoError::Format(format!("unsupported snapshot version {version}")));
    }
    let nx = c.u32("nx")? as usize;
    let ny = c.u32("ny")? as usize;
    let time = c.f64("time")?;
    let name_len = c.u32("name length")? as usize;
    let name = std::str::from_utf8(c.take(name_len, "name")?)
        .map_err(|_| IoError::Format("field name is not UTF-8".into()))?
        .to_string();
    let grid = Grid2D::new(nx, ny).map_err(|e| IoError::Format(e.to_string()))?;
    let payload = c.take(8 * grid.len(), "values")?;
    if c.pos != bytes.len() {
        return Err(IoError::Format(format!("{} trailing bytes after payload", bytes.len() - c.pos)));
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let field = ScalarField::new(&grid, values).map_err(|e| IoError::Format(e.to_string()))?;
    Ok(Snapshot { name, time, field })
}

pub fn write_snapshot(path: &Path, name: &str, time: f64, field: &ScalarField) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(|e| IoError::at(path, e))?;
    f.write_all(&encode_snapshot(name, time, field)).map_err(|e| IoError::at(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::at(path, e))?;
    decode_snapshot(&bytes)
}

/// One CSV row per y index, nx columns, full round-trip precision.
pub fn snapshot_to_csv(s: &Snapshot) -> String {
    let g = s.field.grid();
    let mut out = String::with_capacity(g.len() * 24);
    for row in s.field.values().chunks(g.nx()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let g = Grid2D::new(8, 4).unwrap();
        ScalarField::from_fn(&g, |x, y| (x + 2.0 * y).sin() + 1e-300)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = sample();
        let bytes = encode_snapshot("phi", 0.125, &f);
        let s = decode_snapshot(&bytes).unwrap();
        assert_eq!(s.name, "phi");
        assert_eq!(s.time.to_bits(), 0.125f64.to_bits());
        assert!(s.field.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 4 + 3 + 8 * 32);
    }

    #[test]
    fn rejects_damaged_files() {
        let bytes = encode_snapshot("phi", 1.0, &sample());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(&bad).is_err());
        assert!(decode_snapshot(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_snapshot(&long).is_err());
        let mut v2 = bytes;
        v2[4] = 2;
        assert!(decode_snapshot(&v2).is_err());
    }

    #[test]
    fn csv_has_one_row_per_y() {
        let s = Snapshot {
            name: "phi".into(),
            time: 0.0,
            field: sample(),
        };
        let csv = snapshot_to_csv(&s);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().all(|l| l.split(',').count() == 8));
        let first: f64 = csv.lines().next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(first, s.field.values()[1]);
    }
}
