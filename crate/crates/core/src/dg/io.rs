//! Binary field dumps and grid CSV/binary files.

use std::path::Path;

use super::{DGField, GridData, Mesh};
use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

const FIELD_MAGIC: &[u8; 4] = b"DGF1";
const GRID_MAGIC: &[u8; 4] = b"GRD1";
const VERSION: u32 = 1;

pub(crate) fn encode_field(field: &DGField) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(FIELD_MAGIC);
    w.u32(VERSION);
    w.u64(field.mesh.n_elements as u64);
    w.u64(field.degree as u64);
    w.f64(field.mesh.lo);
    w.f64(field.mesh.hi);
    w.f64s(&field.coeffs);
    w.buf
}

pub(crate) fn decode_field(data: &[u8]) -> Result<DGField> {
    let mut r = Reader::new(data, "field dump");
    r.expect_magic(FIELD_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            found: version,
        });
    }
    let n = r.u64()? as usize;
    let p = r.u64()? as usize;
    let lo = r.f64()?;
    let hi = r.f64()?;
    let mesh = Mesh::new(lo, hi, n)?;
    let coeffs = r.f64s(n * (p + 1))?;
    r.finish()?;
    DGField::from_coeffs(mesh, p, coeffs)
}

/// Writes `field` as: magic, version, N, p, lo, hi, then row-major
/// coefficients, all little-endian.
pub fn save_field(field: &DGField, path: &Path) -> Result<()> {
    write_file(path, &encode_field(field))
}

pub fn load_field(path: &Path) -> Result<DGField> {
    decode_field(&read_file(path)?)
}

pub fn save_grid_dump(grid: &GridData, path: &Path) -> Result<()> {
    let mut w = Writer::default();
    w.bytes(GRID_MAGIC);
    w.u32(VERSION);
    w.u64(grid.len() as u64);
    w.u64(grid.nodes_per_element as u64);
    w.f64s(&grid.x);
    w.f64s(&grid.values);
    write_file(path, &w.buf)
}

pub fn load_grid_dump(path: &Path) -> Result<GridData> {
    let data = read_file(path)?;
    let mut r = Reader::new(&data, "grid dump");
    r.expect_magic(GRID_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            found: version,
        });
    }
    let n = r.u64()? as usize;
    let nodes_per_element = r.u64()? as usize;
    let x = r.f64s(n)?;
    let values = r.f64s(n)?;
    r.finish()?;
    Ok(GridData {
        x,
        values,
        nodes_per_element,
    })
}

/// CSV with columns `x,value`.
pub fn write_grid_csv(grid: &GridData, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "value"])?;
    for (x, v) in grid.x.iter().zip(&grid.values) {
        w.write_record([format!("{x:.17e}"), format!("{v:.17e}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_grid_csv(path: &Path, nodes_per_element: usize) -> Result<GridData> {
    let mut r = csv::Reader::from_path(path)?;
    let mut x = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
        };
        x.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    Ok(GridData {
        x,
        values,
        nodes_per_element,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{eval_grid, gauss_legendre, project};

    #[test]
    fn field_dump_roundtrip_and_truncation() {
        let m = Mesh::new(-5.0, 5.0, 9).unwrap();
        let f = project(|x| x.sin(), &m, 3, &gauss_legendre(5).unwrap());
        let bytes = encode_field(&f);
        assert_eq!(bytes.len(), 4 + 4 + 8 * 4 + 8 * 9 * 4);
        assert_eq!(decode_field(&bytes).unwrap(), f);
        assert!(matches!(
            decode_field(&bytes[..bytes.len() - 3]),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn grid_files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mesh::new(0.0, 1.0, 3).unwrap();
        let f = project(|x| x * x, &m, 2, &gauss_legendre(4).unwrap());
        let g = eval_grid(&f, &gauss_legendre(4).unwrap());
        let p = dir.path().join("g.bin");
        save_grid_dump(&g, &p).unwrap();
        assert_eq!(load_grid_dump(&p).unwrap(), g);
        let c = dir.path().join("g.csv");
        write_grid_csv(&g, &c).unwrap();
        assert_eq!(read_grid_csv(&c, 4).unwrap(), g);
    }
}
