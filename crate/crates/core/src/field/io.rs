//! Binary `GPTW` field files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! b"GPTW" | version: u32 | N: u32 | M_1..M_N: u32 | T: f64 | c: f64 | (re, im): f64 * prod(M)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use super::{ComplexField, FieldError, TorusGrid};

pub const MAGIC: &[u8; 4] = b"GPTW";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes {0:?}, expected \"GPTW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file is truncated: {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after the field payload")]
    TrailingBytes(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A field together with the wave speed it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: ComplexField,
    pub speed: f64,
}

pub fn write_field<W: Write>(mut w: W, field: &ComplexField, speed: f64) -> io::Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &m in grid.sizes() {
        w.write_all(&(m as u32).to_le_bytes())?;
    }
    w.write_all(&grid.period().to_le_bytes())?;
    w.write_all(&speed.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()
}

fn read_exact_or<R: Read, const K: usize>(r: &mut R, what: &'static str) -> Result<[u8; K], FormatError> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FormatError::Truncated(what),
        _ => FormatError::Io(e),
    })?;
    Ok(buf)
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldFile, FormatError> {
    let magic = read_exact_or::<_, 4>(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(read_exact_or(&mut r, "version")?);
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let dim = u32::from_le_bytes(read_exact_or(&mut r, "dimension")?) as usize;
    if !(2..=3).contains(&dim) {
        return Err(FieldError::InvalidGrid(format!("dimension {dim} in header")).into());
    }
    let mut sizes = Vec::with_capacity(dim);
    for _ in 0..dim {
        sizes.push(u32::from_le_bytes(read_exact_or(&mut r, "grid sizes")?) as usize);
    }
    let period = f64::from_le_bytes(read_exact_or(&mut r, "period")?);
    let speed = f64::from_le_bytes(read_exact_or(&mut r, "speed")?);
    let grid = TorusGrid::new(&sizes, period)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(read_exact_or(&mut r, "field values")?);
        let im = f64::from_le_bytes(read_exact_or(&mut r, "field values")?);
        values.push(Complex64::new(re, im));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FormatError::TrailingBytes(rest.len()));
    }
    Ok(FieldFile {
        field: ComplexField::new(grid, values)?,
        speed,
    })
}

pub fn save(path: impl AsRef<Path>, field: &ComplexField, speed: f64) -> io::Result<()> {
    write_field(BufWriter::new(File::create(path)?), field, speed)
}

pub fn load(path: impl AsRef<Path>) -> Result<FieldFile, FormatError> {
    read_field(BufReader::new(File::open(path)?))
}
