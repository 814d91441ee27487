//! Binary snapshots and CSV export.
//!
//! Snapshot layout: 16-byte magic (`SELFLOW-FLD\0` padded with NULs),
//! little-endian `u32` k, nx, ny, a `u8` boundary code, then `k * nx * ny`
//! little-endian `f64` values, node-major in row order (`j * nx + i`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BcMode, DirectorField, Field, Grid, ScalarField, VectorField};
use crate::{Error, Result};

pub const MAGIC: [u8; 16] = *b"SELFLOW-FLD\0\0\0\0\0";

/// A snapshot of any supported component count.
#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Scalar(ScalarField),
    Vector(VectorField),
    Director(DirectorField),
}

impl Snapshot {
    pub fn components(&self) -> usize {
        match self {
            Snapshot::Scalar(_) => 1,
            Snapshot::Vector(_) => 2,
            Snapshot::Director(_) => 3,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Snapshot::Scalar(f) => f.grid(),
            Snapshot::Vector(f) => f.grid(),
            Snapshot::Director(f) => f.grid(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            Snapshot::Scalar(f) => Ok(f),
            s => Err(wrong_k(1, s.components())),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            Snapshot::Vector(f) => Ok(f),
            s => Err(wrong_k(2, s.components())),
        }
    }

    pub fn into_director(self) -> Result<DirectorField> {
        match self {
            Snapshot::Director(f) => Ok(f),
            s => Err(wrong_k(3, s.components())),
        }
    }
}

fn wrong_k(want: usize, got: usize) -> Error {
    Error::Format(format!("expected a {want}-component snapshot, found {got}"))
}

pub fn write_snapshot<const K: usize, W: Write>(mut w: W, f: &Field<K>) -> Result<()> {
    let g = f.grid();
    w.write_all(&MAGIC)?;
    w.write_all(&(K as u32).to_le_bytes())?;
    w.write_all(&(g.nx() as u32).to_le_bytes())?;
    w.write_all(&(g.ny() as u32).to_le_bytes())?;
    w.write_all(&[g.mode().code()])?;
    for v in f.values() {
        for c in v {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot. The format does not carry the physical extent, so the
/// caller supplies `lx`, `ly`.
pub fn read_snapshot<R: Read>(mut r: R, lx: f64, ly: f64) -> Result<Snapshot> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic).map_err(truncated)?;
    if magic != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |r: &mut R| -> Result<usize> {
        r.read_exact(&mut word).map_err(truncated)?;
        Ok(u32::from_le_bytes(word) as usize)
    };
    let k = next_u32(&mut r)?;
    let nx = next_u32(&mut r)?;
    let ny = next_u32(&mut r)?;
    let mut code = [0u8; 1];
    r.read_exact(&mut code).map_err(truncated)?;
    let mode = BcMode::from_code(code[0]).map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid::new(nx, ny, lx, ly, mode).map_err(|e| Error::Format(e.to_string()))?;
    if !(1..=3).contains(&k) {
        return Err(Error::Format(format!("unsupported component count {k}")));
    }
    let mut raw = vec![0u8; k * nx * ny * 8];
    r.read_exact(&mut raw).map_err(truncated)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format(
            "trailing bytes after snapshot payload".into(),
        ));
    }
    let vals: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(match k {
        1 => Snapshot::Scalar(Field::from_vec(
            grid,
            vals.chunks_exact(1).map(|c| [c[0]]).collect(),
        )?),
        2 => Snapshot::Vector(Field::from_vec(
            grid,
            vals.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        )?),
        _ => Snapshot::Director(Field::from_vec(
            grid,
            vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        )?),
    })
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated snapshot".into())
    } else {
        Error::Io(e)
    }
}

pub fn save_snapshot<const K: usize>(path: impl AsRef<Path>, f: &Field<K>) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), f)
}

pub fn load_snapshot(path: impl AsRef<Path>, lx: f64, ly: f64) -> Result<Snapshot> {
    read_snapshot(BufReader::new(File::open(path)?), lx, ly)
}

/// CSV with header `x,y,c0[,c1[,c2]]`, one row per node.
pub fn write_csv<const K: usize, W: Write>(mut w: W, f: &Field<K>) -> Result<()> {
    let g = f.grid();
    let mut header = String::from("x,y");
    for k in 0..K {
        header.push_str(&format!(",c{k}"));
    }
    writeln!(w, "{header}")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            write!(w, "{},{}", g.x(i), g.y(j))?;
            for c in f.at(i, j) {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}
