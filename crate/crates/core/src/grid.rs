//! Cell-centered scalar fields on a [`CuspMesh`].
//!
//! Two on-disk formats are supported. CSV has the header
//! `i,cell_x,cell_y,value,area` with one row per cell, `i` being the block
//! index. The binary format is little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 4 | magic `HDGF` |
//! | 4 | 4 | version `u32` (= 1) |
//! | 8 | 8 | `γ` as `f64` |
//! | 16 | 12 | blocks, columns, rows as `u32` |
//! | 28 | 4 | reserved, zero |
//! | 32 | 8 | number of cells `u64` |
//! | 40 | 24 each | `block u32, col u32, row u32, pad u32, value f64` |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::CuspMesh;
use crate::weights::WeightSpec;

const MAGIC: &[u8; 4] = b"HDGF";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(mesh: &CuspMesh) -> Self {
        Self { values: vec![0.0; mesh.n_cells()] }
    }

    pub fn from_values(mesh: &CuspMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_cells() {
            return Err(Error::Shape(format!("{} values for a mesh with {} cells", values.len(), mesh.n_cells())));
        }
        Ok(Self { values })
    }

    /// Samples `f` at the cell centroids.
    pub fn from_fn(mesh: &CuspMesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self { values: mesh.cells().iter().map(|c| f(c.centroid)).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &CuspMesh) -> Result<()> {
        if self.values.len() != mesh.n_cells() {
            return Err(Error::Shape(format!(
                "grid function has {} cells, mesh has {}",
                self.values.len(),
                mesh.n_cells()
            )));
        }
        Ok(())
    }

    /// `∫ f`.
    pub fn integral(&self, mesh: &CuspMesh) -> f64 {
        self.values.iter().zip(mesh.cells()).map(|(v, c)| v * c.area).sum()
    }

    /// `∫ |f|`.
    pub fn l1_norm(&self, mesh: &CuspMesh) -> f64 {
        self.values.iter().zip(mesh.cells()).map(|(v, c)| v.abs() * c.area).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ |f|^q ω^{-q}`.
    pub fn weighted_lq_pow(&self, mesh: &CuspMesh, weight: &WeightSpec, q: f64) -> f64 {
        self.values
            .iter()
            .zip(mesh.cells())
            .filter(|(v, _)| **v != 0.0)
            .map(|(v, c)| (q * (v.abs().ln() - weight.ln_eval(c.centroid[0]))).exp() * c.area)
            .sum()
    }

    /// `∫ |f|² ω^{-2}`.
    pub fn weighted_l2_sq(&self, mesh: &CuspMesh, weight: &WeightSpec) -> f64 {
        self.weighted_lq_pow(mesh, weight, 2.0)
    }

    /// Subtracts the mean value.
    pub fn remove_mean(&mut self, mesh: &CuspMesh) {
        let area: f64 = mesh.cells().iter().map(|c| c.area).sum();
        let mean = self.integral(mesh) / area;
        self.values.iter_mut().for_each(|v| *v -= mean);
    }

    pub fn write_csv<W: Write>(&self, mesh: &CuspMesh, writer: W) -> Result<()> {
        self.check_mesh(mesh)?;
        let mut w = csv::Writer::from_writer(writer);
        for (v, c) in self.values.iter().zip(mesh.cells()) {
            w.serialize(CsvRow { i: c.block, cell_x: c.centroid[0], cell_y: c.centroid[1], value: *v, area: c.area })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads values written by [`GridFunction::write_csv`] for the same mesh.
    pub fn read_csv<R: Read>(mesh: &CuspMesh, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = Vec::with_capacity(mesh.n_cells());
        for (k, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let c = mesh.cells().get(k).ok_or_else(|| Error::Shape(format!("CSV has more than {} cells", mesh.n_cells())))?;
            if row.i != c.block || row.cell_x != c.centroid[0] || row.cell_y != c.centroid[1] {
                return Err(Error::Shape(format!("CSV row {} does not match mesh cell", k + 1)));
            }
            values.push(row.value);
        }
        Self::from_values(mesh, values)
    }

    pub fn write_binary<W: Write>(&self, mesh: &CuspMesh, mut w: W) -> Result<()> {
        self.check_mesh(mesh)?;
        let cfg = mesh.config();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&cfg.gamma.to_le_bytes())?;
        for n in [cfg.blocks, cfg.columns, cfg.rows] {
            w.write_all(&u32_of(n)?.to_le_bytes())?;
        }
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for (v, c) in self.values.iter().zip(mesh.cells()) {
            for n in [c.block, c.col, c.row, 0] {
                w.write_all(&u32_of(n)?.to_le_bytes())?;
            }
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mesh: &CuspMesh, mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Data("not a grid function file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Data(format!("unsupported grid function version {version}")));
        }
        let gamma = f64::from_le_bytes(read_array(&mut r)?);
        let dims = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        read_u32(&mut r)?;
        let cfg = mesh.config();
        if gamma != cfg.gamma || dims != [cfg.blocks as u32, cfg.columns as u32, cfg.rows as u32] {
            return Err(Error::Shape(format!("file written for gamma {gamma}, dims {dims:?}; mesh is {cfg:?}")));
        }
        let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
        if n != mesh.n_cells() {
            return Err(Error::Shape(format!("file has {n} cells, mesh has {}", mesh.n_cells())));
        }
        let mut values = Vec::with_capacity(n);
        for c in mesh.cells() {
            let idx = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
            read_u32(&mut r)?;
            if idx != [c.block as u32, c.col as u32, c.row as u32] {
                return Err(Error::Shape(format!("record {idx:?} does not match mesh cell")));
            }
            values.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        Ok(Self { values })
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    i: usize,
    cell_x: f64,
    cell_y: f64,
    value: f64,
    area: f64,
}

fn u32_of(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Data(format!("{n} does not fit the binary format")))
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}
