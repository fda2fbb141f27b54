use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::mesh::{CuspMesh, FaceKind};
use crate::weights::WeightSpec;

/// Normal velocity components on the faces of a [`CuspMesh`].
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredField {
    values: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(mesh: &CuspMesh) -> Self {
        Self { values: vec![0.0; mesh.n_faces()] }
    }

    pub fn from_values(mesh: &CuspMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_faces() {
            return Err(Error::Shape(format!("{} values for a mesh with {} faces", values.len(), mesh.n_faces())));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_mesh(&self, mesh: &CuspMesh) -> Result<()> {
        if self.values.len() != mesh.n_faces() {
            return Err(Error::Shape(format!("field has {} faces, mesh has {}", self.values.len(), mesh.n_faces())));
        }
        Ok(())
    }

    /// Cell averages of `div v`.
    pub fn divergence(&self, mesh: &CuspMesh) -> GridFunction {
        let vals = (0..mesh.n_cells())
            .map(|c| {
                let flux: f64 = mesh.div_row(c).iter().map(|&(f, w)| w * self.values[f]).sum();
                flux / mesh.cells()[c].area
            })
            .collect();
        GridFunction::from_values(mesh, vals).expect("one value per cell")
    }

    /// Discrete `∫ |Dv|²`.
    pub fn energy(&self, mesh: &CuspMesh) -> f64 {
        self.weighted_sum(mesh, |_| 1.0)
    }

    /// Discrete `∫ |Dv|² x₁^{2(γ-1)} ω^{-2}`.
    pub fn weighted_energy(&self, mesh: &CuspMesh, weight: &WeightSpec) -> f64 {
        let g = mesh.gamma();
        self.weighted_sum(mesh, |x| (2.0 * (g - 1.0) * x.ln() - 2.0 * weight.ln_eval(x)).exp())
    }

    fn weighted_sum(&self, mesh: &CuspMesh, rho: impl Fn(f64) -> f64) -> f64 {
        mesh.energy_terms()
            .iter()
            .map(|t| {
                let l: f64 = t.coeffs.iter().map(|&(f, c)| c * self.values[f]).sum();
                if l == 0.0 { 0.0 } else { t.weight * l * l * rho(t.x1) }
            })
            .sum()
    }

    /// Rows `kind,x1,x2,value`.
    pub fn write_csv<W: Write>(&self, mesh: &CuspMesh, writer: W) -> Result<()> {
        self.check_mesh(mesh)?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["kind", "x1", "x2", "value"])?;
        for (v, f) in self.values.iter().zip(mesh.faces()) {
            let kind = match f.kind {
                FaceKind::U => "u",
                FaceKind::V => "v",
            };
            w.write_record([kind.to_string(), f.center[0].to_string(), f.center[1].to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
