use rayon::prelude::*;
use serde::Serialize;

use super::local::{LocalProblem, LocalSolveReport, SolveOptions};
use super::StaggeredField;
use crate::decomposition::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hardy::hardy_bounds;
use crate::mesh::CuspMesh;
use crate::weights::{admissibility, hardy_sequence, WeightSpec};

/// `γ² 2^{12+4γ} C_ω⁸ C_H²`, the bound on the squared weighted constant.
pub fn main_bound(gamma: f64, c_omega: f64, c_h: f64) -> f64 {
    gamma * gamma * (12.0 + 4.0 * gamma).exp2() * c_omega.powi(8) * c_h * c_h
}

/// Sum of zero-extended local fields, in the given order.
pub fn assemble(mesh: &CuspMesh, locals: &[&StaggeredField]) -> Result<StaggeredField> {
    let mut u = StaggeredField::zeros(mesh);
    for v in locals {
        v.check_mesh(mesh)?;
        for (a, b) in u.values_mut().iter_mut().zip(v.values()) {
            *a += b;
        }
    }
    Ok(u)
}

/// Checks that `assembled` is the sum of `locals`, cell by cell in divergence
/// and face by face in value.
pub fn verify_assembly(mesh: &CuspMesh, locals: &[&StaggeredField], assembled: &StaggeredField) -> Result<()> {
    let sum = assemble(mesh, locals)?;
    assembled.check_mesh(mesh)?;
    let scale = sum.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(f) = (0..mesh.n_faces()).find(|&f| (sum.values()[f] - assembled.values()[f]).abs() > 1e-13 * scale) {
        return Err(Error::InvariantViolation(format!(
            "assembled field differs from the sum of local fields at face {f}"
        )));
    }
    let du = assembled.divergence(mesh);
    let divs: Vec<GridFunction> = locals.iter().map(|v| v.divergence(mesh)).collect();
    let dscale = du.max_abs().max(divs.iter().map(|d| d.max_abs()).fold(0.0, f64::max));
    for c in 0..mesh.n_cells() {
        let s: f64 = divs.iter().map(|d| d.values()[c]).sum();
        if (s - du.values()[c]).abs() > 1e-12 * dscale {
            return Err(Error::InvariantViolation(format!("div u differs from the sum of local divergences in cell {c}")));
        }
    }
    Ok(())
}

/// `∫|Du|² x₁^{2(γ-1)} ω^{-2} / ∫|f|² ω^{-2}`.
pub fn weighted_ratio(mesh: &CuspMesh, f: &GridFunction, u: &StaggeredField, weight: &WeightSpec) -> Result<f64> {
    let den = f.weighted_l2_sq(mesh, weight);
    if den == 0.0 {
        return Err(Error::Degenerate("weighted norm of f vanishes".into()));
    }
    Ok(u.weighted_energy(mesh, weight) / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalSolveReport {
    pub weight: String,
    pub gamma: f64,
    pub n_sub: usize,
    /// `‖div u - f‖ / ‖f‖` over the mesh.
    pub div_residual_rel: f64,
    pub energy: f64,
    pub global_ratio: f64,
    pub c_omega: f64,
    pub c_h: f64,
    pub main_bound: f64,
    pub local: Vec<LocalSolveReport>,
}

#[derive(Clone, Debug)]
pub struct GlobalSolution {
    pub field: StaggeredField,
    pub decomposition: Decomposition,
    pub local_fields: Vec<StaggeredField>,
    pub report: GlobalSolveReport,
}

impl GlobalSolution {
    /// Report for another weight; the field itself does not depend on `ω`.
    pub fn report_for(&self, mesh: &CuspMesh, f: &GridFunction, weight: &WeightSpec, hardy_n: usize) -> Result<GlobalSolveReport> {
        let gamma = mesh.gamma();
        let adm = admissibility(weight, 2.0, gamma, hardy_n.min(64))?;
        if !adm.integrable {
            return Err(Error::Domain(format!("{} is not square integrable on the cusp", weight.label())));
        }
        let u = hardy_sequence(weight, gamma, 2.0)?;
        let c_h = hardy_bounds(&u, &u, 2.0, hardy_n)?.upper;
        Ok(GlobalSolveReport {
            weight: weight.label(),
            global_ratio: weighted_ratio(mesh, f, &self.field, weight)?,
            c_omega: adm.c_omega,
            c_h,
            main_bound: main_bound(gamma, adm.c_omega, c_h),
            ..self.report.clone()
        })
    }
}

/// Decomposes `f`, solves every local problem and sums the local fields.
pub fn global_solve(
    mesh: &CuspMesh,
    f: &GridFunction,
    n_sub: usize,
    weight: &WeightSpec,
    opts: &SolveOptions,
    hardy_n: usize,
) -> Result<GlobalSolution> {
    let decomposition = decompose(mesh, f, n_sub)?;
    let solved: Vec<_> = (0..n_sub)
        .into_par_iter()
        .map(|i| LocalProblem::new(mesh, i)?.solve_scaled(&decomposition.pieces[i], opts, decomposition.report.l1_norm))
        .collect::<Result<_>>()?;
    let local_fields: Vec<StaggeredField> = solved.iter().map(|s| s.field.clone()).collect();
    let refs: Vec<&StaggeredField> = local_fields.iter().collect();
    let field = assemble(mesh, &refs)?;
    verify_assembly(mesh, &refs, &field)?;
    let div = field.divergence(mesh);
    let (mut num, mut den) = (0.0, 0.0);
    for ((d, fv), c) in div.values().iter().zip(f.values()).zip(mesh.cells()) {
        num += (d - fv).powi(2) * c.area;
        den += fv * fv * c.area;
    }
    let div_residual_rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    let energy = field.energy(mesh);
    let partial = GlobalSolution {
        field,
        decomposition,
        local_fields,
        report: GlobalSolveReport {
            weight: String::new(),
            gamma: mesh.gamma(),
            n_sub,
            div_residual_rel,
            energy,
            global_ratio: 0.0,
            c_omega: 0.0,
            c_h: 0.0,
            main_bound: 0.0,
            local: solved.into_iter().map(|s| s.report).collect(),
        },
    };
    let report = partial.report_for(mesh, f, weight, hardy_n)?;
    Ok(GlobalSolution { report, ..partial })
}
