use std::ops::Range;

use serde::Serialize;

use super::sparse::{CsrMatrix, EnvelopeCholesky};
use super::StaggeredField;
use crate::decomposition::MEAN_TOLERANCE;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::mesh::{CuspMesh, FaceKind};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
pub struct SolveOptions {
    /// Relative `L²` tolerance on the divergence residual.
    pub tol: f64,
    /// Iteration cap of the outer solve; scaled with the problem size when `None`.
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: None }
    }
}

/// The minimum-energy problem `min ∫|Dv|²` subject to `div v = g` on `Ω_i`,
/// `v = 0` on `∂Ω_i`, with the energy matrix factored once.
///
/// The constraint is eliminated through the Schur complement `B K⁻¹ Bᵀ` on
/// the cell multipliers, which is solved by conjugate gradients
/// preconditioned with the inverse cell areas.
#[derive(Debug)]
pub struct LocalProblem<'m> {
    mesh: &'m CuspMesh,
    subdomain: usize,
    cells: Range<usize>,
    faces: Vec<usize>,
    div: CsrMatrix,
    areas: Vec<f64>,
    chol: EnvelopeCholesky,
}

impl<'m> LocalProblem<'m> {
    pub fn new(mesh: &'m CuspMesh, subdomain: usize) -> Result<Self> {
        let cells = mesh.subdomain_cells(subdomain)?;
        let inside = |c: Option<usize>| c.is_some_and(|c| cells.contains(&c));
        let mut faces: Vec<usize> = (0..mesh.n_faces())
            .filter(|&f| {
                let face = &mesh.faces()[f];
                inside(face.cells[0]) && inside(face.cells[1])
            })
            .collect();
        if faces.is_empty() {
            return Err(Error::Degenerate(format!("subdomain {subdomain} has no interior faces")));
        }
        // U before V, each column by column: keeps the envelope narrow
        faces.sort_by(|&a, &b| {
            let (fa, fb) = (&mesh.faces()[a], &mesh.faces()[b]);
            let ka = matches!(fa.kind, FaceKind::V);
            let kb = matches!(fb.kind, FaceKind::V);
            ka.cmp(&kb)
                .then(fa.center[0].total_cmp(&fb.center[0]))
                .then(fa.center[1].total_cmp(&fb.center[1]))
        });
        let mut local = vec![NONE; mesh.n_faces()];
        for (k, &f) in faces.iter().enumerate() {
            local[f] = k;
        }
        let mut kt = Vec::new();
        for t in mesh.energy_terms() {
            let l: Vec<(usize, f64)> =
                t.coeffs.iter().filter(|(f, _)| local[*f] != NONE).map(|&(f, c)| (local[f], c)).collect();
            for &(a, ca) in &l {
                for &(b, cb) in &l {
                    kt.push((a, b, t.weight * ca * cb));
                }
            }
        }
        let k = CsrMatrix::from_triplets(faces.len(), faces.len(), kt);
        let chol = EnvelopeCholesky::factor(&k)?;
        let mut bt = Vec::new();
        for (r, c) in cells.clone().enumerate() {
            for &(f, w) in mesh.div_row(c) {
                if local[f] != NONE {
                    bt.push((r, local[f], w));
                }
            }
        }
        let div = CsrMatrix::from_triplets(cells.len(), faces.len(), bt);
        let areas = cells.clone().map(|c| mesh.cells()[c].area).collect();
        Ok(Self { mesh, subdomain, cells, faces, div, areas, chol })
    }

    pub fn subdomain(&self) -> usize {
        self.subdomain
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Global ids of the faces where the solution may be nonzero.
    pub fn active_faces(&self) -> &[usize] {
        &self.faces
    }

    /// `w = K⁻¹ Bᵀ λ` and `Bw`.
    fn apply_schur(&self, lambda: &[f64], w: &mut [f64], out: &mut [f64]) {
        self.div.mul_transpose(lambda, w);
        self.chol.solve_in_place(w);
        self.div.mul(w, out);
    }

    pub fn solve(&self, g: &GridFunction, opts: &SolveOptions) -> Result<LocalSolution> {
        self.solve_scaled(g, opts, 0.0)
    }

    /// As `solve`, with the mean of `g` judged against `max(‖g‖₁, l1_scale)`.
    /// Pieces of a decomposition can be pure rounding residue, whose mean is
    /// only small relative to the function that was decomposed.
    pub(crate) fn solve_scaled(&self, g: &GridFunction, opts: &SolveOptions, l1_scale: f64) -> Result<LocalSolution> {
        let mesh = self.mesh;
        g.check_mesh(mesh)?;
        if let Some(c) = (0..mesh.n_cells()).find(|&c| g.values()[c] != 0.0 && !self.cells.contains(&c)) {
            return Err(Error::Precondition(format!(
                "right-hand side is nonzero in cell {c}, outside subdomain {}",
                self.subdomain
            )));
        }
        let nc = self.n_cells();
        let b0: Vec<f64> = self.cells.clone().zip(&self.areas).map(|(c, a)| g.values()[c] * a).collect();
        let total: f64 = b0.iter().sum();
        let abs: f64 = b0.iter().map(|v| v.abs()).sum::<f64>().max(l1_scale);
        if total.abs() > MEAN_TOLERANCE * abs {
            return Err(Error::NonzeroMean { mean: total, allowed: MEAN_TOLERANCE * abs });
        }
        let area: f64 = self.areas.iter().sum();
        let b: Vec<f64> = b0.iter().zip(&self.areas).map(|(v, a)| v - a * total / area).collect();
        let m_norm = |r: &[f64]| r.iter().zip(&self.areas).map(|(v, a)| v * v / a).sum::<f64>().sqrt();
        let norm0 = m_norm(&b0);
        let g_l2: f64 = self.cells.clone().zip(&self.areas).map(|(c, a)| g.values()[c].powi(2) * a).sum::<f64>().sqrt();
        let mut v = vec![0.0; self.n_faces()];
        let mut history = Vec::new();
        let mut iterations = 0;
        if norm0 > 0.0 {
            let max_it = opts.max_iterations.unwrap_or((20 * nc).max(5000));
            let mut w = vec![0.0; self.n_faces()];
            let mut q = vec![0.0; nc];
            let mut r = b.clone();
            let mut z: Vec<f64> = r.iter().zip(&self.areas).map(|(x, a)| x / a).collect();
            let mut p = z.clone();
            let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let mut converged = false;
            while iterations < max_it {
                iterations += 1;
                self.apply_schur(&p, &mut w, &mut q);
                let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
                if !(pq > 0.0) {
                    break;
                }
                let alpha = rz / pq;
                for (vi, wi) in v.iter_mut().zip(&w) {
                    *vi += alpha * wi;
                }
                for (ri, qi) in r.iter_mut().zip(&q) {
                    *ri -= alpha * qi;
                }
                let mut rel = m_norm(&r) / norm0;
                let check = rel <= opts.tol || iterations % 50 == 0;
                if check {
                    // replace the recursive residual by the true one
                    self.div.mul(&v, &mut q);
                    for ((ri, bi), qi) in r.iter_mut().zip(&b).zip(&q) {
                        *ri = bi - qi;
                    }
                    rel = m_norm(&r) / norm0;
                }
                history.push(rel);
                for ((zi, ri), a) in z.iter_mut().zip(&r).zip(&self.areas) {
                    *zi = ri / a;
                }
                let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                if rel <= opts.tol {
                    converged = true;
                    break;
                }
                let beta = rz_new / rz;
                for (pi, zi) in p.iter_mut().zip(&z) {
                    *pi = zi + beta * *pi;
                }
                rz = rz_new;
            }
            if !converged {
                let residual = history.last().cloned().unwrap_or(1.0);
                return Err(Error::Convergence { iterations, residual, history });
            }
        }
        let mut field = StaggeredField::zeros(mesh);
        for (&f, &x) in self.faces.iter().zip(&v) {
            field.values_mut()[f] = x;
        }
        let mut bv = vec![0.0; nc];
        self.div.mul(&v, &mut bv);
        let res: Vec<f64> = bv.iter().zip(&b0).map(|(a, b)| a - b).collect();
        let div_residual_rel = if norm0 > 0.0 { m_norm(&res) / norm0 } else { 0.0 };
        let energy = field.energy(mesh);
        let cert = mesh.domain().star_shape_cert(self.subdomain);
        let report = LocalSolveReport {
            subdomain: self.subdomain,
            cells: nc,
            faces: self.n_faces(),
            iterations,
            div_residual_rel,
            energy,
            g_l2,
            local_ratio: if g_l2 > 0.0 { energy.sqrt() / g_l2 } else { 0.0 },
            cd_bound: cert.divergence_constant(),
        };
        Ok(LocalSolution { field, report, history })
    }
}

#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub field: StaggeredField,
    pub report: LocalSolveReport,
    /// Relative residual after each outer iteration.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalSolveReport {
    pub subdomain: usize,
    pub cells: usize,
    pub faces: usize,
    pub iterations: usize,
    /// `‖div v - g‖ / ‖g‖` in `L²(Ω_i)`.
    pub div_residual_rel: f64,
    /// `∫ |Dv|²`.
    pub energy: f64,
    pub g_l2: f64,
    /// `‖Dv‖ / ‖g‖`.
    pub local_ratio: f64,
    /// `2R/r` of the star-shape certificate.
    pub cd_bound: f64,
}

/// Builds the problem on `Ω_i` and solves it once.
pub fn local_solve(mesh: &CuspMesh, subdomain: usize, g: &GridFunction, opts: &SolveOptions) -> Result<LocalSolution> {
    LocalProblem::new(mesh, subdomain)?.solve(g, opts)
}
