//! Splitting a zero-mean `f` into pieces `g_i` supported in `Ω_i`, each
//! with vanishing mean.
//!
//! With a partition of unity `{φ_i}` subordinate to the cover, put
//! `f_i = f φ_i`, `M_i = Σ_{k≥i} ∫ f_k` and `h_i = M_i / |B_i|`. Then
//! `g_i = f_i + h_{i+1} χ_{B_{i+1}} - h_i χ_{B_i}` (with `h_0 = h_{n} = 0`)
//! telescopes back to `f`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hardy::conjugate_exponent;
use crate::mesh::CuspMesh;
use crate::weights::WeightSpec;

/// Partition of unity on `(0, 1)` for `Ω_0, ..., Ω_{n-1}`, linear in `ln x₁`
/// on each overlap. `φ_0 = 1` on `E_0` and `φ_{n-1} = 1` below `2^{-n}`.
#[derive(Clone, Copy, Debug)]
pub struct PartitionOfUnity {
    n_sub: usize,
}

impl PartitionOfUnity {
    pub fn new(n_sub: usize) -> Result<Self> {
        if n_sub < 2 {
            return Err(Error::Domain(format!("need at least 2 subdomains, got {n_sub}")));
        }
        Ok(Self { n_sub })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Nonzero values `(i, φ_i(x₁))` at `x₁ ∈ (0, 1)`.
    pub fn values(&self, x1: f64) -> Vec<(usize, f64)> {
        let l = -x1.log2();
        let k = l.floor() as usize; // x₁ ∈ [2^{-(k+1)}, 2^{-k})
        if k == 0 {
            return vec![(0, 1.0)];
        }
        if k >= self.n_sub {
            return vec![(self.n_sub - 1, 1.0)];
        }
        // t = 1 at the right end of E_k, 0 at the left end
        let t = (k as f64 + 1.0) - l;
        vec![(k - 1, t), (k, 1.0 - t)]
    }

    pub fn value(&self, i: usize, x1: f64) -> f64 {
        self.values(x1).into_iter().find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v)
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// `g_0, ..., g_{n-1}` on the whole mesh.
    pub pieces: Vec<GridFunction>,
    /// `M_0, ..., M_{n-1}`.
    pub masses: Vec<f64>,
    /// `h_0, ..., h_n` with `h_0 = h_n = 0`.
    pub corrections: Vec<f64>,
    pub report: DecompositionReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub n_sub: usize,
    /// `max |f - Σ g_i|`.
    pub reconstruction_error: f64,
    pub max_abs_f: f64,
    /// `|∫ g_i|` for each piece.
    pub piece_means: Vec<f64>,
    /// `∫ |f|`.
    pub l1_norm: f64,
    /// Every `g_i` vanishes outside `Ω_i`.
    pub supports_contained: bool,
}

/// Relative size of `∫ f` against `∫ |f|` accepted as zero mean.
pub const MEAN_TOLERANCE: f64 = 1e-10;

pub fn decompose(mesh: &CuspMesh, f: &GridFunction, n_sub: usize) -> Result<Decomposition> {
    f.check_mesh(mesh)?;
    let pou = PartitionOfUnity::new(n_sub)?;
    if n_sub > mesh.max_subdomains() {
        return Err(Error::Domain(format!(
            "{n_sub} subdomains requested, mesh supports {}",
            mesh.max_subdomains()
        )));
    }
    let cells = mesh.cells();
    let vals = f.values();
    let tail: f64 = cells
        .iter()
        .zip(vals)
        .filter(|(c, _)| c.block > n_sub)
        .map(|(c, v)| v.abs() * c.area)
        .sum();
    if tail > 0.0 {
        return Err(Error::TailMass { mass: tail, n_sub });
    }
    let l1 = f.l1_norm(mesh);
    let mean = f.integral(mesh);
    if mean.abs() > MEAN_TOLERANCE * l1 {
        return Err(Error::NonzeroMean { mean, allowed: MEAN_TOLERANCE * l1 });
    }

    let mut pieces: Vec<Vec<f64>> = vec![vec![0.0; cells.len()]; n_sub];
    let mut local_integrals = vec![0.0; n_sub];
    for (id, (c, &v)) in cells.iter().zip(vals).enumerate() {
        if v == 0.0 {
            continue;
        }
        for (i, phi) in pou.values(c.centroid[0]) {
            let fi = v * phi;
            pieces[i][id] = fi;
            local_integrals[i] += fi * c.area;
        }
    }
    let mut masses = vec![0.0; n_sub];
    let mut acc = 0.0;
    for i in (0..n_sub).rev() {
        acc += local_integrals[i];
        masses[i] = acc;
    }
    let mut corrections = vec![0.0; n_sub + 1];
    for i in 1..n_sub {
        let area = mesh.block_area(i);
        if area <= 0.0 {
            return Err(Error::Degenerate(format!("overlap B_{i} has no cells")));
        }
        corrections[i] = masses[i] / area;
    }
    for (i, piece) in pieces.iter_mut().enumerate() {
        if corrections[i + 1] != 0.0 {
            for c in mesh.block_cells(i + 1) {
                piece[c] += corrections[i + 1];
            }
        }
        if corrections[i] != 0.0 {
            for c in mesh.block_cells(i) {
                piece[c] -= corrections[i];
            }
        }
    }
    let pieces: Vec<GridFunction> = pieces.into_iter().map(|p| GridFunction::from_values(mesh, p)).collect::<Result<_>>()?;

    let mut reconstruction_error = 0.0f64;
    for (id, &v) in vals.iter().enumerate() {
        let s: f64 = pieces.iter().map(|g| g.values()[id]).sum();
        reconstruction_error = reconstruction_error.max((s - v).abs());
    }
    let mut supports_contained = true;
    for (i, g) in pieces.iter().enumerate() {
        let inside = mesh.subdomain_cells(i)?;
        if g.values().iter().enumerate().any(|(c, &v)| v != 0.0 && !inside.contains(&c)) {
            supports_contained = false;
        }
    }
    let report = DecompositionReport {
        n_sub,
        reconstruction_error,
        max_abs_f: f.max_abs(),
        piece_means: pieces.iter().map(|g| g.integral(mesh).abs()).collect(),
        l1_norm: l1,
        supports_contained,
    };
    Ok(Decomposition { pieces, masses, corrections, report })
}

/// `(Σ_i ‖g_i ω^{-1}‖_q^q)^{1/q} / ‖f ω^{-1}‖_q`.
pub fn decomposition_constant(
    mesh: &CuspMesh,
    f: &GridFunction,
    dec: &Decomposition,
    weight: &WeightSpec,
    q: f64,
) -> Result<f64> {
    conjugate_exponent(q)?;
    let den = f.weighted_lq_pow(mesh, weight, q);
    if den == 0.0 {
        return Err(Error::Degenerate("weighted norm of f vanishes".into()));
    }
    let num: f64 = dec.pieces.iter().map(|g| g.weighted_lq_pow(mesh, weight, q)).sum();
    Ok((num / den).powf(1.0 / q))
}

/// Bound `2^{2+1/q} C_ω² C_H` on the decomposition constant.
pub fn decomposition_bound(c_omega: f64, c_h: f64, q: f64) -> f64 {
    (2.0 + 1.0 / q).exp2() * c_omega * c_omega * c_h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshConfig;

    #[test]
    fn partition_sums_to_one() {
        let pou = PartitionOfUnity::new(5).unwrap();
        for k in 1..2000 {
            let x = k as f64 / 2000.0;
            let s: f64 = pou.values(x).iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert!(PartitionOfUnity::new(1).is_err());
    }

    #[test]
    fn partition_support() {
        let pou = PartitionOfUnity::new(6).unwrap();
        for i in 0..6 {
            assert!((pou.value(i, 2f64.powf(-(i as f64) - 1.5)) - 0.5).abs() < 1e-14 || i == 5);
            let lo = 2f64.powi(-(i as i32) - 2);
            let hi = 2f64.powi(-(i as i32));
            for k in 1..500 {
                let x = k as f64 / 500.0;
                if pou.value(i, x) != 0.0 && i < 5 {
                    assert!(x > lo && x < hi, "phi_{i}({x})");
                }
            }
        }
    }

    fn mesh() -> CuspMesh {
        CuspMesh::new(MeshConfig { gamma: 2.0, blocks: 6, columns: 8, rows: 8 }).unwrap()
    }

    #[test]
    fn reconstruction() {
        let m = mesh();
        let mut f = GridFunction::from_fn(&m, |x| (9.0 * x[0]).cos() + x[1] / x[0]);
        for c in m.block_cells(5) {
            f.values_mut()[c] = 0.0;
        }
        f.remove_mean(&m);
        for c in m.block_cells(5) {
            f.values_mut()[c] = 0.0;
        }
        // restore exact zero mean on the kept blocks
        let area: f64 = (0..5).map(|k| m.block_area(k)).sum();
        let mean = f.integral(&m) / area;
        for k in 0..5 {
            for c in m.block_cells(k) {
                f.values_mut()[c] -= mean;
            }
        }
        let d = decompose(&m, &f, 4).unwrap();
        assert!(d.report.reconstruction_error <= 1e-12 * d.report.max_abs_f);
        assert!(d.report.supports_contained);
        for mu in &d.report.piece_means {
            assert!(*mu <= 1e-12 * d.report.l1_norm);
        }
    }

    #[test]
    fn preconditions() {
        let m = mesh();
        let f = GridFunction::from_fn(&m, |_| 1.0);
        assert!(matches!(decompose(&m, &f, 5), Err(Error::NonzeroMean { .. })));
        assert!(matches!(decompose(&m, &f, 4), Err(Error::TailMass { .. })));
        assert!(matches!(decompose(&m, &f, 6), Err(Error::Domain(_))));
    }
}
