use hardydiv_core::decomposition::decompose;
use hardydiv_core::grid::GridFunction;
use hardydiv_core::mesh::{CuspMesh, FaceKind, MeshConfig};
use hardydiv_core::solver::sparse::{CsrMatrix, EnvelopeCholesky};
use hardydiv_core::solver::*;
use hardydiv_core::weights::WeightSpec;
use hardydiv_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(gamma: f64, n_sub: usize, res: usize) -> CuspMesh {
    CuspMesh::new(MeshConfig::for_subdomains(gamma, n_sub, res)).unwrap()
}

/// Random zero-mean values on the cells of Ω_i.
fn random_rhs(mesh: &CuspMesh, i: usize, seed: u64) -> GridFunction {
    let cells = mesh.subdomain_cells(i).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; mesh.n_cells()];
    for c in cells.clone() {
        v[c] = rng.gen_range(-1.0..1.0);
    }
    let s: f64 = cells.clone().map(|c| v[c] * mesh.cells()[c].area).sum();
    let a: f64 = cells.clone().map(|c| mesh.cells()[c].area).sum();
    for c in cells {
        v[c] -= s / a;
    }
    GridFunction::from_values(mesh, v).unwrap()
}

/// Field with the given face values on the active faces of `p`, zero elsewhere.
fn field_on(mesh: &CuspMesh, p: &LocalProblem, mut f: impl FnMut(FaceKind, [f64; 2]) -> f64) -> StaggeredField {
    let mut w = StaggeredField::zeros(mesh);
    for &k in p.active_faces() {
        let face = &mesh.faces()[k];
        w.values_mut()[k] = f(face.kind, face.center);
    }
    w
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 { 0.0 } else { (s * (1.0 - s)).powi(2) }
}

#[test]
fn zero_data_gives_zero_field() {
    let m = mesh(2.0, 4, 32);
    let s = local_solve(&m, 1, &GridFunction::zeros(&m), &SolveOptions::default()).unwrap();
    assert!(s.field.values().iter().all(|&v| v == 0.0));
    assert_eq!(s.report.energy, 0.0);
}

#[test]
fn solve_on_omega_2() {
    let m = mesh(2.0, 4, 64);
    let p = LocalProblem::new(&m, 2).unwrap();
    let active: std::collections::HashSet<usize> = p.active_faces().iter().copied().collect();
    for seed in 0..4 {
        let g = random_rhs(&m, 2, seed);
        let s = p.solve(&g, &SolveOptions::default()).unwrap();
        assert!(s.report.div_residual_rel <= 1e-8);
        assert!(s.report.local_ratio <= s.report.cd_bound);
        for (k, &v) in s.field.values().iter().enumerate() {
            if !active.contains(&k) {
                assert_eq!(v, 0.0, "trace nonzero at face {k}");
            }
        }
        // divergence checked independently cell by cell
        let d = s.field.divergence(&m);
        let num: f64 = (0..m.n_cells()).map(|c| (d.values()[c] - g.values()[c]).powi(2) * m.cells()[c].area).sum();
        let den: f64 = (0..m.n_cells()).map(|c| g.values()[c].powi(2) * m.cells()[c].area).sum();
        assert!((num / den).sqrt() <= 1e-8);
    }
}

#[test]
fn minimal_energy_among_feasible_fields() {
    let m = mesh(2.0, 4, 64);
    let p = LocalProblem::new(&m, 2).unwrap();
    let (a, b) = (2f64.powi(-4), 2f64.powi(-2));
    let local = |x: [f64; 2]| ((x[0] - a) / (b - a), x[1] / x[0].powi(2));
    let smooth = field_on(&m, &p, |k, x| {
        let (s, t) = local(x);
        let base = bump(s) * bump(t);
        if k == FaceKind::U { base * (1.0 + s) } else { -base * t }
    });
    let wavy = field_on(&m, &p, |k, x| {
        let (s, t) = local(x);
        let phase = if k == FaceKind::U { 0.0 } else { 1.0 };
        (9.0 * s + phase).sin() * (7.0 * t).cos() * bump(s).sqrt() * bump(t).sqrt()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random = field_on(&m, &p, |_, _| rng.gen_range(-1.0..1.0));
    let opts = SolveOptions::default();
    for (name, w) in [("smooth", &smooth), ("wavy", &wavy), ("random", &random)] {
        let g = w.divergence(&m);
        let s = p.solve(&g, &opts).unwrap();
        let (ev, ew) = (s.field.energy(&m), w.energy(&m));
        assert!(ev <= ew * (1.0 + 10.0 * opts.tol), "{name}: {ev} > {ew}");
        // w - v lies in the kernel of div, so the minimizer must beat v ± εz
        let z: Vec<f64> = w.values().iter().zip(s.field.values()).map(|(x, y)| x - y).collect();
        for eps in [1e-2, -1e-2] {
            let trial = StaggeredField::from_values(&m, s.field.values().iter().zip(&z).map(|(v, z)| v + eps * z).collect()).unwrap();
            assert!(ev <= trial.energy(&m) * (1.0 + 1e-9), "{name} eps={eps}");
        }
    }
}

#[test]
fn solve_errors() {
    let m = mesh(2.0, 4, 32);
    let g = random_rhs(&m, 0, 1);
    assert!(matches!(local_solve(&m, 2, &g, &SolveOptions::default()), Err(Error::Precondition(_))));
    let mut h = random_rhs(&m, 1, 1);
    let c = m.subdomain_cells(1).unwrap().start;
    h.values_mut()[c] += 1.0;
    assert!(matches!(local_solve(&m, 1, &h, &SolveOptions::default()), Err(Error::NonzeroMean { .. })));
    let tight = SolveOptions { tol: 1e-14, max_iterations: Some(3) };
    match local_solve(&m, 1, &random_rhs(&m, 1, 2), &tight) {
        Err(Error::Convergence { iterations, history, .. }) => {
            assert_eq!(iterations, 3);
            assert_eq!(history.len(), 3);
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
    assert!(LocalProblem::new(&m, 4).is_err());
}

#[test]
fn single_subdomain_global_equals_local() {
    let m = mesh(2.0, 5, 32);
    let opts = SolveOptions::default();
    for (block, sub) in [(0usize, 0usize), (5, 4)] {
        let mut v = vec![0.0; m.n_cells()];
        let mut rng = ChaCha8Rng::seed_from_u64(block as u64);
        for c in m.block_cells(block) {
            v[c] = rng.gen_range(-1.0..1.0);
        }
        let mut f = GridFunction::from_values(&m, v).unwrap();
        // remove the mean on the block only
        let r = m.block_cells(block);
        let mean: f64 = r.clone().map(|c| f.values()[c] * m.cells()[c].area).sum::<f64>() / m.block_area(block);
        for c in r {
            f.values_mut()[c] -= mean;
        }
        let g = global_solve(&m, &f, 5, &WeightSpec::unit(), &opts, 1000).unwrap();
        let dec = decompose(&m, &f, 5).unwrap();
        let l = local_solve(&m, sub, &dec.pieces[sub], &opts).unwrap();
        let scale = l.field.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (x, y) in g.field.values().iter().zip(l.field.values()) {
            assert!((x - y).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn assembly_is_checked() {
    let m = mesh(2.0, 3, 16);
    let mut v = vec![0.0; m.n_cells()];
    for c in m.block_cells(0) {
        v[c] = if m.cells()[c].col % 2 == 0 { 1.0 } else { -1.0 };
    }
    for c in m.block_cells(3) {
        v[c] = 0.5;
    }
    let mut f = GridFunction::from_values(&m, v).unwrap();
    f.remove_mean(&m);
    let s = global_solve(&m, &f, 3, &WeightSpec::unit(), &SolveOptions::default(), 1000).unwrap();
    let refs: Vec<&StaggeredField> = s.local_fields.iter().collect();
    verify_assembly(&m, &refs, &s.field).unwrap();
    // a single local field written over the sum is caught
    let overwritten = s.local_fields[1].clone();
    assert!(matches!(verify_assembly(&m, &refs, &overwritten), Err(Error::InvariantViolation(_))));
    let mut bumped = s.field.clone();
    let k = bumped.values().iter().position(|v| *v != 0.0).unwrap();
    bumped.values_mut()[k] *= 1.5;
    assert!(verify_assembly(&m, &refs, &bumped).is_err());
}

#[test]
fn convex_global_estimate() {
    let m = mesh(1.0, 6, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut v: Vec<f64> = m.cells().iter().map(|c| if c.block <= 6 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
    let (s, a): (f64, f64) = m.cells().iter().zip(&v).map(|(c, x)| (x * c.area, c.area)).fold((0.0, 0.0), |p, q| (p.0 + q.0, p.1 + q.1));
    v.iter_mut().for_each(|x| *x -= s / a);
    let f = GridFunction::from_values(&m, v).unwrap();
    let sol = global_solve(&m, &f, 6, &WeightSpec::unit(), &SolveOptions::default(), 10_000).unwrap();
    let r = &sol.report;
    assert!(r.div_residual_rel <= 1e-8);
    assert!((r.main_bound - 65536.0 * r.c_h * r.c_h).abs() < 1e-9 * r.main_bound);
    assert!(r.global_ratio <= r.main_bound);
    for l in &r.local {
        assert!(l.local_ratio <= l.cd_bound);
    }
}

#[test]
fn weighted_norms() {
    // ∫ x₁² · x₁² over Ω for γ = 2 is ∫₀¹ x₁⁶ dx₁
    let m = CuspMesh::new(MeshConfig { gamma: 2.0, blocks: 12, columns: 1024, rows: 16 }).unwrap();
    let f = GridFunction::from_fn(&m, |x| x[0]);
    let n = f.weighted_l2_sq(&m, &WeightSpec::power(-1.0));
    assert!((n - 1.0 / 7.0).abs() < 1e-6, "{n}");

    let m = mesh(1.0, 3, 16);
    let f = GridFunction::from_fn(&m, |x| x[0] - 2.0 * x[1]);
    let direct: f64 = m.cells().iter().zip(f.values()).map(|(c, v)| v * v * c.area).sum();
    assert!((f.weighted_l2_sq(&m, &WeightSpec::unit()) - direct).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = StaggeredField::from_values(&m, (0..m.n_faces()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    assert!((u.weighted_energy(&m, &WeightSpec::unit()) - u.energy(&m)).abs() < 1e-12 * u.energy(&m));
    assert_eq!(StaggeredField::zeros(&m).energy(&m), 0.0);
    let u2 = StaggeredField::from_values(&m, u.values().iter().map(|v| 3.0 * v).collect()).unwrap();
    assert!((u2.energy(&m) - 9.0 * u.energy(&m)).abs() < 1e-12 * u2.energy(&m));
}

#[test]
fn envelope_cholesky_against_dense_elimination() {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 4.0 + rng.gen::<f64>()));
        for j in [i + 1, i + 4] {
            if j < n {
                let v = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
    }
    let a = CsrMatrix::from_triplets(n, n, t);
    let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let mut x = b.clone();
    EnvelopeCholesky::factor(&a).unwrap().solve_in_place(&mut x);
    // Gaussian elimination on the dense copy
    let mut d = vec![vec![0.0; n + 1]; n];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in a.row(i) {
            row[j] = v;
        }
        row[n] = b[i];
    }
    for k in 0..n {
        for i in k + 1..n {
            let l = d[i][k] / d[k][k];
            for j in k..=n {
                d[i][j] -= l * d[k][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        y[i] = (d[i][n] - (i + 1..n).map(|j| d[i][j] * y[j]).sum::<f64>()) / d[i][i];
    }
    for (p, q) in x.iter().zip(&y) {
        assert!((p - q).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solve_is_linear(s1 in 0u64..100, s2 in 0u64..100, a in -2.0f64..2.0) {
        let m = mesh(2.0, 3, 16);
        let p = LocalProblem::new(&m, 1).unwrap();
        let opts = SolveOptions { tol: 1e-13, max_iterations: None };
        let (g1, g2) = (random_rhs(&m, 1, s1), random_rhs(&m, 1, s2));
        let g = GridFunction::from_values(&m, g1.values().iter().zip(g2.values()).map(|(x, y)| x + a * y).collect()).unwrap();
        let (v1, v2, v) = (p.solve(&g1, &opts).unwrap(), p.solve(&g2, &opts).unwrap(), p.solve(&g, &opts).unwrap());
        let scale = v.field.values().iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        for k in 0..m.n_faces() {
            let e = v1.field.values()[k] + a * v2.field.values()[k];
            prop_assert!((v.field.values()[k] - e).abs() <= 1e-8 * scale.max(1.0));
        }
    }
}
