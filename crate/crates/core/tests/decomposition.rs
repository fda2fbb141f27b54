use hardydiv_core::decomposition::*;
use hardydiv_core::grid::GridFunction;
use hardydiv_core::mesh::{CuspMesh, MeshConfig};
use hardydiv_core::weights::{power_ch_bound, WeightSpec};
use hardydiv_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(n_sub: usize, res: usize) -> CuspMesh {
    CuspMesh::new(MeshConfig::for_subdomains(2.0, n_sub, res)).unwrap()
}

/// Random values on the given blocks, corrected to zero mean.
fn random_on(mesh: &CuspMesh, blocks: &[usize], seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = mesh
        .cells()
        .iter()
        .map(|c| if blocks.contains(&c.block) { rng.gen_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let (mut s, mut a) = (0.0, 0.0);
    for (x, c) in v.iter().zip(mesh.cells()) {
        if blocks.contains(&c.block) {
            s += x * c.area;
            a += c.area;
        }
    }
    for (x, c) in v.iter_mut().zip(mesh.cells()) {
        if blocks.contains(&c.block) {
            *x -= s / a;
        }
    }
    GridFunction::from_values(mesh, v).unwrap()
}

#[test]
fn partition_examples() {
    let pou = PartitionOfUnity::new(8).unwrap();
    for i in 1..8 {
        // the ramps are linear in ln x₁, so they cross at the geometric midpoint of E_i
        let x = 2f64.powf(-(i as f64) - 0.5);
        assert!((pou.value(i - 1, x) - 0.5).abs() < 1e-15);
        assert!((pou.value(i, x) - 0.5).abs() < 1e-15);
    }
    assert_eq!(pou.values(0.7), vec![(0, 1.0)]);
    assert_eq!(pou.value(7, 1e-5), 1.0);
    assert!(PartitionOfUnity::new(1).is_err());
}

#[test]
fn worked_identity_three_subdomains() {
    let m = mesh(3, 32);
    let f = random_on(&m, &[0, 1, 2, 3], 5);
    let d = decompose(&m, &f, 3).unwrap();
    let pou = PartitionOfUnity::new(3).unwrap();
    let fi = |i: usize, c: usize| f.values()[c] * pou.value(i, m.cells()[c].centroid[0]);
    let int = |i: usize| (0..m.n_cells()).map(|c| fi(i, c) * m.cells()[c].area).sum::<f64>();
    let h1 = (int(1) + int(2)) / m.block_area(1);
    let h2 = int(2) / m.block_area(2);
    assert!((d.corrections[1] - h1).abs() < 1e-14 && (d.corrections[2] - h2).abs() < 1e-14);
    for c in 0..m.n_cells() {
        let b = m.cells()[c].block;
        let chi = |k: usize| if b == k { 1.0 } else { 0.0 };
        let expect = [fi(0, c) + h1 * chi(1), fi(1, c) - h1 * chi(1) + h2 * chi(2), fi(2, c) - h2 * chi(2)];
        for i in 0..3 {
            assert!((d.pieces[i].values()[c] - expect[i]).abs() < 1e-13);
        }
    }
}

#[test]
fn single_subdomain_f_is_its_own_piece() {
    let m = mesh(6, 32);
    for (block, piece) in [(0, 0), (6, 5)] {
        let f = random_on(&m, &[block], 17);
        let d = decompose(&m, &f, 6).unwrap();
        for (i, g) in d.pieces.iter().enumerate() {
            // exact up to the rounding left in the mean of f
            let target = |c: usize| if i == piece { f.values()[c] } else { 0.0 };
            assert!((0..m.n_cells()).all(|c| (g.values()[c] - target(c)).abs() < 1e-14 * f.max_abs()));
        }
        let c = decomposition_constant(&m, &f, &d, &WeightSpec::unit(), 2.0).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }
}

#[test]
fn random_functions_satisfy_the_definition() {
    let m = mesh(8, 64);
    let ch = power_ch_bound(0.0, 2.0, 2.0).unwrap();
    for seed in 0..5 {
        let f = random_on(&m, &(0..=8).collect::<Vec<_>>(), seed);
        let d = decompose(&m, &f, 8).unwrap();
        let r = &d.report;
        assert!(r.reconstruction_error <= 1e-12 * r.max_abs_f);
        assert!(r.supports_contained);
        assert!(r.piece_means.iter().all(|&x| x <= 1e-10 * r.l1_norm));
        let c = decomposition_constant(&m, &f, &d, &WeightSpec::unit(), 2.0).unwrap();
        assert!(c <= decomposition_bound(1.0, ch, 2.0));
        assert!((decomposition_bound(1.0, ch, 2.0) - 2f64.powf(2.5) * 32.0 / 7.0).abs() < 1e-12);
    }
}

#[test]
fn adversarial_mass_transport() {
    let m = mesh(8, 64);
    let mut v = vec![0.0; m.n_cells()];
    let (a0, a7) = (m.block_area(0), m.block_area(8));
    for (x, c) in v.iter_mut().zip(m.cells()) {
        if c.block == 0 {
            *x = -1.0 / a0;
        } else if c.block == 8 {
            *x = 1.0 / a7;
        }
    }
    let f = GridFunction::from_values(&m, v).unwrap();
    let d = decompose(&m, &f, 8).unwrap();
    assert!(d.report.reconstruction_error <= 1e-12 * d.report.max_abs_f);
    for w in [WeightSpec::unit(), WeightSpec::power(0.5), WeightSpec::power(-0.4)] {
        let beta = match w {
            WeightSpec::Power { beta } => beta,
            _ => unreachable!(),
        };
        let c = decomposition_constant(&m, &f, &d, &w, 2.0).unwrap();
        let bound = decomposition_bound((2.0 * beta.abs()).exp2(), power_ch_bound(beta, 2.0, 2.0).unwrap(), 2.0);
        assert!(c <= bound, "{}: {c} > {bound}", w.label());
    }
}

#[test]
fn precondition_errors() {
    let m = mesh(6, 16);
    let f = random_on(&m, &[0, 1, 2, 3, 4, 5, 6], 1);
    assert!(matches!(decompose(&m, &f, 7), Err(Error::Domain(_))));
    let tail = random_on(&m, &[5, 6], 2);
    assert!(matches!(decompose(&m, &tail, 4), Err(Error::TailMass { .. })));
    let mut g = f.clone();
    g.values_mut()[0] += 1.0;
    assert!(matches!(decompose(&m, &g, 6), Err(Error::NonzeroMean { .. })));
    let other = mesh(5, 16);
    assert!(decompose(&other, &f, 5).is_err());
}

#[test]
fn grid_function_round_trips() {
    let m = mesh(4, 16);
    let f = random_on(&m, &[0, 1, 2], 3);
    let mut csv = Vec::new();
    f.write_csv(&m, &mut csv).unwrap();
    assert_eq!(GridFunction::read_csv(&m, csv.as_slice()).unwrap().values(), f.values());
    let mut bin = Vec::new();
    f.write_binary(&m, &mut bin).unwrap();
    assert_eq!(GridFunction::read_binary(&m, bin.as_slice()).unwrap().values(), f.values());
    assert!(GridFunction::read_binary(&mesh(3, 16), bin.as_slice()).is_err());
    bin[0] = b'X';
    assert!(GridFunction::read_binary(&m, bin.as_slice()).is_err());
}

proptest! {
    #[test]
    fn partition_sums_to_one(n in 2usize..20, x in 1e-8f64..1.0) {
        let v = PartitionOfUnity::new(n).unwrap().values(x);
        prop_assert!(v.len() <= 2);
        prop_assert!(v.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
        prop_assert!((v.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-15);
        // φ_i lives on Ω_i = (2^{-(i+2)}, 2^{-i}) except the last, which runs to 0
        for &(i, p) in &v {
            if p > 0.0 && i + 1 < n {
                prop_assert!(x > 2f64.powi(-(i as i32) - 2) && x < 2f64.powi(-(i as i32)) * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn decomposition_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -3.0f64..3.0) {
        let m = mesh(4, 16);
        let blocks = [0, 1, 2, 3, 4];
        let (f, g) = (random_on(&m, &blocks, s1), random_on(&m, &blocks, s2));
        let h = GridFunction::from_values(&m, f.values().iter().zip(g.values()).map(|(x, y)| x + a * y).collect()).unwrap();
        let (df, dg, dh) = (decompose(&m, &f, 4).unwrap(), decompose(&m, &g, 4).unwrap(), decompose(&m, &h, 4).unwrap());
        for i in 0..4 {
            for c in 0..m.n_cells() {
                let e = df.pieces[i].values()[c] + a * dg.pieces[i].values()[c];
                prop_assert!((dh.pieces[i].values()[c] - e).abs() < 1e-12);
            }
        }
    }
}
