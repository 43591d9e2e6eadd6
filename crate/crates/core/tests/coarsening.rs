use cwm_core::coarsening::*;
use cwm_core::matching::*;
use cwm_core::problems::*;
use cwm_core::quality::{mu_global, DProjector, EigOptions};
use cwm_core::rng::Stream;
use cwm_core::sparse::*;
use proptest::prelude::*;

fn field(kind: u8, seed: u64) -> CoefficientField {
    match kind % 5 {
        0 => CoefficientField::Constant,
        1 => CoefficientField::Anisotropic { eps: 100.0, axis: Axis::Y },
        2 => CoefficientField::Jump,
        3 => CoefficientField::Random { seed },
        _ => CoefficientField::Anisotropic { eps: 0.01, axis: Axis::X },
    }
}

fn matcher(k: u8) -> Matcher {
    [Matcher::Exact, Matcher::Suitor, Matcher::Preis, Matcher::Auction { eps: 1e-2 }][k as usize % 4]
}

fn matching_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Matching {
    let mut partner = vec![UNMATCHED; n];
    for &(i, j) in pairs {
        partner[i] = j;
        partner[j] = i;
    }
    Matching { partner, product_log: 0.0 }
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn aggregates_from_small_matchings() {
    let a = build_aggregates(&Matching::empty(3));
    assert_eq!(a.aggregates, vec![vec![0], vec![1], vec![2]]);
    assert_eq!((a.n_pairs, a.n_singletons), (0, 3));
    let a = build_aggregates(&matching_from_pairs(4, &[(2, 3), (0, 1)]));
    assert_eq!(a.aggregates, vec![vec![0, 1], vec![2, 3]]);
    assert_eq!((a.n_pairs, a.n_singletons), (2, 0));
    let a = build_aggregates(&matching_from_pairs(3, &[(0, 1)]));
    assert_eq!(a.aggregates, vec![vec![0, 1], vec![2]]);
    assert!(a.is_partition());
}

#[test]
fn symmetric_pair_columns() {
    let agg = build_aggregates(&matching_from_pairs(2, &[(0, 1)]));
    let d = DiagonalMatrix::new(vec![4.0, 4.0]).unwrap();
    let (p, f) = build_prolongator(&agg, &[1.0, 1.0], &d).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert_close(p.p.get(0, 0), s, 1e-15);
    assert_close(p.p.get(1, 0), s, 1e-15);
    assert_close(f.p_f.get(0, 0), -s, 1e-15);
    assert_close(f.p_f.get(1, 0), s, 1e-15);
    assert_eq!(p.column_kind, vec![ColumnKind::Pair]);
}

#[test]
fn negative_singleton_column() {
    let agg = build_aggregates(&Matching::empty(1));
    let d = DiagonalMatrix::new(vec![3.0]).unwrap();
    let (p, f) = build_prolongator(&agg, &[-2.0], &d).unwrap();
    assert_eq!(p.p.get(0, 0), -1.0);
    assert_eq!(p.coarse_weight, vec![2.0]);
    assert_eq!(f.p_f.cols(), 0);
}

#[test]
fn unequal_pair_columns() {
    let agg = build_aggregates(&matching_from_pairs(2, &[(0, 1)]));
    let d = DiagonalMatrix::new(vec![2.0, 8.0]).unwrap();
    let (p, f) = build_prolongator(&agg, &[1.0, 2.0], &d).unwrap();
    let r5 = 5f64.sqrt();
    assert_close(p.p.get(0, 0), 1.0 / r5, 1e-15);
    assert_close(p.p.get(1, 0), 2.0 / r5, 1e-15);
    assert_close(p.coarse_weight[0], r5, 1e-15);
    let (f0, f1) = (f.p_f.get(0, 0), f.p_f.get(1, 0));
    assert_close(f0 * f0 + f1 * f1, 1.0, 1e-15);
    assert_close(p.p.get(0, 0) * 2.0 * f0 + p.p.get(1, 0) * 8.0 * f1, 0.0, 1e-15);
    let nf = (1.0f64 + 1.0 / 64.0).sqrt();
    assert_close(f0, -1.0 / nf, 1e-15);
    assert_close(f1, 0.125 / nf, 1e-15);
}

#[test]
fn zero_pair_becomes_two_singletons() {
    let agg = build_aggregates(&matching_from_pairs(3, &[(0, 2)]));
    let d = DiagonalMatrix::new(vec![1.0; 3]).unwrap();
    let (p, f) = build_prolongator(&agg, &[0.0, 5.0, 1e-301], &d).unwrap();
    assert_eq!(p.p.cols(), 3);
    assert_eq!(f.p_f.cols(), 0);
    assert_eq!(p.column_kind, vec![ColumnKind::Singleton; 3]);
    assert!(p.aggregates.is_partition());
    assert_eq!(p.aggregates.n_singletons, 3);
}

#[test]
fn path_of_four_halves() {
    let a = SparseMatrix::from_triplets(
        4,
        4,
        &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (3, 3, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 2, -1.0), (2, 1, -1.0), (2, 3, -1.0), (3, 2, -1.0)],
    )
    .unwrap();
    let c = coarsen_sweeps(&a, &[1.0; 4], Matcher::Exact, 1).unwrap();
    assert_eq!(c.p_total.cols(), 2);
}

#[test]
fn two_sweeps_on_constant_grid_give_boxes() {
    let a = gen_fd_diffusion(12, &CoefficientField::Constant).unwrap();
    let c = coarsen_sweeps(&a, &vec![1.0; a.n()], Matcher::Exact, 2).unwrap();
    assert_eq!(c.aggregates.len(), 36);
    assert!(c.aggregates.aggregates.iter().all(|g| g.len() == 4));
    for j in 0..c.p_total.cols() {
        let s: f64 = (0..a.n()).map(|i| c.p_total.get(i, j).powi(2)).sum();
        assert_close(s, 1.0, 1e-13);
    }
    let d = DiagonalMatrix::of(&a).unwrap();
    let mu = mu_global(&a, &d, &c.p_total, &EigOptions::default()).unwrap();
    assert_close(mu.mu_inv, 1.959, 0.05);
}

#[test]
fn hierarchy_levels_are_galerkin_and_shrinking() {
    let a = gen_fd_diffusion(20, &CoefficientField::Jump).unwrap();
    let h = build_hierarchy(&a, &vec![1.0; a.n()], &HierarchyOptions::default()).unwrap();
    let sizes = h.sizes();
    assert!(sizes.windows(2).all(|s| s[1] < s[0]), "{sizes:?}");
    assert!(*sizes.last().unwrap() <= 40);
    for k in 0..h.n_levels() - 1 {
        let p = h.levels[k].p.as_ref().unwrap();
        let ac = galerkin_product(p, &h.levels[k].a).unwrap();
        let diff = ac.add(1.0, &h.levels[k + 1].a, -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-13 * ac.max_abs());
    }
    assert!(h.levels.last().unwrap().p.is_none());
}

#[test]
fn local_projector_and_block_identities() {
    let a = gen_fd_diffusion(10, &CoefficientField::Random { seed: 3 }).unwrap();
    let mut rng = Stream::new(11);
    let w = rng.vector(a.n(), 0.5, 1.5);
    let c = coarsen_sweeps(&a, &w, Matcher::Suitor, 2).unwrap();
    let d = DiagonalMatrix::of(&a).unwrap();
    let q = DProjector::new(&c.p_total, &d).unwrap();
    let dd = d.entries();
    let agg = &c.aggregates;
    let mut block = Vec::new();
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        for (&j, &x) in cols.iter().zip(vals) {
            if agg.agg_of[i] == agg.agg_of[j] {
                block.push((i, j, x));
            }
        }
    }
    let blk = SparseMatrix::from_triplets(a.n(), a.n(), &block).unwrap();
    for _ in 0..100 {
        let v = rng.vector(a.n(), -1.0, 1.0);
        let qv = q.apply(&v);
        let global: f64 = qv.iter().zip(dd).map(|(x, d)| x * x * d).sum();
        let mut local = 0.0;
        for (j, g) in agg.aggregates.iter().enumerate() {
            let pj: Vec<f64> = g.iter().map(|&i| c.p_total.get(i, j)).collect();
            let num: f64 = g.iter().zip(&pj).map(|(&i, p)| p * dd[i] * v[i]).sum();
            let den: f64 = g.iter().zip(&pj).map(|(&i, p)| p * dd[i] * p).sum();
            local += num * num / den;
        }
        assert!((global - local).abs() <= 1e-12 * global.abs().max(1.0));
        let mut split = 0.0;
        for g in &agg.aggregates {
            let sub = a.submatrix_dense(g);
            let vj: Vec<f64> = g.iter().map(|&i| v[i]).collect();
            let av = sub.matvec(&vj).unwrap();
            split += dot(&vj, &av);
        }
        let whole = energy(&blk, &v);
        assert!((split - whole).abs() <= 1e-12 * whole.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sweep_invariants(k in 0u8..5, mk in 0u8..4, seed in any::<u64>(), n in 4usize..14, sweeps in 1usize..4, pos in any::<bool>()) {
        let a = gen_fd_diffusion(n, &field(k, seed)).unwrap();
        let mut rng = Stream::new(seed);
        let w: Vec<f64> = if pos { rng.vector(a.n(), 0.1, 1.0) } else { rng.vector(a.n(), -1.0, 1.0) };
        let c = coarsen_sweeps(&a, &w, matcher(mk), sweeps).unwrap();
        prop_assert!(c.aggregates.is_partition());
        prop_assert!(c.aggregates.max_size() <= 1 << sweeps);
        let pw = c.p_total.spmv(&c.coarse_weight).unwrap();
        let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in pw.iter().zip(&w) {
            prop_assert!((x - y).abs() <= 1e-13 * scale);
        }
        for i in 0..a.n() {
            prop_assert_eq!(c.p_total.row(i).0.len(), 1);
        }
        let mut ak = a.clone();
        for s in &c.sweeps {
            prop_assert!(s.prolongator.aggregates.max_size() <= 2);
            let dk = DiagonalMatrix::of(&ak).unwrap();
            let p = &s.prolongator.p;
            let pf = &s.complement.p_f;
            let dpf = SparseMatrix::from_diagonal(dk.entries()).matmul(pf).unwrap();
            let cross = p.transpose().matmul(&dpf).unwrap();
            prop_assert!(cross.max_abs() <= 1e-12);
            let pdp = galerkin_product(p, &SparseMatrix::from_diagonal(dk.entries())).unwrap();
            for r in 0..pdp.rows() {
                let (cols, vals) = pdp.row(r);
                for (&cc, &v) in cols.iter().zip(vals) {
                    prop_assert!(cc == r || v == 0.0);
                    if cc == r { prop_assert!(v > 0.0); }
                }
            }
            for j in 0..pf.cols() {
                let nrm: f64 = pf.transpose().row(j).1.iter().map(|x| x * x).sum();
                prop_assert!((nrm - 1.0).abs() <= 1e-14);
            }
            prop_assert_eq!(&galerkin_product(p, &ak).unwrap(), &s.coarse_matrix);
            ak = s.coarse_matrix.clone();
        }
    }
}
