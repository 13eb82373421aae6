mod common;

use common::draw;
use oia_core::analysis::{direct_interference_sum, sum_lif};
use oia_core::codebook::{build_codebook, quantize, Kind};
use oia_core::linalg::{random_unit_vector, CMat, CVec, HermEig, C64};
use oia_core::oia::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn per_cell_lif(ch: &oia_core::channel::ChannelSet, bs: &oia_core::channel::ReferenceBasis, i: usize, j: usize, w: &CVec) -> f64 {
    (0..ch.cells())
        .filter(|&k| k != i)
        .map(|k| (bs.u[k].adjoint() * (ch.h(k, i, j) * w)).norm_squared())
        .sum()
}

#[test]
fn stacked_lif_equals_per_cell_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for t in 0..300 {
        let k = 2 + (t % 2) as usize;
        let (_, ch, bs) = draw(k, 4, 3, 2, 2, 31, t);
        for i in 0..k {
            for j in 0..3 {
                let g = stack_interference(&ch, &bs, i, j).unwrap();
                assert_eq!(g.shape(), ((k - 1) * 2, 2));
                let w = random_unit_vector(&mut rng, 2);
                let a = lif(&g, &w).unwrap();
                let b = per_cell_lif(&ch, &bs, i, j, &w);
                assert!((a - b).abs() <= 1e-8 * a.max(1e-300), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn selection_matches_eigen_reference() {
    for t in 0..40 {
        let (_, ch, bs) = draw(3, 3, 12, 2, 2, 32, t);
        let sel = run_cell_pipeline(&ch, &bs, WeightRule::SvdExact, 2).unwrap();
        for i in 0..3 {
            // smallest eigenpair of sum_k H^H U U^H H, no stacking, no SVD
            let mut etas: Vec<(f64, usize)> = (0..12)
                .map(|j| {
                    let mut gram = CMat::zeros(2, 2);
                    for k in (0..3).filter(|&k| k != i) {
                        let p = bs.u[k].adjoint() * ch.h(k, i, j);
                        gram += p.adjoint() * p;
                    }
                    (HermEig::new(&gram).values[0], j)
                })
                .collect();
            etas.sort_by(|a, b| a.0.total_cmp(&b.0));
            let expect: Vec<usize> = etas[..2].iter().map(|e| e.1).collect();
            assert_eq!(sel[i].selected, expect);
            for (got, want) in sel[i].lifs.iter().zip(&etas[..2]) {
                assert!((got - want.0).abs() <= 1e-9 * want.0.max(1e-12));
            }
        }
    }
}

#[test]
fn svd_mode_lif_is_smallest_singular_value() {
    let (_, ch, bs) = draw(2, 3, 10, 2, 2, 33, 0);
    for i in 0..2 {
        for u in cell_user_states(&ch, &bs, WeightRule::SvdExact, i).unwrap() {
            assert!((u.eta - u.sigma[1].powi(2)).abs() <= 1e-9);
            assert_eq!(u.d_sq, 0.0);
        }
    }
}

#[test]
fn all_users_selected_when_n_equals_s() {
    let (_, ch, bs) = draw(2, 3, 2, 2, 2, 34, 0);
    let sel = run_cell_pipeline(&ch, &bs, WeightRule::SvdExact, 2).unwrap();
    for c in &sel {
        let mut s = c.selected.clone();
        s.sort();
        assert_eq!(s, vec![0, 1]);
    }
}

#[test]
fn selection_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let lifs: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..500).collect();
    order.sort_by(|&a, &b| lifs[a].total_cmp(&lifs[b]));
    assert_eq!(select_users(&lifs, 7).unwrap(), order[..7].to_vec());
}

#[test]
fn network_identity_holds_for_every_rule() {
    let cb = build_codebook(Kind::Random, 2, 3, 0).unwrap();
    for t in 0..50 {
        let k = 2 + (t % 2) as usize;
        let (_, ch, bs) = draw(k, 4, 6, 2, 2, 36, t);
        for rule in [WeightRule::SvdExact, WeightRule::Codebook(&cb), WeightRule::MaxSnr] {
            let sel = run_cell_pipeline(&ch, &bs, rule, 2).unwrap();
            let a = sum_lif(&sel);
            let b = direct_interference_sum(&ch, &bs, &sel);
            assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
        }
    }
}

#[test]
fn leakage_and_branch_bounds_hold() {
    let cb = build_codebook(Kind::Random, 2, 4, 1).unwrap();
    let mut violations = 0;
    for t in 0..500 {
        let (_, ch, bs) = draw(2, 3, 4, 2, 2, 37, t);
        for i in 0..2 {
            for u in cell_user_states(&ch, &bs, WeightRule::Codebook(&cb), i).unwrap() {
                let (s1, sl) = (u.sigma[0], u.sigma[1]);
                if u.eta > leakage_bound(s1, sl, u.d_sq) + 1e-9 {
                    violations += 1;
                }
                if u.eta > eta_rc(s1, sl, u.d_sq, 0.0).unwrap() + 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn sum_lif_non_increasing_in_n_f_and_n() {
    let trials = 500;
    let mean = |cb: Option<&oia_core::codebook::Codebook>, n: usize| {
        (0..trials)
            .map(|t| {
                let (_, ch, bs) = draw(2, 3, n, 2, 2, 38, t);
                let rule = cb.map_or(WeightRule::SvdExact, WeightRule::Codebook);
                sum_lif(&run_cell_pipeline(&ch, &bs, rule, 2).unwrap())
            })
            .sum::<f64>()
            / trials as f64
    };
    let by_nf: Vec<f64> = [2, 4, 6, 8]
        .iter()
        .map(|&nf| mean(Some(&build_codebook(Kind::Random, 2, nf, 2).unwrap()), 40))
        .collect();
    assert!(by_nf.windows(2).all(|w| w[1] <= w[0]), "{by_nf:?}");
    let cb = build_codebook(Kind::Random, 2, 4, 2).unwrap();
    let by_n: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| mean(Some(&cb), n)).collect();
    assert!(by_n.windows(2).all(|w| w[1] <= w[0]), "{by_n:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lif_is_sandwiched(seed in any::<u64>(), k in 2usize..4) {
        let (_, ch, bs) = draw(k, 3, 2, 2, 2, seed, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = stack_interference(&ch, &bs, 0, 1).unwrap();
        let (_, sigma) = svd_weight(&g);
        let w = random_unit_vector(&mut rng, 2);
        let eta = lif(&g, &w).unwrap();
        prop_assert!(eta >= sigma[1].powi(2) - 1e-12);
        prop_assert!(eta <= sigma[0].powi(2) + 1e-12);
    }

    #[test]
    fn weight_phase_changes_nothing(seed in any::<u64>(), phi in 0.0f64..std::f64::consts::TAU) {
        let (_, ch, bs) = draw(2, 3, 5, 2, 2, seed, 0);
        let cb = build_codebook(Kind::Random, 2, 3, seed % 7).unwrap();
        let rotated: Vec<CVec> = cb.vectors().iter().map(|c| c * C64::from_polar(1.0, phi)).collect();
        let cb_rot = oia_core::codebook::Codebook::from_vectors(Kind::Random, 0, rotated).unwrap();
        let a = run_cell_pipeline(&ch, &bs, WeightRule::Codebook(&cb), 2).unwrap();
        let b = run_cell_pipeline(&ch, &bs, WeightRule::Codebook(&cb_rot), 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.selected, &y.selected);
            for (p, q) in x.lifs.iter().zip(&y.lifs) {
                prop_assert!((p - q).abs() <= 1e-10 * p.max(1e-12));
            }
        }
        let g = stack_interference(&ch, &bs, 1, 0).unwrap();
        let (v, _) = svd_weight(&g);
        let q = quantize(&v, &cb).unwrap();
        prop_assert!((lif(&g, &q.w).unwrap() - lif(&g, &(&q.w * C64::from_polar(1.0, phi))).unwrap()).abs() < 1e-12);
    }
}
