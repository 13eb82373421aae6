mod common;

use common::draw;
use oia_core::analysis::*;
use oia_core::channel::ChannelSet;
use oia_core::linalg::{complex_gaussian, CMat, HermEig};
use oia_core::oia::{run_cell_pipeline, WeightRule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn condition_number_matches_gram_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for _ in 0..200 {
        let g = complex_gaussian(&mut rng, 4, 2, 0.5);
        let eig = HermEig::new(&(g.adjoint() * &g));
        let want = eig.values[1] / eig.values[0];
        let got = condition_number_sq(&g);
        assert!((got - want).abs() <= 1e-8 * want);
    }
}

#[test]
fn zero_cross_channels_leave_no_leakage() {
    let (_, ch, bs) = draw(2, 3, 4, 2, 2, 61, 0);
    let direct_only = ChannelSet::from_fn(2, 4, |k, i, j| if k == i { ch.h(k, i, j).clone() } else { CMat::zeros(3, 2) });
    let sel = run_cell_pipeline(&direct_only, &bs, WeightRule::SvdExact, 2).unwrap();
    assert_eq!(sum_lif(&sel), 0.0);
    assert_eq!(direct_interference_sum(&direct_only, &bs, &sel), 0.0);
}

#[test]
fn alignment_beats_max_snr_selection() {
    let (mut svd, mut snr) = (0.0, 0.0);
    for t in 0..500 {
        let (_, ch, bs) = draw(2, 3, 50, 2, 2, 62, t);
        svd += sum_lif(&run_cell_pipeline(&ch, &bs, WeightRule::SvdExact, 2).unwrap());
        snr += sum_lif(&run_cell_pipeline(&ch, &bs, WeightRule::MaxSnr, 2).unwrap());
    }
    assert!(svd < snr, "{svd} vs {snr}");
}

#[test]
fn square_stack_tail_exponent_is_one() {
    let mut lo = Vec::with_capacity(20_000);
    for t in 0..10_000 {
        let (_, ch, bs) = draw(2, 3, 2, 2, 2, 63, t);
        for j in 0..2 {
            let g = oia_core::oia::stack_interference(&ch, &bs, 0, j).unwrap();
            let (_, sigma) = oia_core::oia::svd_weight(&g);
            lo.push(sigma[1].powi(2));
        }
    }
    let (a, b) = LOWER_TAIL_WINDOW;
    let fit = empirical_tail_exponent(&lo, a, b, Tail::Lower).unwrap();
    assert!((fit.exponent - psi(2, 2, 2) as f64).abs() < 0.2, "{fit:?}");
}
