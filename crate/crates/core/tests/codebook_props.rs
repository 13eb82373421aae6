mod common;

use common::ks_distance;
use oia_core::codebook::*;
use oia_core::linalg::{random_unit_vector, CVec, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_d_sq(cb: &Codebook, targets: &[CVec]) -> f64 {
    targets.iter().map(|v| quantize(v, cb).unwrap().d_sq).sum::<f64>() / targets.len() as f64
}

#[test]
fn random_codebook_residual_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut d: Vec<f64> = (0..10_000)
        .map(|_| {
            let cb = gen_random_codebook(2, 4, &mut rng, 0).unwrap();
            let v = random_unit_vector(&mut rng, 2);
            quantize(&v, &cb).unwrap().d_sq
        })
        .collect();
    let ks = ks_distance(&mut d, |z| residual_distance_cdf(2, 16, z.clamp(0.0, 1.0)).unwrap());
    assert!(ks < 0.02, "KS {ks}");
}

#[test]
fn grassmannian_beats_random_granularity() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let targets: Vec<CVec> = (0..2000).map(|_| random_unit_vector(&mut rng, 2)).collect();
    for n_f in 1..=4 {
        let gc = build_codebook(Kind::Grassmannian, 2, n_f, 3).unwrap();
        let rc = build_codebook(Kind::Random, 2, n_f, 3).unwrap();
        let (g, r) = (mean_d_sq(&gc, &targets), mean_d_sq(&rc, &targets));
        assert!(g < r, "n_f={n_f}: grassmannian {g} vs random {r}");
    }
}

#[test]
fn four_lines_reach_the_simplex_packing() {
    let gc = build_codebook(Kind::Grassmannian, 2, 2, 0).unwrap();
    let d = gc.min_chordal_sq();
    let simplex = simplex_chordal_sq(2, 4);
    assert!((simplex - 2.0 / 3.0).abs() < 1e-15);
    assert!(d <= simplex + 1e-6, "{d} exceeds the simplex bound");
    assert!(d >= 0.6 * packing_bound(2, 4).unwrap());
    assert!(d >= simplex - 1e-4, "{d}");
}

#[test]
fn two_lines_are_orthogonal() {
    let gc = build_codebook(Kind::Grassmannian, 2, 1, 0).unwrap();
    assert!(gc.min_chordal_sq() >= 0.999);
}

#[test]
fn min_chordal_matches_pair_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cb = gen_random_codebook(2, 3, &mut rng, 0).unwrap();
    let v = cb.vectors();
    let mut scan: f64 = 1.0;
    for a in 0..v.len() {
        for b in 0..a {
            let ip: C64 = v[a].iter().zip(v[b].iter()).map(|(x, y)| x.conj() * y).sum();
            scan = scan.min(1.0 - ip.norm_sqr());
        }
    }
    assert!((cb.min_chordal_sq() - scan).abs() < 1e-12);
    assert!((min_chordal_distance(&cb).unwrap() - scan).abs() < 1e-12);
}

#[test]
fn zero_bit_codebook_always_returns_first_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let cb = gen_random_codebook(3, 0, &mut rng, 0).unwrap();
    for _ in 0..20 {
        assert_eq!(quantize(&random_unit_vector(&mut rng, 3), &cb).unwrap().index, 0);
    }
}

#[test]
fn construction_is_deterministic() {
    let a = build_codebook(Kind::Grassmannian, 3, 3, 9).unwrap();
    let b = build_codebook(Kind::Grassmannian, 3, 3, 9).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, build_codebook(Kind::Grassmannian, 3, 3, 10).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip_is_exact(seed in any::<u64>(), l in 1usize..5, n_f in 0u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = gen_random_codebook(l, n_f, &mut rng, seed).unwrap();
        let back = Codebook::from_text(&cb.to_text()).unwrap();
        prop_assert_eq!(back, cb);
    }

    #[test]
    fn codewords_quantize_to_themselves(seed in any::<u64>(), pick in 0usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = gen_random_codebook(2, 4, &mut rng, seed).unwrap();
        let q = quantize(&cb.vectors()[pick], &cb).unwrap();
        prop_assert!(q.d_sq <= 1e-12);
        prop_assert_eq!(q.w, cb.vectors()[q.index].clone());
    }

    #[test]
    fn quantization_is_phase_blind(seed in any::<u64>(), phi in 0.0f64..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = gen_random_codebook(3, 3, &mut rng, seed).unwrap();
        let v = random_unit_vector(&mut rng, 3);
        let a = quantize(&v, &cb).unwrap();
        let b = quantize(&(&v * C64::from_polar(1.0, phi)), &cb).unwrap();
        prop_assert_eq!(a.index, b.index);
        prop_assert!((a.d_sq - b.d_sq).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.d_sq));
    }
}
