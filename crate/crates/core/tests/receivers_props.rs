mod common;

use common::{draw, random_pd};
use oia_core::codebook::{build_codebook, Kind};
use oia_core::linalg::{complex_gaussian, complex_normal, hermitian_pd, random_unit_vector, CMat, CVec, HermEig, C64};
use oia_core::oia::{run_cell_pipeline, WeightRule};
use oia_core::receivers::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log2_det_lu(a: CMat) -> f64 {
    a.lu().determinant().re.log2()
}

fn effective(seed: u64, trial: u64, n: usize) -> (EffectiveChannel, CMat, CMat) {
    let (_, ch, bs) = draw(2, 3, n, 2, 2, seed, trial);
    let cb = build_codebook(Kind::Random, 2, 4, 0).unwrap();
    let sel = run_cell_pipeline(&ch, &bs, WeightRule::Codebook(&cb), 2).unwrap();
    (EffectiveChannel::assemble(&ch, &bs, &sel, 0).unwrap(), bs.u[0].clone(), bs.q[0].clone())
}

#[test]
fn zf_rates_match_linear_solve_path() {
    for t in 0..200 {
        let (eff, u, _) = effective(40, t, 6);
        assert!((u.adjoint() * &eff.h_c - &eff.h_tilde).norm() < 1e-14);
        let n0 = 0.02;
        let rates = zf_rates(&eff.h_tilde, &eff.cross, &u, n0).unwrap();
        let lu = eff.h_tilde.clone().lu();
        let gram_inv = (eff.h_tilde.adjoint() * &eff.h_tilde).try_inverse().unwrap();
        for j in 0..2 {
            let leak: f64 = eff
                .cross
                .iter()
                .map(|v| lu.solve(&(u.adjoint() * v)).unwrap()[j].norm_sqr())
                .sum();
            let sinr = (1.0 / n0) / (gram_inv[(j, j)].re + leak / n0);
            assert!((rates[j] - (1.0 + sinr).log2()).abs() < 1e-9, "{} vs {}", rates[j], (1.0 + sinr).log2());
        }
    }
}

#[test]
fn aligned_interference_leaves_clean_zf_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (eff, u, q) = effective(41, 0, 4);
    let cross: Vec<CVec> = (0..2).map(|_| q.column(0) * complex_normal(&mut rng, 1.0)).collect();
    let a = zf_rates(&eff.h_tilde, &cross, &u, 0.1).unwrap();
    let b = zf_rates(&eff.h_tilde, &[], &u, 0.1).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn zf_rates_ignore_weight_phases() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (_, ch, bs) = draw(2, 3, 6, 2, 2, 42, 0);
    let sel = run_cell_pipeline(&ch, &bs, WeightRule::SvdExact, 2).unwrap();
    let mut turned = sel.clone();
    for c in &mut turned {
        for w in &mut c.weights {
            *w *= C64::from_polar(1.0, rng.random::<f64>() * 6.0);
        }
    }
    for i in 0..2 {
        let a = EffectiveChannel::assemble(&ch, &bs, &sel, i).unwrap();
        let b = EffectiveChannel::assemble(&ch, &bs, &turned, i).unwrap();
        let ra = zf_rates(&a.h_tilde, &a.cross, &bs.u[i], 0.01).unwrap();
        let rb = zf_rates(&b.h_tilde, &b.cross, &bs.u[i], 0.01).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn covariance_dominates_noise_floor() {
    for t in 0..200 {
        let (eff, u, _) = effective(43, t, 3);
        let r = interference_covariance(&eff.cross, &u, 0.05).unwrap();
        assert!(HermEig::new(&r).min() >= 0.05 - 1e-10);
    }
}

#[test]
fn capacity_without_interference_reduces_to_log_det() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let h = complex_gaussian(&mut rng, 3, 2, 0.5);
    let want = log2_det_lu(&h * h.adjoint() / C64::from(0.1) + CMat::identity(3, 3));
    assert!((capacity_ic(&h, &[], 0.1).unwrap() - want).abs() < 1e-9);
}

#[test]
fn mismatched_and_nulled_rates_never_beat_capacity() {
    for t in 0..1000 {
        let (eff, u, _) = effective(45, t, 3);
        let n0 = 10f64.powf(-((t % 5) as f64) - 0.3);
        let cap = capacity_ic(&eff.h_c, &eff.cross, n0).unwrap();
        let r = interference_covariance(&eff.cross, &u, n0).unwrap();
        let (_, gmi) = gmi_med(&eff.h_tilde, &r, n0).unwrap();
        let r_inv = r.clone().try_inverse().unwrap();
        let matched = log2_det_lu(r_inv * &eff.h_tilde * eff.h_tilde.adjoint() + CMat::identity(2, 2));
        assert!(gmi <= matched + 1e-6, "gmi {gmi} > matched {matched}");
        assert!(matched <= cap + 1e-6, "matched {matched} > capacity {cap}");
        assert!(gmi >= 0.0);
    }
}

#[test]
fn closed_form_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for s in 1..=3 {
        let h = complex_gaussian(&mut rng, s, s, 1.0);
        let r = random_pd(&mut rng, s, 0.1);
        let r_hat = random_pd(&mut rng, s, 0.1);
        let theta = 0.2 + rng.random::<f64>();
        let exact = gmi_itheta(&h, &r, &r_hat, theta).unwrap();
        let (est, se) = mc_gmi_estimate(&h, &r, &r_hat, theta, 50_000, &mut rng).unwrap();
        assert!((est - exact).abs() <= 3.0 * se, "S={s}: {exact} vs {est} +- {se}");
    }
}

#[test]
fn monte_carlo_error_shrinks_with_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let h = complex_gaussian(&mut rng, 2, 2, 1.0);
    let r = random_pd(&mut rng, 2, 0.1);
    let (_, se1) = mc_gmi_estimate(&h, &r, &r, 1.0, 20_000, &mut rng).unwrap();
    let (_, se4) = mc_gmi_estimate(&h, &r, &r, 1.0, 80_000, &mut rng).unwrap();
    let ratio = se1 / se4;
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

fn qpsk() -> Vec<C64> {
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(a, b)| C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2)
        .collect()
}

#[test]
fn ml_with_identity_covariance_is_euclidean() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let c = qpsk();
    for _ in 0..200 {
        let h = complex_gaussian(&mut rng, 3, 2, 0.5);
        let y = CVec::from_fn(3, |_, _| complex_normal(&mut rng, 1.0));
        assert_eq!(ml_decode(&y, &h, &CMat::identity(3, 3), &c).unwrap(), med_decode(&y, &h, &c).unwrap());
    }
}

#[test]
fn ml_error_rate_not_above_med() {
    let mut rng = ChaCha8Rng::seed_from_u64(49);
    let c = qpsk();
    let n0 = 0.1;
    let (mut ml_err, mut med_err) = (0usize, 0usize);
    for t in 0..10_000u64 {
        let (eff, u, _) = effective(49, t / 20, 2);
        let pick = |rng: &mut ChaCha8Rng| c[rng.random_range(0..4)];
        let x = CVec::from_fn(2, |_, _| pick(&mut rng));
        let mut y = &eff.h_c * &x + CVec::from_fn(3, |_, _| complex_normal(&mut rng, n0));
        let mut r_c = CMat::identity(3, 3) * C64::from(n0);
        for v in &eff.cross {
            y += v * pick(&mut rng);
            r_c += v * v.adjoint();
        }
        let ml = ml_decode(&y, &eff.h_c, &r_c, &c).unwrap();
        let med = med_decode(&(u.adjoint() * &y), &eff.h_tilde, &c).unwrap();
        ml_err += (0..2).filter(|&j| ml[j] != x[j]).count();
        med_err += (0..2).filter(|&j| med[j] != x[j]).count();
    }
    assert!(ml_err <= med_err, "ML {ml_err} vs MED {med_err}");
}

#[test]
fn eigen_beamformer_is_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let h = complex_gaussian(&mut rng, 3, 2, 0.5);
    let w = max_snr_beamformer(&h);
    let best = (&h * &w).norm_squared();
    for _ in 0..1000 {
        let u = random_unit_vector(&mut rng, 2);
        assert!((&h * &u).norm_squared() <= best + 1e-12);
    }
    assert!(hermitian_pd(&(h.adjoint() * &h), "gram").is_ok());
}
