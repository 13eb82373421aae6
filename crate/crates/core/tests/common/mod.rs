#![allow(dead_code)]

use oia_core::channel::{draw_channel_set, draw_reference_bases, ChannelSet, ReferenceBasis, Scenario};
use oia_core::linalg::{complex_gaussian, CMat, C64};
use oia_core::rng::TrialStreams;
use rand::Rng;

pub fn draw(k: usize, m: usize, n: usize, l: usize, s: usize, seed: u64, trial: u64) -> (Scenario, ChannelSet, ReferenceBasis) {
    let sc = Scenario::new(k, m, n, l, s).unwrap();
    let st = TrialStreams::new(seed, trial);
    let ch = draw_channel_set(&sc, &st);
    let bs = draw_reference_bases(&sc, &st);
    (sc, ch, bs)
}

pub fn random_pd<R: Rng>(rng: &mut R, s: usize, floor: f64) -> CMat {
    let a = complex_gaussian(rng, s, s, 1.0);
    &a * a.adjoint() + CMat::identity(s, s) * C64::from(floor)
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
