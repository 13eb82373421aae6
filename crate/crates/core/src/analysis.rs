//! Scaling diagnostics: tail exponents of singular-value statistics and
//! log-log slope fits of sum-LIF curves.

use crate::channel::{ChannelSet, ReferenceBasis};
use crate::error::{domain, Result};
use crate::linalg::right_svd;
use crate::linalg::CMat;
use crate::oia::CellSelection;

/// Tail exponent `(K-1)S - L + 1`; may be non-positive.
pub fn psi(k: usize, s: usize, l: usize) -> i64 {
    (k as i64 - 1) * s as i64 - l as i64 + 1
}

/// `sigma_1^2 / sigma_L^2` of `g`, `f64::INFINITY` for a numerically
/// rank-deficient `g`.
pub fn condition_number_sq(g: &CMat) -> f64 {
    let (sigma, _) = right_svd(g);
    let hi = sigma.first().copied().unwrap_or(0.0);
    let lo = sigma.last().copied().unwrap_or(0.0);
    if lo <= hi * f64::EPSILON || lo == 0.0 {
        return f64::INFINITY;
    }
    (hi / lo).powi(2)
}

/// Which end of the distribution a power law is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `F(x) ~ x^a` as `x -> 0`.
    Lower,
    /// `1 - F(x) ~ x^a` as `x -> inf`.
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub range: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Default quantile window for the lower tail of `sigma_L^2`.
pub const LOWER_TAIL_WINDOW: (f64, f64) = (0.001, 0.05);
/// Default quantile window for the upper tail of the condition number.
pub const UPPER_TAIL_WINDOW: (f64, f64) = (0.95, 0.999);

const TAIL_POINTS: usize = 32;
const MIN_TAIL_SAMPLES: usize = 10_000;

fn least_squares(xs: &[f64], ys: &[f64]) -> LogLogFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-300 {
        1.0
    } else {
        let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    LogLogFit { slope, intercept, r_squared }
}

/// Power-law tail exponent fitted over a quantile window `(lo_q, hi_q)`.
///
/// Probabilities are placed on a geometric grid inside the window (measured
/// from the fitted end), and the log tail probability is regressed on the
/// log empirical quantile.
pub fn empirical_tail_exponent(samples: &[f64], lo_q: f64, hi_q: f64, tail: Tail) -> Result<TailFit> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return domain(format!("{} samples given, at least {MIN_TAIL_SAMPLES} needed", samples.len()));
    }
    if !(0.0 < lo_q && lo_q < hi_q && hi_q < 1.0) {
        return domain(format!("quantile window ({lo_q}, {hi_q}) must satisfy 0 < lo < hi < 1"));
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    if sorted.iter().any(|x| x.is_nan()) {
        return domain("samples contain NaN");
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let quantile = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];

    let (p_lo, p_hi) = match tail {
        Tail::Lower => (lo_q, hi_q),
        Tail::Upper => (1.0 - hi_q, 1.0 - lo_q),
    };
    let mut xs = Vec::with_capacity(TAIL_POINTS);
    let mut ys = Vec::with_capacity(TAIL_POINTS);
    for k in 0..TAIL_POINTS {
        let p = p_lo * (p_hi / p_lo).powf(k as f64 / (TAIL_POINTS - 1) as f64);
        let x = match tail {
            Tail::Lower => quantile(p),
            Tail::Upper => quantile(1.0 - p),
        };
        if !(x > 0.0 && x.is_finite()) {
            return domain("tail fit needs positive finite samples inside the window");
        }
        xs.push(x.ln());
        ys.push(p.ln());
    }
    let fit = least_squares(&xs, &ys);
    Ok(TailFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        range: (lo_q, hi_q),
        points: TAIL_POINTS,
    })
}

/// Sum of the reported leakage over every selected user of every cell.
pub fn sum_lif(selections: &[CellSelection]) -> f64 {
    selections.iter().flat_map(|c| c.lifs.iter()).sum()
}

/// Total interference power left in the signal spaces, accumulated per
/// receiving base station: `sum_i sum_{k != i} sum_m ||U_i^H H_i^{[k,m]} w^{[k,m]}||^2`.
pub fn direct_interference_sum(channels: &ChannelSet, bases: &ReferenceBasis, selections: &[CellSelection]) -> f64 {
    let mut total = 0.0;
    for i in 0..channels.cells() {
        for sel in selections.iter().filter(|c| c.cell != i) {
            for (&m, w) in sel.selected.iter().zip(&sel.weights) {
                total += (bases.u[i].adjoint() * (channels.h(i, sel.cell, m) * w)).norm_squared();
            }
        }
    }
    total
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return domain("x and y lengths differ");
    }
    if xs.len() < 3 {
        return domain("at least three points are needed");
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return domain("log-log fit needs positive finite data");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(least_squares(&lx, &ly))
}
