//! Base-station receivers for the selected users: linear ZF after nulling,
//! the channel capacity with full receive processing, and the generalized
//! mutual information of the minimum-Euclidean-distance decoder.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::channel::{ChannelSet, ReferenceBasis};
use crate::error::{domain, OiaError, Result};
use crate::linalg::{complex_normal, hermitian_pd, log2_det_identity_plus, phase_normalize, right_svd, CMat, CVec, C64};
use crate::oia::CellSelection;

/// Condition number above which the nulled channel is treated as singular.
pub const ZF_COND_LIMIT: f64 = 1e12;

/// Brute-force search cap for the symbol decoders.
pub const DECODE_SEARCH_CAP: usize = 4096;

/// Received signal structure of one cell after user selection.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    /// `M x S` composite direct channel, one column per selected user.
    pub h_c: CMat,
    /// `S x S` nulled channel `U_i^H h_c`.
    pub h_tilde: CMat,
    /// Interfering vectors `H_i^{[k,m]} w^{[k,m]}` from the other cells.
    pub cross: Vec<CVec>,
}

impl EffectiveChannel {
    /// Assembles the view of base station `i` from every cell's selection.
    pub fn assemble(
        channels: &ChannelSet,
        bases: &ReferenceBasis,
        selections: &[CellSelection],
        i: usize,
    ) -> Result<Self> {
        let own = selections
            .iter()
            .find(|c| c.cell == i)
            .ok_or_else(|| OiaError::Domain(format!("no selection for cell {i}")))?;
        let m = channels.h(i, i, 0).nrows();
        let mut h_c = CMat::zeros(m, own.selected.len());
        for (col, (&j, w)) in own.selected.iter().zip(&own.weights).enumerate() {
            h_c.set_column(col, &(channels.h(i, i, j) * w));
        }
        let cross = selections
            .iter()
            .filter(|c| c.cell != i)
            .flat_map(|c| c.selected.iter().zip(&c.weights).map(move |(&m_, w)| channels.h(i, c.cell, m_) * w))
            .collect();
        let h_tilde = bases.u[i].adjoint() * &h_c;
        Ok(EffectiveChannel { h_c, h_tilde, cross })
    }
}

/// Step 3 figures of merit for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverEval {
    pub zf_rates: Vec<f64>,
    /// Set when the nulled channel was singular and the ZF rates were zeroed.
    pub outage: bool,
    pub capacity: f64,
    pub gmi: f64,
    pub theta_star: f64,
    pub r_cov: CMat,
    pub n0: f64,
}

impl ReceiverEval {
    pub fn zf_sum(&self) -> f64 {
        self.zf_rates.iter().sum()
    }
}

/// Evaluates every receiver of one cell at noise power `n0`.
pub fn evaluate(eff: &EffectiveChannel, u_i: &CMat, n0: f64) -> Result<ReceiverEval> {
    let (zf_rates, outage) = match zf_rates(&eff.h_tilde, &eff.cross, u_i, n0) {
        Ok(r) => (r, false),
        Err(OiaError::SingularChannel { .. }) => (vec![0.0; eff.h_tilde.ncols()], true),
        Err(e) => return Err(e),
    };
    let capacity = capacity_ic(&eff.h_c, &eff.cross, n0)?;
    let r_cov = interference_covariance(&eff.cross, u_i, n0)?;
    let (theta_star, gmi) = gmi_med(&eff.h_tilde, &r_cov, n0)?;
    Ok(ReceiverEval { zf_rates, outage, capacity, gmi, theta_star, r_cov, n0 })
}

fn check_n0(n0: f64) -> Result<()> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return domain(format!("noise power must be positive, got {n0}"));
    }
    Ok(())
}

/// ZF equalizer `F = (h_tilde^{-1})^H`, so that `F^H h_tilde = I`.
pub fn zf_equalizer(h_tilde: &CMat) -> Result<CMat> {
    if !h_tilde.is_square() {
        return domain(format!("nulled channel must be square, got {}x{}", h_tilde.nrows(), h_tilde.ncols()));
    }
    let (sigma, _) = right_svd(h_tilde);
    let cond = match (sigma.first(), sigma.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    if cond.is_nan() || cond > ZF_COND_LIMIT {
        return Err(OiaError::SingularChannel { cond });
    }
    let inv = h_tilde.clone().try_inverse().ok_or(OiaError::SingularChannel { cond })?;
    Ok(inv.adjoint())
}

/// Per-user ZF rates with residual interference treated as noise.
pub fn zf_rates(h_tilde: &CMat, cross: &[CVec], u_i: &CMat, n0: f64) -> Result<Vec<f64>> {
    check_n0(n0)?;
    let f = zf_equalizer(h_tilde)?;
    let snr = 1.0 / n0;
    let projected: Vec<CVec> = cross.iter().map(|v| u_i.adjoint() * v).collect();
    Ok((0..f.ncols())
        .map(|j| {
            let fj = f.column(j);
            let leak: f64 = projected.iter().map(|p| fj.dotc(p).norm_sqr()).sum::<f64>() * snr;
            (1.0 + snr / (fj.norm_squared() + leak)).log2()
        })
        .collect())
}

/// Effective noise covariance after nulling: `sum (U^H v)(U^H v)^H + n0 I_S`.
pub fn interference_covariance(cross: &[CVec], u_i: &CMat, n0: f64) -> Result<CMat> {
    check_n0(n0)?;
    let s = u_i.ncols();
    let mut r = CMat::identity(s, s) * C64::from(n0);
    for v in cross {
        let p = u_i.adjoint() * v;
        r += &p * p.adjoint();
    }
    Ok(r)
}

/// Capacity with optimal processing over all `M` receive antennas.
pub fn capacity_ic(h_c: &CMat, cross: &[CVec], n0: f64) -> Result<f64> {
    check_n0(n0)?;
    let m = h_c.nrows();
    let mut r_c = CMat::identity(m, m) * C64::from(n0);
    for v in cross {
        r_c += v * v.adjoint();
    }
    let eig = hermitian_pd(&r_c, "R_c")?;
    let w = eig.map(|l| 1.0 / l.sqrt());
    Ok(log2_det_identity_plus(&(&w * h_c * h_c.adjoint() * &w)))
}

/// Closed-form GMI curve `I(theta)` for a fixed `(H, R, R_hat)`.
///
/// With `A = R_hat^{-1/2} H H^H R_hat^{-1/2} = V diag(mu) V^H` every term
/// diagonalizes, so one evaluation costs `O(S)`.
#[derive(Debug, Clone)]
pub struct GmiCurve {
    mu: Vec<f64>,
    b: Vec<f64>,
    t0: f64,
}

impl GmiCurve {
    pub fn new(h_tilde: &CMat, r: &CMat, r_hat: &CMat) -> Result<Self> {
        let s = h_tilde.nrows();
        if r.shape() != (s, s) || r_hat.shape() != (s, s) {
            return domain("covariances must be S x S with S the rows of the channel");
        }
        hermitian_pd(r, "R")?;
        let rh = hermitian_pd(r_hat, "R_hat")?;
        let w = rh.map(|l| 1.0 / l.sqrt());
        let hh = h_tilde * h_tilde.adjoint();
        let a = &w * &hh * &w;
        let a = (&a + a.adjoint()) * C64::from(0.5);
        let eig = crate::linalg::HermEig::new(&a);
        let b_mat = eig.vectors.adjoint() * &w * (&hh + r) * &w * &eig.vectors;
        let b = (0..s).map(|k| b_mat[(k, k)].re).collect();
        let t0 = crate::linalg::trace_re(&(&w * r * &w));
        let mu = eig.values.iter().map(|&x| x.max(0.0)).collect();
        Ok(GmiCurve { mu, b, t0 })
    }

    /// Whether the channel term vanishes, making `I` identically zero.
    pub fn is_zero(&self) -> bool {
        self.mu.iter().all(|&m| m <= 1e-300)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut trace = 0.0;
        let mut ln_det = 0.0;
        for (&mu, &b) in self.mu.iter().zip(&self.b) {
            let d = 1.0 + theta * mu;
            trace += b / d;
            ln_det += d.ln();
        }
        (theta * (trace - self.t0) + ln_det) / LN_2
    }

    /// Maximizes over `theta >= 0`: doubling bracket, log-spaced grid, then
    /// golden-section search. Returns `(theta_star, I(theta_star))`.
    pub fn sup(&self) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let mut theta_hi = 1.0;
        let mut prev = self.eval(theta_hi);
        let mut drops = 0;
        for _ in 0..200 {
            let next = self.eval(theta_hi * 2.0);
            theta_hi *= 2.0;
            if next < prev {
                drops += 1;
                if drops == 2 {
                    break;
                }
            } else {
                drops = 0;
            }
            prev = next;
        }

        const GRID: usize = 64;
        const SPAN: f64 = 1e-9;
        let mut grid = Vec::with_capacity(GRID);
        grid.push(0.0);
        for k in 0..GRID - 1 {
            let t = k as f64 / (GRID - 2) as f64;
            grid.push(theta_hi * SPAN.powf(1.0 - t));
        }
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let best = (0..GRID).fold(0, |b, k| if vals[k] > vals[b] { k } else { b });
        let mut lo = if best == 0 { 0.0 } else { grid[best - 1] };
        let mut hi = if best + 1 < GRID { grid[best + 1] } else { grid[best] };

        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.eval(x1);
        let mut f2 = self.eval(x2);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-6 * mid.max(f64::MIN_POSITIVE) {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.eval(x1);
            }
        }
        let mut theta = 0.5 * (lo + hi);
        let mut value = self.eval(theta);
        if vals[best] > value {
            theta = grid[best];
            value = vals[best];
        }
        (theta, value)
    }
}

/// GMI `I(theta)` of a decoder that assumes noise covariance `r_hat` while
/// the actual one is `r`.
pub fn gmi_itheta(h_tilde: &CMat, r: &CMat, r_hat: &CMat, theta: f64) -> Result<f64> {
    if theta.is_nan() || theta < 0.0 {
        return domain(format!("theta must be >= 0, got {theta}"));
    }
    Ok(GmiCurve::new(h_tilde, r, r_hat)?.eval(theta))
}

/// `sup_theta I(theta)`, returned as `(theta_star, gmi)`.
pub fn gmi_sup(h_tilde: &CMat, r: &CMat, r_hat: &CMat) -> Result<(f64, f64)> {
    Ok(GmiCurve::new(h_tilde, r, r_hat)?.sup())
}

/// GMI of the minimum-Euclidean-distance decoder (`r_hat = n0 I`).
pub fn gmi_med(h_tilde: &CMat, r: &CMat, n0: f64) -> Result<(f64, f64)> {
    check_n0(n0)?;
    let s = h_tilde.nrows();
    gmi_sup(h_tilde, r, &(CMat::identity(s, s) * C64::from(n0)))
}

/// Monte Carlo estimate of `I(theta)` straight from the decoding-metric
/// definition, as `(mean, standard error)`.
///
/// Deliberately avoids the eigen route of [`GmiCurve`]: inverses and
/// determinants go through LU, noise is coloured with a Cholesky factor.
pub fn mc_gmi_estimate<R: Rng + ?Sized>(
    h_tilde: &CMat,
    r: &CMat,
    r_hat: &CMat,
    theta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples < 1000 {
        return domain("at least 1000 samples are required");
    }
    if theta.is_nan() || theta < 0.0 {
        return domain(format!("theta must be >= 0, got {theta}"));
    }
    let s = h_tilde.nrows();
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| OiaError::Domain("R is not positive definite".into()))?
        .l();
    let r_hat_inv = r_hat
        .clone()
        .try_inverse()
        .ok_or_else(|| OiaError::Domain("R_hat is singular".into()))?;
    let hh = h_tilde * h_tilde.adjoint();
    let th = C64::from(theta);
    let m_inv = (&hh * th + r_hat)
        .try_inverse()
        .ok_or_else(|| OiaError::Domain("theta H H^H + R_hat is singular".into()))?;
    let omega = &r_hat_inv * &hh * th + CMat::identity(s, s);
    let ln_det_omega = omega.lu().determinant().re.ln();
    let k = h_tilde.ncols();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let x = CVec::from_fn(k, |_, _| complex_normal(rng, 1.0));
        let n = CVec::from_fn(s, |_, _| complex_normal(rng, 1.0));
        let z = &chol * n;
        let y = h_tilde * &x + &z;
        let own = (z.adjoint() * &r_hat_inv * &z)[(0, 0)].re;
        let avg = (y.adjoint() * &m_inv * &y)[(0, 0)].re;
        let sample = (theta * (avg - own) + ln_det_omega) / LN_2;
        sum += sample;
        sum_sq += sample * sample;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

fn product_search(s: usize, constellation: &[C64], mut metric: impl FnMut(&CVec) -> f64) -> Result<CVec> {
    let q = constellation.len();
    if q == 0 {
        return domain("empty constellation");
    }
    let total = (0..s).try_fold(1usize, |acc, _| acc.checked_mul(q).filter(|&t| t <= DECODE_SEARCH_CAP));
    let total = total.ok_or_else(|| {
        OiaError::Domain(format!("search space {q}^{s} exceeds the cap of {DECODE_SEARCH_CAP}"))
    })?;
    let mut digits = vec![0usize; s];
    let mut best = CVec::zeros(s);
    let mut best_val = f64::INFINITY;
    for _ in 0..total {
        let x = CVec::from_iterator(s, digits.iter().map(|&d| constellation[d]));
        let val = metric(&x);
        if val < best_val {
            best_val = val;
            best = x;
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    Ok(best)
}

/// Minimum-Euclidean-distance decision on the nulled signal.
pub fn med_decode(y_tilde: &CVec, h_tilde: &CMat, constellation: &[C64]) -> Result<CVec> {
    if y_tilde.len() != h_tilde.nrows() {
        return domain("received vector and channel disagree in length");
    }
    product_search(h_tilde.ncols(), constellation, |x| (y_tilde - h_tilde * x).norm_squared())
}

/// ML decision on the full received signal with Gaussian interference-plus-noise
/// covariance `r_c`.
pub fn ml_decode(y: &CVec, h_c: &CMat, r_c: &CMat, constellation: &[C64]) -> Result<CVec> {
    if y.len() != h_c.nrows() {
        return domain("received vector and channel disagree in length");
    }
    let eig = hermitian_pd(r_c, "R_c")?;
    let r_inv = eig.map(|l| 1.0 / l);
    product_search(h_c.ncols(), constellation, |x| {
        let e = y - h_c * x;
        (e.adjoint() * &r_inv * &e)[(0, 0)].re
    })
}

/// Eigen-beamformer: the unit weight maximizing `||h w||^2`.
pub fn max_snr_beamformer(h_direct: &CMat) -> CVec {
    let (_, v) = right_svd(h_direct);
    phase_normalize(&v.column(0).into_owned())
}
