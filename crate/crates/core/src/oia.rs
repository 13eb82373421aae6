//! Weight design and user selection for opportunistic interference alignment.
//!
//! Every user stacks its cross channels projected onto the other cells' signal
//! spaces, picks the weight that leaks the least interference (exactly, via
//! SVD, or quantized through a codebook), and reports the leakage. Each base
//! station then keeps the `S` users with the smallest leakage.

use crate::channel::{ChannelSet, ReferenceBasis};
use crate::codebook::{quantize, Codebook};
use crate::error::{domain, OiaError, Result};
use crate::linalg::{phase_normalize, right_svd, CMat, CVec};

/// Per-user outcome of the weight-design step.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub cell: usize,
    pub user: usize,
    /// Stacked interference matrix, `(K-1)S x L`.
    pub g: CMat,
    /// Singular values of `g`, descending, length `L`.
    pub sigma: Vec<f64>,
    /// Right-singular vector of the smallest singular value.
    pub v_last: CVec,
    /// Applied unit weight.
    pub w: CVec,
    /// Codeword index (0-based), `None` when the codebook is bypassed.
    pub cw_index: Option<usize>,
    /// Squared residual distance between `w` and `v_last`.
    pub d_sq: f64,
    /// Leakage of interference `||g w||^2`.
    pub eta: f64,
    /// Received power of the own-cell link `||H_i^{[i,j]} w||^2`.
    pub own_gain: f64,
}

/// Steps 1-2 outcome for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSelection {
    pub cell: usize,
    pub selected: Vec<usize>,
    pub weights: Vec<CVec>,
    pub lifs: Vec<f64>,
    pub cw_indices: Vec<Option<usize>>,
}

/// How users choose their weight and how the base station ranks them.
#[derive(Debug, Clone, Copy)]
pub enum WeightRule<'a> {
    /// Quantize the SVD weight through a shared codebook; rank by leakage.
    Codebook(&'a Codebook),
    /// Use the exact SVD weight; rank by leakage.
    SvdExact,
    /// Eigen-beamform towards the own base station; rank by received SNR.
    MaxSnr,
}

/// Vertical stack of `U_k^H H_k^{[i,j]}` over `k != i`, ascending `k`.
pub fn stack_interference(channels: &ChannelSet, bases: &ReferenceBasis, i: usize, j: usize) -> Result<CMat> {
    let k_cells = channels.cells();
    if k_cells < 2 {
        return domain("stacked interference needs K >= 2 cells");
    }
    let blocks: Vec<CMat> = (0..k_cells)
        .filter(|&k| k != i)
        .map(|k| bases.u[k].adjoint() * channels.h(k, i, j))
        .collect();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols = channels.h(0, i, j).ncols();
    let mut g = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in &blocks {
        g.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    Ok(g)
}

/// Leakage-minimizing weight: the right-singular vector of the smallest
/// singular value, phase-normalized, together with all singular values.
pub fn svd_weight(g: &CMat) -> (CVec, Vec<f64>) {
    let (sigma, v) = right_svd(g);
    let last = v.column(v.ncols() - 1).into_owned();
    (phase_normalize(&last), sigma)
}

/// Leakage of interference `||g w||^2` for a unit weight.
pub fn lif(g: &CMat, w: &CVec) -> Result<f64> {
    let norm = w.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return domain(format!("weight must have unit norm, got {norm}"));
    }
    if w.len() != g.ncols() {
        return domain(format!("weight length {} does not match {} columns", w.len(), g.ncols()));
    }
    Ok((g * w).norm_squared())
}

/// Leakage upper bound for an arbitrary codebook: `sigma_L^2 + d^2 sigma_1^2`.
pub fn leakage_bound(sigma_1: f64, sigma_l: f64, d_sq: f64) -> f64 {
    sigma_l * sigma_l + d_sq * sigma_1 * sigma_1
}

fn two_branch(sigma_1: f64, sigma_l: f64, scale: f64, delta: f64) -> f64 {
    let s1 = sigma_1 * sigma_1;
    let sl = sigma_l * sigma_l;
    if sl <= (1.0 + delta) * scale * s1 {
        (2.0 + delta) * scale * s1
    } else {
        (1.0 + 1.0 / (1.0 + delta)) * sl
    }
}

/// Two-branch leakage bound for a Grassmannian codebook with distance bound
/// `nu_f`.
pub fn eta_gc(sigma_1: f64, sigma_l: f64, nu_f: f64, delta: f64) -> Result<f64> {
    if delta < 0.0 {
        return domain("delta must be >= 0");
    }
    Ok(two_branch(sigma_1, sigma_l, nu_f, delta))
}

/// Same bound with the realized squared residual distance of a random
/// codebook in place of `nu_f`.
pub fn eta_rc(sigma_1: f64, sigma_l: f64, d_sq: f64, delta_p: f64) -> Result<f64> {
    if delta_p < 0.0 {
        return domain("delta' must be >= 0");
    }
    Ok(two_branch(sigma_1, sigma_l, d_sq, delta_p))
}

/// Indices of the `s` smallest values (lowest index on ties), ordered by value.
pub fn select_users(lifs: &[f64], s: usize) -> Result<Vec<usize>> {
    if lifs.len() < s {
        return domain(format!("cannot select {s} users out of {}", lifs.len()));
    }
    let mut order: Vec<usize> = (0..lifs.len()).collect();
    order.sort_by(|&a, &b| lifs[a].total_cmp(&lifs[b]).then(a.cmp(&b)));
    order.truncate(s);
    Ok(order)
}

/// Rule-independent part of step 1: the stacked matrix and its SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSvd {
    pub cell: usize,
    pub user: usize,
    pub g: CMat,
    pub sigma: Vec<f64>,
    pub v_last: CVec,
}

pub fn user_svd(channels: &ChannelSet, bases: &ReferenceBasis, cell: usize, user: usize) -> Result<UserSvd> {
    let g = stack_interference(channels, bases, cell, user)?;
    let (v_last, sigma) = svd_weight(&g);
    Ok(UserSvd { cell, user, g, sigma, v_last })
}

/// Finishes step 1 for one user under a given rule.
pub fn apply_rule(svd: &UserSvd, direct: &CMat, rule: WeightRule<'_>) -> Result<UserState> {
    let (w, cw_index, d_sq) = match rule {
        WeightRule::Codebook(cb) => {
            let q = quantize(&svd.v_last, cb)?;
            (q.w, Some(q.index), q.d_sq)
        }
        WeightRule::SvdExact => (svd.v_last.clone(), None, 0.0),
        WeightRule::MaxSnr => {
            let w = crate::receivers::max_snr_beamformer(direct);
            let d_sq = (1.0 - svd.v_last.dotc(&w).norm_sqr()).clamp(0.0, 1.0);
            (w, None, d_sq)
        }
    };
    let eta = (&svd.g * &w).norm_squared();
    let own_gain = (direct * &w).norm_squared();
    Ok(UserState {
        cell: svd.cell,
        user: svd.user,
        g: svd.g.clone(),
        sigma: svd.sigma.clone(),
        v_last: svd.v_last.clone(),
        w,
        cw_index,
        d_sq,
        eta,
        own_gain,
    })
}

/// Step 1 for a single user.
pub fn user_state(
    channels: &ChannelSet,
    bases: &ReferenceBasis,
    rule: WeightRule<'_>,
    cell: usize,
    user: usize,
) -> Result<UserState> {
    let svd = user_svd(channels, bases, cell, user)?;
    apply_rule(&svd, channels.h(cell, cell, user), rule)
}

/// All user states of one cell, in user order.
pub fn cell_user_states(
    channels: &ChannelSet,
    bases: &ReferenceBasis,
    rule: WeightRule<'_>,
    cell: usize,
) -> Result<Vec<UserState>> {
    (0..channels.users()).map(|j| user_state(channels, bases, rule, cell, j)).collect()
}

/// Builds the selection of one cell from its user states.
pub fn select_cell(states: &[UserState], rule: WeightRule<'_>, s: usize) -> Result<CellSelection> {
    let cell = states.first().map(|u| u.cell).unwrap_or(0);
    let selected = match rule {
        WeightRule::MaxSnr => {
            let neg: Vec<f64> = states.iter().map(|u| -u.own_gain).collect();
            select_users(&neg, s)?
        }
        _ => {
            let lifs: Vec<f64> = states.iter().map(|u| u.eta).collect();
            select_users(&lifs, s)?
        }
    };
    Ok(CellSelection {
        cell,
        weights: selected.iter().map(|&j| states[j].w.clone()).collect(),
        lifs: selected.iter().map(|&j| states[j].eta).collect(),
        cw_indices: selected.iter().map(|&j| states[j].cw_index).collect(),
        selected,
    })
}

/// Steps 1-2 for every cell.
///
/// With `MaxSnr` the selected users are ranked by own-cell gain instead, and
/// `lifs` then follows that order.
pub fn run_cell_pipeline(
    channels: &ChannelSet,
    bases: &ReferenceBasis,
    rule: WeightRule<'_>,
    s: usize,
) -> Result<Vec<CellSelection>> {
    if channels.cells() < 2 {
        return Err(OiaError::InvalidScenario("the OIA pipeline needs K >= 2 cells".into()));
    }
    if bases.cells() != channels.cells() {
        return domain("reference bases and channels disagree on the number of cells");
    }
    (0..channels.cells())
        .map(|i| {
            let states = cell_user_states(channels, bases, rule, i)?;
            select_cell(&states, rule, s)
        })
        .collect()
}
