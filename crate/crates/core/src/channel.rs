//! Scenario parameters, channel draws and per-cell reference bases.

use crate::error::{OiaError, Result};
use crate::linalg::{complex_gaussian, haar_unitary, CMat};
use crate::rng::{Purpose, TrialStreams};

/// How users pick their transmit weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodebookKind {
    Random,
    Grassmannian,
    /// Unquantized SVD weights (codebook bypassed).
    SvdExact,
}

impl CodebookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodebookKind::Random => "random",
            CodebookKind::Grassmannian => "grassmannian",
            CodebookKind::SvdExact => "svd_exact",
        }
    }
}

impl std::str::FromStr for CodebookKind {
    type Err = OiaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(CodebookKind::Random),
            "grassmannian" => Ok(CodebookKind::Grassmannian),
            "svd_exact" => Ok(CodebookKind::SvdExact),
            other => Err(OiaError::InvalidScenario(format!("unknown codebook kind `{other}`"))),
        }
    }
}

/// Immutable experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of cells.
    pub k: usize,
    /// Base-station antennas.
    pub m: usize,
    /// Users per cell.
    pub n: usize,
    /// Antennas per user.
    pub l: usize,
    /// Users selected per cell.
    pub s: usize,
    /// SNR points in dB, with SNR = 1/N0.
    pub snr_db: Vec<f64>,
    pub codebook_kind: CodebookKind,
    /// Feedforward bits; the codebook holds `2^n_f` codewords.
    pub n_f: u32,
    pub trials: usize,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with the given dimensions and neutral defaults for the rest.
    pub fn new(k: usize, m: usize, n: usize, l: usize, s: usize) -> Result<Self> {
        let sc = Scenario {
            k,
            m,
            n,
            l,
            s,
            snr_db: vec![20.0],
            codebook_kind: CodebookKind::SvdExact,
            n_f: 0,
            trials: 1,
            seed: 0,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(OiaError::InvalidScenario(msg));
        if self.k == 0 || self.m == 0 || self.l == 0 {
            return bad(format!("K, M, L must be >= 1 (K={}, M={}, L={})", self.k, self.m, self.l));
        }
        if self.s == 0 || self.s > self.m {
            return bad(format!("S must lie in 1..=M (S={}, M={})", self.s, self.m));
        }
        if self.n < self.s {
            return bad(format!("N must be >= S (N={}, S={})", self.n, self.s));
        }
        if self.n_f > crate::codebook::MAX_FEEDBACK_BITS {
            return bad(format!("n_f={} is too large for an exhaustive codebook", self.n_f));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) {
            return bad("SNR grid contains non-finite values".into());
        }
        if self.k >= 2 && (self.k - 1) * self.s < self.l {
            log::warn!(
                "(K-1)S = {} < L = {}: interference can be nulled exactly, sigma_L = 0 almost surely",
                (self.k - 1) * self.s,
                self.l
            );
        }
        Ok(())
    }

    /// Checks the extra requirement of the alignment pipeline.
    pub fn require_interference(&self) -> Result<()> {
        if self.k < 2 {
            return Err(OiaError::InvalidScenario("the OIA pipeline needs K >= 2 cells".into()));
        }
        Ok(())
    }

    /// Codebook size `N_f = 2^n_f`.
    pub fn codebook_size(&self) -> usize {
        1usize << self.n_f
    }

    pub fn with_users(&self, n: usize) -> Self {
        Scenario { n, ..self.clone() }
    }
}

/// Noise power for an SNR in dB (SNR = 1/N0).
pub fn n0_from_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// All channel matrices of one trial: `h(k, i, j)` is the `M x L` channel
/// from user `j` of cell `i` to base station `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    k: usize,
    n: usize,
    mats: Vec<CMat>,
}

impl ChannelSet {
    /// Builds a set from an explicit generator, mainly for tests.
    pub fn from_fn(k: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> CMat) -> Self {
        let mut mats = Vec::with_capacity(k * k * n);
        for bs in 0..k {
            for cell in 0..k {
                for user in 0..n {
                    mats.push(f(bs, cell, user));
                }
            }
        }
        ChannelSet { k, n, mats }
    }

    pub fn cells(&self) -> usize {
        self.k
    }

    pub fn users(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Channel from user `j` of cell `i` to base station `k`.
    pub fn h(&self, k: usize, i: usize, j: usize) -> &CMat {
        &self.mats[(k * self.k + i) * self.n + j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMat> {
        self.mats.iter()
    }
}

/// Draws i.i.d. CN(0, 1/L) channels for one trial.
///
/// User `(i, j)` owns its own stream, so the first `N` users of a trial are
/// identical whatever the total user count is.
pub fn draw_channel_set(scenario: &Scenario, streams: &TrialStreams) -> ChannelSet {
    let (k, n, m, l) = (scenario.k, scenario.n, scenario.m, scenario.l);
    let variance = 1.0 / l as f64;
    let mut per_user: Vec<Vec<CMat>> = Vec::with_capacity(k * n);
    for cell in 0..k {
        for user in 0..n {
            let mut rng = streams.get(Purpose::Channel, cell as u64, user as u64);
            per_user.push((0..k).map(|_| complex_gaussian(&mut rng, m, l, variance)).collect());
        }
    }
    ChannelSet::from_fn(k, n, |bs, cell, user| per_user[cell * n + user][bs].clone())
}

/// Per-cell reference basis `Q_k` (interference) and signal basis `U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis {
    pub q: Vec<CMat>,
    pub u: Vec<CMat>,
}

impl ReferenceBasis {
    pub fn cells(&self) -> usize {
        self.u.len()
    }
}

/// Draws a Haar-random orthonormal split `[Q_k, U_k]` for every cell.
pub fn draw_reference_bases(scenario: &Scenario, streams: &TrialStreams) -> ReferenceBasis {
    let (m, s) = (scenario.m, scenario.s);
    let mut q = Vec::with_capacity(scenario.k);
    let mut u = Vec::with_capacity(scenario.k);
    for cell in 0..scenario.k {
        let mut rng = streams.get(Purpose::Basis, cell as u64, 0);
        let w = haar_unitary(&mut rng, m);
        q.push(w.columns(0, m - s).into_owned());
        u.push(w.columns(m - s, s).into_owned());
    }
    ReferenceBasis { q, u }
}
