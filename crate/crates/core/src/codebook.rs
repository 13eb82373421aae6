//! Beamforming codebooks: random and Grassmannian construction, weight
//! quantization, packing bounds and the on-disk text format.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{domain, OiaError, Result};
use crate::linalg::{random_unit_vector, CMat, CVec, HermEig, C64};

/// Codebook flavour recorded in the file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Random,
    Grassmannian,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Random => "random",
            Kind::Grassmannian => "grassmannian",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = OiaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Kind::Random),
            "grassmannian" => Ok(Kind::Grassmannian),
            other => Err(OiaError::Domain(format!("unknown codebook kind `{other}`"))),
        }
    }
}

/// Ordered set of unit vectors in C^L.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    kind: Kind,
    seed: u64,
    vectors: Vec<CVec>,
    min_chordal_sq: f64,
}

/// Outcome of quantizing one unit vector. `index` is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    pub index: usize,
    pub w: CVec,
    pub d_sq: f64,
}

impl Codebook {
    /// Wraps explicit codewords; each is normalized to unit length.
    pub fn from_vectors(kind: Kind, seed: u64, vectors: Vec<CVec>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return domain("codebook must contain at least one codeword");
        };
        let dim = first.len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return domain("codewords must share a positive dimension");
        }
        let vectors: Vec<CVec> = vectors
            .into_iter()
            .map(|v| {
                let n = v.norm();
                if n > 0.0 && n.is_finite() {
                    Ok(v / C64::from(n))
                } else {
                    domain("codeword has zero or non-finite norm")
                }
            })
            .collect::<Result<_>>()?;
        let min_chordal_sq = pairwise_min_chordal_sq(&vectors).unwrap_or(1.0);
        Ok(Codebook { dim, kind, seed, vectors, min_chordal_sq })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.vectors.len()
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    /// Cached minimum squared chordal distance (1 for single-codeword books).
    pub fn min_chordal_sq(&self) -> f64 {
        self.min_chordal_sq
    }

    /// Serializes to the plain-text codebook format: a header `L N_f kind seed`
    /// followed by one line per codeword with interleaved re/im parts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {} {}", self.dim, self.size(), self.kind.as_str(), self.seed);
        for v in &self.vectors {
            let line: Vec<String> = v.iter().flat_map(|z| [fmt17(z.re), fmt17(z.im)]).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`Codebook::to_text`]. Values are taken as
    /// written, without renormalization, so the round trip is bit-exact.
    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| OiaError::Parse { line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(perr(hline + 1, format!("header needs 4 fields, got {}", fields.len())));
        }
        let dim: usize = fields[0].parse().map_err(|e| perr(hline + 1, format!("L: {e}")))?;
        let size: usize = fields[1].parse().map_err(|e| perr(hline + 1, format!("N_f: {e}")))?;
        let kind: Kind = fields[2].parse().map_err(|e: OiaError| perr(hline + 1, e.to_string()))?;
        let seed: u64 = fields[3].parse().map_err(|e| perr(hline + 1, format!("seed: {e}")))?;
        if dim == 0 || size == 0 {
            return Err(perr(hline + 1, "L and N_f must be positive".into()));
        }
        let mut vectors = Vec::with_capacity(size);
        for (ln, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| perr(ln + 1, format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 2 * dim {
                return Err(perr(ln + 1, format!("expected {} values, got {}", 2 * dim, vals.len())));
            }
            vectors.push(CVec::from_fn(dim, |r, _| C64::new(vals[2 * r], vals[2 * r + 1])));
        }
        if vectors.len() != size {
            return Err(perr(0, format!("header declares {size} codewords, found {}", vectors.len())));
        }
        if vectors.iter().any(|v| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(perr(0, "codewords must have unit norm".into()));
        }
        let min_chordal_sq = pairwise_min_chordal_sq(&vectors).unwrap_or(1.0);
        Ok(Codebook { dim, kind, seed, vectors, min_chordal_sq })
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn pairwise_min_chordal_sq(vectors: &[CVec]) -> Option<f64> {
    if vectors.len() < 2 {
        return None;
    }
    let mut best = f64::INFINITY;
    for a in 0..vectors.len() {
        for b in (a + 1)..vectors.len() {
            let c = vectors[a].dotc(&vectors[b]).norm_sqr();
            best = best.min(1.0 - c);
        }
    }
    Some(best.clamp(0.0, 1.0))
}

/// `2^n_f` isotropic unit vectors in C^L.
pub fn gen_random_codebook<R: Rng + ?Sized>(l: usize, n_f: u32, rng: &mut R, seed: u64) -> Result<Codebook> {
    if l == 0 {
        return domain("codebook dimension must be >= 1");
    }
    let size = codebook_len(n_f)?;
    let vectors = (0..size).map(|_| random_unit_vector(rng, l)).collect();
    Codebook::from_vectors(Kind::Random, seed, vectors)
}

/// Largest supported feedforward bit count.
pub const MAX_FEEDBACK_BITS: u32 = 24;

fn codebook_len(n_f: u32) -> Result<usize> {
    if n_f > MAX_FEEDBACK_BITS {
        return domain(format!("n_f={n_f} exceeds the supported {MAX_FEEDBACK_BITS} bits"));
    }
    Ok(1usize << n_f)
}

/// Grassmannian line packing.
///
/// Each restart spreads random lines by descending an annealed Riesz energy
/// `sum (1 - |c_a^H c_b|^2)^(-s)`, then polishes the result by alternating
/// projection: clip off-diagonal Gram entries to a coherence target just below
/// the current one, project back onto rank-L Gram matrices with unit
/// diagonal, renormalize. The best iterate over all restarts is returned.
pub fn gen_grassmannian_codebook<R: Rng + ?Sized>(
    l: usize,
    n_f: u32,
    rng: &mut R,
    seed: u64,
    restarts: usize,
    iters: usize,
) -> Result<Codebook> {
    if l == 0 {
        return domain("codebook dimension must be >= 1");
    }
    let size = codebook_len(n_f)?;
    if l == 1 {
        log::warn!("L = 1: all unit scalars are equivalent, returning a single codeword");
        return Codebook::from_vectors(Kind::Grassmannian, seed, vec![CVec::from_element(1, C64::new(1.0, 0.0))]);
    }
    if size == 1 {
        return Codebook::from_vectors(Kind::Grassmannian, seed, vec![random_unit_vector(rng, l)]);
    }

    let floor = simplex_coherence_sq(l, size).sqrt();
    let mut best: Option<(f64, CMat)> = None;
    for _ in 0..restarts.max(1) {
        let init: Vec<CVec> = (0..size).map(|_| random_unit_vector(rng, l)).collect();
        let spread = riesz_descent(CMat::from_columns(&init), iters);
        let polished = if size <= POLISH_MAX_FACTOR * l * l {
            alternating_projection(spread, l, floor, iters / 2 + 1)
        } else {
            spread
        };
        let coh = max_coherence(&polished);
        if best.as_ref().is_none_or(|(b, _)| coh < *b) {
            best = Some((coh, polished));
        }
    }
    let (coh, frame) = best.expect("at least one restart");
    log::debug!("grassmannian L={l} N_f={size}: min chordal^2 {:.6}", 1.0 - coh * coh);
    let vecs = frame.column_iter().map(|c| c.into_owned()).collect();
    Codebook::from_vectors(Kind::Grassmannian, seed, vecs)
}

/// Restarts and iterations used by [`build_codebook`], scaled down for large
/// codebooks where each descent step is quadratic in the size.
pub fn default_effort(n_f: u32) -> (usize, usize) {
    match n_f {
        0..=6 => (4, 1000),
        7..=8 => (1, 600),
        _ => (1, 300),
    }
}

/// Deterministic codebook for `(kind, L, n_f, seed)`, drawn from the
/// dedicated codebook stream so every experiment sharing the seed agrees.
pub fn build_codebook(kind: Kind, l: usize, n_f: u32, seed: u64) -> Result<Codebook> {
    let mut rng = crate::rng::stream(seed, crate::rng::Purpose::Codebook, n_f as u64, l as u64, kind as u64);
    match kind {
        Kind::Random => gen_random_codebook(l, n_f, &mut rng, seed),
        Kind::Grassmannian => {
            let (restarts, iters) = default_effort(n_f);
            gen_grassmannian_codebook(l, n_f, &mut rng, seed, restarts, iters)
        }
    }
}

/// Alternating-projection polish only pays off for small codebooks; larger
/// ones are left as the energy descent produced them.
const POLISH_MAX_FACTOR: usize = 16;

/// Lower bound on the squared coherence of `n` lines in C^l (simplex bound),
/// i.e. one minus the largest achievable squared chordal distance.
pub fn simplex_coherence_sq(l: usize, n: usize) -> f64 {
    if n <= l {
        0.0
    } else {
        (n - l) as f64 / (l as f64 * (n as f64 - 1.0))
    }
}

/// Largest possible minimum squared chordal distance of `n` lines in C^l.
pub fn simplex_chordal_sq(l: usize, n: usize) -> f64 {
    1.0 - simplex_coherence_sq(l, n)
}

/// Largest `|c_a^H c_b|` over distinct columns.
fn max_coherence(frame: &CMat) -> f64 {
    let gram = frame.adjoint() * frame;
    let n = gram.nrows();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in (c + 1)..n {
            worst = worst.max(gram[(r, c)].norm());
        }
    }
    worst
}

fn normalize_columns(frame: &mut CMat) {
    for mut col in frame.column_iter_mut() {
        let norm = col.norm();
        if norm > 1e-300 {
            col.unscale_mut(norm);
        }
    }
}

fn riesz_descent(frame: CMat, iters: usize) -> CMat {
    let (l, n) = frame.shape();
    // Codeword a occupies cols[a * l..(a + 1) * l].
    let mut cols: Vec<C64> = frame.as_slice().to_vec();
    let mut grad = vec![C64::new(0.0, 0.0); l * n];
    let mut best_coh = f64::INFINITY;
    let mut best = cols.clone();
    let step = 0.1 / (n as f64).sqrt();

    for t in 0..=iters {
        let s = 1 + (8 * t / iters.max(1)) as i32;
        grad.iter_mut().for_each(|g| *g = C64::new(0.0, 0.0));
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let (ca, cb) = (&cols[a * l..(a + 1) * l], &cols[b * l..(b + 1) * l]);
                // g = c_a^H c_b
                let g: C64 = ca.iter().zip(cb).map(|(x, y)| x.conj() * y).sum();
                let mag_sq = g.norm_sqr();
                worst = worst.max(mag_sq);
                let d = (1.0 - mag_sq).max(1e-12);
                let w = s as f64 * d.powi(-s - 1);
                let (wb, wa) = (g * w, g.conj() * w);
                for r in 0..l {
                    grad[b * l + r] += cols[a * l + r] * wb;
                    grad[a * l + r] += cols[b * l + r] * wa;
                }
            }
        }
        let coh = worst.sqrt();
        if coh < best_coh {
            best_coh = coh;
            best.copy_from_slice(&cols);
        }
        if t == iters {
            break;
        }

        let mut gmax: f64 = 0.0;
        for a in 0..n {
            let (c, g) = (&cols[a * l..(a + 1) * l], &mut grad[a * l..(a + 1) * l]);
            let along: C64 = c.iter().zip(g.iter()).map(|(x, y)| x.conj() * y).sum();
            for r in 0..l {
                g[r] -= c[r] * along;
            }
            gmax = gmax.max(g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        if gmax <= 0.0 || !gmax.is_finite() {
            break;
        }
        let scale = step / gmax;
        for a in 0..n {
            let c = &mut cols[a * l..(a + 1) * l];
            for r in 0..l {
                c[r] -= grad[a * l + r] * scale;
            }
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-300 {
                c.iter_mut().for_each(|z| *z /= norm);
            }
        }
    }
    CMat::from_vec(l, n, best)
}

fn alternating_projection(mut frame: CMat, l: usize, floor: f64, iters: usize) -> CMat {
    let n = frame.ncols();
    let mut best_coh = max_coherence(&frame);
    let mut best = frame.clone();
    let target = (0.98 * best_coh).max(floor);

    for _ in 0..iters {
        // Structural projection: unit diagonal, off-diagonal magnitudes clipped.
        let mut gram = frame.adjoint() * &frame;
        for c in 0..n {
            for r in 0..n {
                if r == c {
                    gram[(r, c)] = C64::new(1.0, 0.0);
                    continue;
                }
                let g = gram[(r, c)];
                let mag = g.norm();
                if mag > target {
                    gram[(r, c)] = g * (target / mag);
                }
            }
        }

        // Spectral projection onto rank l, via warm-started subspace
        // iteration and a Rayleigh-Ritz step.
        let mut basis = frame.adjoint();
        for _ in 0..3 {
            basis = (&gram * &basis).qr().q();
        }
        let small = basis.adjoint() * &gram * &basis;
        let small = (&small + small.adjoint()) * C64::from(0.5);
        let eig = HermEig::new(&small);
        let mut next = CMat::zeros(l, n);
        for (row, k) in (0..l).rev().enumerate() {
            let amp = eig.values[k].max(0.0).sqrt();
            let ritz = &basis * eig.vectors.column(k);
            for c in 0..n {
                next[(row, c)] = ritz[c].conj() * amp;
            }
        }
        for c in 0..n {
            if next.column(c).norm() <= 1e-300 {
                next.set_column(c, &frame.column(c));
            }
        }
        normalize_columns(&mut next);
        frame = next;

        let coh = max_coherence(&frame);
        if coh < best_coh {
            best_coh = coh;
            best.copy_from(&frame);
        }
    }
    best
}

/// Combined packing bound `min{1/2, (L-1)N_f / (2L(N_f-1)), N_f^(-1/(L-1))}`
/// on the squared residual distance.
pub fn packing_bound(l: usize, n_codewords: usize) -> Result<f64> {
    if n_codewords < 2 {
        return domain(format!("packing bound needs N_f >= 2, got {n_codewords}"));
    }
    if l == 0 {
        return domain("dimension must be >= 1");
    }
    let lf = l as f64;
    let nf = n_codewords as f64;
    let rankin = (lf - 1.0) * nf / (2.0 * lf * (nf - 1.0));
    let third = if l == 1 { 0.0 } else { nf.powf(-1.0 / (lf - 1.0)) };
    Ok(0.5_f64.min(rankin).min(third))
}

/// Quantization-distance bound `(1/N_f)^(1/(L-1))`.
pub fn nu_f(l: usize, n_codewords: usize) -> Result<f64> {
    if l < 2 {
        return domain(format!("nu_f needs L >= 2, got {l}"));
    }
    if n_codewords == 0 {
        return domain("nu_f needs N_f >= 1");
    }
    Ok((1.0 / n_codewords as f64).powf(1.0 / (l as f64 - 1.0)))
}

/// Picks the codeword most aligned with `v` (largest `|v^H c|^2`, lowest index
/// on ties) and reports the squared residual distance.
pub fn quantize(v: &CVec, codebook: &Codebook) -> Result<QuantizationResult> {
    if codebook.vectors.is_empty() {
        return domain("empty codebook");
    }
    if v.len() != codebook.dim {
        return domain(format!("vector has dimension {}, codebook {}", v.len(), codebook.dim));
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return domain(format!("quantize expects a unit vector, norm = {norm}"));
    }
    let v = v / C64::from(norm);
    let mut index = 0;
    let mut best = -1.0;
    for (n, c) in codebook.vectors.iter().enumerate() {
        let corr = v.dotc(c).norm_sqr();
        if corr > best {
            best = corr;
            index = n;
        }
    }
    let raw = 1.0 - best;
    let d_sq = if raw < 0.0 {
        if raw < -1e-12 {
            return Err(OiaError::Domain(format!("residual distance {raw:e} below roundoff tolerance")));
        }
        0.0
    } else {
        raw.min(1.0)
    };
    Ok(QuantizationResult { index, w: codebook.vectors[index].clone(), d_sq })
}

/// CDF of the squared residual distance under a random codebook:
/// `1 - (1 - z^(L-1))^N_f`.
pub fn residual_distance_cdf(l: usize, n_codewords: usize, z: f64) -> Result<f64> {
    if l < 2 {
        return domain(format!("residual distance CDF needs L >= 2, got {l}"));
    }
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("z = {z} outside [0, 1]"));
    }
    Ok(1.0 - (1.0 - z.powi(l as i32 - 1)).powi(n_codewords as i32))
}

/// Minimum squared chordal distance `min_{a<b} 1 - |c_a^H c_b|^2`.
pub fn min_chordal_distance(codebook: &Codebook) -> Result<f64> {
    pairwise_min_chordal_sq(&codebook.vectors)
        .ok_or_else(|| OiaError::Domain("min chordal distance needs at least two codewords".into()))
}
