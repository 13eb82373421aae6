//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Every matrix in the simulator is tiny (a few antennas on each side), so
//! dynamically sized matrices are used throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Draws one circularly-symmetric complex Gaussian sample with total variance
/// `variance` (each of the real and imaginary parts carries `variance / 2`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// `rows x cols` matrix of i.i.d. CN(0, variance) entries, filled column-major.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng, variance))
}

/// Isotropic unit vector in C^dim.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    loop {
        let v = CVec::from_fn(dim, |_, _| complex_normal(rng, 1.0));
        let n = v.norm();
        if n > 1e-300 {
            return v / C64::from(n);
        }
    }
}

/// Haar-distributed `dim x dim` unitary.
///
/// QR of an i.i.d. complex Gaussian matrix, with each column of `Q` rotated by
/// the phase of the matching diagonal entry of `R` so that `R` has a positive
/// real diagonal and the factorization is unique.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let a = complex_gaussian(rng, dim, dim, 1.0);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        let d = r[(c, c)];
        let mag = d.norm();
        let phase = if mag > 0.0 { d / mag } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Rotates `v` so that its largest-magnitude entry (lowest index on ties) is
/// real and positive.
pub fn phase_normalize(v: &CVec) -> CVec {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (idx, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = idx;
        }
    }
    if best_mag <= 0.0 {
        return v.clone();
    }
    let phase = v[best].conj() / best_mag;
    v * phase
}

/// Singular values (descending, length = number of columns) and the matching
/// right-singular vectors as columns of an `cols x cols` unitary.
///
/// Wide matrices are padded with zero rows so that the full right-singular
/// basis, including null-space directions, is always available.
pub fn right_svd(g: &CMat) -> (Vec<f64>, CMat) {
    let cols = g.ncols();
    let padded;
    let a = if g.nrows() < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (g.nrows(), cols)).copy_from(g);
        padded = p;
        &padded
    } else {
        g
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));
    let sigma = order.iter().map(|&k| svd.singular_values[k].max(0.0)).collect();
    let mut v = CMat::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_t.row(src).adjoint());
    }
    (sigma, v)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEig {
    pub fn new(a: &CMat) -> Self {
        let eig = SymmetricEigen::new(a.clone());
        let n = a.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        HermEig { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Natural-log determinant; assumes positive eigenvalues.
    pub fn ln_det(&self) -> f64 {
        self.values.iter().map(|l| l.ln()).sum()
    }

    /// `V f(Λ) V^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let s = C64::from(f(self.values[c]));
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Validates that `a` is Hermitian positive definite and returns its
/// eigendecomposition.
pub fn hermitian_pd(a: &CMat, name: &str) -> Result<HermEig> {
    if !a.is_square() {
        return domain(format!("{name} must be square, got {}x{}", a.nrows(), a.ncols()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return domain(format!("{name} has non-finite entries"));
    }
    let scale = a.norm().max(1.0);
    if (a - a.adjoint()).norm() > 1e-9 * scale {
        return domain(format!("{name} is not Hermitian"));
    }
    let herm = (a + a.adjoint()) * C64::from(0.5);
    let eig = HermEig::new(&herm);
    if eig.min() <= 0.0 {
        return domain(format!("{name} is not positive definite (min eigenvalue {:.3e})", eig.min()));
    }
    Ok(eig)
}

/// `log2 det(I + A)` for Hermitian positive semidefinite `A`.
pub fn log2_det_identity_plus(a: &CMat) -> f64 {
    let n = a.nrows();
    let herm = (a + a.adjoint()) * C64::from(0.5) + CMat::identity(n, n);
    HermEig::new(&herm).values.iter().map(|l| l.max(f64::MIN_POSITIVE).ln()).sum::<f64>()
        / std::f64::consts::LN_2
}

/// Real part of the trace.
pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Frobenius norm of `a^H b`, a cheap orthogonality residual.
pub fn cross_gram_norm(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return 0.0;
    }
    (a.adjoint() * b).norm()
}

/// Embeds a real column-major slice as a complex matrix, mostly for tests.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
}

/// Real diagonal as a complex matrix.
pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = C64::new(v, 0.0);
    }
    m
}

/// Condition-number estimate from singular values of a square matrix.
pub fn condition_number(a: &CMat) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Column-wise real parts, convenient for assembling small real test fixtures.
pub fn to_real(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}
