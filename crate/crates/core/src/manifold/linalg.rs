//! Dense symmetric linear algebra used by the SPD cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{HoroError, Result};

/// Eigenvalues below this floor are clamped before taking logarithms.
pub const EIGEN_FLOOR: f64 = 1e-300;

/// Spectral decomposition `A = V diag(values) Vᵀ` with eigenvalues sorted in
/// decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectral {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectral {
    pub fn of(a: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(symmetrize(a));
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Spectral { values, vectors }
    }

    /// `V diag(f(values)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|x| x)
    }
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Maximum entrywise asymmetry `|A − Aᵀ|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a - a.transpose()).amax()
}

/// Logarithm with eigenvalue floor; clamping is reported through `log`.
pub(crate) fn floored_ln(x: f64) -> f64 {
    if x < EIGEN_FLOOR {
        log::warn!("eigenvalue {x:e} clamped to {EIGEN_FLOOR:e} before logarithm");
        EIGEN_FLOOR.ln()
    } else {
        x.ln()
    }
}

pub fn sym_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    Spectral::of(a).map(f64::exp)
}

pub fn sym_log(a: &DMatrix<f64>) -> DMatrix<f64> {
    Spectral::of(a).map(floored_ln)
}

/// Real power of a positive-definite matrix.
pub fn sym_pow(a: &DMatrix<f64>, power: f64) -> DMatrix<f64> {
    Spectral::of(a).map(|x| x.max(EIGEN_FLOOR).powf(power))
}

/// Anti-diagonal exchange matrix `J`.
pub fn exchange(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}

/// Reversed Cholesky factor: the upper-triangular `U` with positive diagonal
/// such that `X = U Uᵀ`, computed as `J L J` where `L` is the lower Cholesky
/// factor of `J X J`.
pub fn reversed_cholesky(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n != x.ncols() {
        return Err(HoroError::DimensionMismatch { expected: n, found: x.ncols() });
    }
    // J X J reverses both the row and the column order.
    let flipped = DMatrix::from_fn(n, n, |i, j| x[(n - 1 - i, n - 1 - j)]);
    let chol = flipped.cholesky().ok_or_else(|| HoroError::Factorization("matrix is not positive definite".into()))?;
    let l = chol.l();
    Ok(DMatrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)]))
}

/// Orthonormal basis of symmetric `p×p` matrices under the Frobenius inner
/// product: `e_ii` followed by `(e_ij + e_ji)/√2` for `i < j`.
pub fn symmetric_basis(p: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        let mut e = DMatrix::zeros(p, p);
        e[(i, i)] = 1.0;
        out.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..p {
        for j in (i + 1)..p {
            let mut e = DMatrix::zeros(p, p);
            e[(i, j)] = r;
            e[(j, i)] = r;
            out.push(e);
        }
    }
    out
}

/// Upper triangle in row-major order: `a11, a12, …, a1p, a22, …, app`.
pub fn upper_triangle(a: &DMatrix<f64>) -> Vec<f64> {
    let p = a.nrows();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Inverse of [`upper_triangle`]; `None` when the length is not triangular.
pub fn from_upper_triangle(values: &[f64]) -> Option<DMatrix<f64>> {
    let p = triangular_size(values.len())?;
    let mut a = DMatrix::zeros(p, p);
    let mut k = 0;
    for i in 0..p {
        for j in i..p {
            a[(i, j)] = values[k];
            a[(j, i)] = values[k];
            k += 1;
        }
    }
    Some(a)
}

/// `p` such that `p(p+1)/2 = len`.
pub fn triangular_size(len: usize) -> Option<usize> {
    let mut p = 0;
    while p * (p + 1) / 2 < len {
        p += 1;
    }
    (p * (p + 1) / 2 == len && p > 0).then_some(p)
}

pub fn flatten(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unflatten(v: &DVector<f64>, p: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(p, p, v.as_slice())
}
