use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::euclidean::{check_fraction, check_ray_parameter};
use super::linalg::{
    asymmetry, flatten, floored_ln, from_upper_triangle, reversed_cholesky, symmetric_basis, symmetrize, unflatten,
    upper_triangle, Spectral,
};
use super::{sphere_tangent_frame, DirectionMode, Geometry, ManifoldContext, Orthogonal, TangentVector, SYMMETRY_TOL};
use crate::error::{HoroError, Result};

/// Symmetric positive-definite matrix, stored with its spectral
/// decomposition (eigenvalues in decreasing order).
///
/// Points built from a known spectrum (rays, exponentials at the identity)
/// keep that spectrum exactly rather than re-diagonalizing the assembled
/// matrix, which would lose the small eigenvalues of badly conditioned
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdPoint {
    matrix: DMatrix<f64>,
    spectral: Spectral,
}

impl SpdPoint {
    /// Validates symmetry (within `SYMMETRY_TOL`, then symmetrizes) and
    /// positive definiteness (Cholesky must succeed).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(HoroError::invalid("SPD point must be a nonempty square matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(HoroError::domain("SPD matrix entries must be finite"));
        }
        let scale = matrix.amax().max(1.0);
        if asymmetry(&matrix) > SYMMETRY_TOL * scale {
            return Err(HoroError::domain("matrix is not symmetric"));
        }
        let matrix = symmetrize(&matrix);
        if matrix.clone().cholesky().is_none() {
            return Err(HoroError::domain("matrix is not positive definite"));
        }
        let spectral = Spectral::of(&matrix);
        if spectral.values.iter().any(|&v| v <= 0.0) {
            return Err(HoroError::domain("matrix is not positive definite"));
        }
        Ok(SpdPoint { matrix, spectral })
    }

    pub fn from_rows(p: usize, row_major: &[f64]) -> Result<Self> {
        HoroError::check_dim(p * p, row_major.len())?;
        Self::new(DMatrix::from_row_slice(p, p, row_major))
    }

    /// `V diag(values) Vᵀ` for orthogonal `V` and positive `values`.
    pub fn from_spectral(values: DVector<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(HoroError::domain("eigenvalues must be positive and finite"));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        let sorted_values = DVector::from_iterator(values.len(), order.iter().map(|&i| values[i]));
        let mut sorted_vectors = DMatrix::zeros(vectors.nrows(), vectors.ncols());
        for (dst, &src) in order.iter().enumerate() {
            sorted_vectors.set_column(dst, &vectors.column(src));
        }
        let spectral = Spectral { values: sorted_values, vectors: sorted_vectors };
        Ok(SpdPoint { matrix: spectral.reconstruct(), spectral })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.spectral.map(f64::sqrt)
    }

    fn inv_sqrt(&self) -> DMatrix<f64> {
        self.spectral.map(|v| 1.0 / v.sqrt())
    }

    fn is_identity(&self) -> bool {
        let p = self.size();
        self.matrix == DMatrix::identity(p, p)
    }

    /// `Wᵀ X W` assembled from the spectrum: `(WᵀV) diag(λ) (WᵀV)ᵀ`.
    fn congruence_by(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let m = if *w == self.spectral.vectors {
            DMatrix::identity(self.size(), self.size())
        } else {
            w.transpose() * &self.spectral.vectors
        };
        let mut scaled = m.clone();
        for j in 0..self.size() {
            scaled.column_mut(j).scale_mut(self.spectral.values[j]);
        }
        symmetrize(&(scaled * m.transpose()))
    }
}

/// Boundary direction of the SPD cone: a unit-Frobenius symmetric matrix `H`
/// with its spectral decomposition `H = QΛQᵀ`, eigenvalues in decreasing
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdDirection {
    h: DMatrix<f64>,
    q: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl SpdDirection {
    /// Symmetrizes and Frobenius-normalizes `h`.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if !h.is_square() || h.is_empty() {
            return Err(HoroError::invalid("direction must be a nonempty square matrix"));
        }
        let scale = h.amax().max(1.0);
        if asymmetry(&h) > SYMMETRY_TOL * scale {
            return Err(HoroError::invalid("direction matrix is not symmetric"));
        }
        let h = symmetrize(&h);
        let norm = h.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(HoroError::invalid("direction must be a finite nonzero matrix"));
        }
        let h = h / norm;
        let spectral = Spectral::of(&h);
        Ok(SpdDirection { h, q: spectral.vectors, lambda: spectral.values })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn size(&self) -> usize {
        self.h.nrows()
    }

    /// Coordinates in the Frobenius-isometric chart of symmetric matrices.
    fn isometric_coords(&self) -> DVector<f64> {
        let basis = symmetric_basis(self.size());
        DVector::from_iterator(basis.len(), basis.iter().map(|e| e.dot(&self.h)))
    }
}

/// Symmetric positive-definite `p×p` matrices with the affine-invariant
/// metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpdCone {
    size: usize,
}

impl SpdCone {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(HoroError::invalid("matrix size must be positive"));
        }
        Ok(SpdCone { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn point(&self, matrix: DMatrix<f64>) -> Result<SpdPoint> {
        HoroError::check_dim(self.size, matrix.nrows())?;
        SpdPoint::new(matrix)
    }

    pub fn direction(&self, h: DMatrix<f64>) -> Result<SpdDirection> {
        HoroError::check_dim(self.size, h.nrows())?;
        SpdDirection::new(h)
    }

    /// `B_H(X) = −2 ⟨Λ, log diag 𝒰(QᵀXQ)⟩` with `𝒰` the reversed Cholesky
    /// factor.
    pub fn try_busemann(&self, h: &SpdDirection, x: &SpdPoint) -> Result<f64> {
        HoroError::check_dim(h.size(), x.size())?;
        let y = x.congruence_by(&h.q);
        let u = reversed_cholesky(&y)?;
        let mut acc = 0.0;
        for i in 0..self.size {
            acc += h.lambda[i] * u[(i, i)].ln();
        }
        Ok(-2.0 * acc)
    }

    /// Matrix exponential of a symmetric matrix, as a point of the cone.
    pub fn exp_symmetric(&self, s: &DMatrix<f64>) -> Result<SpdPoint> {
        HoroError::check_dim(self.size, s.nrows())?;
        let spectral = Spectral::of(s);
        SpdPoint::from_spectral(spectral.values.map(f64::exp), spectral.vectors)
    }

    /// Upper triangle, row-major.
    pub fn point_row(x: &SpdPoint) -> Vec<f64> {
        upper_triangle(x.matrix())
    }
}

impl Geometry for SpdCone {
    type Point = SpdPoint;
    type Direction = SpdDirection;

    fn context(&self) -> ManifoldContext {
        ManifoldContext::SpdCone { size: self.size }
    }

    fn base_point(&self) -> SpdPoint {
        let p = self.size;
        SpdPoint {
            matrix: DMatrix::identity(p, p),
            spectral: Spectral { values: DVector::from_element(p, 1.0), vectors: DMatrix::identity(p, p) },
        }
    }

    fn busemann(&self, xi: &SpdDirection, x: &SpdPoint) -> f64 {
        self.try_busemann(xi, x).unwrap_or_else(|e| {
            log::error!("SPD Busemann evaluation failed: {e}");
            f64::NAN
        })
    }

    /// `‖log(X^{−1/2} Y X^{−1/2})‖_F`.
    fn distance(&self, x: &SpdPoint, y: &SpdPoint) -> f64 {
        // Work in the eigenbasis of X: D^{-1/2} (VᵀYV) D^{-1/2}.
        let mut w = y.congruence_by(&x.spectral.vectors);
        for i in 0..self.size {
            for j in 0..self.size {
                w[(i, j)] /= (x.spectral.values[i] * x.spectral.values[j]).sqrt();
            }
        }
        let ev = Spectral::of(&w).values;
        ev.iter().map(|&v| floored_ln(v).powi(2)).sum::<f64>().sqrt()
    }

    /// `X^{1/2} (X^{−1/2} Y X^{−1/2})^s X^{1/2}`.
    fn geodesic_point(&self, x: &SpdPoint, y: &SpdPoint, s: f64) -> Result<SpdPoint> {
        check_fraction(s)?;
        if s == 0.0 {
            return Ok(x.clone());
        }
        if s == 1.0 {
            return Ok(y.clone());
        }
        let root = x.sqrt();
        let inv_root = x.inv_sqrt();
        let inner = Spectral::of(&(&inv_root * y.matrix() * &inv_root));
        let powered = inner.map(|v| v.max(f64::MIN_POSITIVE).powf(s));
        SpdPoint::new(&root * powered * &root)
    }

    fn exp_map(&self, base: &SpdPoint, v: &TangentVector) -> Result<SpdPoint> {
        HoroError::check_dim(self.size * self.size, v.len())?;
        let v = symmetrize(&unflatten(v, self.size));
        if base.is_identity() {
            return self.exp_symmetric(&v);
        }
        let root = base.sqrt();
        let inv_root = base.inv_sqrt();
        let inner = Spectral::of(&(&inv_root * v * &inv_root));
        if inner.values.iter().any(|&l| l > 700.0) {
            return Err(HoroError::domain("exponential map overflows"));
        }
        SpdPoint::new(&root * inner.map(f64::exp) * &root)
    }

    fn log_map(&self, base: &SpdPoint, x: &SpdPoint) -> TangentVector {
        let root = base.sqrt();
        let inv_root = base.inv_sqrt();
        let inner = Spectral::of(&(&inv_root * x.matrix() * &inv_root)).map(floored_ln);
        flatten(&symmetrize(&(&root * inner * &root)))
    }

    fn tangent_norm(&self, base: &SpdPoint, v: &TangentVector) -> f64 {
        let inv_root = base.inv_sqrt();
        (&inv_root * unflatten(v, self.size) * &inv_root).norm()
    }

    fn tangent_basis(&self, base: &SpdPoint) -> Vec<TangentVector> {
        let root = base.sqrt();
        symmetric_basis(self.size).into_iter().map(|e| flatten(&symmetrize(&(&root * e * &root)))).collect()
    }

    /// From the identity the ray toward `H` is `exp(tH)`. From a general
    /// base `X` with `QᵀXQ = UUᵀ` (reversed Cholesky) it is
    /// `(QU) e^{tΛ} (QU)ᵀ`, which shares the horocyclic component of `X`.
    fn ray_point(&self, base: &SpdPoint, xi: &SpdDirection, t: f64) -> Result<SpdPoint> {
        HoroError::check_dim(self.size, xi.size())?;
        check_ray_parameter(t, self.max_ray_parameter())?;
        if base.is_identity() {
            return SpdPoint::from_spectral(xi.lambda.map(|l| (t * l).exp()), xi.q.clone());
        }
        let u = reversed_cholesky(&base.congruence_by(&xi.q))?;
        let qu = &xi.q * u;
        let mut scaled = qu.clone();
        for j in 0..self.size {
            scaled.column_mut(j).scale_mut((t * xi.lambda[j]).exp());
        }
        SpdPoint::new(scaled * qu.transpose())
    }

    /// Keeps `e^{t(λ_max − λ_min)}` (at most `e^{√2 t}`) below `1e300`.
    fn max_ray_parameter(&self) -> f64 {
        480.0
    }

    fn sample_directions(&self, m: usize, mode: DirectionMode) -> Result<Vec<SpdDirection>> {
        if m == 0 {
            return Err(HoroError::invalid("number of directions must be at least 1"));
        }
        let DirectionMode::Random { seed } = mode else {
            return Err(HoroError::invalid("grid directions are not defined on the SPD cone"));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.size;
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(dir) = SpdDirection::new(symmetrize(&a)) {
                out.push(dir);
            }
        }
        Ok(out)
    }

    fn direction_dof(&self) -> usize {
        self.size * (self.size + 1) / 2 - 1
    }

    fn perturb_direction(&self, xi: &SpdDirection, axis: usize, step: f64) -> SpdDirection {
        let coords = xi.isometric_coords();
        let frame = sphere_tangent_frame(&coords);
        let Some(e) = frame.get(axis) else {
            return xi.clone();
        };
        let moved = &coords * step.cos() + e * step.sin();
        let basis = symmetric_basis(self.size);
        let mut h = DMatrix::zeros(self.size, self.size);
        for (c, b) in moved.iter().zip(&basis) {
            h += b * *c;
        }
        SpdDirection::new(h).unwrap_or_else(|_| xi.clone())
    }

    fn apply_isometry(&self, iso: &Orthogonal, x: &SpdPoint) -> Result<SpdPoint> {
        HoroError::check_dim(self.size, iso.size())?;
        let r = iso.matrix();
        let vectors = r * &x.spectral.vectors;
        let spectral = Spectral { values: x.spectral.values.clone(), vectors };
        Ok(SpdPoint { matrix: spectral.reconstruct(), spectral })
    }

    fn boundary_action(&self, iso: &Orthogonal, xi: &SpdDirection) -> Result<SpdDirection> {
        HoroError::check_dim(self.size, iso.size())?;
        let r = iso.matrix();
        Ok(SpdDirection { h: symmetrize(&(r * &xi.h * r.transpose())), q: r * &xi.q, lambda: xi.lambda.clone() })
    }

    fn point_from_row(&self, row: &[f64]) -> Result<SpdPoint> {
        HoroError::check_dim(self.point_width(), row.len())?;
        let m = from_upper_triangle(row).expect("width checked above");
        SpdPoint::new(m)
    }

    fn point_to_row(&self, x: &SpdPoint) -> Vec<f64> {
        upper_triangle(x.matrix())
    }

    fn point_width(&self) -> usize {
        self.size * (self.size + 1) / 2
    }

    fn direction_from_row(&self, row: &[f64]) -> Result<SpdDirection> {
        HoroError::check_dim(self.point_width(), row.len())?;
        let m = from_upper_triangle(row).expect("width checked above");
        SpdDirection::new(m)
    }

    fn direction_to_row(&self, xi: &SpdDirection) -> Vec<f64> {
        upper_triangle(xi.matrix())
    }
}
