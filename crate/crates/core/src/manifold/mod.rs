//! Geometry kernels for the three supported Hadamard manifolds.
//!
//! Every manifold implements [`Geometry`]: points, boundary directions,
//! Busemann functions normalized to vanish at a fixed base point, distances,
//! geodesics, exponential and logarithm maps, base-point-fixing isometries
//! and seeded direction samplers. The base point is the origin for
//! [`Euclidean`] and [`PoincareBall`], and the identity matrix for [`SpdCone`].

mod ball;
mod euclidean;
pub mod linalg;
mod spd;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HoroError, Result};

pub use ball::{BallPoint, PoincareBall, BALL_MARGIN};
pub use euclidean::{Euclidean, EuclideanPoint};
pub use spd::{SpdCone, SpdDirection, SpdPoint};

/// Unit-norm tolerance for sphere directions.
pub const UNIT_TOL: f64 = 1e-12;
/// Maximum entrywise deviation of `QᵀQ` from the identity for isometries.
pub const ORTHOGONAL_TOL: f64 = 1e-8;
/// Symmetry tolerance for SPD points and tangent matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Tangent vectors are stored in ambient coordinates: a `d`-vector for the
/// flat and ball models, a column-major flattened symmetric `p×p` matrix for
/// the SPD cone.
pub type TangentVector = DVector<f64>;

/// Tagged selection of the active manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldContext {
    Euclidean { dim: usize },
    PoincareBall { dim: usize },
    SpdCone { size: usize },
}

impl ManifoldContext {
    /// Intrinsic dimension of the manifold.
    pub fn dimension(&self) -> usize {
        match *self {
            ManifoldContext::Euclidean { dim } | ManifoldContext::PoincareBall { dim } => dim,
            ManifoldContext::SpdCone { size } => size * (size + 1) / 2,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ManifoldContext::Euclidean { .. } => "euclidean",
            ManifoldContext::PoincareBall { .. } => "ball",
            ManifoldContext::SpdCone { .. } => "spd",
        }
    }

    /// `d` for the flat and ball models, `p` for the SPD cone.
    pub fn size(&self) -> usize {
        match *self {
            ManifoldContext::Euclidean { dim } | ManifoldContext::PoincareBall { dim } => dim,
            ManifoldContext::SpdCone { size } => size,
        }
    }

    pub fn from_tag(tag: &str, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(HoroError::invalid("manifold size must be positive"));
        }
        match tag {
            "euclidean" => Ok(ManifoldContext::Euclidean { dim: size }),
            "ball" | "poincare_ball" => Ok(ManifoldContext::PoincareBall { dim: size }),
            "spd" | "spd_cone" => Ok(ManifoldContext::SpdCone { size }),
            other => Err(HoroError::invalid(format!("unknown manifold tag '{other}'"))),
        }
    }
}

impl fmt::Display for ManifoldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.tag(), self.size())
    }
}

/// Unit vector on `S^{d-1}`, the visual boundary of the flat and ball models.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDirection {
    coords: DVector<f64>,
}

impl SphereDirection {
    /// Normalizes `coords`; the zero vector is rejected. Vectors already of
    /// unit norm to within a few ulps are kept bit for bit.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(HoroError::invalid("direction must be a finite nonzero vector"));
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(SphereDirection { coords });
        }
        Ok(SphereDirection { coords: coords / norm })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Orthogonal matrix acting as a base-point-fixing isometry: `x ↦ Rx` on the
/// flat and ball models, `X ↦ RXRᵀ` on the SPD cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthogonal(DMatrix<f64>);

impl Orthogonal {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(HoroError::invalid("isometry matrix must be square"));
        }
        let n = matrix.nrows();
        let deviation = (matrix.transpose() * &matrix - DMatrix::<f64>::identity(n, n)).amax();
        if deviation > ORTHOGONAL_TOL {
            return Err(HoroError::invalid(format!("matrix is not orthogonal (max |QᵀQ − I| = {deviation:.3e})")));
        }
        Ok(Orthogonal(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Orthogonal(DMatrix::identity(n, n))
    }

    /// Planar rotation by `angle` radians.
    pub fn rotation_2d(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Orthogonal(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Haar-distributed orthogonal matrix from the QR factorization of a
    /// Gaussian matrix with the sign convention `diag(R) > 0`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        Orthogonal(q)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }
}

/// How a [`DirectionSet`](crate::depth::DirectionSet) was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DirectionMode {
    /// Seeded random draws from the rotation-invariant law of the manifold.
    Random { seed: u64 },
    /// Regular m-gon `(cos 2πj/m, sin 2πj/m)`; only for two-dimensional spheres.
    Grid,
}

/// The operations the depth engine, estimators and experiments need from a
/// manifold.
///
/// Implementations are pure: every method is a function of its arguments and
/// the (immutable) geometry value, so geometries, points and directions can be
/// shared freely across threads.
pub trait Geometry: Clone + fmt::Debug + Send + Sync {
    type Point: Clone + fmt::Debug + PartialEq + Send + Sync;
    type Direction: Clone + fmt::Debug + Send + Sync;

    fn context(&self) -> ManifoldContext;

    /// Intrinsic dimension.
    fn dimension(&self) -> usize {
        self.context().dimension()
    }

    fn base_point(&self) -> Self::Point;

    /// Busemann function of `xi`, normalized so that it vanishes at the base
    /// point.
    fn busemann(&self, xi: &Self::Direction, x: &Self::Point) -> f64;

    /// Busemann function with an arbitrary reference point `p`:
    /// `B_ξ(x) − B_ξ(p)`.
    fn busemann_based(&self, xi: &Self::Direction, p: &Self::Point, x: &Self::Point) -> f64 {
        self.busemann(xi, x) - self.busemann(xi, p)
    }

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// Point at fraction `s ∈ [0, 1]` of the geodesic from `x` to `y`.
    fn geodesic_point(&self, x: &Self::Point, y: &Self::Point, s: f64) -> Result<Self::Point>;

    fn exp_map(&self, base: &Self::Point, v: &TangentVector) -> Result<Self::Point>;

    fn log_map(&self, base: &Self::Point, x: &Self::Point) -> TangentVector;

    /// Riemannian norm of `v` at `base`.
    fn tangent_norm(&self, base: &Self::Point, v: &TangentVector) -> f64;

    /// Orthonormal basis (in the metric at `base`) of the tangent space.
    fn tangent_basis(&self, base: &Self::Point) -> Vec<TangentVector>;

    /// Point at arc length `t` along the unit-speed ray from `base` toward
    /// `xi`. Along this ray `B_ξ` decreases at unit rate.
    fn ray_point(&self, base: &Self::Point, xi: &Self::Direction, t: f64) -> Result<Self::Point>;

    /// Largest ray parameter from the base point that stays representable.
    fn max_ray_parameter(&self) -> f64;

    fn sample_directions(&self, m: usize, mode: DirectionMode) -> Result<Vec<Self::Direction>>;

    /// Degrees of freedom of the boundary parametrization used by local
    /// direction search.
    fn direction_dof(&self) -> usize;

    /// Moves `xi` by `step` along the `axis`-th orthonormal tangent direction
    /// of the boundary parametrization and renormalizes.
    fn perturb_direction(&self, xi: &Self::Direction, axis: usize, step: f64) -> Self::Direction;

    fn apply_isometry(&self, iso: &Orthogonal, x: &Self::Point) -> Result<Self::Point>;

    fn boundary_action(&self, iso: &Orthogonal, xi: &Self::Direction) -> Result<Self::Direction>;

    /// Row encoding used by dataset files.
    fn point_from_row(&self, row: &[f64]) -> Result<Self::Point>;
    fn point_to_row(&self, x: &Self::Point) -> Vec<f64>;
    fn point_width(&self) -> usize;

    fn direction_from_row(&self, row: &[f64]) -> Result<Self::Direction>;
    fn direction_to_row(&self, xi: &Self::Direction) -> Vec<f64>;

    /// Geodesic reflection through `theta`: `exp_θ(−log_θ x)`.
    fn reflect(&self, theta: &Self::Point, x: &Self::Point) -> Result<Self::Point> {
        let v = self.log_map(theta, x);
        self.exp_map(theta, &(-v))
    }

    /// Point with coordinates `coords` in the orthonormal tangent frame at
    /// `base`, pushed through the exponential map.
    fn chart_point(&self, base: &Self::Point, coords: &[f64]) -> Result<Self::Point> {
        let basis = self.tangent_basis(base);
        HoroError::check_dim(basis.len(), coords.len())?;
        let mut v = TangentVector::zeros(basis[0].len());
        for (b, c) in basis.iter().zip(coords) {
            v.axpy(*c, b, 1.0);
        }
        self.exp_map(base, &v)
    }

    /// Wrapped Gaussian draw: isotropic Gaussian with standard deviation
    /// `sigma` in the orthonormal tangent frame at `center`, pushed through
    /// the exponential map.
    fn wrapped_gaussian<R: Rng + ?Sized>(&self, center: &Self::Point, sigma: f64, rng: &mut R) -> Result<Self::Point> {
        let coords: Vec<f64> = (0..self.dimension()).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        self.chart_point(center, &coords)
    }
}

/// Normalized Gaussian vectors on `S^{d-1}`, or the regular grid for `d = 2`.
pub(crate) fn sphere_directions(dim: usize, m: usize, mode: DirectionMode) -> Result<Vec<SphereDirection>> {
    if m == 0 {
        return Err(HoroError::invalid("number of directions must be at least 1"));
    }
    match mode {
        DirectionMode::Grid => {
            if dim != 2 {
                return Err(HoroError::invalid("grid directions are only defined for d = 2"));
            }
            Ok((0..m)
                .map(|j| {
                    let angle = std::f64::consts::TAU * j as f64 / m as f64;
                    SphereDirection { coords: DVector::from_column_slice(&[angle.cos(), angle.sin()]) }
                })
                .collect())
        }
        DirectionMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                if let Ok(dir) = SphereDirection::new(v) {
                    out.push(dir);
                }
            }
            Ok(out)
        }
    }
}

/// Orthonormal basis of the tangent space of the sphere at `u`: the
/// coordinate axes projected off `u`, Gram-Schmidt orthonormalized, dropping
/// the one that degenerates.
pub(crate) fn sphere_tangent_frame(u: &DVector<f64>) -> Vec<DVector<f64>> {
    let d = u.len();
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(d.saturating_sub(1));
    let mut axes: Vec<usize> = (0..d).collect();
    // Start from the axes least aligned with u.
    axes.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for k in axes {
        if frame.len() + 1 == d {
            break;
        }
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        v.axpy(-u[k], u, 1.0);
        for f in &frame {
            let c = f.dot(&v);
            v.axpy(-c, f, 1.0);
        }
        let n = v.norm();
        if n > 1e-8 {
            frame.push(v / n);
        }
    }
    frame
}

pub(crate) fn perturb_sphere(u: &SphereDirection, axis: usize, step: f64) -> SphereDirection {
    let frame = sphere_tangent_frame(&u.coords);
    let Some(e) = frame.get(axis) else {
        return u.clone();
    };
    // Great-circle move by `step` radians.
    let moved = &u.coords * step.cos() + e * step.sin();
    SphereDirection::new(moved).unwrap_or_else(|_| u.clone())
}

pub(crate) fn rotate_sphere(iso: &Orthogonal, xi: &SphereDirection) -> Result<SphereDirection> {
    HoroError::check_dim(iso.size(), xi.dim())?;
    SphereDirection::new(iso.matrix() * &xi.coords)
}
