use nalgebra::DVector;

use super::euclidean::{check_fraction, check_ray_parameter};
use super::{
    perturb_sphere, rotate_sphere, sphere_directions, DirectionMode, Geometry, ManifoldContext, Orthogonal,
    SphereDirection, TangentVector,
};
use crate::error::{HoroError, Result};

/// Points are kept at Euclidean norm at most `1 − BALL_MARGIN`.
pub const BALL_MARGIN: f64 = 1e-12;

/// Point of the Poincaré ball.
///
/// Alongside the coordinates the point stores its boundary deficit
/// `1 − ‖x‖`. Near the boundary this quantity cannot be recovered from the
/// coordinates to full relative precision, and both the conformal factor
/// `1 − ‖x‖²` and `‖x − ξ‖²` are computed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: DVector<f64>,
    deficit: f64,
}

impl BallPoint {
    /// Validates `‖x‖ < 1`; points within `BALL_MARGIN` of the unit sphere are
    /// pulled back onto the sphere of radius `1 − BALL_MARGIN`.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        Self::with_margin(coords, BALL_MARGIN)
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn with_margin(coords: DVector<f64>, margin: f64) -> Result<Self> {
        let r = coords.norm();
        if !r.is_finite() {
            return Err(HoroError::domain("ball coordinates must be finite"));
        }
        if r >= 1.0 {
            return Err(HoroError::domain(format!("point with norm {r} is not inside the unit ball")));
        }
        if r > 1.0 - margin {
            let scale = (1.0 - margin) / r;
            return Ok(BallPoint { coords: coords * scale, deficit: margin });
        }
        Ok(BallPoint { coords, deficit: 1.0 - r })
    }

    /// Builds `(1 − deficit)·unit` with the deficit supplied at full
    /// precision.
    fn from_polar(unit: &DVector<f64>, radius: f64, deficit: f64, margin: f64) -> Self {
        if deficit < margin {
            BallPoint { coords: unit * (1.0 - margin), deficit: margin }
        } else {
            BallPoint { coords: unit * radius, deficit }
        }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `1 − ‖x‖`.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Conformal gap `1 − ‖x‖²`.
    pub fn gap(&self) -> f64 {
        self.deficit * (2.0 - self.deficit)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// `‖x − ξ‖²` written as `(1 − r)² + r‖x/r − ξ‖²`.
    fn squared_distance_to_boundary_point(&self, xi: &DVector<f64>) -> f64 {
        let r = self.coords.norm();
        if r == 0.0 {
            return 1.0;
        }
        let unit_gap = (&self.coords / r - xi).norm_squared();
        self.deficit * self.deficit + r * unit_gap
    }
}

/// Möbius addition `a ⊕ b` for `‖a‖, ‖b‖ ≤ 1` given with their deficits
/// `1 − ‖a‖`, `1 − ‖b‖`. Returns the sum and its gap `1 − ‖a ⊕ b‖²`.
///
/// The coefficients of the usual formula are rewritten as sums of
/// nonnegative terms in the deficits and `‖â + b̂‖²`, so nothing cancels
/// when both arguments sit near the boundary.
fn mobius_add(a: &DVector<f64>, da: f64, b: &DVector<f64>, db: f64) -> (DVector<f64>, f64) {
    let (ra, rb) = (1.0 - da, 1.0 - db);
    let (na, nb) = (a.norm(), b.norm());
    let s = if na == 0.0 || nb == 0.0 { 0.0 } else { (a / na + b / nb).norm_squared() };
    let coef_a = db * db + 2.0 * rb * da + ra * rb * s;
    let gap_a = da * (2.0 - da);
    let rho_gap = da + db - da * db;
    let denom = rho_gap * rho_gap + ra * rb * s;
    let sum = (a * coef_a + b * gap_a) / denom;
    (sum, gap_a * db * (2.0 - db) / denom)
}

/// Poincaré ball model of hyperbolic space `H^d` (curvature −1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareBall {
    dim: usize,
    margin: f64,
}

impl PoincareBall {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_margin(dim, BALL_MARGIN)
    }

    pub fn with_margin(dim: usize, margin: f64) -> Result<Self> {
        if dim == 0 {
            return Err(HoroError::invalid("dimension must be positive"));
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(HoroError::invalid("ball margin must lie in (0, 0.5)"));
        }
        Ok(PoincareBall { dim, margin })
    }

    pub fn point(&self, coords: &[f64]) -> Result<BallPoint> {
        HoroError::check_dim(self.dim, coords.len())?;
        BallPoint::with_margin(DVector::from_column_slice(coords), self.margin)
    }

    pub fn direction(&self, coords: &[f64]) -> Result<SphereDirection> {
        HoroError::check_dim(self.dim, coords.len())?;
        SphereDirection::from_slice(coords)
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Lift to the hyperboloid `−X₀² + ‖X_s‖² = −1`.
    /// Point with coordinates `y` whose gap `1 − ‖y‖²` is known accurately.
    fn point_from_sum(&self, y: DVector<f64>, gap: f64) -> Result<BallPoint> {
        let deficit = gap / (1.0 + (1.0 - gap).max(0.0).sqrt());
        let r = y.norm();
        if !(r.is_finite() && deficit.is_finite()) {
            return Err(HoroError::domain("ball coordinates must be finite"));
        }
        if deficit < self.margin {
            return Err(HoroError::domain(format!("point within {:.1e} of the boundary", self.margin)));
        }
        // Away from the boundary the coordinates themselves are accurate.
        if r < 0.5 {
            return Ok(BallPoint { coords: y, deficit: 1.0 - r });
        }
        Ok(BallPoint::from_polar(&(&y / r), 1.0 - deficit, deficit, self.margin))
    }

    fn lift(x: &BallPoint) -> (f64, DVector<f64>) {
        let gap = x.gap();
        (2.0 / gap - 1.0, &x.coords * (2.0 / gap))
    }

    /// Projection from the hyperboloid back to the ball; the deficit is
    /// recovered from `X₀` via `1 − ‖x‖² = 2/(1 + X₀)`.
    fn project(&self, x0: f64, xs: DVector<f64>) -> Result<BallPoint> {
        if !x0.is_finite() || xs.iter().any(|v| !v.is_finite()) {
            return Err(HoroError::domain("hyperboloid coordinates overflowed"));
        }
        let gap = 2.0 / (1.0 + x0);
        let deficit = gap / (1.0 + (1.0 - gap).max(0.0).sqrt());
        let coords = xs / (1.0 + x0);
        let r = coords.norm();
        if r == 0.0 {
            return Ok(BallPoint { coords, deficit: 1.0 });
        }
        let unit = &coords / r;
        Ok(BallPoint::from_polar(&unit, r, deficit, self.margin))
    }
}

impl Geometry for PoincareBall {
    type Point = BallPoint;
    type Direction = SphereDirection;

    fn context(&self) -> ManifoldContext {
        ManifoldContext::PoincareBall { dim: self.dim }
    }

    fn base_point(&self) -> BallPoint {
        BallPoint { coords: DVector::zeros(self.dim), deficit: 1.0 }
    }

    /// `B_ξ(x) = log ‖x − ξ‖² − log(1 − ‖x‖²)`.
    fn busemann(&self, xi: &SphereDirection, x: &BallPoint) -> f64 {
        x.squared_distance_to_boundary_point(xi.coords()).ln() - x.gap().ln()
    }

    fn distance(&self, x: &BallPoint, y: &BallPoint) -> f64 {
        // cosh d = 1 + 2‖x−y‖²/(gap_x gap_y), rewritten through sinh(d/2).
        let diff = (&x.coords - &y.coords).norm();
        2.0 * (diff / (x.gap() * y.gap()).sqrt()).asinh()
    }

    fn geodesic_point(&self, x: &BallPoint, y: &BallPoint, s: f64) -> Result<BallPoint> {
        check_fraction(s)?;
        if s == 0.0 {
            return Ok(x.clone());
        }
        if s == 1.0 {
            return Ok(y.clone());
        }
        let d = self.distance(x, y);
        if d < 1e-12 {
            return BallPoint::with_margin(&x.coords * (1.0 - s) + &y.coords * s, self.margin);
        }
        let (x0, xs) = Self::lift(x);
        let (y0, ys) = Self::lift(y);
        let a = ((1.0 - s) * d).sinh() / d.sinh();
        let b = (s * d).sinh() / d.sinh();
        self.project(a * x0 + b * y0, xs * a + ys * b)
    }

    fn exp_map(&self, base: &BallPoint, v: &TangentVector) -> Result<BallPoint> {
        HoroError::check_dim(self.dim, v.len())?;
        let n = v.norm();
        if n == 0.0 {
            return Ok(base.clone());
        }
        let length = 2.0 * n / base.gap();
        // exp_p(v) = p ⊕ tanh(|v|_p / 2)·v̂, with 1 − tanh(s/2) = 2/(1 + eˢ).
        let du = 2.0 / (1.0 + length.exp());
        let u = v * ((1.0 - du) / n);
        let (y, gap) = mobius_add(&base.coords, base.deficit, &u, du);
        self.point_from_sum(y, gap).map_err(|_| {
            HoroError::domain(format!(
                "exponential map step of hyperbolic length {length:.3} ends within {:.1e} of the boundary",
                self.margin
            ))
        })
    }

    fn log_map(&self, base: &BallPoint, x: &BallPoint) -> TangentVector {
        let (w, _) = mobius_add(&(-&base.coords), base.deficit, &x.coords, x.deficit);
        let n = w.norm();
        if n == 0.0 {
            return DVector::zeros(self.dim);
        }
        // The length is taken from the deficit-based distance, which stays
        // accurate when `‖w‖` is close to 1.
        w * (0.5 * base.gap() * self.distance(base, x) / n)
    }

    fn tangent_norm(&self, base: &BallPoint, v: &TangentVector) -> f64 {
        2.0 * v.norm() / base.gap()
    }

    fn tangent_basis(&self, base: &BallPoint) -> Vec<TangentVector> {
        let scale = 0.5 * base.gap();
        (0..self.dim)
            .map(|k| {
                let mut e = DVector::zeros(self.dim);
                e[k] = scale;
                e
            })
            .collect()
    }

    fn ray_point(&self, base: &BallPoint, xi: &SphereDirection, t: f64) -> Result<BallPoint> {
        HoroError::check_dim(self.dim, xi.dim())?;
        if base.coords.iter().all(|&c| c == 0.0) {
            check_ray_parameter(t, self.max_ray_parameter())?;
            // Radial geodesic: r = tanh(t/2), 1 − r = 2/(1 + eᵗ).
            let deficit = 2.0 / (1.0 + t.exp());
            return Ok(BallPoint::from_polar(xi.coords(), (0.5 * t).tanh(), deficit, self.margin));
        }
        let max = self.max_ray_parameter() - self.distance(&self.base_point(), base);
        check_ray_parameter(t, max.max(0.0))?;
        // Möbius translation by the base maps the origin ray toward
        // (−p) ⊕ ξ onto the ray from p toward ξ.
        let (toward, _) = mobius_add(&(-&base.coords), base.deficit, xi.coords(), 0.0);
        let du = 2.0 / (1.0 + t.exp());
        let u = &toward * ((1.0 - du) / toward.norm());
        let (y, gap) = mobius_add(&base.coords, base.deficit, &u, du);
        self.point_from_sum(y, gap)
    }

    /// `t` with `1 − tanh(t/2) = margin`.
    fn max_ray_parameter(&self) -> f64 {
        (2.0 / self.margin - 1.0).ln()
    }

    fn sample_directions(&self, m: usize, mode: DirectionMode) -> Result<Vec<SphereDirection>> {
        sphere_directions(self.dim, m, mode)
    }

    fn direction_dof(&self) -> usize {
        self.dim - 1
    }

    fn perturb_direction(&self, xi: &SphereDirection, axis: usize, step: f64) -> SphereDirection {
        perturb_sphere(xi, axis, step)
    }

    fn apply_isometry(&self, iso: &Orthogonal, x: &BallPoint) -> Result<BallPoint> {
        HoroError::check_dim(self.dim, iso.size())?;
        Ok(BallPoint { coords: iso.matrix() * &x.coords, deficit: x.deficit })
    }

    fn boundary_action(&self, iso: &Orthogonal, xi: &SphereDirection) -> Result<SphereDirection> {
        rotate_sphere(iso, xi)
    }

    fn point_from_row(&self, row: &[f64]) -> Result<BallPoint> {
        self.point(row)
    }

    fn point_to_row(&self, x: &BallPoint) -> Vec<f64> {
        x.coords.as_slice().to_vec()
    }

    fn point_width(&self) -> usize {
        self.dim
    }

    fn direction_from_row(&self, row: &[f64]) -> Result<SphereDirection> {
        self.direction(row)
    }

    fn direction_to_row(&self, xi: &SphereDirection) -> Vec<f64> {
        xi.coords().as_slice().to_vec()
    }
}
