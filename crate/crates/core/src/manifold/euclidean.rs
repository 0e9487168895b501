use nalgebra::DVector;

use super::{
    perturb_sphere, rotate_sphere, sphere_directions, DirectionMode, Geometry, ManifoldContext, Orthogonal,
    SphereDirection, TangentVector,
};
use crate::error::{HoroError, Result};

/// Flat space `R^d`. Busemann functions are the affine functionals `−⟨u, x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPoint {
    coords: DVector<f64>,
}

impl EuclideanPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(HoroError::domain("coordinates must be finite"));
        }
        Ok(EuclideanPoint { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(HoroError::invalid("dimension must be positive"));
        }
        Ok(Euclidean { dim })
    }

    pub fn point(&self, coords: &[f64]) -> Result<EuclideanPoint> {
        HoroError::check_dim(self.dim, coords.len())?;
        EuclideanPoint::from_slice(coords)
    }

    pub fn direction(&self, coords: &[f64]) -> Result<SphereDirection> {
        HoroError::check_dim(self.dim, coords.len())?;
        SphereDirection::from_slice(coords)
    }
}

impl Geometry for Euclidean {
    type Point = EuclideanPoint;
    type Direction = SphereDirection;

    fn context(&self) -> ManifoldContext {
        ManifoldContext::Euclidean { dim: self.dim }
    }

    fn base_point(&self) -> EuclideanPoint {
        EuclideanPoint { coords: DVector::zeros(self.dim) }
    }

    fn busemann(&self, xi: &SphereDirection, x: &EuclideanPoint) -> f64 {
        -xi.coords().dot(&x.coords)
    }

    fn distance(&self, x: &EuclideanPoint, y: &EuclideanPoint) -> f64 {
        (&x.coords - &y.coords).norm()
    }

    fn geodesic_point(&self, x: &EuclideanPoint, y: &EuclideanPoint, s: f64) -> Result<EuclideanPoint> {
        check_fraction(s)?;
        Ok(EuclideanPoint { coords: &x.coords * (1.0 - s) + &y.coords * s })
    }

    fn exp_map(&self, base: &EuclideanPoint, v: &TangentVector) -> Result<EuclideanPoint> {
        HoroError::check_dim(self.dim, v.len())?;
        EuclideanPoint::new(&base.coords + v)
    }

    fn log_map(&self, base: &EuclideanPoint, x: &EuclideanPoint) -> TangentVector {
        &x.coords - &base.coords
    }

    fn tangent_norm(&self, _base: &EuclideanPoint, v: &TangentVector) -> f64 {
        v.norm()
    }

    fn tangent_basis(&self, _base: &EuclideanPoint) -> Vec<TangentVector> {
        (0..self.dim)
            .map(|k| {
                let mut e = DVector::zeros(self.dim);
                e[k] = 1.0;
                e
            })
            .collect()
    }

    fn ray_point(&self, base: &EuclideanPoint, xi: &SphereDirection, t: f64) -> Result<EuclideanPoint> {
        check_ray_parameter(t, self.max_ray_parameter())?;
        EuclideanPoint::new(&base.coords + xi.coords() * t)
    }

    fn max_ray_parameter(&self) -> f64 {
        1e150
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

    fn apply_isometry(&self, iso: &Orthogonal, x: &EuclideanPoint) -> Result<EuclideanPoint> {
        HoroError::check_dim(self.dim, iso.size())?;
        Ok(EuclideanPoint { coords: iso.matrix() * &x.coords })
    }

    fn boundary_action(&self, iso: &Orthogonal, xi: &SphereDirection) -> Result<SphereDirection> {
        rotate_sphere(iso, xi)
    }

    fn point_from_row(&self, row: &[f64]) -> Result<EuclideanPoint> {
        self.point(row)
    }

    fn point_to_row(&self, x: &EuclideanPoint) -> Vec<f64> {
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

pub(crate) fn check_fraction(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(HoroError::invalid(format!("geodesic fraction {s} outside [0, 1]")))
    }
}

pub(crate) fn check_ray_parameter(t: f64, max: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(HoroError::invalid(format!("ray parameter {t} must be nonnegative")));
    }
    if t > max {
        return Err(HoroError::domain(format!("ray parameter {t} exceeds the maximum safe value {max:.6}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busemann_examples() {
        let g = Euclidean::new(2).unwrap();
        let u = g.direction(&[1.0, 0.0]).unwrap();
        assert_eq!(g.busemann(&u, &g.point(&[0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(g.busemann(&u, &g.point(&[3.0, 5.0]).unwrap()), -3.0);
        let u = g.direction(&[0.0, 1.0]).unwrap();
        assert_eq!(g.busemann(&u, &g.point(&[2.0, -4.0]).unwrap()), 4.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Euclidean::new(2).unwrap();
        assert!(matches!(g.point(&[1.0]), Err(HoroError::DimensionMismatch { .. })));
    }

    #[test]
    fn ray_decreases_busemann() {
        let g = Euclidean::new(3).unwrap();
        let u = g.direction(&[1.0, 2.0, -1.0]).unwrap();
        let p = g.point(&[0.2, 0.1, 0.4]).unwrap();
        let r = g.ray_point(&p, &u, 4.0).unwrap();
        assert!((g.busemann(&u, &r) - (g.busemann(&u, &p) - 4.0)).abs() < 1e-12);
        assert!(g.ray_point(&p, &u, -1.0).is_err());
    }
}
