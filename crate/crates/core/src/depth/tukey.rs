use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{HoroError, Result};
use crate::manifold::EuclideanPoint;

/// Exact halfspace depth as a fraction `count / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TukeyDepth {
    pub count: usize,
    pub total: usize,
}

impl TukeyDepth {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

/// Exact planar halfspace depth `min_u #{x : ⟨u, x⟩ ≤ ⟨u, z⟩} / n`.
///
/// The count only changes where the boundary line through `z` passes a data
/// point, i.e. at the angles `φ_i ± π/2` with `φ_i` the angle of `x_i − z`.
/// Closed halfplanes make the count at a critical angle at least as large as
/// on either adjacent arc, so the minimum is attained at arc midpoints.
pub fn exact_tukey_depth_2d(z: &EuclideanPoint, pts: &[EuclideanPoint]) -> Result<TukeyDepth> {
    if pts.is_empty() {
        return Err(HoroError::invalid("Tukey depth needs at least one point"));
    }
    if z.coords().len() != 2 || pts.iter().any(|p| p.coords().len() != 2) {
        return Err(HoroError::invalid("exact Tukey depth is implemented for d = 2 only"));
    }
    let (zx, zy) = (z.coords()[0], z.coords()[1]);
    let offsets: Vec<(f64, f64)> = pts.iter().map(|p| (p.coords()[0] - zx, p.coords()[1] - zy)).collect();
    let mut critical: Vec<f64> = Vec::with_capacity(2 * pts.len());
    for &(dx, dy) in &offsets {
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let phi = dy.atan2(dx);
        critical.push((phi + FRAC_PI_2).rem_euclid(TAU));
        critical.push((phi - FRAC_PI_2).rem_euclid(TAU));
    }
    let total = pts.len();
    if critical.is_empty() {
        return Ok(TukeyDepth { count: total, total });
    }
    critical.sort_by(f64::total_cmp);
    let count_at = |angle: f64| {
        let (uy, ux) = angle.sin_cos();
        offsets.iter().filter(|&&(dx, dy)| ux * dx + uy * dy <= 0.0).count()
    };
    let k = critical.len();
    let mut best = total;
    for i in 0..k {
        let a = critical[i];
        let b = if i + 1 < k { critical[i + 1] } else { critical[0] + TAU };
        if b > a {
            best = best.min(count_at(0.5 * (a + b)));
        }
    }
    Ok(TukeyDepth { count: best, total })
}
