use rayon::prelude::*;

use super::DirectionSet;
use crate::error::{HoroError, Result};
use crate::manifold::Geometry;
use crate::measure::{CompensatedSum, EmpiricalMeasure};

/// Slack used when deciding whether a cumulative weight has reached `α`.
const LEVEL_TOL: f64 = 1e-12;

/// One horoball `{z : B_ξ(z) ≤ threshold}` of a region.
#[derive(Debug, Clone)]
pub struct RegionEntry<D> {
    pub direction: D,
    pub threshold: f64,
}

/// Finite intersection of horoballs approximating an `α`-depth region.
#[derive(Debug, Clone)]
pub struct DepthRegion<D> {
    pub entries: Vec<RegionEntry<D>>,
    pub alpha: f64,
    /// Fingerprint of the measure the thresholds were computed from.
    pub fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    /// `F(z) = max_j (B_{ξ_j}(z) − t_j)`.
    pub value: f64,
    /// `F(z) ≤ 0`.
    pub inside: bool,
}

impl<D: Clone> DepthRegion<D> {
    pub fn new(entries: Vec<RegionEntry<D>>, alpha: f64, fingerprint: String) -> Result<Self> {
        if entries.is_empty() {
            return Err(HoroError::invalid("region needs at least one horoball"));
        }
        Ok(DepthRegion { entries, alpha, fingerprint })
    }

    /// Region formed by the first `m` horoballs.
    pub fn prefix(&self, m: usize) -> Self {
        let m = m.clamp(1, self.entries.len());
        DepthRegion { entries: self.entries[..m].to_vec(), alpha: self.alpha, fingerprint: self.fingerprint.clone() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Upper survival quantile of a weighted sample of scores:
/// `sup { t : Σ w_i 1{s_i ≥ t} ≥ α }` over the attained scores.
///
/// For uniform weights this is the `⌈nα⌉`-th largest score.
pub fn upper_survival_quantile(scores: &[f64], weights: &[f64], uniform: bool, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    survival_quantile(scores, weights, uniform, alpha)
}

/// As `upper_survival_quantile`, also accepting `alpha = 1`.
pub(crate) fn survival_quantile(scores: &[f64], weights: &[f64], uniform: bool, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HoroError::invalid(format!("depth level {alpha} outside (0, 1]")));
    }
    if scores.is_empty() || scores.len() != weights.len() {
        return Err(HoroError::invalid("scores and weights must be nonempty and of equal length"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    if uniform {
        let n = scores.len();
        // `n·α` is rounded before the ceiling so that e.g. 100·0.3 gives 30.
        let k = ((n as f64 * alpha) - 1e-9).ceil().max(1.0) as usize;
        return Ok(scores[order[k.min(n) - 1]]);
    }
    let mut acc = CompensatedSum::new();
    let mut i = 0;
    while i < order.len() {
        let level = scores[order[i]];
        // Ties enter together: S(level) includes every score equal to level.
        while i < order.len() && scores[order[i]] == level {
            acc.add(weights[order[i]]);
            i += 1;
        }
        if acc.value() >= alpha - LEVEL_TOL {
            return Ok(level);
        }
    }
    Ok(scores[order[order.len() - 1]])
}

/// Sampled-direction approximation of the empirical `α`-depth region: for
/// each direction the threshold is the upper survival quantile of the
/// sample's Busemann scores.
pub fn region_thresholds<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    alpha: f64,
    dirs: &DirectionSet<G::Direction>,
) -> Result<DepthRegion<G::Direction>> {
    check_alpha(alpha)?;
    let entries = dirs
        .directions()
        .par_iter()
        .map(|xi| {
            let scores: Vec<f64> = mu.points().iter().map(|x| geometry.busemann(xi, x)).collect();
            let threshold = upper_survival_quantile(&scores, mu.weights(), mu.is_uniform(), alpha)?;
            Ok(RegionEntry { direction: xi.clone(), threshold })
        })
        .collect::<Result<Vec<_>>>()?;
    DepthRegion::new(entries, alpha, mu.fingerprint(geometry))
}

pub fn region_membership<G: Geometry>(geometry: &G, region: &DepthRegion<G::Direction>, z: &G::Point) -> Membership {
    let value = region
        .entries
        .iter()
        .map(|e| geometry.busemann(&e.direction, z) - e.threshold)
        .fold(f64::NEG_INFINITY, f64::max);
    Membership { value, inside: value <= 0.0 }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HoroError::invalid(format!("depth level {alpha} outside (0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Euclidean, PoincareBall};

    #[test]
    fn kth_largest_uniform() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let w = [0.25; 4];
        assert_eq!(upper_survival_quantile(&s, &w, true, 0.5).unwrap(), 3.0);
        assert_eq!(upper_survival_quantile(&s, &w, true, 1.0 / 8.0).unwrap(), 4.0);
        assert_eq!(upper_survival_quantile(&s, &w, false, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn weighted_quantile() {
        assert_eq!(upper_survival_quantile(&[0.0, 1.0], &[0.5, 0.5], false, 0.5).unwrap(), 1.0);
        assert_eq!(upper_survival_quantile(&[0.0, 1.0], &[0.6, 0.4], false, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn rounding_of_n_alpha() {
        let s: Vec<f64> = (0..100).map(f64::from).collect();
        let w = vec![0.01; 100];
        // 100·0.3 evaluates to 30.000000000000004 in floating point.
        assert_eq!(upper_survival_quantile(&s, &w, true, 0.3).unwrap(), 70.0);
    }

    #[test]
    fn alpha_range_checked() {
        assert!(upper_survival_quantile(&[1.0], &[1.0], true, 0.0).is_err());
        assert!(upper_survival_quantile(&[1.0], &[1.0], true, 1.0).is_err());
    }

    #[test]
    fn four_point_region_thresholds() {
        let g = Euclidean::new(2).unwrap();
        let pts = [-1.0, -2.0, -3.0, -4.0].iter().map(|&x| g.point(&[x, 0.0]).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts).unwrap();
        let dirs = DirectionSet::explicit(vec![g.direction(&[1.0, 0.0]).unwrap()]).unwrap();
        let region = region_thresholds(&g, &mu, 0.5, &dirs).unwrap();
        assert_eq!(region.entries[0].threshold, 3.0);
    }

    #[test]
    fn membership_boundary_counts_inside() {
        let g = Euclidean::new(2).unwrap();
        let xi = g.direction(&[1.0, 0.0]).unwrap();
        let region =
            DepthRegion::new(vec![RegionEntry { direction: xi, threshold: -1.0 }], 0.5, String::new()).unwrap();
        let m = region_membership(&g, &region, &g.point(&[1.0, 3.0]).unwrap());
        assert_eq!(m.value, 0.0);
        assert!(m.inside);
    }

    #[test]
    fn far_ray_point_is_outside() {
        let g = PoincareBall::new(2).unwrap();
        let pts = [[0.1, 0.0], [-0.1, 0.05], [0.0, -0.1]].iter().map(|p| g.point(p).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts).unwrap();
        let dirs = DirectionSet::sample(&g, 8, crate::manifold::DirectionMode::Grid).unwrap();
        let region = region_thresholds(&g, &mu, 0.3, &dirs).unwrap();
        // Moving away from ξ₁ raises B_{ξ₁} without bound.
        let away = g.direction(&[-1.0, 0.0]).unwrap();
        let z = g.ray_point(&g.base_point(), &away, 10.0).unwrap();
        let m = region_membership(&g, &region, &z);
        assert!(m.value > 0.0 && !m.inside);
        assert!(region_membership(&g, &region, &g.base_point()).inside);
    }
}
