//! Busemann median search and Fréchet means.

use std::cmp::Ordering;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{refine_direction, DepthEngine, DirectionSet};
use crate::error::Result;
use crate::manifold::{Geometry, TangentVector};
use crate::measure::{CompensatedSum, EmpiricalMeasure, Fnv};

/// Settings of the coarse-to-fine median search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Maximum number of pairwise midpoints among the coarse candidates.
    pub midpoint_cap: usize,
    /// Seed for midpoint subsampling.
    pub seed: u64,
    /// Initial pattern step as a fraction of the mean distance from the
    /// incumbent to the data.
    pub step_fraction: f64,
    /// The search stops after this many unsuccessful polls.
    pub halvings: u32,
    /// Upper bound on the number of polls.
    pub max_polls: usize,
    /// Tighten the sampled depth at the incumbent with `refine_direction`.
    pub refine: bool,
    pub refine_budget: usize,
    pub refine_rounds: usize,
    /// Minimizing directions refined per round.
    pub refine_width: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            midpoint_cap: 2000,
            seed: 0,
            step_fraction: 0.25,
            halvings: 6,
            max_polls: 400,
            refine: false,
            refine_budget: 200,
            refine_rounds: 2,
            refine_width: 8,
        }
    }
}

impl SearchConfig {
    pub fn fingerprint(&self) -> String {
        let mut h = Fnv::new();
        h.write(serde_json::to_string(self).unwrap_or_default().as_bytes());
        format!("{:016x}", h.finish())
    }
}

/// Settings of the Karcher iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig { max_iterations: 200, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct MedianResult<G: Geometry> {
    pub point: G::Point,
    pub depth: f64,
    /// Accepted incumbents in order, with their depths under the final set.
    pub search_trace: Vec<(G::Point, f64)>,
    /// Directions the reported depth is computed over.
    pub directions: DirectionSet<G::Direction>,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct FrechetResult<P> {
    pub point: P,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the weighted mean of the log-map vectors at `point`.
    pub gradient_norm: f64,
}

/// Data points, then seeded-subsampled pairwise geodesic midpoints (at most
/// `cap`), then `extra`.
pub fn coarse_candidates<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    cap: usize,
    seed: u64,
    extra: &[G::Point],
) -> Vec<G::Point> {
    let n = mu.len();
    let mut out: Vec<G::Point> = mu.points().to_vec();
    let total = n * n.saturating_sub(1) / 2;
    let picks: Vec<usize> = if total <= cap {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = index::sample(&mut rng, total, cap).into_vec();
        v.sort_unstable();
        v
    };
    let midpoints: Vec<G::Point> = picks
        .par_iter()
        .filter_map(|&k| {
            let (i, j) = pair_from_index(k, n);
            geometry.geodesic_point(&mu.points()[i], &mu.points()[j], 0.5).ok()
        })
        .collect();
    out.extend(midpoints);
    out.extend_from_slice(extra);
    out
}

/// Inverse of the row-major enumeration of pairs `i < j`.
fn pair_from_index(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= n - 1 - i {
        k -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// `exp_o(Σ w_i log_o x_i)` at the base point `o`.
pub fn chart_centroid<G: Geometry>(geometry: &G, mu: &EmpiricalMeasure<G::Point>) -> Result<G::Point> {
    let base = geometry.base_point();
    let v = weighted_log_mean(geometry, &base, mu);
    geometry.exp_map(&base, &v)
}

fn weighted_log_mean<G: Geometry>(geometry: &G, base: &G::Point, mu: &EmpiricalMeasure<G::Point>) -> TangentVector {
    let logs: Vec<TangentVector> = mu.points().iter().map(|x| geometry.log_map(base, x)).collect();
    let len = logs[0].len();
    TangentVector::from_iterator(
        len,
        (0..len).map(|k| logs.iter().zip(mu.weights()).map(|(v, w)| w * v[k]).collect::<CompensatedSum>().value()),
    )
}

#[derive(Debug, Clone, Copy)]
struct Score {
    depth: f64,
    centroid_distance: f64,
}

impl Score {
    /// `Less` means `self` is preferred.
    fn rank(&self, other: &Score) -> Ordering {
        other.depth.total_cmp(&self.depth).then(self.centroid_distance.total_cmp(&other.centroid_distance))
    }
}

/// Coarse-to-fine maximization of the sampled depth.
///
/// The coarse stage scores every candidate of `coarse_candidates` (plus
/// `extra`), the fine stage runs a compass search in the tangent chart at
/// the incumbent. Ties are broken by distance to the weighted chart
/// centroid, then by candidate order.
pub fn busemann_median<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    dirs: &DirectionSet<G::Direction>,
    config: &SearchConfig,
    extra: &[G::Point],
) -> Result<MedianResult<G>> {
    let centroid = chart_centroid(geometry, mu)?;
    let candidates = coarse_candidates(geometry, mu, config.midpoint_cap, config.seed, extra);
    let mut dirs = dirs.clone();
    let rounds = if config.refine { config.refine_rounds } else { 0 };
    let mut trace: Vec<G::Point> = Vec::new();
    let mut round = 0;
    loop {
        let engine = DepthEngine::new(geometry, mu, &dirs);
        let score = |z: &G::Point| Score { depth: engine.value(z), centroid_distance: geometry.distance(z, &centroid) };
        let pool: Vec<&G::Point> = candidates.iter().chain(trace.iter()).collect();
        let scores: Vec<Score> = pool.par_iter().map(|z| score(z)).collect();
        let mut best = 0;
        for k in 1..scores.len() {
            if scores[k].rank(&scores[best]) == Ordering::Less {
                best = k;
            }
        }
        let mut incumbent = pool[best].clone();
        let mut incumbent_score = scores[best];
        let mut accepted = vec![incumbent.clone()];

        if mu.len() > 1 {
            let spread = mu.points().iter().map(|x| geometry.distance(&incumbent, x)).sum::<f64>() / mu.len() as f64;
            let mut step = config.step_fraction * spread;
            let mut failures = 0;
            let mut polls = 0;
            while failures < config.halvings && polls < config.max_polls && step > 0.0 {
                polls += 1;
                let moves: Vec<TangentVector> =
                    geometry.tangent_basis(&incumbent).into_iter().flat_map(|b| [&b * step, &b * -step]).collect();
                let trials: Vec<Option<(G::Point, Score)>> = moves
                    .par_iter()
                    .map(|v| {
                        geometry.exp_map(&incumbent, v).ok().map(|z| {
                            let s = score(&z);
                            (z, s)
                        })
                    })
                    .collect();
                let mut winner: Option<(G::Point, Score)> = None;
                for (z, s) in trials.into_iter().flatten() {
                    if winner.as_ref().is_none_or(|(_, w)| s.rank(w) == Ordering::Less) {
                        winner = Some((z, s));
                    }
                }
                match winner {
                    Some((z, s)) if s.rank(&incumbent_score) == Ordering::Less => {
                        incumbent = z;
                        incumbent_score = s;
                        accepted.push(incumbent.clone());
                    }
                    _ => {
                        failures += 1;
                        step *= 0.5;
                    }
                }
            }
        }
        trace.extend(accepted);

        if round >= rounds {
            let final_engine = DepthEngine::new(geometry, mu, &dirs);
            let depth = final_engine.value(&incumbent);
            let search_trace = trace.iter().map(|z| (z.clone(), final_engine.value(z))).collect();
            return Ok(MedianResult {
                point: incumbent,
                depth,
                search_trace,
                directions: dirs,
                config_fingerprint: config.fingerprint(),
            });
        }
        round += 1;
        let value = incumbent_score.depth;
        let minimizers: Vec<usize> =
            (0..dirs.len()).filter(|&j| engine.mass(j, &incumbent) == value).take(config.refine_width).collect();
        let refined: Vec<(G::Direction, f64)> = minimizers
            .par_iter()
            .map(|&j| refine_direction(geometry, &incumbent, mu, &dirs.directions()[j], config.refine_budget))
            .collect();
        let mut grew = false;
        for (xi, mass) in refined {
            if mass < value {
                dirs.push(xi);
                grew = true;
            }
        }
        if !grew {
            round = rounds;
        }
    }
}

fn frechet_objective<G: Geometry>(geometry: &G, mu: &EmpiricalMeasure<G::Point>, x: &G::Point) -> f64 {
    mu.iter().map(|(p, w)| w * geometry.distance(x, p).powi(2)).collect::<CompensatedSum>().value()
}

/// Karcher iteration `x ← exp_x(s · Σ w_i log_x x_i)` started at the
/// heaviest point. A step is accepted when it lowers the objective, or
/// keeps it within rounding while lowering the gradient norm; otherwise `s`
/// is halved. Each search starts from twice the last accepted step, capped
/// at one.
pub fn frechet_mean<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    config: &IterConfig,
) -> Result<FrechetResult<G::Point>> {
    const HALVINGS: usize = 40;
    let mut x = mu.points()[mu.heaviest()].clone();
    let mut objective = frechet_objective(geometry, mu, &x);
    let mut v = weighted_log_mean(geometry, &x, mu);
    let mut gradient_norm = geometry.tangent_norm(&x, &v);
    let mut iterations = 0;
    let mut last_step: f64 = 1.0;
    while gradient_norm >= config.tolerance && iterations < config.max_iterations {
        let slack = 64.0 * f64::EPSILON * objective.abs();
        let mut step = (2.0 * last_step).min(1.0);
        let mut accepted = None;
        for _ in 0..HALVINGS {
            let candidate = geometry.exp_map(&x, &(&v * step))?;
            let value = frechet_objective(geometry, mu, &candidate);
            let cv = weighted_log_mean(geometry, &candidate, mu);
            let norm = geometry.tangent_norm(&candidate, &cv);
            if value < objective || (value <= objective + slack && norm < gradient_norm) {
                accepted = Some((candidate, value, cv, norm));
                last_step = step;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((candidate, value, cv, norm)) = accepted else { break };
        x = candidate;
        objective = value;
        v = cv;
        gradient_norm = norm;
    }
    let converged = gradient_norm < config.tolerance;
    if !converged {
        log::warn!("Karcher iteration stopped after {iterations} steps with gradient norm {gradient_norm:e}");
    }
    Ok(FrechetResult { point: x, objective, iterations, converged, gradient_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{exact_tukey_depth_2d, sample_depth};
    use crate::manifold::{DirectionMode, Euclidean, PoincareBall, SpdCone};
    use nalgebra::DMatrix;

    #[test]
    fn pair_indexing_is_row_major() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_from_index(k, n), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn two_points_give_three_candidates() {
        let g = PoincareBall::new(2).unwrap();
        let mu =
            EmpiricalMeasure::uniform(vec![g.point(&[0.5, 0.0]).unwrap(), g.point(&[-0.5, 0.0]).unwrap()]).unwrap();
        let c = coarse_candidates(&g, &mu, 2000, 0, &[]);
        assert_eq!(c.len(), 3);
        assert!(c[2].norm() < 1e-12);
    }

    #[test]
    fn midpoint_cap_and_determinism() {
        let g = Euclidean::new(2).unwrap();
        let pts = (0..200).map(|i| g.point(&[i as f64, (i * i % 7) as f64]).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts).unwrap();
        let a = coarse_candidates(&g, &mu, 2000, 7, &[]);
        let b = coarse_candidates(&g, &mu, 2000, 7, &[]);
        assert_eq!(a.len(), 2200);
        assert_eq!(a, b);
    }

    #[test]
    fn single_point_median() {
        let g = PoincareBall::new(2).unwrap();
        let p = g.point(&[0.2, -0.1]).unwrap();
        let mu = EmpiricalMeasure::uniform(vec![p.clone()]).unwrap();
        let dirs = DirectionSet::sample(&g, 16, DirectionMode::Grid).unwrap();
        let r = busemann_median(&g, &mu, &dirs, &SearchConfig::default(), &[]).unwrap();
        assert_eq!(r.point, p);
        assert_eq!(r.depth, 1.0);
    }

    #[test]
    fn triangle_median_matches_tukey_oracle() {
        let g = Euclidean::new(2).unwrap();
        let pts: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]].iter().map(|p| g.point(p).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
        let dirs = DirectionSet::sample(&g, 720, DirectionMode::Grid).unwrap();
        let r = busemann_median(&g, &mu, &dirs, &SearchConfig::default(), &[]).unwrap();
        let exact = exact_tukey_depth_2d(&r.point, &pts).unwrap();
        assert_eq!(r.depth, exact.value());
        assert_eq!(exact.count, 1);
        assert_eq!(r.depth, sample_depth(&g, &r.point, &mu, &r.directions).value);
    }

    #[test]
    fn median_dominates_data_depths() {
        let g = PoincareBall::new(2).unwrap();
        let pts: Vec<_> = (0..30)
            .map(|i| {
                let a = i as f64 * 0.7;
                g.point(&[0.5 * a.cos() * (i as f64 / 30.0), 0.4 * a.sin()]).unwrap()
            })
            .collect();
        let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
        let dirs = DirectionSet::sample(&g, 90, DirectionMode::Grid).unwrap();
        let config = SearchConfig { refine: true, ..SearchConfig::default() };
        let r = busemann_median(&g, &mu, &dirs, &config, &[]).unwrap();
        let engine = DepthEngine::new(&g, &mu, &r.directions);
        let best_data = pts.iter().map(|p| engine.value(p)).fold(0.0, f64::max);
        assert!(r.depth >= best_data);
        assert!(r.depth >= 1.0 / 3.0);
        assert!(r.directions.len() >= dirs.len());
    }

    #[test]
    fn frechet_two_ball_points() {
        let g = PoincareBall::new(2).unwrap();
        let mu =
            EmpiricalMeasure::uniform(vec![g.point(&[0.4, 0.0]).unwrap(), g.point(&[-0.4, 0.0]).unwrap()]).unwrap();
        let r = frechet_mean(&g, &mu, &IterConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.point.norm() < 1e-10);
    }

    #[test]
    fn frechet_of_inverse_pair_is_identity() {
        let g = SpdCone::new(2).unwrap();
        let a = g.point_from_row(&[2.0, 0.5, 1.0]).unwrap();
        let inv = a.matrix().clone().try_inverse().unwrap();
        let b = g.point_from_row(&[inv[(0, 0)], inv[(0, 1)], inv[(1, 1)]]).unwrap();
        let mu = EmpiricalMeasure::uniform(vec![a, b]).unwrap();
        let r = frechet_mean(&g, &mu, &IterConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.point.matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-9);
    }

    #[test]
    fn frechet_euclidean_is_mean() {
        let g = Euclidean::new(2).unwrap();
        let pts = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.25]].iter().map(|p| g.point(p).unwrap()).collect();
        let mu = EmpiricalMeasure::weighted(pts, vec![0.5, 0.25, 0.25]).unwrap();
        let r = frechet_mean(&g, &mu, &IterConfig::default()).unwrap();
        assert!((r.point.coords()[0] - 1.375).abs() < 1e-12);
        assert!((r.point.coords()[1] - 0.8125).abs() < 1e-12);
    }

    #[test]
    fn frechet_reports_non_convergence() {
        let g = PoincareBall::new(2).unwrap();
        let pts = [[0.9, 0.0], [-0.3, 0.5], [0.1, -0.8]].iter().map(|p| g.point(p).unwrap()).collect();
        let mu = EmpiricalMeasure::uniform(pts).unwrap();
        let r = frechet_mean(&g, &mu, &IterConfig { max_iterations: 1, tolerance: 1e-14 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }
}
