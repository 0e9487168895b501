//! Sample horospherical depth over a finite set of boundary directions.
//!
//! For a direction `ξ` and a query `z`, the directional mass is the weight
//! of the closed upper horospherical halfspace `{x : B_ξ(x) ≥ B_ξ(z)}`. The
//! sampled depth `D_m` is its minimum over the direction set. Because the
//! minimum runs over a subset of the boundary, `D_m` never falls below the
//! exact depth.

mod contour;
mod region;
mod tukey;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifold::{DirectionMode, Geometry};
use crate::measure::{CompensatedSum, EmpiricalMeasure};

pub use contour::{
    depth_contours, grid_points, region_contours, trace_contour_2d, ContourSet, GridSpec, PlaneChart, Polyline,
};
pub(crate) use region::survival_quantile;
pub use region::{region_membership, region_thresholds, upper_survival_quantile, DepthRegion, Membership, RegionEntry};
pub use tukey::{exact_tukey_depth_2d, TukeyDepth};

/// How a direction set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    SeededRandom { seed: u64 },
    Grid,
    Explicit,
}

/// Nonempty ordered list of boundary directions.
#[derive(Debug, Clone)]
pub struct DirectionSet<D> {
    directions: Vec<D>,
    provenance: Provenance,
}

impl<D: Clone> DirectionSet<D> {
    pub fn sample<G: Geometry<Direction = D>>(geometry: &G, m: usize, mode: DirectionMode) -> Result<Self> {
        let directions = geometry.sample_directions(m, mode)?;
        let provenance = match mode {
            DirectionMode::Grid => Provenance::Grid,
            DirectionMode::Random { seed } => Provenance::SeededRandom { seed },
        };
        Ok(DirectionSet { directions, provenance })
    }

    pub fn explicit(directions: Vec<D>) -> Result<Self> {
        if directions.is_empty() {
            return Err(crate::HoroError::invalid("direction set must be nonempty"));
        }
        Ok(DirectionSet { directions, provenance: Provenance::Explicit })
    }

    pub fn directions(&self) -> &[D] {
        &self.directions
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// The first `m` directions (at least one).
    pub fn prefix(&self, m: usize) -> Self {
        let m = m.clamp(1, self.directions.len());
        DirectionSet { directions: self.directions[..m].to_vec(), provenance: self.provenance }
    }

    /// Appends a direction; the set becomes explicit.
    pub fn push(&mut self, d: D) {
        self.directions.push(d);
        self.provenance = Provenance::Explicit;
    }

    pub fn map<E: Clone>(&self, f: impl FnMut(&D) -> Result<E>) -> Result<DirectionSet<E>> {
        Ok(DirectionSet {
            directions: self.directions.iter().map(f).collect::<Result<Vec<_>>>()?,
            provenance: self.provenance,
        })
    }
}

/// Sampled depth of a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthValue {
    pub value: f64,
    /// Index of the first direction attaining the minimum.
    pub minimizing_direction: usize,
    pub attained_mass: f64,
}

/// Weight of `{x : B_ξ(x) ≥ B_ξ(z)}`; ties count as inside.
pub fn directional_mass<G: Geometry>(
    geometry: &G,
    xi: &G::Direction,
    z: &G::Point,
    mu: &EmpiricalMeasure<G::Point>,
) -> f64 {
    let level = geometry.busemann(xi, z);
    mu.mass_where(|x| geometry.busemann(xi, x) >= level)
}

/// Survival function `S_ξ(t)`: weight of `{x : B_ξ(x) ≥ t}`.
pub fn survival_mass<G: Geometry>(geometry: &G, xi: &G::Direction, t: f64, mu: &EmpiricalMeasure<G::Point>) -> f64 {
    mu.mass_where(|x| geometry.busemann(xi, x) >= t)
}

/// `D_m(z) = min_j directional_mass(ξ_j, z)`, first index on ties.
pub fn sample_depth<G: Geometry>(
    geometry: &G,
    z: &G::Point,
    mu: &EmpiricalMeasure<G::Point>,
    dirs: &DirectionSet<G::Direction>,
) -> DepthValue {
    let mut best = DepthValue { value: f64::INFINITY, minimizing_direction: 0, attained_mass: f64::INFINITY };
    for (j, xi) in dirs.directions().iter().enumerate() {
        let mass = directional_mass(geometry, xi, z, mu);
        if mass < best.value {
            best = DepthValue { value: mass, minimizing_direction: j, attained_mass: mass };
        }
    }
    best
}

/// Two-sided depth: minimum over directions of the lighter of the two
/// closed horospherical halfspaces bounded by the horosphere through `z`.
pub fn two_sided_depth<G: Geometry>(
    geometry: &G,
    z: &G::Point,
    mu: &EmpiricalMeasure<G::Point>,
    dirs: &DirectionSet<G::Direction>,
) -> f64 {
    dirs.directions()
        .iter()
        .map(|xi| {
            let level = geometry.busemann(xi, z);
            let above = mu.mass_where(|x| geometry.busemann(xi, x) >= level);
            let below = mu.mass_where(|x| geometry.busemann(xi, x) <= level);
            above.min(below)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Local pattern search over the boundary for a direction of smaller mass.
///
/// Starting from `xi0`, polls `±step` moves along each axis of the boundary
/// parametrization, accepts the first strict decrease, and halves the step
/// after an unsuccessful poll. `budget` bounds the number of mass
/// evaluations. The returned mass never exceeds the mass of `xi0`.
pub fn refine_direction<G: Geometry>(
    geometry: &G,
    z: &G::Point,
    mu: &EmpiricalMeasure<G::Point>,
    xi0: &G::Direction,
    budget: usize,
) -> (G::Direction, f64) {
    let mut best = xi0.clone();
    let mut best_mass = directional_mass(geometry, &best, z, mu);
    let mut evaluations = 1;
    let mut step = 1.0;
    let dof = geometry.direction_dof();
    if dof == 0 {
        return (best, best_mass);
    }
    'search: while evaluations < budget.max(1) && step > 1e-7 {
        for axis in 0..dof {
            for sign in [1.0, -1.0] {
                if evaluations >= budget {
                    break 'search;
                }
                let candidate = geometry.perturb_direction(&best, axis, sign * step);
                let mass = directional_mass(geometry, &candidate, z, mu);
                evaluations += 1;
                if mass < best_mass {
                    best = candidate;
                    best_mass = mass;
                    continue 'search;
                }
            }
        }
        step *= 0.5;
    }
    (best, best_mass)
}

/// Busemann scores of the sample along one direction, sorted ascending,
/// with prefix and suffix masses.
#[derive(Debug, Clone)]
struct ScoreTable {
    sorted: Vec<f64>,
    /// `prefix[k]`: mass of `sorted[..k]`.
    prefix: Vec<f64>,
    /// `suffix[k]`: mass of `sorted[k..]`.
    suffix: Vec<f64>,
}

impl ScoreTable {
    fn build<G: Geometry>(geometry: &G, xi: &G::Direction, mu: &EmpiricalMeasure<G::Point>) -> Self {
        let mut scored: Vec<(f64, f64)> = mu.iter().map(|(x, w)| (geometry.busemann(xi, x), w)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = scored.len();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut suffix = vec![0.0; n + 1];
        if mu.is_uniform() {
            prefix.extend((0..=n).map(|k| k as f64 / n as f64));
            for (k, s) in suffix.iter_mut().enumerate() {
                *s = (n - k) as f64 / n as f64;
            }
        } else {
            let mut acc = CompensatedSum::new();
            prefix.push(0.0);
            for &(_, w) in &scored {
                acc.add(w);
                prefix.push(acc.value());
            }
            let mut acc = CompensatedSum::new();
            for k in (0..n).rev() {
                acc.add(scored[k].1);
                suffix[k] = acc.value();
            }
        }
        ScoreTable { sorted: scored.into_iter().map(|(s, _)| s).collect(), prefix, suffix }
    }

    fn mass_at_or_above(&self, level: f64) -> f64 {
        self.suffix[self.sorted.partition_point(|&s| s < level)]
    }

    fn mass_at_or_below(&self, level: f64) -> f64 {
        self.prefix[self.sorted.partition_point(|&s| s <= level)]
    }
}

/// Depth evaluator with per-direction sorted score tables, so that each
/// query costs `m` Busemann evaluations and `m` binary searches.
#[derive(Debug, Clone)]
pub struct DepthEngine<'a, G: Geometry> {
    geometry: &'a G,
    dirs: &'a DirectionSet<G::Direction>,
    tables: Vec<ScoreTable>,
}

impl<'a, G: Geometry> DepthEngine<'a, G> {
    pub fn new(geometry: &'a G, mu: &EmpiricalMeasure<G::Point>, dirs: &'a DirectionSet<G::Direction>) -> Self {
        let tables = dirs.directions().par_iter().map(|xi| ScoreTable::build(geometry, xi, mu)).collect();
        DepthEngine { geometry, dirs, tables }
    }

    pub fn directions(&self) -> &DirectionSet<G::Direction> {
        self.dirs
    }

    pub fn geometry(&self) -> &G {
        self.geometry
    }

    /// Directional mass for the `j`-th direction.
    pub fn mass(&self, j: usize, z: &G::Point) -> f64 {
        let level = self.geometry.busemann(&self.dirs.directions()[j], z);
        self.tables[j].mass_at_or_above(level)
    }

    pub fn depth(&self, z: &G::Point) -> DepthValue {
        let mut best = DepthValue { value: f64::INFINITY, minimizing_direction: 0, attained_mass: f64::INFINITY };
        for j in 0..self.tables.len() {
            let mass = self.mass(j, z);
            if mass < best.value {
                best = DepthValue { value: mass, minimizing_direction: j, attained_mass: mass };
            }
        }
        best
    }

    pub fn value(&self, z: &G::Point) -> f64 {
        self.depth(z).value
    }

    pub fn two_sided(&self, z: &G::Point) -> f64 {
        self.dirs
            .directions()
            .iter()
            .zip(&self.tables)
            .map(|(xi, table)| {
                let level = self.geometry.busemann(xi, z);
                table.mass_at_or_above(level).min(table.mass_at_or_below(level))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Depths of many query points, evaluated in parallel.
    pub fn depths(&self, zs: &[G::Point]) -> Vec<f64> {
        zs.par_iter().map(|z| self.value(z)).collect()
    }
}
