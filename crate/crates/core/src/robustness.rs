//! Contamination, the limiting depth under escaping contamination, and the
//! experiment drivers built on them.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::depth::{
    region_membership, region_thresholds, sample_depth, survival_quantile, DepthEngine, DepthRegion, DirectionSet,
    RegionEntry,
};
use crate::error::{HoroError, Result};
use crate::estimators::{busemann_median, frechet_mean, IterConfig, SearchConfig};
use crate::manifold::linalg::symmetrize as symmetrize_matrix;
use crate::manifold::{Geometry, PoincareBall, SpdCone, SpdPoint};
use crate::measure::EmpiricalMeasure;

/// Comparisons of depth values against levels allow this much rounding.
pub const DEPTH_TOL: f64 = 1e-12;
pub const RECORD_SCHEMA: &str = "horodepth.record.v1";

#[derive(Debug, Clone)]
pub enum Contaminant<G: Geometry> {
    /// Point mass at `ray_point(base, direction, distance)`.
    PointMass {
        direction: G::Direction,
        distance: f64,
    },
    Measure(EmpiricalMeasure<G::Point>),
}

#[derive(Debug, Clone)]
pub struct ContaminationSpec<G: Geometry> {
    pub epsilon: f64,
    pub contaminant: Contaminant<G>,
}

impl<G: Geometry> ContaminationSpec<G> {
    pub fn point_mass(epsilon: f64, direction: G::Direction, distance: f64) -> Result<Self> {
        let spec = ContaminationSpec { epsilon, contaminant: Contaminant::PointMass { direction, distance } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn measure(epsilon: f64, q: EmpiricalMeasure<G::Point>) -> Result<Self> {
        let spec = ContaminationSpec { epsilon, contaminant: Contaminant::Measure(q) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(HoroError::invalid(format!("contamination level {} outside [0, 1)", self.epsilon)));
        }
        if let Contaminant::PointMass { distance, .. } = &self.contaminant {
            if !(*distance >= 0.0) {
                return Err(HoroError::invalid(format!("point-mass distance {distance} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// `(1−ε)·mu + ε·Q`, the contaminant listed after the original points.
pub fn contaminate<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    spec: &ContaminationSpec<G>,
) -> Result<EmpiricalMeasure<G::Point>> {
    spec.validate()?;
    let eps = spec.epsilon;
    if eps == 0.0 {
        return Ok(mu.clone());
    }
    let (extra_points, extra_weights) = match &spec.contaminant {
        Contaminant::PointMass { direction, distance } => {
            (vec![geometry.ray_point(&geometry.base_point(), direction, *distance)?], vec![1.0])
        }
        Contaminant::Measure(q) => (q.points().to_vec(), q.weights().to_vec()),
    };
    let mut points = mu.points().to_vec();
    points.extend(extra_points);
    let mut weights: Vec<f64> = mu.weights().iter().map(|w| (1.0 - eps) * w).collect();
    weights.extend(extra_weights.iter().map(|w| eps * w));
    EmpiricalMeasure::weighted(points, weights)
}

/// Limiting depth of `(1−ε)·mu + ε·δ_{γ(t)}` as the contaminant escapes
/// along `ξ`:
/// `min{(1−ε)·mass_ξ(z), min_{ξ_j ≠ ξ} (1−ε)·mass_j(z) + ε}`.
///
/// Masses are accumulated over the same weighted list as the contaminated
/// measure, so once every contaminant comparison has settled the two depths
/// agree bit for bit.
#[derive(Debug, Clone)]
pub struct LimitingDepth<'a, G: Geometry> {
    geometry: &'a G,
    mixture: EmpiricalMeasure<G::Point>,
    xi: G::Direction,
    dirs: &'a DirectionSet<G::Direction>,
    is_xi: Vec<bool>,
    n: usize,
}

impl<'a, G: Geometry> LimitingDepth<'a, G> {
    pub fn new(
        geometry: &'a G,
        mu: &EmpiricalMeasure<G::Point>,
        epsilon: f64,
        xi: &G::Direction,
        dirs: &'a DirectionSet<G::Direction>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(HoroError::invalid(format!("contamination level {epsilon} outside (0, 1)")));
        }
        let spec = ContaminationSpec::point_mass(epsilon, xi.clone(), 0.0)?;
        let mixture = contaminate(geometry, mu, &spec)?;
        let row = geometry.direction_to_row(xi);
        let is_xi = dirs.directions().iter().map(|d| geometry.direction_to_row(d) == row).collect();
        Ok(LimitingDepth { geometry, mixture, xi: xi.clone(), dirs, is_xi, n: mu.len() })
    }

    pub fn value(&self, z: &G::Point) -> f64 {
        let g = self.geometry;
        let n = self.n;
        let level = g.busemann(&self.xi, z);
        let mut best = self.mixture.mass_where_indexed(|i, x| i < n && g.busemann(&self.xi, x) >= level);
        for (xi_j, &same) in self.dirs.directions().iter().zip(&self.is_xi) {
            if same {
                continue;
            }
            let level = g.busemann(xi_j, z);
            let mass = self.mixture.mass_where_indexed(|i, x| i == n || g.busemann(xi_j, x) >= level);
            best = best.min(mass);
        }
        best
    }

    /// Whether `ξ` is one of the directions.
    pub fn contains_escape_direction(&self) -> bool {
        self.is_xi.iter().any(|&b| b)
    }
}

pub fn limiting_depth<G: Geometry>(
    geometry: &G,
    z: &G::Point,
    mu: &EmpiricalMeasure<G::Point>,
    epsilon: f64,
    xi: &G::Direction,
    dirs: &DirectionSet<G::Direction>,
) -> Result<f64> {
    Ok(LimitingDepth::new(geometry, mu, epsilon, xi, dirs)?.value(z))
}

/// Superlevel set `{D_∞ ≥ α}`: the `α₂`-region of `mu` intersected with the
/// horoball of `ξ` at level `t_ξ(α₁)`, where `α₁ = α/(1−ε)` and
/// `α₂ = (α−ε)/(1−ε)`.
#[derive(Debug, Clone)]
pub enum LimitingRegion<D> {
    Empty,
    Region(DepthRegion<D>),
}

impl<D: Clone> LimitingRegion<D> {
    pub fn contains<G: Geometry<Direction = D>>(&self, geometry: &G, z: &G::Point) -> bool {
        match self {
            LimitingRegion::Empty => false,
            LimitingRegion::Region(r) => region_membership(geometry, r, z).inside,
        }
    }
}

pub fn limiting_region<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    epsilon: f64,
    xi: &G::Direction,
    alpha: f64,
    dirs: &DirectionSet<G::Direction>,
) -> Result<LimitingRegion<G::Direction>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HoroError::invalid(format!("contamination level {epsilon} outside (0, 1)")));
    }
    if !(alpha > 0.0) {
        return Err(HoroError::invalid(format!("depth level {alpha} must be positive")));
    }
    if alpha > 1.0 - epsilon + DEPTH_TOL {
        return Ok(LimitingRegion::Empty);
    }
    let alpha1 = (alpha / (1.0 - epsilon)).min(1.0);
    let alpha2 = (alpha - epsilon) / (1.0 - epsilon);
    let mut entries =
        if alpha2 > DEPTH_TOL { region_thresholds(geometry, mu, alpha2, dirs)?.entries } else { Vec::new() };
    let scores: Vec<f64> = mu.points().iter().map(|x| geometry.busemann(xi, x)).collect();
    let threshold = survival_quantile(&scores, mu.weights(), mu.is_uniform(), alpha1)?;
    entries.push(RegionEntry { direction: xi.clone(), threshold });
    Ok(LimitingRegion::Region(DepthRegion::new(entries, alpha, mu.fingerprint(geometry))?))
}

/// Measure closed under the geodesic reflection `s_θ`: each point and its
/// reflection carry half the original weight. A point equal to `θ` is its
/// own reflection, so it keeps its full weight (as two halves at `θ`).
pub fn symmetrize<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    theta: &G::Point,
) -> Result<EmpiricalMeasure<G::Point>> {
    let theta_row = geometry.point_to_row(theta);
    let mut points = Vec::with_capacity(2 * mu.len());
    let mut weights = Vec::with_capacity(2 * mu.len());
    for (x, w) in mu.iter() {
        let mirror = if geometry.point_to_row(x) == theta_row { theta.clone() } else { geometry.reflect(theta, x)? };
        points.push(x.clone());
        points.push(mirror);
        weights.push(0.5 * w);
        weights.push(0.5 * w);
    }
    EmpiricalMeasure::weighted(points, weights)
}

/// `n` wrapped-Gaussian draws around `center`, uniform weights.
pub fn wrapped_gaussian_sample<G: Geometry>(
    geometry: &G,
    center: &G::Point,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<EmpiricalMeasure<G::Point>> {
    check_sampler(sigma, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n).map(|_| geometry.wrapped_gaussian(center, sigma, &mut rng)).collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::uniform(points)
}

/// `C^{1/2} exp(S) C^{1/2}` with `S` symmetric Gaussian (diagonal standard
/// deviation `sigma`, off-diagonal `sigma/√2`).
pub fn spd_log_gaussian_sample(
    geometry: &SpdCone,
    center: &SpdPoint,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<EmpiricalMeasure<SpdPoint>> {
    check_sampler(sigma, n)?;
    let p = geometry.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = center.sqrt();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = nalgebra::DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = if i == j { sigma * z } else { sigma * z / std::f64::consts::SQRT_2 };
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let e = geometry.exp_symmetric(&s)?;
        points.push(SpdPoint::new(symmetrize_matrix(&(&root * e.matrix() * &root)))?);
    }
    EmpiricalMeasure::uniform(points)
}

fn check_sampler(sigma: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(HoroError::invalid("sample size must be at least 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HoroError::invalid(format!("standard deviation {sigma} must be positive")));
    }
    Ok(())
}

/// One machine-readable result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema: String,
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub measures: BTreeMap<String, Value>,
    pub verdicts: BTreeMap<String, bool>,
    pub seeds: Vec<u64>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str) -> Self {
        ExperimentRecord {
            schema: RECORD_SCHEMA.to_string(),
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            measures: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            seeds: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn measure(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.measures.insert(key.to_string(), value.into());
        self
    }

    pub fn verdict(mut self, key: &str, ok: bool) -> Self {
        self.verdicts.insert(key.to_string(), ok);
        self
    }

    pub fn seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

/// Human-readable table: one line per (experiment, verdict) with pass counts.
pub fn summary_table(records: &[ExperimentRecord]) -> String {
    let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for r in records {
        for (k, &v) in &r.verdicts {
            let e = counts.entry((r.experiment.clone(), k.clone())).or_default();
            e.0 += usize::from(v);
            e.1 += 1;
        }
    }
    let mut out = format!("{:<14} {:<28} {:>9}  status\n", "experiment", "check", "passed");
    for ((exp, check), (ok, total)) in counts {
        let status = if ok == total { "PASS" } else { "FAIL" };
        out.push_str(&format!("{exp:<14} {check:<28} {:>9}  {status}\n", format!("{ok}/{total}")));
    }
    out
}

fn max_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Huber stability: `|D_m(z; (1−ε)P + εQ) − D_m(z; P)| ≤ ε` on every probe,
/// and `region^{α+ε}(P) ⊆ region^{α}(P_ε)` for each `α` with `α + ε < 1`.
pub fn experiment_huber<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    q: &EmpiricalMeasure<G::Point>,
    eps_list: &[f64],
    alphas: &[f64],
    probes: &[G::Point],
    dirs: &DirectionSet<G::Direction>,
) -> Result<Vec<ExperimentRecord>> {
    let clean = DepthEngine::new(geometry, mu, dirs).depths(probes);
    let mut records = Vec::new();
    for &eps in eps_list {
        let mixed = contaminate(geometry, mu, &ContaminationSpec::measure(eps, q.clone())?)?;
        let dirty = DepthEngine::new(geometry, &mixed, dirs).depths(probes);
        let gap = max_abs_gap(&clean, &dirty);
        let mut violations = 0usize;
        let mut checked = Vec::new();
        for &alpha in alphas {
            if alpha + eps >= 1.0 || eps == 0.0 {
                continue;
            }
            let outer = region_thresholds(geometry, mu, alpha + eps, dirs)?;
            let inner = region_thresholds(geometry, &mixed, alpha, dirs)?;
            violations += probes
                .par_iter()
                .filter(|z| {
                    region_membership(geometry, &outer, z).inside && !region_membership(geometry, &inner, z).inside
                })
                .count();
            checked.push(alpha);
        }
        records.push(
            ExperimentRecord::new("huber")
                .param("manifold", geometry.context().tag())
                .param("epsilon", eps)
                .param("probes", probes.len())
                .param("directions", dirs.len())
                .param("alphas", checked)
                .measure("max_gap", gap)
                .measure("inclusion_violations", violations)
                .verdict("gap_within_epsilon", gap <= eps + DEPTH_TOL)
                .verdict("region_inclusion", violations == 0),
        );
    }
    Ok(records)
}

/// Outcome of the escaping-contamination sweep.
#[derive(Debug, Clone)]
pub struct BoundaryReport {
    /// Smallest `t` after which every contaminant comparison has its limit,
    /// `None` when that does not happen before the ray guard.
    pub settling_time: Option<f64>,
    pub records: Vec<ExperimentRecord>,
}

/// Smallest `t ∈ [lo, hi]` with `f(t) ≥ target` for increasing `f`, or
/// `None` if `f(hi) < target`.
fn first_crossing(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> Option<f64> {
    if f(lo) >= target {
        return Some(lo);
    }
    if f(hi) < target {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) >= target {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}

/// Settling time of a point mass escaping from the origin along `ξ` in the
/// ball: beyond it, `B_{ξ_j}(γ(t)) ≥ max_z B_{ξ_j}(z)` for every `ξ_j ≠ ξ`
/// and `B_ξ(γ(t)) < min_z B_ξ(z)`.
///
/// Along the ray `x = rξ`, `B_{ξ_j}` decreases up to `r = ⟨ξ, ξ_j⟩` and
/// increases afterwards, so each condition holds on a final interval found
/// by bisection.
pub fn settling_time(
    geometry: &PoincareBall,
    xi: &<PoincareBall as Geometry>::Direction,
    dirs: &DirectionSet<<PoincareBall as Geometry>::Direction>,
    probes: &[<PoincareBall as Geometry>::Point],
) -> Option<f64> {
    let base = geometry.base_point();
    let hi = geometry.max_ray_parameter();
    let ray = |t: f64| geometry.ray_point(&base, xi, t).ok();
    let xi_row = geometry.direction_to_row(xi);
    let mut settle: f64 = 0.0;
    for d in dirs.directions() {
        if geometry.direction_to_row(d) == xi_row {
            let lowest = probes.iter().map(|z| geometry.busemann(xi, z)).fold(f64::INFINITY, f64::min);
            // Need −B_ξ(γ(t)) > −lowest.
            let f = |t: f64| ray(t).map_or(f64::NEG_INFINITY, |p| -geometry.busemann(xi, &p));
            let t = first_crossing(f, -lowest, 0.0, hi)?;
            let t = if f(t) > -lowest { t } else { first_crossing(f, f64::from_bits((-lowest).to_bits() + 1), t, hi)? };
            settle = settle.max(t);
        } else {
            let highest = probes.iter().map(|z| geometry.busemann(d, z)).fold(f64::NEG_INFINITY, f64::max);
            let c = xi.coords().dot(d.coords()).max(0.0);
            let turn = if c >= 1.0 { hi } else { 2.0 * c.atanh() }.min(hi);
            let f = |t: f64| ray(t).map_or(f64::NEG_INFINITY, |p| geometry.busemann(d, &p));
            if f(turn) >= highest {
                continue;
            }
            settle = settle.max(first_crossing(f, highest, turn, hi)?);
        }
    }
    Some(settle)
}

/// Escaping contamination in the ball: for each `t`, compares the depth of
/// `(1−ε)·mu + ε·δ_{γ(t)}` with the limiting depth on the probes, and tracks
/// the contaminated Fréchet mean. `ξ` is appended to the directions when it
/// is not already one of them.
#[allow(clippy::too_many_arguments)]
pub fn experiment_boundary(
    geometry: &PoincareBall,
    mu: &EmpiricalMeasure<<PoincareBall as Geometry>::Point>,
    epsilon: f64,
    xi: &<PoincareBall as Geometry>::Direction,
    t_list: &[f64],
    probes: &[<PoincareBall as Geometry>::Point],
    dirs: &DirectionSet<<PoincareBall as Geometry>::Direction>,
    iter: &IterConfig,
) -> Result<BoundaryReport> {
    let mut dirs = dirs.clone();
    let xi_row = geometry.direction_to_row(xi);
    if !dirs.directions().iter().any(|d| geometry.direction_to_row(d) == xi_row) {
        dirs.push(xi.clone());
    }
    let settle = if epsilon > 0.0 { settling_time(geometry, xi, &dirs, probes) } else { Some(0.0) };
    let limit: Option<Vec<f64>> = if epsilon > 0.0 {
        let ld = LimitingDepth::new(geometry, mu, epsilon, xi, &dirs)?;
        Some(probes.par_iter().map(|z| ld.value(z)).collect())
    } else {
        None
    };
    let clean: Vec<f64> = probes.par_iter().map(|z| sample_depth(geometry, z, mu, &dirs).value).collect();
    let guard = geometry.max_ray_parameter();
    let mut records = Vec::new();
    for &t in t_list {
        if t > guard {
            log::warn!("boundary sweep truncated at t = {t}: beyond the ray guard {guard}");
            records.push(
                ExperimentRecord::new("boundary")
                    .param("t", t)
                    .param("epsilon", epsilon)
                    .measure("truncated", true)
                    .measure("guard", guard),
            );
            break;
        }
        let spec = ContaminationSpec::point_mass(epsilon, xi.clone(), t)?;
        let mixed = contaminate(geometry, mu, &spec)?;
        let depths: Vec<f64> = probes.par_iter().map(|z| sample_depth(geometry, z, &mixed, &dirs).value).collect();
        let reference = limit.as_deref().unwrap_or(&clean);
        let gap = max_abs_gap(&depths, reference);
        let fm = frechet_mean(geometry, &mixed, iter)?;
        let settled = settle.is_some_and(|s| t >= s);
        let mut rec = ExperimentRecord::new("boundary")
            .param("t", t)
            .param("epsilon", epsilon)
            .param("n", mu.len())
            .param("directions", dirs.len())
            .param("probes", probes.len())
            .measure("sup_gap", gap)
            .measure("settled", settled)
            .measure("settling_time", settle.map_or(Value::Null, Value::from))
            .measure("frechet_norm", fm.point.norm())
            .measure("frechet_busemann", geometry.busemann(xi, &fm.point))
            .measure("frechet_converged", fm.converged);
        if settled || epsilon == 0.0 {
            rec = rec.verdict("exact_after_settling", gap == 0.0);
        }
        records.push(rec);
    }
    Ok(BoundaryReport { settling_time: settle, records })
}

/// Parameters shared by the sampling experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    pub n: usize,
    pub reps: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { n: 200, reps: 50, sigma: 0.5, seed: 1 }
    }
}

/// Per replicate: wrapped-Gaussian sample around the base point, median
/// search, and the check `depth ≥ 1/(d+1)`.
pub fn experiment_centerpoint<G: Geometry>(
    geometry: &G,
    params: &SamplingParams,
    dirs: &DirectionSet<G::Direction>,
    search: &SearchConfig,
) -> Result<Vec<ExperimentRecord>> {
    let threshold = 1.0 / (geometry.dimension() as f64 + 1.0);
    let center = geometry.base_point();
    (0..params.reps)
        .into_par_iter()
        .map(|r| {
            let seed = params.seed.wrapping_add(r as u64);
            let mu = wrapped_gaussian_sample(geometry, &center, params.sigma, params.n, seed)?;
            let med = busemann_median(geometry, &mu, dirs, search, &[])?;
            Ok(ExperimentRecord::new("centerpoint")
                .param("manifold", geometry.context().tag())
                .param("dimension", geometry.dimension())
                .param("n", params.n)
                .param("sigma", params.sigma)
                .param("replicate", r)
                .param("directions", med.directions.len())
                .measure("depth", med.depth)
                .measure("threshold", threshold)
                .verdict("centerpoint_bound", med.depth >= threshold)
                .seeds(vec![seed, search.seed]))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyParams {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub reference_n: usize,
    /// Fraction of replicates whose grid gap must decrease along `n_list`.
    pub trend_fraction: f64,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        ConsistencyParams {
            n_list: vec![100, 300, 1000],
            reps: 20,
            sigma: 0.5,
            seed: 11,
            reference_n: 20000,
            trend_fraction: 0.8,
        }
    }
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Nested wrapped-Gaussian samples around `theta`: median error and the
/// sup-over-probes depth gap to a large reference sample, per sample size.
/// The last record summarizes the trends across replicates.
pub fn experiment_consistency<G: Geometry>(
    geometry: &G,
    theta: &G::Point,
    params: &ConsistencyParams,
    probes: &[G::Point],
    dirs: &DirectionSet<G::Direction>,
    search: &SearchConfig,
) -> Result<Vec<ExperimentRecord>> {
    let mut n_list = params.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    if n_list.len() < 2 || params.reps == 0 {
        return Err(HoroError::invalid("consistency needs at least two sample sizes and one replicate"));
    }
    let n_max = *n_list.last().unwrap_or(&1);
    let reference_seed = params.seed ^ 0x005e_ed0f_7e7e;
    let reference = wrapped_gaussian_sample(geometry, theta, params.sigma, params.reference_n, reference_seed)?;
    let reference_depths = DepthEngine::new(geometry, &reference, dirs).depths(probes);

    let mut records: Vec<ExperimentRecord> = (0..params.reps)
        .into_par_iter()
        .map(|r| {
            let seed = params.seed.wrapping_add(r as u64);
            let full = wrapped_gaussian_sample(geometry, theta, params.sigma, n_max, seed)?;
            let mut errors = Vec::new();
            let mut gaps = Vec::new();
            for &n in &n_list {
                let mu = EmpiricalMeasure::uniform(full.points()[..n].to_vec())?;
                let med = busemann_median(geometry, &mu, dirs, search, &[])?;
                errors.push(geometry.distance(&med.point, theta));
                let depths = DepthEngine::new(geometry, &mu, dirs).depths(probes);
                gaps.push(max_abs_gap(&depths, &reference_depths));
            }
            let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
            Ok(ExperimentRecord::new("consistency")
                .param("manifold", geometry.context().tag())
                .param("n_list", n_list.clone())
                .param("replicate", r)
                .param("reference_n", params.reference_n)
                .measure("median_errors", errors)
                .measure("sup_gaps", gaps)
                .measure("gap_decreasing", decreasing)
                .seeds(vec![seed, reference_seed, search.seed]))
        })
        .collect::<Result<Vec<_>>>()?;

    let column = |key: &str, k: usize| -> Vec<f64> {
        records.iter().map(|r| r.measures[key][k].as_f64().unwrap_or(f64::NAN)).collect()
    };
    let median_errors: Vec<f64> = (0..n_list.len()).map(|k| median_of(&mut column("median_errors", k))).collect();
    let trend = records.iter().filter(|r| r.measures["gap_decreasing"] == Value::Bool(true)).count();
    let needed = (params.trend_fraction * params.reps as f64).ceil() as usize;
    let summary = ExperimentRecord::new("consistency")
        .param("manifold", geometry.context().tag())
        .param("n_list", n_list.clone())
        .param("reps", params.reps)
        .measure("median_of_errors", median_errors.clone())
        .measure("gap_decreasing_count", trend)
        .verdict("median_error_decreases", median_errors[n_list.len() - 1] < median_errors[0])
        .verdict("gap_trend", trend >= needed)
        .seeds(vec![params.seed, reference_seed]);
    records.push(summary);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreakdownParams {
    pub eps_list: Vec<f64>,
    /// Number of sampled directions tried as adversarial rays.
    pub subset: usize,
    pub seed: u64,
    /// Ray parameter of the adversarial point mass; the ray guard if absent.
    pub distance: Option<f64>,
    /// Allowed displacement as a multiple of the clean data diameter.
    pub slack: f64,
}

impl Default for BreakdownParams {
    fn default() -> Self {
        BreakdownParams { eps_list: vec![0.0, 0.05, 0.1, 0.2, 0.3], subset: 8, seed: 3, distance: None, slack: 3.0 }
    }
}

/// Point masses pushed far along the worst of a seeded subset of
/// directions; records the median displacement and checks it stays bounded
/// while `ε ≤ D_*/(1+D_*)`.
pub fn experiment_breakdown<G: Geometry>(
    geometry: &G,
    mu: &EmpiricalMeasure<G::Point>,
    params: &BreakdownParams,
    dirs: &DirectionSet<G::Direction>,
    search: &SearchConfig,
) -> Result<Vec<ExperimentRecord>> {
    let clean = busemann_median(geometry, mu, dirs, search, &[])?;
    let d_star = clean.depth;
    let eps_bound = d_star / (1.0 + d_star);
    let pts = mu.points();
    let diameter = pts
        .par_iter()
        .enumerate()
        .map(|(i, x)| pts[i + 1..].iter().map(|y| geometry.distance(x, y)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let distance = params.distance.unwrap_or_else(|| geometry.max_ray_parameter());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = params.subset.clamp(1, dirs.len());
    let mut subset = rand::seq::index::sample(&mut rng, dirs.len(), k).into_vec();
    subset.sort_unstable();

    let mut records = Vec::new();
    for &eps in &params.eps_list {
        let trials: Vec<(usize, f64)> = if eps == 0.0 {
            vec![(subset[0], geometry.distance(&clean.point, &clean.point))]
        } else {
            subset
                .par_iter()
                .map(|&j| {
                    let spec = ContaminationSpec::point_mass(eps, dirs.directions()[j].clone(), distance)?;
                    let mixed = contaminate(geometry, mu, &spec)?;
                    let med = busemann_median(geometry, &mixed, dirs, search, &[])?;
                    Ok((j, geometry.distance(&med.point, &clean.point)))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let (worst, displacement) =
            trials.iter().copied().fold((trials[0].0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let mut rec = ExperimentRecord::new("breakdown")
            .param("manifold", geometry.context().tag())
            .param("epsilon", eps)
            .param("distance", distance)
            .param("subset", subset.clone())
            .measure("clean_depth", d_star)
            .measure("epsilon_bound", eps_bound)
            .measure("displacement", displacement)
            .measure("worst_direction", worst)
            .measure("diameter", diameter)
            .seeds(vec![params.seed, search.seed]);
        if eps <= eps_bound {
            rec = rec.verdict("bounded", displacement <= params.slack * diameter);
        }
        records.push(rec);
    }
    Ok(records)
}
