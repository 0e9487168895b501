//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use horodepth::depth::{
    grid_points, region_membership, region_thresholds, sample_depth, two_sided_depth, DirectionSet, GridSpec,
    PlaneChart,
};
use horodepth::estimators::{busemann_median, IterConfig, SearchConfig};
use horodepth::io::AnyMeasure;
use horodepth::manifold::{
    BallPoint, DirectionMode, Euclidean, EuclideanPoint, Geometry, PoincareBall, SpdCone, SpdPoint,
};
use horodepth::measure::EmpiricalMeasure;
use horodepth::robustness::{
    experiment_boundary, experiment_centerpoint, experiment_consistency, experiment_huber, symmetrize,
    wrapped_gaussian_sample, ConsistencyParams, ExperimentRecord, SamplingParams,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn verdicts_pass(records: &[ExperimentRecord], key: &str) -> (usize, usize) {
    let with: Vec<_> = records.iter().filter_map(|r| r.verdicts.get(key)).collect();
    (with.iter().filter(|v| ***v).count(), with.len())
}

fn measure_f64(r: &ExperimentRecord, key: &str) -> f64 {
    r.measures.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

fn param_f64(r: &ExperimentRecord, key: &str) -> f64 {
    r.params.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// 1. Euclidean reduction

/// Exact planar halfspace count at `z`: `n` minus the largest number of
/// points in an open halfplane whose boundary passes through `z`. Points in
/// an open halfplane are exactly those whose angles fit in a half-open arc
/// `[θ_i, θ_i + π)` starting at one of them.
fn tukey_count_oracle(z: [f64; 2], pts: &[[f64; 2]]) -> usize {
    let angles: Vec<f64> =
        pts.iter().filter(|p| p[0] != z[0] || p[1] != z[1]).map(|p| (p[1] - z[1]).atan2(p[0] - z[0])).collect();
    let mut best = 0;
    for &a in &angles {
        let count = angles.iter().filter(|&&b| (b - a).rem_euclid(2.0 * PI) < PI).count();
        best = best.max(count);
    }
    pts.len() - best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = Euclidean::new(2).unwrap();
    let dirs = DirectionSet::sample(&g, 720, DirectionMode::Grid).unwrap();
    let (mut worst_excess, mut below, mut over) = (0.0f64, 0usize, 0usize);
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let n = r.random_range(5..=50);
        let raw: Vec<[f64; 2]> = (0..n).map(|_| [normal(&mut r), normal(&mut r)]).collect();
        let mu = EmpiricalMeasure::uniform(raw.iter().map(|p| g.point(p).unwrap()).collect()).unwrap();
        for _ in 0..20 {
            let q = [0.8 * normal(&mut r), 0.8 * normal(&mut r)];
            let exact = tukey_count_oracle(q, &raw) as f64 / n as f64;
            let sampled = sample_depth(&g, &g.point(&q).unwrap(), &mu, &dirs).value;
            if sampled < exact - 1e-12 {
                below += 1;
            }
            if sampled - exact > 1.0 / n as f64 + 1e-12 {
                over += 1;
            }
            worst_excess = worst_excess.max(sampled - exact);
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        below == 0 && over == 0 && elapsed < Duration::from_secs(10),
        format!(
            "1000 queries: below-oracle {below}, beyond 1/n {over}, max excess {worst_excess:.3e}, {:.2}s (< 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Busemann identities

const RAY_TIMES: [f64; 5] = [0.1, 1.0, 5.0, 10.0, 20.0];

fn ray_identity_errors<G: Geometry>(g: &G, dirs: &[G::Direction]) -> (f64, f64) {
    let base = g.base_point();
    let (mut at_base, mut along) = (0.0f64, 0.0f64);
    for xi in dirs {
        at_base = at_base.max(g.busemann(xi, &base).abs());
        for t in RAY_TIMES {
            let x = g.ray_point(&base, xi, t).unwrap();
            along = along.max((g.busemann(xi, &x) + t).abs());
        }
    }
    (at_base, along)
}

fn random_unit_symmetric(p: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = normal(r);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let n = h.norm();
    h / n
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, (b0, bt): (f64, f64)| {
        ok &= b0 <= 1e-12 && bt <= 1e-8;
        lines.push(format!("{name} |B(o)| {b0:.1e} |B+t| {bt:.1e}"));
    };
    let e = Euclidean::new(3).unwrap();
    check("euclidean", ray_identity_errors(&e, &e.sample_directions(40, DirectionMode::Random { seed: 2 }).unwrap()));
    let b = PoincareBall::new(2).unwrap();
    check("ball", ray_identity_errors(&b, &b.sample_directions(40, DirectionMode::Random { seed: 3 }).unwrap()));
    let s = SpdCone::new(3).unwrap();
    check("spd", ray_identity_errors(&s, &s.sample_directions(40, DirectionMode::Random { seed: 4 }).unwrap()));

    // B_H(exp(tH)) = −t with exp(tH) assembled from the eigendecomposition of H.
    let mut r = rng(22);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let p = [2, 3, 5][k % 3];
        let g = SpdCone::new(p).unwrap();
        let h = random_unit_symmetric(p, &mut r);
        let eig = SymmetricEigen::new(h.clone());
        let dir = g.direction(h).unwrap();
        for t in RAY_TIMES {
            let x = SpdPoint::from_spectral(eig.eigenvalues.map(|l| (t * l).exp()), eig.eigenvectors.clone()).unwrap();
            worst = worst.max((g.busemann(&dir, &x) + t).abs());
        }
    }
    ok &= worst <= 1e-8;
    lines.push(format!("spd exp(tH) {worst:.1e}"));
    Outcome::new(ok, lines.join("; "))
}

// ---------------------------------------------------------------------------
// 3. SPD Busemann against the distance limit

/// Singular values of `a` by one-sided Jacobi rotations on its columns,
/// accurate in the relative sense for column-scaled matrices.
fn jacobi_singular_values(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.ncols();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..a.nrows() {
                    let (x, y) = (a[(k, i)], a[(k, j)]);
                    a[(k, i)] = c * x - s * y;
                    a[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|j| a.column(j).norm()).collect()
}

/// `d(X, exp(tH)) − t` with `X = LLᵀ` and `H = QΛQᵀ`: the eigenvalues of
/// `exp(−tH/2) X exp(−tH/2)` are the squared singular values of
/// `LᵀQ · diag(e^{−tλ/2})`.
fn busemann_limit_oracle(x: &DMatrix<f64>, h: &DMatrix<f64>, t: f64) -> f64 {
    let l = x.clone().cholesky().unwrap().l();
    let eig = SymmetricEigen::new(h.clone());
    let scaled =
        (l.transpose() * &eig.eigenvectors) * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| (-0.5 * t * v).exp()));
    let d2: f64 = jacobi_singular_values(scaled).iter().map(|s| (2.0 * s.ln()).powi(2)).sum();
    d2.sqrt() - t
}

fn criterion_3() -> Outcome {
    let mut r = rng(33);
    let (mut worst40, mut decreasing) = (0.0f64, 0usize);
    for k in 0..20 {
        let p = 2 + k % 2;
        let g = SpdCone::new(p).unwrap();
        let mut s = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = 0.1 * normal(&mut r);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let se = SymmetricEigen::new(s);
        let x = &se.eigenvectors * DMatrix::from_diagonal(&se.eigenvalues.map(f64::exp)) * se.eigenvectors.transpose();
        let x = (&x + x.transpose()) * 0.5;
        let h = random_unit_symmetric(p, &mut r);
        let b = g.busemann(&g.direction(h.clone()).unwrap(), &g.point(x.clone()).unwrap());
        let e20 = (b - busemann_limit_oracle(&x, &h, 20.0)).abs();
        let e40 = (b - busemann_limit_oracle(&x, &h, 40.0)).abs();
        worst40 = worst40.max(e40);
        decreasing += usize::from(e40 < e20);
    }
    Outcome::new(
        worst40 <= 1e-3 && decreasing == 20,
        format!("max |B − (d − t)| at t=40: {worst40:.2e} (≤ 1e-3); error smaller than at t=20 in {decreasing}/20"),
    )
}

// ---------------------------------------------------------------------------
// 4. Region structure

fn region_structure<G: Geometry>(g: &G, seed: u64, m: usize) -> (bool, String) {
    let mu = wrapped_gaussian_sample(g, &g.base_point(), 0.5, 120, seed).unwrap();
    let dirs = DirectionSet::sample(g, m, DirectionMode::Random { seed: seed + 1 }).unwrap();
    let probes = wrapped_gaussian_sample(g, &g.base_point(), 0.6, 400, seed + 2).unwrap();
    let alphas = [0.1, 0.2, 0.3, 0.4, 0.5];
    let regions: Vec<_> = alphas.iter().map(|&a| region_thresholds(g, &mu, a, &dirs).unwrap()).collect();

    let mut nest_violations = 0;
    for w in regions.windows(2) {
        for (lo, hi) in w[0].entries.iter().zip(&w[1].entries) {
            nest_violations += usize::from(hi.threshold > lo.threshold);
        }
        for z in probes.points() {
            nest_violations +=
                usize::from(region_membership(g, &w[1], z).inside && !region_membership(g, &w[0], z).inside);
        }
    }

    let region = &regions[1];
    let inside: Vec<_> = probes.points().iter().filter(|z| region_membership(g, region, z).inside).collect();
    let mut r = rng(seed + 3);
    let mut worst_mid = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let a = inside[r.random_range(0..inside.len())];
        let b = inside[r.random_range(0..inside.len())];
        let mid = g.geodesic_point(a, b, 0.5).unwrap();
        worst_mid = worst_mid.max(region_membership(g, region, &mid).value);
    }

    let mut shrink_violations = 0;
    let sub: Vec<_> = probes.points().iter().take(50).collect();
    let mut prev: Option<Vec<f64>> = None;
    for k in 1..=m.min(40) {
        let rk = region_thresholds(g, &mu, 0.2, &dirs.prefix(k)).unwrap();
        let f: Vec<f64> = sub.iter().map(|z| region_membership(g, &rk, z).value).collect();
        if let Some(p) = &prev {
            shrink_violations += f.iter().zip(p).filter(|(a, b)| a < b).count();
        }
        prev = Some(f);
    }
    let ok = nest_violations == 0 && worst_mid <= 1e-9 && shrink_violations == 0;
    let name = g.context().to_string();
    (
        ok,
        format!(
            "{name}: nesting violations {nest_violations}, max midpoint F {worst_mid:.2e} over 1000 pairs ({} inside), shrink violations {shrink_violations}",
            inside.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let (a, da) = region_structure(&PoincareBall::new(2).unwrap(), 40, 64);
    let (b, db) = region_structure(&SpdCone::new(2).unwrap(), 41, 64);
    let (c, dc) = region_structure(&Euclidean::new(2).unwrap(), 42, 64);
    Outcome::new(a && b && c, format!("{da}; {db}; {dc}"))
}

// ---------------------------------------------------------------------------
// 5. Centerpoint

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let ball = PoincareBall::new(2).unwrap();
    let dirs = DirectionSet::sample(&ball, 180, DirectionMode::Grid).unwrap();
    let recs = experiment_centerpoint(&ball, &SamplingParams::default(), &dirs, &SearchConfig::default()).unwrap();
    let (ball_ok, ball_n) = verdicts_pass(&recs, "centerpoint_bound");
    let ball_thr = measure_f64(&recs[0], "threshold");

    let spd = SpdCone::new(2).unwrap();
    let sdirs = DirectionSet::sample(&spd, 200, DirectionMode::Random { seed: 5 }).unwrap();
    let params = SamplingParams { reps: 20, ..SamplingParams::default() };
    let srecs = experiment_centerpoint(&spd, &params, &sdirs, &SearchConfig::default()).unwrap();
    let (spd_ok, spd_n) = verdicts_pass(&srecs, "centerpoint_bound");
    let spd_thr = measure_f64(&srecs[0], "threshold");
    let min_depth = |rs: &[ExperimentRecord]| rs.iter().map(|r| measure_f64(r, "depth")).fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    Outcome::new(
        ball_ok == 50
            && ball_n == 50
            && spd_ok == 20
            && spd_n == 20
            && (ball_thr - 1.0 / 3.0).abs() < 1e-15
            && (spd_thr - 0.25).abs() < 1e-15
            && elapsed < Duration::from_secs(120),
        format!(
            "ball {ball_ok}/{ball_n} at 1/3 (min depth {:.3}), spd(2) {spd_ok}/{spd_n} at 1/4 (min depth {:.3}), {:.1}s (< 120s)",
            min_depth(&recs),
            min_depth(&srecs),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Huber bound

fn mixture<P: Clone>(mu: &EmpiricalMeasure<P>, q: &EmpiricalMeasure<P>, eps: f64) -> EmpiricalMeasure<P> {
    let mut pts = mu.points().to_vec();
    pts.extend(q.points().iter().cloned());
    let mut w: Vec<f64> = vec![(1.0 - eps) / mu.len() as f64; mu.len()];
    w.extend(std::iter::repeat_n(eps / q.len() as f64, q.len()));
    EmpiricalMeasure::weighted(pts, w).unwrap()
}

const EPS: [f64; 4] = [0.05, 0.1, 0.2, 0.3];

fn huber_on<G: Geometry>(
    g: &G,
    q_center: &G::Point,
    grid: GridSpec,
    chart: PlaneChart,
    dirs: &DirectionSet<G::Direction>,
) -> (bool, String) {
    let mu = wrapped_gaussian_sample(g, &g.base_point(), 0.5, 200, 61).unwrap();
    let q = wrapped_gaussian_sample(g, q_center, 0.3, 50, 62).unwrap();
    let probes = grid_points(g, &grid, &chart);
    let records = experiment_huber(g, &mu, &q, &EPS, &[0.1, 0.25], &probes, dirs).unwrap();
    let clean: Vec<f64> = probes.iter().map(|z| sample_depth(g, z, &mu, dirs).value).collect();
    let mut ok = probes.len() == 400;
    let mut parts = Vec::new();
    for (eps, rec) in EPS.iter().zip(&records) {
        let mixed = mixture(&mu, &q, *eps);
        let gap = probes
            .iter()
            .zip(&clean)
            .map(|(z, c)| (sample_depth(g, z, &mixed, dirs).value - c).abs())
            .fold(0.0, f64::max);
        let rec_gap = measure_f64(rec, "max_gap");
        ok &= gap <= eps + 1e-12 && rec_gap <= eps + 1e-12 && rec.passed();
        parts.push(format!("ε={eps}: {gap:.4}"));
    }
    (ok, format!("{} ({} probes) {}", g.context(), probes.len(), parts.join(" ")))
}

fn criterion_6() -> Outcome {
    let ball = PoincareBall::new(2).unwrap();
    let bd = DirectionSet::sample(&ball, 180, DirectionMode::Grid).unwrap();
    let (a, da) = huber_on(
        &ball,
        &ball.point(&[0.5, 0.3]).unwrap(),
        GridSpec::square(0.7, 20).unwrap(),
        PlaneChart::Coordinates,
        &bd,
    );
    let spd = SpdCone::new(2).unwrap();
    let sd = DirectionSet::sample(&spd, 180, DirectionMode::Random { seed: 6 }).unwrap();
    let qc = spd.point(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5])).unwrap();
    let (b, db) = huber_on(
        &spd,
        &qc,
        GridSpec::new(0.5, 2.5, 0.5, 2.5, 20, 20).unwrap(),
        PlaneChart::SpdConeSlice { b: 0.2 },
        &sd,
    );
    Outcome::new(a && b, format!("max gap vs ε (≤ ε + 1e-12): {da}; {db}"))
}

// ---------------------------------------------------------------------------
// 7. Boundary robustness

/// Limit of the contaminated depth from data counts alone:
/// `min{(1−ε)k_ξ/n, min_{j≠ξ} (1−ε)k_j/n + ε}`.
fn limiting_depth_oracle(
    g: &PoincareBall,
    pts: &[BallPoint],
    dirs: &[horodepth::manifold::SphereDirection],
    xi_index: usize,
    eps: f64,
    z: &BallPoint,
) -> f64 {
    let n = pts.len() as f64;
    dirs.iter()
        .enumerate()
        .map(|(j, d)| {
            let level = g.busemann(d, z);
            let k = pts.iter().filter(|x| g.busemann(d, x) >= level).count() as f64;
            (1.0 - eps) * k / n + if j == xi_index { 0.0 } else { eps }
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_7() -> Outcome {
    let g = PoincareBall::new(2).unwrap();
    let mu = wrapped_gaussian_sample(&g, &g.base_point(), 0.5, 100, 1).unwrap();
    let dirs = DirectionSet::sample(&g, 180, DirectionMode::Grid).unwrap();
    let xi = g.direction(&[1.0, 0.0]).unwrap();
    let xi_index = dirs.directions().iter().position(|d| d.coords()[0] == 1.0 && d.coords()[1] == 0.0);
    let probes = grid_points(&g, &GridSpec::square(0.95, 41).unwrap(), &PlaneChart::Coordinates);
    let t_list: Vec<f64> = (1..=10).map(f64::from).chain([15.0, 20.0, 25.0]).collect();
    let report = experiment_boundary(&g, &mu, 0.2, &xi, &t_list, &probes, &dirs, &IterConfig::default()).unwrap();
    let Some(settle) = report.settling_time else {
        return Outcome::new(false, "no settling time before the ray guard");
    };
    let mut ok = settle <= 25.0 && xi_index.is_some();
    let settled: Vec<_> = report.records.iter().filter(|r| param_f64(r, "t") >= settle).collect();
    ok &= !settled.is_empty() && settled.iter().all(|r| measure_f64(r, "sup_gap") == 0.0);

    // Independent count oracle at the settled times.
    let mut oracle_gap = 0.0f64;
    let xi_index = xi_index.unwrap_or(0);
    for r in &settled {
        let t = param_f64(r, "t");
        let far = g.ray_point(&g.base_point(), &xi, t).unwrap();
        let mut pts = mu.points().to_vec();
        pts.push(far);
        let mut w = vec![0.8 / 100.0; 100];
        w.push(0.2);
        let mixed = EmpiricalMeasure::weighted(pts, w).unwrap();
        for z in &probes {
            let dt = sample_depth(&g, z, &mixed, &dirs).value;
            let dl = limiting_depth_oracle(&g, mu.points(), dirs.directions(), xi_index, 0.2, z);
            oracle_gap = oracle_gap.max((dt - dl).abs());
        }
    }
    ok &= oracle_gap <= 1e-12;

    let norms: Vec<f64> =
        report.records.iter().filter(|r| param_f64(r, "t") <= 10.0).map(|r| measure_f64(r, "frechet_norm")).collect();
    let increasing = norms.len() == 10 && norms.windows(2).all(|w| w[1] > w[0]);
    ok &= increasing;
    Outcome::new(
        ok,
        format!(
            "T = {settle:.3} (≤ 25); sup-grid gap 0 at {} settled t; count-oracle gap {oracle_gap:.1e}; Fréchet norm increasing on t=1..10: {increasing} ({:.3} → {:.3})",
            settled.len(),
            norms.first().copied().unwrap_or(f64::NAN),
            norms.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Symmetric maximality

fn criterion_8() -> Outcome {
    let g = PoincareBall::new(2).unwrap();
    let theta = g.point(&[0.35, 0.2]).unwrap();
    let dirs = DirectionSet::sample(&g, 360, DirectionMode::Grid).unwrap();
    let (mut depth_ok, mut close, mut worst_depth, mut worst_dist) = (0, 0, f64::INFINITY, 0.0f64);
    for k in 0..20u64 {
        let base = wrapped_gaussian_sample(&g, &theta, 0.5, 200, 800 + k).unwrap();
        let mu = symmetrize(&g, &base, &theta).unwrap();
        let d = sample_depth(&g, &theta, &mu, &dirs).value;
        depth_ok += usize::from(d >= 0.5);
        worst_depth = worst_depth.min(d);
        let med = busemann_median(&g, &mu, &dirs, &SearchConfig::default(), &[]).unwrap();
        let dist = g.distance(&med.point, &theta);
        close += usize::from(dist <= 0.1);
        worst_dist = worst_dist.max(dist);
    }
    Outcome::new(
        depth_ok == 20 && close == 20,
        format!(
            "n=400: D(θ) ≥ 1/2 in {depth_ok}/20 (min {worst_depth:.4}); median within 0.1 of θ in {close}/20 (max distance {worst_dist:.4})"
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Consistency trend

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let g = PoincareBall::new(2).unwrap();
    let dirs = DirectionSet::sample(&g, 180, DirectionMode::Grid).unwrap();
    let probes = grid_points(&g, &GridSpec::square(0.8, 21).unwrap(), &PlaneChart::Coordinates);
    let params = ConsistencyParams::default();
    let records =
        experiment_consistency(&g, &g.base_point(), &params, &probes, &dirs, &SearchConfig::default()).unwrap();
    let summary = records.last().unwrap();
    let errors: Vec<f64> =
        summary.measures["median_of_errors"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let trend = summary.measures["gap_decreasing_count"].as_u64().unwrap_or(0);
    let elapsed = start.elapsed();
    let ok = errors.len() == 3 && errors[2] < errors[0] && trend >= 16 && elapsed < Duration::from_secs(300);
    Outcome::new(
        ok,
        format!(
            "median-of-errors n=100/300/1000: {:.4}/{:.4}/{:.4}; gap decreasing in {trend}/20 (≥ 16); {:.1}s (< 300s)",
            errors.first().copied().unwrap_or(f64::NAN),
            errors.get(1).copied().unwrap_or(f64::NAN),
            errors.get(2).copied().unwrap_or(f64::NAN),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Equivariance

fn random_orthogonal(n: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(r));
    let qr = a.qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..n {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn rotate(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(v)).as_slice().to_vec()
}

fn sphere_trial<G: Geometry<Direction = horodepth::manifold::SphereDirection>>(
    g: &G,
    dim: usize,
    radius: f64,
    r: &mut ChaCha8Rng,
    make: impl Fn(&[f64]) -> G::Point,
    coords: impl Fn(&G::Point) -> Vec<f64>,
) -> f64 {
    let rand_pt = |r: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..dim).map(|_| normal(r)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = radius * r.random::<f64>() / n.max(1e-12);
        make(&v.iter().map(|x| x * s).collect::<Vec<_>>())
    };
    let pts: Vec<G::Point> = (0..15).map(|_| rand_pt(r)).collect();
    let z = if r.random::<bool>() { pts[0].clone() } else { rand_pt(r) };
    let dirs = g.sample_directions(12, DirectionMode::Random { seed: r.random() }).unwrap();
    let a = random_orthogonal(dim, r);
    let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
    let ds = DirectionSet::explicit(dirs.clone()).unwrap();
    let mu2 = EmpiricalMeasure::uniform(pts.iter().map(|p| make(&rotate(&a, &coords(p)))).collect()).unwrap();
    let ds2 = DirectionSet::explicit(
        dirs.iter().map(|d| g.direction_from_row(&rotate(&a, d.coords().as_slice())).unwrap()).collect(),
    )
    .unwrap();
    let z2 = make(&rotate(&a, &coords(&z)));
    (sample_depth(g, &z, &mu, &ds).value - sample_depth(g, &z2, &mu2, &ds2).value).abs()
}

fn spd_trial(p: usize, r: &mut ChaCha8Rng) -> f64 {
    let g = SpdCone::new(p).unwrap();
    let rand_pt = |r: &mut ChaCha8Rng| {
        let b = DMatrix::from_fn(p, p, |_, _| 0.6 * normal(r));
        g.point(&b * b.transpose() + DMatrix::identity(p, p) * 0.3).unwrap()
    };
    let pts: Vec<SpdPoint> = (0..15).map(|_| rand_pt(r)).collect();
    let z = if r.random::<bool>() { pts[0].clone() } else { rand_pt(r) };
    let dirs = g.sample_directions(12, DirectionMode::Random { seed: r.random() }).unwrap();
    let a = random_orthogonal(p, r);
    let cong = |m: &DMatrix<f64>| {
        let c = &a * m * a.transpose();
        (&c + c.transpose()) * 0.5
    };
    let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
    let mu2 = EmpiricalMeasure::uniform(pts.iter().map(|x| g.point(cong(x.matrix())).unwrap()).collect()).unwrap();
    let ds = DirectionSet::explicit(dirs.clone()).unwrap();
    let ds2 = DirectionSet::explicit(dirs.iter().map(|h| g.direction(cong(h.matrix())).unwrap()).collect()).unwrap();
    let z2 = g.point(cong(z.matrix())).unwrap();
    (sample_depth(&g, &z, &mu, &ds).value - sample_depth(&g, &z2, &mu2, &ds2).value).abs()
}

fn criterion_10() -> Outcome {
    let mut r = rng(1010);
    let mut worst = [0.0f64; 3];
    for trial in 0..1000 {
        let dim = 2 + trial % 2;
        match trial % 3 {
            0 => {
                let g = Euclidean::new(dim).unwrap();
                let e = sphere_trial(
                    &g,
                    dim,
                    3.0,
                    &mut r,
                    |v| g.point(v).unwrap(),
                    |p: &EuclideanPoint| p.coords().as_slice().to_vec(),
                );
                worst[0] = worst[0].max(e);
            }
            1 => {
                let g = PoincareBall::new(dim).unwrap();
                let e = sphere_trial(
                    &g,
                    dim,
                    0.9,
                    &mut r,
                    |v| g.point(v).unwrap(),
                    |p: &BallPoint| p.coords().as_slice().to_vec(),
                );
                worst[1] = worst[1].max(e);
            }
            _ => worst[2] = worst[2].max(spd_trial(dim, &mut r)),
        }
    }
    Outcome::new(
        worst.iter().all(|&w| w <= 1e-12),
        format!(
            "1000 trials, max |ΔD|: euclidean {:.1e}, ball {:.1e}, spd {:.1e} (≤ 1e-12)",
            worst[0], worst[1], worst[2]
        ),
    )
}

// ---------------------------------------------------------------------------
// 11. Two-sided dominance and strips

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn criterion_11() -> Outcome {
    let g = PoincareBall::new(2).unwrap();
    let mu = wrapped_gaussian_sample(&g, &g.base_point(), 0.5, 100, 111).unwrap();
    let dirs = DirectionSet::sample(&g, 64, DirectionMode::Random { seed: 112 }).unwrap();
    let probes = wrapped_gaussian_sample(&g, &g.base_point(), 0.8, 1000, 113).unwrap();
    let dominated = probes
        .points()
        .iter()
        .filter(|z| two_sided_depth(&g, z, &mu, &dirs) <= sample_depth(&g, z, &mu, &dirs).value)
        .count();

    let witness: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("two_sided_witness.json")).unwrap()).unwrap();
    let AnyMeasure::Ball(_, data) = AnyMeasure::read(&fixture(witness["data"].as_str().unwrap())).unwrap() else {
        return Outcome::new(false, "witness data is not on the ball");
    };
    let alpha = witness["alpha"].as_f64().unwrap();
    let wdirs =
        DirectionSet::sample(&g, witness["grid_directions"].as_u64().unwrap() as usize, DirectionMode::Grid).unwrap();
    let row = |k: &str| -> Vec<f64> { witness[k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
    let (z1, z2) = (g.point(&row("z1")).unwrap(), g.point(&row("z2")).unwrap());
    let mid = g.geodesic_point(&z1, &z2, 0.5).unwrap();
    let two = |z: &BallPoint| two_sided_depth(&g, z, &data, &wdirs);
    let non_convex = two(&z1) >= alpha && two(&z2) >= alpha && two(&mid) < alpha;

    // One-sided region at the same level on the same data is convex.
    let region = region_thresholds(&g, &data, alpha, &wdirs).unwrap();
    let cloud = wrapped_gaussian_sample(&g, &g.base_point(), 0.7, 2000, 114).unwrap();
    let inside: Vec<_> = cloud.points().iter().filter(|z| region_membership(&g, &region, z).inside).collect();
    let mut r = rng(115);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let a = inside[r.random_range(0..inside.len())];
        let b = inside[r.random_range(0..inside.len())];
        worst = worst.max(region_membership(&g, &region, &g.geodesic_point(a, b, 0.5).unwrap()).value);
    }
    let witness_one_sided = region_membership(&g, &region, &z1).inside && region_membership(&g, &region, &z2).inside;
    let mid_one_sided = region_membership(&g, &region, &mid).value;
    Outcome::new(
        dominated == 1000 && non_convex && worst <= 1e-9 && witness_one_sided && mid_one_sided <= 1e-9,
        format!(
            "two-sided ≤ one-sided on {dominated}/1000 probes; witness two-sided depths {:.3}, {:.3}, midpoint {:.3} (α = {alpha}); one-sided: witness pair inside with midpoint F {mid_one_sided:.2e}, max midpoint F {worst:.2e} over 1000 pairs",
            two(&z1),
            two(&z2),
            two(&mid)
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("euclidean reduction vs Tukey oracle", criterion_1),
        ("busemann identities", criterion_2),
        ("spd busemann vs distance limit", criterion_3),
        ("region structure", criterion_4),
        ("centerpoint", criterion_5),
        ("huber bound", criterion_6),
        ("boundary-robustness settling", criterion_7),
        ("symmetric maximality", criterion_8),
        ("consistency trend", criterion_9),
        ("equivariance", criterion_10),
        ("two-sided dominance and strips", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("acceptance {id:>2} {status} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), outcome.detail);
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
