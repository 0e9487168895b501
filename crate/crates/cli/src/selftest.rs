//! Reduced-scale invariant checks, one row per check and one column per
//! manifold.

use horodepth::depth::{region_membership, region_thresholds, sample_depth, DepthEngine, DirectionSet};
use horodepth::estimators::{busemann_median, frechet_mean, IterConfig, SearchConfig};
use horodepth::io::{measure_from_raw, parse_raw, write_measure, AnyGeometry, RunConfig};
use horodepth::manifold::{DirectionMode, Geometry, ManifoldContext, Orthogonal};
use horodepth::measure::EmpiricalMeasure;
use horodepth::robustness::{contaminate, symmetrize, wrapped_gaussian_sample, ContaminationSpec};
use horodepth::with_geometry;

const N: usize = 30;
const M: usize = 24;
const TOL: f64 = 1e-9;

type Check = (&'static str, bool);

fn checks<G: Geometry>(g: &G) -> horodepth::Result<Vec<Check>> {
    let base = g.base_point();
    let mu = wrapped_gaussian_sample(g, &base, 0.5, N, 7)?;
    let pts = mu.points();
    let dirs = DirectionSet::sample(g, M, DirectionMode::Random { seed: 5 })?;
    let mut out = Vec::new();

    let lipschitz = dirs.directions().iter().all(|xi| {
        pts.windows(2).all(|w| (g.busemann(xi, &w[0]) - g.busemann(xi, &w[1])).abs() <= g.distance(&w[0], &w[1]) + TOL)
    });
    out.push(("busemann_lipschitz", lipschitz));

    let round_trip = pts.windows(2).all(|w| match g.exp_map(&w[0], &g.log_map(&w[0], &w[1])) {
        Ok(y) => g.distance(&y, &w[1]) < 1e-7,
        Err(_) => false,
    });
    out.push(("exp_log_round_trip", round_trip));

    let n = g.context().dimension();
    let iso_size = match g.context() {
        ManifoldContext::SpdCone { size } => size,
        _ => n,
    };
    let iso = plane_rotation(iso_size);
    let mut equivariant = true;
    for xi in dirs.directions().iter().take(6) {
        let gxi = g.boundary_action(&iso, xi)?;
        for x in pts.iter().take(6) {
            let gx = g.apply_isometry(&iso, x)?;
            equivariant &= (g.busemann(&gxi, &gx) - g.busemann(xi, x)).abs() < 1e-8;
        }
    }
    out.push(("isometry_equivariance", equivariant));

    let engine = DepthEngine::new(g, &mu, &dirs);
    out.push(("engine_matches_direct", pts.iter().all(|z| engine.depth(z) == sample_depth(g, z, &mu, &dirs))));

    let alpha = 0.3;
    let region = region_thresholds(g, &mu, alpha, &dirs)?;
    let probes = wrapped_gaussian_sample(g, &base, 0.8, 50, 9)?;
    let consistent =
        probes.points().iter().all(|z| region_membership(g, &region, z).inside == (engine.value(z) >= alpha - 1e-12));
    out.push(("region_equals_depth_level", consistent));

    let median = busemann_median(g, &mu, &dirs, &SearchConfig::default(), &[])?;
    let best_data = pts.iter().map(|z| engine.value(z)).fold(0.0, f64::max);
    out.push(("median_dominates_data", median.depth >= best_data));

    let fm = frechet_mean(g, &mu, &IterConfig::default())?;
    out.push(("frechet_converges", fm.converged));

    let sym = symmetrize(g, &mu, &base)?;
    let closed = sym.points().chunks(2).all(|pair| match g.reflect(&base, &pair[1]) {
        Ok(back) => g.distance(&back, &pair[0]) < 1e-7,
        Err(_) => false,
    });
    out.push(("symmetrize_closed", closed));

    let mixed = contaminate(g, &mu, &ContaminationSpec::point_mass(0.2, dirs.directions()[0].clone(), 3.0)?)?;
    let total: f64 = mixed.weights().iter().sum();
    out.push(("contamination_mass", (total - 1.0).abs() < 1e-12 && mixed.len() == N + 1));

    let text = write_measure(g, &mixed);
    let back: EmpiricalMeasure<G::Point> = measure_from_raw(g, &parse_raw(&text)?)?;
    let same = back.len() == mixed.len()
        && back.points().iter().zip(mixed.points()).all(|(a, b)| g.distance(a, b) < 1e-12)
        && back.weights().iter().zip(mixed.weights()).all(|(a, b)| (a - b).abs() < 1e-12);
    out.push(("dataset_round_trip", same));

    let cfg = RunConfig::new(g.context());
    let cfg_ok = cfg.to_toml().and_then(|t| RunConfig::parse(&t)).map(|c| c == cfg).unwrap_or(false);
    out.push(("config_round_trip", cfg_ok));

    Ok(out)
}

/// Rotation by 0.7 rad in the first coordinate plane.
fn plane_rotation(n: usize) -> Orthogonal {
    if n < 2 {
        return Orthogonal::identity(n);
    }
    let mut m = Orthogonal::identity(n).matrix().clone();
    m.view_mut((0, 0), (2, 2)).copy_from(Orthogonal::rotation_2d(0.7).matrix());
    Orthogonal::new(m).unwrap_or_else(|_| Orthogonal::identity(n))
}

/// Prints the matrix and returns whether every check passed.
pub fn run() -> bool {
    let contexts = [
        ManifoldContext::Euclidean { dim: 2 },
        ManifoldContext::PoincareBall { dim: 2 },
        ManifoldContext::SpdCone { size: 2 },
    ];
    let mut columns: Vec<(String, Vec<Check>)> = Vec::new();
    let mut all = true;
    for ctx in contexts {
        let result = AnyGeometry::new(ctx).and_then(|any| with_geometry!(any, |g| checks(&g)));
        match result {
            Ok(c) => columns.push((ctx.to_string(), c)),
            Err(e) => {
                eprintln!("selftest on {ctx}: {e}");
                all = false;
                columns.push((ctx.to_string(), Vec::new()));
            }
        }
    }
    let names: Vec<&str> =
        columns.iter().find(|c| !c.1.is_empty()).map(|c| c.1.iter().map(|x| x.0).collect()).unwrap_or_default();
    let mut header = format!("{:<28}", "check");
    for (name, _) in &columns {
        header.push_str(&format!(" {name:>14}"));
    }
    println!("{header}");
    for (k, name) in names.iter().enumerate() {
        let mut line = format!("{name:<28}");
        for (_, c) in &columns {
            let cell = match c.get(k) {
                Some((_, true)) => "pass",
                Some((_, false)) => {
                    all = false;
                    "FAIL"
                }
                None => "error",
            };
            line.push_str(&format!(" {cell:>14}"));
        }
        println!("{line}");
    }
    println!("selftest: {}", if all { "ok" } else { "FAILED" });
    all
}
