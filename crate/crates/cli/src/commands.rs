use std::io::Write;
use std::path::{Path, PathBuf};

use horodepth::depth::{
    grid_points, refine_direction, region_contours, region_thresholds, sample_depth, DirectionSet, GridSpec, PlaneChart,
};
use horodepth::estimators::{busemann_median, frechet_mean, IterConfig, SearchConfig};
use horodepth::io::{
    canonical_json, frechet_to_json, generate, median_to_json, parse_params, region_to_json, write_measure,
    AnyGeometry, AnyMeasure, GenKind, RunConfig,
};
use horodepth::manifold::{DirectionMode, Geometry, ManifoldContext, PoincareBall};
use horodepth::measure::EmpiricalMeasure;
use horodepth::robustness::{
    contaminate as mix, experiment_boundary, experiment_breakdown, experiment_centerpoint, experiment_consistency,
    experiment_huber, summary_table, wrapped_gaussian_sample, ContaminationSpec, ExperimentRecord,
};
use horodepth::{with_geometry, with_measure, HoroError};
use serde_json::{json, Value};

use crate::{
    CliError, ContaminateArgs, DepthArgs, DirectionArgs, DirectionKind, ExperimentArgs, ExperimentKind, FrechetArgs,
    GenArgs, MedianArgs, RegionArgs,
};

type CliResult<T> = Result<T, CliError>;

/// Probe count used when an experiment has neither a grid nor a dataset.
const DEFAULT_PROBES: usize = 200;

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Lib(e.into())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Lib(e.into()))
        }
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> CliResult<()> {
    emit(out, &format!("{}\n", canonical_json(value)))
}

fn parse_row(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("'{text}' is not a numeric row: {e}"))))
        .collect()
}

fn direction_set<G: Geometry>(g: &G, args: &DirectionArgs) -> CliResult<DirectionSet<G::Direction>> {
    let mode = match args.directions {
        DirectionKind::Random => DirectionMode::Random { seed: args.seed },
        DirectionKind::Grid => DirectionMode::Grid,
    };
    Ok(DirectionSet::sample(g, args.m, mode)?)
}

fn load_config(path: Option<&Path>, ctx: ManifoldContext) -> CliResult<Option<RunConfig>> {
    let Some(path) = path else { return Ok(None) };
    let cfg = RunConfig::read(path)?;
    let cfg_ctx = cfg.context()?;
    if cfg_ctx != ctx {
        return Err(CliError::Usage(format!("config is for {cfg_ctx} but the dataset is on {ctx}")));
    }
    Ok(Some(cfg))
}

pub fn depth(a: DepthArgs) -> CliResult<()> {
    let data = AnyMeasure::read(&a.data)?;
    let row = parse_row(&a.point)?;
    let value = with_measure!(&data, |g, mu| {
        let z = g.point_from_row(&row)?;
        let dirs = direction_set(g, &a.dirs)?;
        let d = sample_depth(g, &z, mu, &dirs);
        let mut depth = d.value;
        if a.refine {
            let (_, refined) = refine_direction(g, &z, mu, &dirs.directions()[d.minimizing_direction], a.budget);
            depth = depth.min(refined);
        }
        json!({"depth": depth, "direction_index": d.minimizing_direction})
    });
    emit_json(None, &value)
}

fn parse_grid(text: &str) -> CliResult<GridSpec> {
    let v = parse_row(text)?;
    let count = |x: f64| -> CliResult<usize> {
        if x >= 2.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(CliError::Usage(format!("grid node count {x} must be an integer ≥ 2")))
        }
    };
    let grid = match v.as_slice() {
        [r, n] => GridSpec::square(*r, count(*n)?),
        [x0, x1, y0, y1, nx, ny] => GridSpec::new(*x0, *x1, *y0, *y1, count(*nx)?, count(*ny)?),
        _ => return Err(CliError::Usage("--grid takes 'r,n' or 'x_min,x_max,y_min,y_max,nx,ny'".into())),
    };
    grid.map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_chart(text: Option<&str>, ctx: ManifoldContext) -> CliResult<PlaneChart> {
    let chart = match text {
        None if matches!(ctx, ManifoldContext::SpdCone { .. }) => PlaneChart::SpdConeSlice { b: 0.0 },
        None | Some("coordinates") => PlaneChart::Coordinates,
        Some(s) => match s.strip_prefix("spd:") {
            Some(b) => PlaneChart::SpdConeSlice {
                b: b.parse().map_err(|_| CliError::Usage(format!("bad chart offset '{b}'")))?,
            },
            None => return Err(CliError::Usage(format!("unknown chart '{s}'"))),
        },
    };
    chart.validate(ctx).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(chart)
}

/// Ball: the disc of radius 0.98. Flat: the data bounding box padded by 10%.
fn default_grid<G: Geometry>(g: &G, mu: &EmpiricalMeasure<G::Point>) -> CliResult<GridSpec> {
    match g.context() {
        ManifoldContext::PoincareBall { .. } => Ok(GridSpec::square(0.98, 121)?),
        ManifoldContext::Euclidean { .. } => {
            let rows: Vec<Vec<f64>> = mu.points().iter().map(|p| g.point_to_row(p)).collect();
            let range = |k: usize| {
                let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                let pad = 0.1 * (hi - lo).max(1.0);
                (lo - pad, hi + pad)
            };
            let ((x0, x1), (y0, y1)) = (range(0), range(1));
            Ok(GridSpec::new(x0, x1, y0, y1, 101, 101)?)
        }
        ManifoldContext::SpdCone { .. } => Err(CliError::Usage("SPD contours need an explicit --grid".into())),
    }
}

pub fn region(a: RegionArgs) -> CliResult<()> {
    let data = AnyMeasure::read(&a.data)?;
    let ctx = data.context();
    let (region_json, contour_json) = with_measure!(&data, |g, mu| {
        let dirs = direction_set(g, &a.dirs)?;
        let region = region_thresholds(g, mu, a.alpha, &dirs)?;
        let contour = match &a.contour {
            Some(_) => {
                let chart = parse_chart(a.chart.as_deref(), ctx)?;
                let grid = match &a.grid {
                    Some(s) => parse_grid(s)?,
                    None => default_grid(g, mu)?,
                };
                let set = region_contours(g, &region, &grid, &chart)?;
                Some(serde_json::to_value(set).map_err(|e| CliError::Lib(e.into()))?)
            }
            None => None,
        };
        (region_to_json(g, &region), contour)
    });
    if let (Some(path), Some(value)) = (&a.contour, &contour_json) {
        emit_json(Some(path), value)?;
    }
    emit_json(a.out.as_deref(), &region_json)
}

pub fn median(a: MedianArgs) -> CliResult<()> {
    let data = AnyMeasure::read(&a.data)?;
    let cfg = load_config(a.config.as_deref(), data.context())?;
    let search = cfg.map(|c| c.search).unwrap_or_else(SearchConfig::default);
    let value = with_measure!(&data, |g, mu| {
        let dirs = direction_set(g, &a.dirs)?;
        let result = busemann_median(g, mu, &dirs, &search, &[])?;
        median_to_json(g, &result)
    });
    emit_json(a.out.as_deref(), &value)
}

pub fn frechet(a: FrechetArgs) -> CliResult<()> {
    let data = AnyMeasure::read(&a.data)?;
    let cfg = load_config(a.config.as_deref(), data.context())?;
    let iter = cfg.map(|c| c.iter).unwrap_or_else(IterConfig::default);
    let value = with_measure!(&data, |g, mu| frechet_to_json(g, &frechet_mean(g, mu, &iter)?));
    emit_json(a.out.as_deref(), &value)
}

pub fn contaminate(a: ContaminateArgs) -> CliResult<()> {
    let data = AnyMeasure::read(&a.data)?;
    let other = match &a.with {
        Some(path) => {
            let q = AnyMeasure::read(path)?;
            if q.context() != data.context() {
                return Err(CliError::Usage(format!(
                    "contaminant is on {} but the dataset is on {}",
                    q.context(),
                    data.context()
                )));
            }
            Some(q)
        }
        None => None,
    };
    let text = with_measure!(&data, |g, mu| {
        let q = match &other {
            Some(q) => Some(measure_as(g, q)?),
            None => None,
        };
        contaminate_with(g, mu, q.as_ref(), &a)?
    });
    emit(a.out.as_deref(), &text)
}

/// Re-reads `q` on `g` through its row encoding.
fn measure_as<G: Geometry>(g: &G, q: &AnyMeasure) -> CliResult<EmpiricalMeasure<G::Point>> {
    let text = q.write();
    let raw = horodepth::io::parse_raw(&text)?;
    Ok(horodepth::io::measure_from_raw(g, &raw)?)
}

fn contaminate_with<G: Geometry>(
    g: &G,
    mu: &EmpiricalMeasure<G::Point>,
    q: Option<&EmpiricalMeasure<G::Point>>,
    a: &ContaminateArgs,
) -> CliResult<String> {
    let spec = match (q, &a.xi, a.t) {
        (Some(q), _, _) => ContaminationSpec::measure(a.eps, q.clone())?,
        (None, Some(xi), Some(t)) => ContaminationSpec::point_mass(a.eps, g.direction_from_row(&parse_row(xi)?)?, t)?,
        _ => return Err(CliError::Usage("give either --xi and --t or --with".into())),
    };
    Ok(write_measure(g, &mix(g, mu, &spec)?))
}

pub fn gen(a: GenArgs) -> CliResult<()> {
    let kind: GenKind = a.kind.parse().map_err(|e: HoroError| CliError::Usage(e.to_string()))?;
    let params = parse_params(&a.params).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(a.out.as_deref(), &generate(kind, &params, a.seed)?.write())
}

fn resolve(config: &Path, data: &str) -> PathBuf {
    let p = PathBuf::from(data);
    if p.is_absolute() {
        p
    } else {
        config.parent().map(|d| d.join(&p)).unwrap_or(p)
    }
}

pub fn experiment(a: ExperimentArgs) -> CliResult<()> {
    let cfg = RunConfig::read(&a.config)?;
    let ctx = cfg.context()?;
    let data_path = a.data.clone().or_else(|| cfg.data.as_deref().map(|d| resolve(&a.config, d)));
    let data = match data_path {
        Some(path) => {
            let m = AnyMeasure::read(&path)?;
            if m.context() != ctx {
                return Err(CliError::Usage(format!("config is for {ctx} but the dataset is on {}", m.context())));
            }
            Some(m)
        }
        None => None,
    };
    let records = if a.kind == ExperimentKind::Boundary {
        let ManifoldContext::PoincareBall { dim } = ctx else {
            return Err(CliError::Usage(format!("the boundary experiment runs on the ball, not {ctx}")));
        };
        let g = PoincareBall::new(dim)?;
        let mu = match &data {
            Some(AnyMeasure::Ball(_, mu)) => Some(mu),
            _ => None,
        };
        boundary(&g, mu, &cfg)?
    } else {
        match &data {
            Some(any) => with_measure!(any, |g, mu| run_experiment(g, Some(mu), &cfg, a.kind)?),
            None => with_geometry!(AnyGeometry::new(ctx)?, |g| run_experiment(&g, None, &cfg, a.kind)?),
        }
    };
    let mut lines = String::new();
    for r in &records {
        let v = serde_json::to_value(r).map_err(|e| CliError::Lib(e.into()))?;
        lines.push_str(&canonical_json(&v));
        lines.push('\n');
    }
    let table = summary_table(&records);
    match a.out.or_else(|| cfg.output.records.as_deref().map(|p| resolve(&a.config, p))) {
        Some(path) => {
            emit(Some(&path), &lines)?;
            emit(None, &table)
        }
        None => {
            emit(None, &lines)?;
            eprint!("{table}");
            Ok(())
        }
    }
}

fn center_point<G: Geometry>(g: &G, row: &[f64]) -> CliResult<G::Point> {
    if row.is_empty() {
        Ok(g.base_point())
    } else {
        Ok(g.point_from_row(row)?)
    }
}

fn probes<G: Geometry>(
    g: &G,
    cfg: &RunConfig,
    data: Option<&EmpiricalMeasure<G::Point>>,
    center: &G::Point,
    sigma: f64,
    seed: u64,
) -> CliResult<Vec<G::Point>> {
    if let Some(grid) = &cfg.grid {
        let chart = match cfg.chart {
            Some(c) => c,
            None => parse_chart(None, g.context())?,
        };
        chart.validate(g.context())?;
        return Ok(grid_points(g, grid, &chart));
    }
    match data {
        Some(mu) => Ok(mu.points().to_vec()),
        None => Ok(wrapped_gaussian_sample(g, center, sigma, DEFAULT_PROBES, seed ^ 0x9e37)?.points().to_vec()),
    }
}

fn clean_sample<G: Geometry>(
    g: &G,
    data: Option<&EmpiricalMeasure<G::Point>>,
    sigma: f64,
    n: usize,
    seed: u64,
) -> CliResult<EmpiricalMeasure<G::Point>> {
    match data {
        Some(mu) => Ok(mu.clone()),
        None => Ok(wrapped_gaussian_sample(g, &g.base_point(), sigma, n, seed)?),
    }
}

fn config_directions<G: Geometry>(g: &G, cfg: &RunConfig) -> CliResult<DirectionSet<G::Direction>> {
    Ok(DirectionSet::sample(g, cfg.directions.m, cfg.directions.mode()?)?)
}

fn run_experiment<G: Geometry>(
    g: &G,
    data: Option<&EmpiricalMeasure<G::Point>>,
    cfg: &RunConfig,
    kind: ExperimentKind,
) -> CliResult<Vec<ExperimentRecord>> {
    let dirs = config_directions(g, cfg)?;
    Ok(match kind {
        ExperimentKind::Huber => {
            let h = &cfg.huber;
            let mu = clean_sample(g, data, h.sigma, h.n, h.seed)?;
            let qc = center_point(g, &h.contaminant_center)?;
            let q = wrapped_gaussian_sample(g, &qc, h.contaminant_sigma, h.contaminant_n, h.contaminant_seed)?;
            let probes = probes(g, cfg, Some(&mu), &g.base_point(), h.sigma, h.seed)?;
            experiment_huber(g, &mu, &q, &h.eps_list, &h.alphas, &probes, &dirs)?
        }
        ExperimentKind::Centerpoint => experiment_centerpoint(g, &cfg.centerpoint, &dirs, &cfg.search)?,
        ExperimentKind::Consistency => {
            let c = &cfg.consistency;
            let theta = center_point(g, &c.theta)?;
            let probes = probes(g, cfg, None, &theta, c.sigma, c.seed)?;
            experiment_consistency(g, &theta, &c.params(), &probes, &dirs, &cfg.search)?
        }
        ExperimentKind::Breakdown => {
            let b = &cfg.breakdown;
            let mu = clean_sample(g, data, b.sigma, b.n, b.seed)?;
            experiment_breakdown(g, &mu, &b.params(), &dirs, &cfg.search)?
        }
        ExperimentKind::Boundary => unreachable!("boundary runs on the ball only"),
    })
}

fn boundary(
    g: &PoincareBall,
    data: Option<&EmpiricalMeasure<<PoincareBall as Geometry>::Point>>,
    cfg: &RunConfig,
) -> CliResult<Vec<ExperimentRecord>> {
    let b = &cfg.boundary;
    let mu = clean_sample(g, data, b.sigma, b.n, b.seed)?;
    let xi = g.direction_from_row(&b.xi)?;
    let dirs = config_directions(g, cfg)?;
    let probes = probes(g, cfg, Some(&mu), &g.base_point(), b.sigma, b.seed)?;
    let report = experiment_boundary(g, &mu, b.epsilon, &xi, &b.t_list, &probes, &dirs, &cfg.iter)?;
    log::info!("settling time: {:?}", report.settling_time);
    Ok(report.records)
}
