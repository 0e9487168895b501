use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HoroError, Result};
use crate::manifold::{
    BallPoint, Euclidean, EuclideanPoint, Geometry, ManifoldContext, PoincareBall, SpdCone, SpdPoint,
};
use crate::measure::EmpiricalMeasure;

use super::fmt_f64;

pub const DATASET_MAGIC: &str = "horodepth";
pub const DATASET_VERSION: &str = "v1";

/// First line of a dataset file:
/// `# horodepth v1 manifold=ball dim=2 weighted=false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetHeader {
    pub context: ManifoldContext,
    pub weighted: bool,
}

impl DatasetHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let bad = |message: String| HoroError::Parse { line: 1, message };
        let body = line.trim().strip_prefix('#').ok_or_else(|| bad("header must start with '#'".into()))?;
        let mut tokens = body.split_whitespace();
        if tokens.next() != Some(DATASET_MAGIC) {
            return Err(bad(format!("header must name '{DATASET_MAGIC}'")));
        }
        match tokens.next() {
            Some(DATASET_VERSION) => {}
            other => return Err(bad(format!("unsupported dataset version {other:?}"))),
        }
        let (mut manifold, mut size, mut weighted) = (None, None, false);
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("expected key=value, found '{tok}'")))?;
            match k {
                "manifold" => manifold = Some(v.to_string()),
                "dim" | "size" => size = Some(v.parse::<usize>().map_err(|_| bad(format!("invalid {k} '{v}'")))?),
                "weighted" => weighted = v.parse::<bool>().map_err(|_| bad(format!("invalid weighted flag '{v}'")))?,
                _ => return Err(bad(format!("unknown header key '{k}'"))),
            }
        }
        let manifold = manifold.ok_or_else(|| bad("header lacks manifold=".into()))?;
        let size = size.ok_or_else(|| bad("header lacks dim= or size=".into()))?;
        let context = ManifoldContext::from_tag(&manifold, size).map_err(|e| bad(e.to_string()))?;
        Ok(DatasetHeader { context, weighted })
    }

    pub fn render(&self) -> String {
        let key = match self.context {
            ManifoldContext::SpdCone { .. } => "size",
            _ => "dim",
        };
        format!(
            "# {DATASET_MAGIC} {DATASET_VERSION} manifold={} {key}={} weighted={}",
            self.context.tag(),
            self.context.size(),
            self.weighted
        )
    }
}

/// Numeric rows of a dataset file with their source line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub header: DatasetHeader,
    pub rows: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub lines: Vec<usize>,
}

/// Parses the header and the CSV rows; blank lines and further `#` lines
/// are skipped.
pub fn parse_raw(text: &str) -> Result<RawDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(HoroError::Parse { line: 1, message: "empty dataset file".into() })?;
    let header = DatasetHeader::parse(first)?;
    let width = point_width(header.context) + usize::from(header.weighted);
    let mut rows = Vec::new();
    let mut weights = header.weighted.then(Vec::new);
    let mut numbers = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim_start().starts_with('#') {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| HoroError::Parse { line: line_no, message: format!("invalid number '{f}'") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != width {
            return Err(HoroError::Parse {
                line: line_no,
                message: format!("expected {width} fields, found {}", values.len()),
            });
        }
        let mut values = values;
        if let Some(w) = weights.as_mut() {
            w.push(values.pop().unwrap_or(f64::NAN));
        }
        rows.push(values);
        numbers.push(line_no);
    }
    if rows.is_empty() {
        return Err(HoroError::Parse { line: 1, message: "dataset has no rows".into() });
    }
    Ok(RawDataset { header, rows, weights, lines: numbers })
}

fn point_width(ctx: ManifoldContext) -> usize {
    match ctx {
        ManifoldContext::Euclidean { dim } | ManifoldContext::PoincareBall { dim } => dim,
        ManifoldContext::SpdCone { size } => size * (size + 1) / 2,
    }
}

/// Builds the measure; rows that are not valid points are reported with
/// their line numbers. Weights off from summing to one by more than `1e−9`
/// are renormalized with a warning.
pub fn measure_from_raw<G: Geometry>(geometry: &G, raw: &RawDataset) -> Result<EmpiricalMeasure<G::Point>> {
    if raw.header.context != geometry.context() {
        return Err(HoroError::invalid(format!(
            "dataset is on {} but {} was requested",
            raw.header.context,
            geometry.context()
        )));
    }
    let points = raw
        .rows
        .iter()
        .zip(&raw.lines)
        .map(|(row, &line)| geometry.point_from_row(row).map_err(|e| HoroError::Parse { line, message: e.to_string() }))
        .collect::<Result<Vec<_>>>()?;
    match &raw.weights {
        None => EmpiricalMeasure::uniform(points),
        Some(w) => {
            let (mu, off) = EmpiricalMeasure::normalized(points, w.clone())
                .map_err(|e| HoroError::Parse { line: raw.lines[0], message: e.to_string() })?;
            if off {
                log::warn!("dataset weights do not sum to 1; renormalized");
            }
            Ok(mu)
        }
    }
}

/// Dataset text of a measure; the weight column is written only for
/// non-uniform measures.
pub fn write_measure<G: Geometry>(geometry: &G, mu: &EmpiricalMeasure<G::Point>) -> String {
    let weighted = !mu.is_uniform();
    let mut out = DatasetHeader { context: geometry.context(), weighted }.render();
    out.push('\n');
    for (p, w) in mu.iter() {
        let mut fields: Vec<String> = geometry.point_to_row(p).into_iter().map(fmt_f64).collect();
        if weighted {
            fields.push(fmt_f64(w));
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Measure on any of the supported manifolds.
#[derive(Debug, Clone)]
pub enum AnyMeasure {
    Euclidean(Euclidean, EmpiricalMeasure<EuclideanPoint>),
    Ball(PoincareBall, EmpiricalMeasure<BallPoint>),
    Spd(SpdCone, EmpiricalMeasure<SpdPoint>),
}

/// Runs `$body` with `$g` bound to the geometry and `$mu` to the measure.
#[macro_export]
macro_rules! with_measure {
    ($any:expr, |$g:ident, $mu:ident| $body:expr) => {
        match $any {
            $crate::io::AnyMeasure::Euclidean($g, $mu) => $body,
            $crate::io::AnyMeasure::Ball($g, $mu) => $body,
            $crate::io::AnyMeasure::Spd($g, $mu) => $body,
        }
    };
}

impl AnyMeasure {
    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_raw(text)?;
        Ok(match raw.header.context {
            ManifoldContext::Euclidean { dim } => {
                let g = Euclidean::new(dim)?;
                let mu = measure_from_raw(&g, &raw)?;
                AnyMeasure::Euclidean(g, mu)
            }
            ManifoldContext::PoincareBall { dim } => {
                let g = PoincareBall::new(dim)?;
                let mu = measure_from_raw(&g, &raw)?;
                AnyMeasure::Ball(g, mu)
            }
            ManifoldContext::SpdCone { size } => {
                let g = SpdCone::new(size)?;
                let mu = measure_from_raw(&g, &raw)?;
                AnyMeasure::Spd(g, mu)
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn context(&self) -> ManifoldContext {
        with_measure!(self, |g, _mu| g.context())
    }

    pub fn len(&self) -> usize {
        with_measure!(self, |_g, mu| mu.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self) -> String {
        with_measure!(self, |g, mu| write_measure(g, mu))
    }
}
