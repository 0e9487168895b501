//! Dataset files, run configuration, synthetic data and JSON export.
//!
//! All floating-point output goes through `fmt_f64`, which prints 17
//! significant digits, so identical runs produce byte-identical files.

mod config;
mod dataset;
mod generate;

use serde_json::{json, Map, Value};

pub use config::{
    BoundaryConfig, BreakdownConfig, ConsistencyConfig, DirectionSpec, HuberConfig, OutputConfig, RunConfig,
    CONFIG_VERSION,
};
pub use dataset::{
    measure_from_raw, parse_raw, write_measure, AnyMeasure, DatasetHeader, RawDataset, DATASET_MAGIC, DATASET_VERSION,
};
pub use generate::{generate, parse_params, GenKind, GenParams};

use crate::depth::{DepthRegion, Provenance, RegionEntry};
use crate::error::{HoroError, Result};
use crate::estimators::{FrechetResult, MedianResult};
use crate::manifold::{Euclidean, Geometry, ManifoldContext, PoincareBall, SpdCone};

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON with sorted object keys, floats via `fmt_f64`, and
/// non-finite floats as `null`.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&fmt_f64(x)),
                    _ => out.push_str("null"),
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// Geometry of any supported manifold.
#[derive(Debug, Clone, Copy)]
pub enum AnyGeometry {
    Euclidean(Euclidean),
    Ball(PoincareBall),
    Spd(SpdCone),
}

/// Runs `$body` with `$g` bound to the concrete geometry.
#[macro_export]
macro_rules! with_geometry {
    ($any:expr, |$g:ident| $body:expr) => {
        match $any {
            $crate::io::AnyGeometry::Euclidean($g) => $body,
            $crate::io::AnyGeometry::Ball($g) => $body,
            $crate::io::AnyGeometry::Spd($g) => $body,
        }
    };
}

impl AnyGeometry {
    pub fn new(ctx: ManifoldContext) -> Result<Self> {
        Ok(match ctx {
            ManifoldContext::Euclidean { dim } => AnyGeometry::Euclidean(Euclidean::new(dim)?),
            ManifoldContext::PoincareBall { dim } => AnyGeometry::Ball(PoincareBall::new(dim)?),
            ManifoldContext::SpdCone { size } => AnyGeometry::Spd(SpdCone::new(size)?),
        })
    }

    pub fn context(&self) -> ManifoldContext {
        with_geometry!(self, |g| g.context())
    }
}

fn rows_value(rows: Vec<Vec<f64>>) -> Value {
    Value::Array(rows.into_iter().map(|r| json!(r)).collect())
}

fn provenance_value(p: Provenance) -> Value {
    serde_json::to_value(p).unwrap_or(Value::Null)
}

/// `{manifold, size, alpha, directions, thresholds, fingerprint}`.
pub fn region_to_json<G: Geometry>(geometry: &G, region: &DepthRegion<G::Direction>) -> Value {
    let ctx = geometry.context();
    json!({
        "manifold": ctx.tag(),
        "size": ctx.size(),
        "alpha": region.alpha,
        "directions": rows_value(region.entries.iter().map(|e| geometry.direction_to_row(&e.direction)).collect()),
        "thresholds": region.entries.iter().map(|e| e.threshold).collect::<Vec<_>>(),
        "fingerprint": region.fingerprint,
    })
}

pub fn region_from_json<G: Geometry>(geometry: &G, value: &Value) -> Result<DepthRegion<G::Direction>> {
    let bad = |m: &str| HoroError::invalid(format!("region JSON: {m}"));
    let ctx = geometry.context();
    let tag = value["manifold"].as_str().ok_or_else(|| bad("missing manifold"))?;
    let size = value["size"].as_u64().ok_or_else(|| bad("missing size"))? as usize;
    if ManifoldContext::from_tag(tag, size)? != ctx {
        return Err(bad(&format!("region is on {tag}({size}), expected {ctx}")));
    }
    let alpha = value["alpha"].as_f64().ok_or_else(|| bad("missing alpha"))?;
    let dirs = value["directions"].as_array().ok_or_else(|| bad("missing directions"))?;
    let thresholds = value["thresholds"].as_array().ok_or_else(|| bad("missing thresholds"))?;
    if dirs.len() != thresholds.len() {
        return Err(bad("directions and thresholds differ in length"));
    }
    let entries = dirs
        .iter()
        .zip(thresholds)
        .map(|(d, t)| {
            let row = float_row(d).ok_or_else(|| bad("direction rows must be numeric"))?;
            let threshold = t.as_f64().ok_or_else(|| bad("thresholds must be numeric"))?;
            Ok(RegionEntry { direction: geometry.direction_from_row(&row)?, threshold })
        })
        .collect::<Result<Vec<_>>>()?;
    let fingerprint = value["fingerprint"].as_str().unwrap_or_default().to_string();
    DepthRegion::new(entries, alpha, fingerprint)
}

fn float_row(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

pub fn median_to_json<G: Geometry>(geometry: &G, result: &MedianResult<G>) -> Value {
    json!({
        "point": geometry.point_to_row(&result.point),
        "depth": result.depth,
        "search_trace": result
            .search_trace
            .iter()
            .map(|(p, d)| json!({"point": geometry.point_to_row(p), "depth": d}))
            .collect::<Vec<_>>(),
        "directions": {
            "count": result.directions.len(),
            "provenance": provenance_value(result.directions.provenance()),
        },
        "config_fingerprint": result.config_fingerprint,
    })
}

pub fn frechet_to_json<G: Geometry>(geometry: &G, result: &FrechetResult<G::Point>) -> Value {
    json!({
        "point": geometry.point_to_row(&result.point),
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "gradient_norm": result.gradient_norm,
    })
}

/// Object from key/value pairs, for ad-hoc command output.
pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<String, Value>>())
}
