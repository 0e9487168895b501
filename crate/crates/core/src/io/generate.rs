use std::str::FromStr;

use crate::error::{HoroError, Result};
use crate::manifold::{Euclidean, Geometry, ManifoldContext, PoincareBall, SpdCone};
use crate::measure::EmpiricalMeasure;
use crate::robustness::{spd_log_gaussian_sample, symmetrize, wrapped_gaussian_sample};

use super::AnyMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    WrappedGaussian,
    /// Wrapped Gaussian closed under the geodesic reflection through the center.
    Symmetrized,
    SpdLogGaussian,
}

impl FromStr for GenKind {
    type Err = HoroError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wrapped_gaussian" => Ok(GenKind::WrappedGaussian),
            "symmetrized" => Ok(GenKind::Symmetrized),
            "spd_log_gaussian" => Ok(GenKind::SpdLogGaussian),
            other => Err(HoroError::invalid(format!("unknown generator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub context: ManifoldContext,
    pub n: usize,
    pub sigma: f64,
    /// Center row; the base point when absent.
    pub center: Option<Vec<f64>>,
}

/// Parses `n=200;sigma=0.5;center=0.1,0;manifold=ball;dim=2`.
/// `size=` is accepted in place of `dim=`.
pub fn parse_params(text: &str) -> Result<GenParams> {
    let bad = |m: String| HoroError::invalid(format!("generator params: {m}"));
    let (mut n, mut sigma, mut center, mut manifold, mut size) = (None, None, None, None, None);
    for field in text.split(';').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("'{field}' is not key=value")))?;
        let value = value.trim();
        match key.trim() {
            "n" => n = Some(value.parse::<usize>().map_err(|e| bad(format!("n: {e}")))?),
            "sigma" => sigma = Some(value.parse::<f64>().map_err(|e| bad(format!("sigma: {e}")))?),
            "center" => {
                let row = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| bad(format!("center: {e}")))?;
                center = Some(row);
            }
            "manifold" => manifold = Some(value.to_string()),
            "dim" | "size" => size = Some(value.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")))?),
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }
    let manifold = manifold.ok_or_else(|| bad("missing manifold".into()))?;
    let size = size.ok_or_else(|| bad("missing dim".into()))?;
    Ok(GenParams {
        context: ManifoldContext::from_tag(&manifold, size)?,
        n: n.ok_or_else(|| bad("missing n".into()))?,
        sigma: sigma.unwrap_or(0.5),
        center,
    })
}

fn sample<G: Geometry>(
    geometry: &G,
    kind: GenKind,
    params: &GenParams,
    seed: u64,
) -> Result<EmpiricalMeasure<G::Point>> {
    let center = match &params.center {
        Some(row) => geometry.point_from_row(row)?,
        None => geometry.base_point(),
    };
    let mu = wrapped_gaussian_sample(geometry, &center, params.sigma, params.n, seed)?;
    match kind {
        GenKind::Symmetrized => symmetrize(geometry, &mu, &center),
        _ => Ok(mu),
    }
}

pub fn generate(kind: GenKind, params: &GenParams, seed: u64) -> Result<AnyMeasure> {
    Ok(match (kind, params.context) {
        (GenKind::SpdLogGaussian, ManifoldContext::SpdCone { size }) => {
            let g = SpdCone::new(size)?;
            let center = match &params.center {
                Some(row) => g.point_from_row(row)?,
                None => g.base_point(),
            };
            let mu = spd_log_gaussian_sample(&g, &center, params.sigma, params.n, seed)?;
            AnyMeasure::Spd(g, mu)
        }
        (GenKind::SpdLogGaussian, ctx) => {
            return Err(HoroError::invalid(format!("spd_log_gaussian needs the spd manifold, not {ctx}")))
        }
        (_, ManifoldContext::Euclidean { dim }) => {
            let g = Euclidean::new(dim)?;
            let mu = sample(&g, kind, params, seed)?;
            AnyMeasure::Euclidean(g, mu)
        }
        (_, ManifoldContext::PoincareBall { dim }) => {
            let g = PoincareBall::new(dim)?;
            let mu = sample(&g, kind, params, seed)?;
            AnyMeasure::Ball(g, mu)
        }
        (_, ManifoldContext::SpdCone { size }) => {
            let g = SpdCone::new(size)?;
            let mu = sample(&g, kind, params, seed)?;
            AnyMeasure::Spd(g, mu)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        let p = parse_params("n=10;sigma=0.3;center=0.1,0;manifold=ball;dim=2").unwrap();
        assert_eq!(p.n, 10);
        assert_eq!(p.center, Some(vec![0.1, 0.0]));
        assert_eq!(p.context, ManifoldContext::PoincareBall { dim: 2 });
        assert!(parse_params("n=10;manifold=ball").is_err());
        assert!(parse_params("n=10;manifold=ball;dim=2;colour=red").is_err());
        assert!(parse_params("n=x;manifold=ball;dim=2").is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let p = parse_params("n=20;sigma=0.4;manifold=ball;dim=2").unwrap();
        let a = generate(GenKind::WrappedGaussian, &p, 5).unwrap().write();
        assert_eq!(a, generate(GenKind::WrappedGaussian, &p, 5).unwrap().write());
        assert_ne!(a, generate(GenKind::WrappedGaussian, &p, 6).unwrap().write());
    }

    #[test]
    fn symmetrized_doubles_support() {
        let p = parse_params("n=15;center=0.2,-0.1;manifold=ball;dim=2").unwrap();
        let m = generate(GenKind::Symmetrized, &p, 1).unwrap();
        assert_eq!(m.len(), 30);
        let AnyMeasure::Ball(g, mu) = m else { panic!("wrong manifold") };
        let theta = g.point_from_row(&[0.2, -0.1]).unwrap();
        for k in (0..30).step_by(2) {
            let back = g.reflect(&theta, &mu.points()[k + 1]).unwrap();
            assert!(g.distance(&back, &mu.points()[k]) < 1e-9);
        }
    }

    #[test]
    fn spd_generator() {
        let p = parse_params("n=5;sigma=0.1;manifold=spd;size=2").unwrap();
        assert_eq!(generate(GenKind::SpdLogGaussian, &p, 1).unwrap().len(), 5);
        let q = parse_params("n=5;manifold=ball;dim=2").unwrap();
        assert!(generate(GenKind::SpdLogGaussian, &q, 1).is_err());
    }
}
