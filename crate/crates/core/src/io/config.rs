use serde::{Deserialize, Serialize};

use crate::depth::{GridSpec, PlaneChart};
use crate::error::{HoroError, Result};
use crate::estimators::{IterConfig, SearchConfig};
use crate::manifold::{DirectionMode, ManifoldContext};
use crate::robustness::{BreakdownParams, ConsistencyParams, SamplingParams};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectionSpec {
    pub m: usize,
    /// `"grid"` (two-dimensional boundaries only) or `"random"`.
    pub mode: String,
    pub seed: u64,
}

impl Default for DirectionSpec {
    fn default() -> Self {
        DirectionSpec { m: 180, mode: "grid".into(), seed: 0 }
    }
}

impl DirectionSpec {
    pub fn mode(&self) -> Result<DirectionMode> {
        match self.mode.as_str() {
            "grid" => Ok(DirectionMode::Grid),
            "random" => Ok(DirectionMode::Random { seed: self.seed }),
            other => Err(HoroError::Config(format!("unknown direction mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HuberConfig {
    pub eps_list: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Clean sample, used when the run has no dataset.
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Contaminating sample: wrapped Gaussian around this row (the base
    /// point when empty).
    pub contaminant_center: Vec<f64>,
    pub contaminant_sigma: f64,
    pub contaminant_n: usize,
    pub contaminant_seed: u64,
}

impl Default for HuberConfig {
    fn default() -> Self {
        HuberConfig {
            eps_list: vec![0.05, 0.1, 0.2, 0.3],
            alphas: vec![0.1, 0.25],
            n: 200,
            sigma: 0.5,
            seed: 1,
            contaminant_center: Vec::new(),
            contaminant_sigma: 0.3,
            contaminant_n: 50,
            contaminant_seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub epsilon: f64,
    pub xi: Vec<f64>,
    pub t_list: Vec<f64>,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            epsilon: 0.2,
            xi: vec![1.0, 0.0],
            t_list: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 15.0, 20.0, 25.0],
            n: 100,
            sigma: 0.5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    /// Center row (the base point when empty).
    pub theta: Vec<f64>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub reference_n: usize,
    pub trend_fraction: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        let p = ConsistencyParams::default();
        ConsistencyConfig {
            theta: Vec::new(),
            n_list: p.n_list,
            reps: p.reps,
            sigma: p.sigma,
            seed: p.seed,
            reference_n: p.reference_n,
            trend_fraction: p.trend_fraction,
        }
    }
}

impl ConsistencyConfig {
    pub fn params(&self) -> ConsistencyParams {
        ConsistencyParams {
            n_list: self.n_list.clone(),
            reps: self.reps,
            sigma: self.sigma,
            seed: self.seed,
            reference_n: self.reference_n,
            trend_fraction: self.trend_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreakdownConfig {
    /// Clean sample, used when the run has no dataset.
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub eps_list: Vec<f64>,
    pub subset: usize,
    pub adversary_seed: u64,
    pub distance: Option<f64>,
    pub slack: f64,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        let p = BreakdownParams::default();
        BreakdownConfig {
            n: 100,
            sigma: 0.5,
            seed: 1,
            eps_list: p.eps_list,
            subset: p.subset,
            adversary_seed: p.seed,
            distance: p.distance,
            slack: p.slack,
        }
    }
}

impl BreakdownConfig {
    pub fn params(&self) -> BreakdownParams {
        BreakdownParams {
            eps_list: self.eps_list.clone(),
            subset: self.subset,
            seed: self.adversary_seed,
            distance: self.distance,
            slack: self.slack,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON-lines record file; records go to standard output when absent.
    pub records: Option<String>,
}

/// Versioned run configuration (TOML). Unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub manifold: String,
    /// `d` for the flat and ball models, `p` for the SPD cone.
    pub size: usize,
    #[serde(default)]
    pub data: Option<String>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub directions: DirectionSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub chart: Option<PlaneChart>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub iter: IterConfig,
    #[serde(default)]
    pub huber: HuberConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub centerpoint: SamplingParams,
    #[serde(default)]
    pub consistency: ConsistencyConfig,
    #[serde(default)]
    pub breakdown: BreakdownConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_alphas() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}

impl RunConfig {
    pub fn new(ctx: ManifoldContext) -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            manifold: ctx.tag().to_string(),
            size: ctx.size(),
            data: None,
            alphas: default_alphas(),
            directions: DirectionSpec::default(),
            grid: None,
            chart: None,
            search: SearchConfig::default(),
            iter: IterConfig::default(),
            huber: HuberConfig::default(),
            boundary: BoundaryConfig::default(),
            centerpoint: SamplingParams::default(),
            consistency: ConsistencyConfig::default(),
            breakdown: BreakdownConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HoroError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HoroError::Config(e.to_string()))
    }

    pub fn context(&self) -> Result<ManifoldContext> {
        ManifoldContext::from_tag(&self.manifold, self.size).map_err(|e| HoroError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(HoroError::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.context()?;
        self.directions.mode()?;
        if self.directions.m == 0 {
            return Err(HoroError::Config("directions.m must be positive".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(HoroError::Config(format!("alpha {a} outside (0, 1)")));
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| HoroError::Config(e.to_string()))?;
        }
        Ok(())
    }
}
