//! Model-file parsing and scenario resolution.
//!
//! A model file is a single JSON document holding the system matrices
//! (row-major `A`, vectors `B` and `C`), the noise variance, and the
//! sampling interval in minutes. Scenario fields (`k_star`, `horizon`,
//! `amplitude`, `x0`) may live in the same file; command-line flags
//! override file values.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use stepleak::{DiscreteLtiSystem, StepScenario};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub sigma2: f64,
    pub dt_minutes: f64,
    #[serde(default)]
    pub k_star: Option<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

/// Flag-level overrides of model-file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub k_star: Option<usize>,
    pub horizon: Option<usize>,
    pub sigma2: Option<f64>,
    pub dt: Option<f64>,
    pub amplitude: Option<f64>,
}

/// A fully resolved run configuration: the system plus whatever scenario
/// fields were provided. Commands demand the fields they need.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model_path: String,
    pub system: DiscreteLtiSystem,
    pub k_star: Option<usize>,
    pub horizon: Option<usize>,
    pub amplitude: f64,
    pub x0: Option<DVector<f64>>,
}

pub fn resolve(model_path: &str, overrides: &Overrides) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| CliError::Config(format!("cannot read model file {model_path}: {e}")))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("model file {model_path}: {e}")))?;

    let sigma2 = overrides.sigma2.unwrap_or(file.sigma2);
    let dt = overrides.dt.unwrap_or(file.dt_minutes);
    let system = DiscreteLtiSystem::from_row_major(file.n, &file.a, &file.b, &file.c, sigma2, dt)
        .map_err(|e| CliError::Config(format!("model file {model_path}: {e}")))?;

    let x0 = match file.x0 {
        Some(values) => {
            if values.len() != file.n {
                return Err(CliError::Config(format!(
                    "model file {model_path}: x0 has {} entries, expected n = {}",
                    values.len(),
                    file.n
                )));
            }
            Some(DVector::from_vec(values))
        }
        None => None,
    };

    Ok(Resolved {
        model_path: model_path.to_string(),
        system,
        k_star: overrides.k_star.or(file.k_star),
        horizon: overrides.horizon.or(file.horizon),
        amplitude: overrides.amplitude.or(file.amplitude).unwrap_or(1.0),
        x0,
    })
}

impl Resolved {
    pub fn require_k_star(&self) -> Result<usize, CliError> {
        self.k_star.ok_or_else(|| {
            CliError::Config(
                "change time k* is required: pass --k-star or set k_star in the model file"
                    .to_string(),
            )
        })
    }

    pub fn require_horizon(&self) -> Result<usize, CliError> {
        self.horizon.ok_or_else(|| {
            CliError::Config(
                "horizon N is required: pass --horizon or set horizon in the model file"
                    .to_string(),
            )
        })
    }

    /// Builds the step scenario; `k* >= N` and other domain violations
    /// surface as numeric-domain errors (exit code 3).
    pub fn scenario(&self) -> Result<StepScenario, CliError> {
        let k_star = self.require_k_star()?;
        let horizon = self.require_horizon()?;
        let mut scenario = StepScenario::new(k_star, horizon)?.with_amplitude(self.amplitude)?;
        if let Some(x0) = &self.x0 {
            scenario = scenario.with_x0(x0.clone())?;
        }
        Ok(scenario)
    }

    /// Starts the one-line provenance record that report files carry in
    /// their `#` comment header: the full resolved configuration, so any
    /// row is reproducible from the report alone.
    pub fn record<'a>(&'a self, command: &'a str) -> RunRecord<'a> {
        let n = self.system.dim();
        let a = self.system.a();
        RunRecord {
            command,
            model: &self.model_path,
            n,
            a: (0..n)
                .flat_map(|i| (0..n).map(move |j| a[(i, j)]))
                .collect(),
            b: self.system.b().iter().copied().collect(),
            c: self.system.c().iter().copied().collect(),
            sigma2: self.system.sigma2(),
            dt_minutes: self.system.dt(),
            k_star: self.k_star,
            horizon: self.horizon,
            amplitude: Some(self.amplitude),
            x0: self.x0.as_ref().map(|v| v.iter().copied().collect()),
            seed: None,
            trials: None,
            mode: None,
            noisy: None,
            sweep: None,
            data: None,
        }
    }
}

/// Serialized as one JSON line after `# ` at the top of every report CSV.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub model: &'a str,
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub sigma2: f64,
    pub dt_minutes: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noisy: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<&'a str>,
}

impl RunRecord<'_> {
    pub fn to_comment_line(&self) -> String {
        let json = serde_json::to_string(self).expect("run record serializes infallibly");
        format!("# {json}")
    }
}
