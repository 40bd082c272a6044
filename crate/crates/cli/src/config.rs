//! TOML run configuration. Every field has a default; flags override file
//! values and the merged result is written next to the outputs.
//!
//! ```toml
//! [seeds]
//! root = 7
//! [tolerances]
//! washout = 1e-9
//! compare = 1e-6
//! [output]
//! dir = "out"
//! [model]
//! path = "esn.json"
//! [input]
//! path = "input.csv"
//! [verify]
//! second = "other.json"   # or: perturbation = 0.01
//! [sampling]
//! input_bound = 1.0
//! inputs = 100
//! len = 200
//! [target]
//! kind = "narma"
//! order = 10
//! [pipeline]
//! kind = "practical"
//! state_dim = 100
//! [budget]
//! eps = 0.2
//! target_error = 0.1
//! ```

use std::path::{Path, PathBuf};

use rcuniv::universal::VolterraTerm;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seeds: Seeds,
    pub tolerances: Tolerances,
    pub output: Output,
    pub model: PathSection,
    pub input: PathSection,
    pub verify: Verify,
    pub sampling: Sampling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    pub pipeline: PipelineSection,
    pub budget: Budget,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub root: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub washout: f64,
    pub compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { washout: 1e-9, compare: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("rcuniv-out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Verify {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second: Option<PathBuf>,
    /// Size `η` of a random perturbation of the first (ESN) model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    /// Declared upper bound on `‖F₁ − F₂‖_∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<f64>,
    pub safety: f64,
}

impl Default for Verify {
    fn default() -> Self {
        Self { second: None, perturbation: None, sup_bound: None, safety: 1.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub input_bound: f64,
    pub inputs: usize,
    pub len: usize,
    pub certificate_samples: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { input_bound: 1.0, inputs: 100, len: 200, certificate_samples: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    Narma {
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "default_narma_washout")]
        washout: usize,
    },
    Volterra {
        terms: Vec<VolterraTerm>,
        depth: usize,
        degree: usize,
    },
    /// Output filter of a stored model (ESN or SAS).
    Model { path: PathBuf },
}

fn default_order() -> usize {
    10
}

fn default_narma_washout() -> usize {
    50
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    #[default]
    Practical,
    Constructive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub kind: PipelineKind,
    // practical
    pub state_dim: usize,
    pub rho: f64,
    pub input_scale: f64,
    pub bias_scale: f64,
    pub activation: String,
    pub ridge: f64,
    pub train_inputs: usize,
    pub train_len: usize,
    // constructive
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sas: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    pub widths: Vec<usize>,
    pub nn_ridge: f64,
    pub feature_scale: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let fit = rcuniv::universal::FitConfig::default();
        Self {
            kind: PipelineKind::Practical,
            state_dim: 50,
            rho: 0.5,
            input_scale: 1.0,
            bias_scale: 0.2,
            activation: "tanh".into(),
            ridge: 1e-8,
            train_inputs: 10,
            train_len: 500,
            sas: None,
            k: None,
            l: None,
            widths: fit.widths,
            nn_ridge: fit.ridge,
            feature_scale: fit.feature_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub eps: f64,
    /// `approximate` exits 0 only if the test sup error is at most this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_error: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { eps: 0.2, target_error: None }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes relative paths in the file relative to the file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.model.path.as_mut(),
            self.input.path.as_mut(),
            self.verify.second.as_mut(),
            self.pipeline.sas.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(Target::Model { path }) = self.target.as_mut() {
            fix(path);
        }
        fix(&mut self.output.dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
