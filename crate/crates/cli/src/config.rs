//! Experiment configuration: a TOML document with `model`, `mc`, `output`,
//! `selftest` and `schoenberg` tables. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use isofield::model::make_powerlaw_model;
use isofield::verify::{DEFAULT_PROBES, MIN_REPLICATES};
use isofield::{FrameMode, SpectralModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameModeName {
    Canonical,
    RandomOrthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "L_max")]
    pub l_max: usize,
    pub d: usize,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub alpha: f64,
    pub beta: f64,
    pub frame_mode: FrameModeName,
    pub frame_seed: u64,
    /// `lambda_table[l][j-1]`; replaces the power-law parameters when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_table: Option<Vec<Vec<f64>>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            l_max: 64,
            d: 6,
            amplitude: 1.0,
            alpha: 3.0,
            beta: 2.0,
            frame_mode: FrameModeName::Canonical,
            frame_seed: 0,
            lambda_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replicates: usize,
    pub master_seed: u64,
    pub ells: Vec<usize>,
    pub probes: usize,
    /// Multiplies every eigenvalue inside the sampler only. Anything other
    /// than 1 is a deliberate fault.
    pub sampler_lambda_scale: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replicates: 20_000,
            master_seed: 20_240_917,
            ells: vec![4, 16, 64],
            probes: DEFAULT_PROBES,
            sampler_lambda_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Left out of reports and the config hash: it does not change any result.
    #[serde(skip)]
    pub directory: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: [Format::Csv, Format::Json, Format::Svg].into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    /// Band limit of the addition-formula check.
    pub addition_band_limit: usize,
    pub addition_pairs: usize,
    /// Coefficient band of the round-trip check.
    pub round_trip_band_limit: usize,
    pub round_trip_dim: usize,
    /// Grid used for the round trip; defaults to the coefficient band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_band_limit: Option<usize>,
    pub legendre_max_degree: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            addition_band_limit: 64,
            addition_pairs: 100,
            round_trip_band_limit: 16,
            round_trip_dim: 4,
            grid_band_limit: None,
            legendre_max_degree: 256,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchoenbergConfig {
    /// Truncation degree of the tail check; defaults to `L_max / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_trunc: Option<usize>,
    pub t_points: usize,
}

impl Default for SchoenbergConfig {
    fn default() -> Self {
        Self {
            l_trunc: None,
            t_points: 201,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub selftest: SelftestConfig,
    #[serde(default)]
    pub schoenberg: SchoenbergConfig,
}

/// Field-level defaults so a partial table only overrides what it names.
mod partial {
    use super::*;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Model {
        #[serde(rename = "L_max")]
        pub l_max: Option<usize>,
        pub d: Option<usize>,
        #[serde(rename = "A")]
        pub amplitude: Option<f64>,
        pub alpha: Option<f64>,
        pub beta: Option<f64>,
        pub frame_mode: Option<FrameModeName>,
        pub frame_seed: Option<u64>,
        pub lambda_table: Option<Vec<Vec<f64>>>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Mc {
        pub replicates: Option<usize>,
        pub master_seed: Option<u64>,
        pub ells: Option<Vec<usize>>,
        pub probes: Option<usize>,
        pub sampler_lambda_scale: Option<f64>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Output {
        pub directory: Option<PathBuf>,
        pub formats: Option<Vec<Format>>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Selftest {
        pub addition_band_limit: Option<usize>,
        pub addition_pairs: Option<usize>,
        pub round_trip_band_limit: Option<usize>,
        pub round_trip_dim: Option<usize>,
        pub grid_band_limit: Option<usize>,
        pub legendre_max_degree: Option<usize>,
        pub seed: Option<u64>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Schoenberg {
        pub l_trunc: Option<usize>,
        pub t_points: Option<usize>,
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Document {
        pub model: Option<Model>,
        pub mc: Option<Mc>,
        pub output: Option<Output>,
        pub selftest: Option<Selftest>,
        pub schoenberg: Option<Schoenberg>,
    }
}

macro_rules! overlay {
    ($target:expr, $src:expr, $($field:ident),+) => {
        $(if let Some(v) = $src.$field { $target.$field = v; })+
    };
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let doc: partial::Document =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        let mut cfg = Self::default();
        if let Some(m) = doc.model {
            let powerlaw_keys = m.amplitude.is_some() || m.alpha.is_some() || m.beta.is_some();
            if m.lambda_table.is_some() && (powerlaw_keys || m.l_max.is_some() || m.d.is_some()) {
                return Err(CliError::Usage(
                    "model.lambda_table cannot be combined with L_max, d, A, alpha or beta".into(),
                ));
            }
            if let Some(table) = &m.lambda_table {
                cfg.model.l_max = table.len().saturating_sub(1);
                cfg.model.d = table.first().map_or(0, Vec::len);
            }
            overlay!(cfg.model, m, l_max, d, amplitude, alpha, beta, frame_mode, frame_seed);
            cfg.model.lambda_table = m.lambda_table;
        }
        if let Some(m) = doc.mc {
            overlay!(cfg.mc, m, replicates, master_seed, ells, probes, sampler_lambda_scale);
        }
        if let Some(o) = doc.output {
            overlay!(cfg.output, o, directory);
            if let Some(f) = o.formats {
                cfg.output.formats = f.into_iter().collect();
            }
        }
        if let Some(s) = doc.selftest {
            overlay!(
                cfg.selftest,
                s,
                addition_band_limit,
                addition_pairs,
                round_trip_band_limit,
                round_trip_dim,
                legendre_max_degree,
                seed
            );
            cfg.selftest.grid_band_limit = s.grid_band_limit;
        }
        if let Some(s) = doc.schoenberg {
            overlay!(cfg.schoenberg, s, t_points);
            cfg.schoenberg.l_trunc = s.l_trunc;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn frame_mode(&self) -> FrameMode {
        match self.model.frame_mode {
            FrameModeName::Canonical => FrameMode::Canonical,
            FrameModeName::RandomOrthogonal => FrameMode::RandomOrthogonal {
                seed: self.model.frame_seed,
            },
        }
    }

    pub fn build_model(&self) -> Result<SpectralModel, CliError> {
        let model = match &self.model.lambda_table {
            Some(table) => SpectralModel::from_table(table.clone(), self.frame_mode()),
            None => make_powerlaw_model(
                self.model.l_max,
                self.model.d,
                self.model.amplitude,
                self.model.alpha,
                self.model.beta,
                self.frame_mode(),
            ),
        };
        model.map_err(|e| CliError::Usage(format!("invalid model: {e}")))
    }

    /// Checks shared by the Monte Carlo commands.
    pub fn validate_mc(&self) -> Result<(), CliError> {
        if self.mc.replicates < MIN_REPLICATES {
            return Err(CliError::Usage(format!(
                "mc.replicates must be >= {MIN_REPLICATES}, got {}",
                self.mc.replicates
            )));
        }
        if self.mc.ells.is_empty() {
            return Err(CliError::Usage("mc.ells is empty".into()));
        }
        if let Some(&ell) = self.mc.ells.iter().find(|&&l| l > self.model.l_max) {
            return Err(CliError::Usage(format!(
                "ell {ell} outside [0, {}]",
                self.model.l_max
            )));
        }
        if self.mc.probes == 0 {
            return Err(CliError::Usage("mc.probes must be >= 1".into()));
        }
        if !(self.mc.sampler_lambda_scale > 0.0 && self.mc.sampler_lambda_scale.is_finite()) {
            return Err(CliError::Usage("mc.sampler_lambda_scale must be > 0".into()));
        }
        Ok(())
    }

    pub fn l_trunc(&self) -> usize {
        self.schoenberg.l_trunc.unwrap_or(self.model.l_max / 4)
    }

    /// Key-sorted compact JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        // serde_json's default map is ordered by key, so re-parsing sorts every level.
        let value = serde_json::to_value(self).expect("config is serializable");
        serde_json::to_string(&value).expect("value is serializable")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
