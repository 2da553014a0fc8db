//! Run configuration: one JSON file with a block per command. Every field
//! has a default except the seed, and command-line flags override the file.

use std::path::{Path, PathBuf};

use pwaccel::accel_eval::{CEConfig, Method, Severity, StoppingRule};
use pwaccel::fitting::{CutRule, FitConfig, PieceFamily};
use pwaccel::scenario::{EgoConfig, SEGMENT_BOUNDS};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory; there is no clock-based seeding.
    pub seed: Option<u64>,
    /// Worker threads; the logical core count when absent.
    pub workers: Option<usize>,
    pub rule: StoppingRule,
    /// Replaces the ego configuration stored in the model.
    pub ego: Option<EgoConfig>,
    pub ce: CEConfig,
    pub severity: Severity,
    pub target: TargetBlock,
    pub fit: FitBlock,
    pub generate: GenerateBlock,
    pub tune: TuneBlock,
    pub evaluate: EvaluateBlock,
    pub compare: CompareBlock,
}

/// What to estimate: exactly one of a scenario model file, a preset name
/// or a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TargetBlock {
    pub model: Option<PathBuf>,
    pub preset: Option<String>,
    pub problem: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBlock {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Lead-speed segment bounds; the outer segments stretch to cover the data.
    pub segments: Vec<f64>,
    /// `TTC⁻¹` fit within each segment.
    pub ttc: FitConfig,
    /// `R⁻¹` fit over all events.
    pub range: FitConfig,
    /// The fitted lead-speed sampler keeps at most this many order statistics.
    pub speed_grid: usize,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            input: None,
            out_dir: None,
            segments: SEGMENT_BOUNDS.to_vec(),
            ttc: FitConfig {
                cuts: CutRule::Quantiles(vec![0.98]),
                families: vec![PieceFamily::NormalMixture, PieceFamily::Exponential],
                ..FitConfig::default()
            },
            range: FitConfig { cuts: CutRule::Quantiles(vec![0.8, 0.99]), ..FitConfig::default() },
            speed_grid: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateBlock {
    pub preset: String,
    pub n: u64,
    pub out: Option<PathBuf>,
    /// Where to write the ground-truth model; next to `out` when absent.
    pub model_out: Option<PathBuf>,
}

impl Default for GenerateBlock {
    fn default() -> Self {
        Self { preset: "desk-rare".into(), n: 100_000, out: None, model_out: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TuneBlock {
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Crude,
    Is,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateBlock {
    pub mode: Mode,
    /// Accelerated laws: a `tune` output or a JSON array of distributions.
    pub accelerated: Option<PathBuf>,
    /// Run cross-entropy tuning before importance sampling.
    pub tune: bool,
    /// Importance sampling with the original laws as accelerated laws.
    pub identity: bool,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareBlock {
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for CompareBlock {
    fn default() -> Self {
        Self {
            methods: vec![Method::PiecewiseIs, Method::SingleIs, Method::Crude],
            repeats: 10,
            out: None,
            trace: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Input("a seed is required (--seed or \"seed\" in the config)".into()))
    }
}

pub(crate) fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| CliError::Input(format!("missing {what}")))
}
