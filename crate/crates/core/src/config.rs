//! Run configuration, read from TOML.
//!
//! ```toml
//! [input]
//! path = "prices.csv"        # or: synth = "price"
//! normalize = "minmax"
//!
//! [wavelet]
//! filter = "db2"
//! levels = 6
//!
//! [dmd]
//! rank = 15
//! top = 8
//!
//! [output]
//! dir = "out"
//! seed = 7
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dmd::{PowerDefinition, RankSelection, DEFAULT_ENERGY};
use crate::error::{Error, Result};
use crate::ingest::{IngestConfig, MissingPolicy, NormalizeMethod};
use crate::multifractal::{grid, LevelRange, MultifractalConfig, ESTIMATED_CONCAVITY_TOL};
use crate::wavelet::{FilterPair, Padding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    /// Eight price cycles (925, 654, ∞, 5, 19, 31, 7, 332 days).
    Price,
    /// Two zero-frequency offsets plus eight sales cycles.
    Sales,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub synth: Option<SynthPreset>,
    /// Synthetic panel shape and noise level.
    pub series: usize,
    pub length: usize,
    pub noise: f64,
    pub date_column: String,
    pub missing: MissingPolicy,
    pub normalize: NormalizeMethod,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            synth: None,
            series: 16,
            length: 1024,
            noise: 1e-3,
            date_column: "date".into(),
            missing: MissingPolicy::Reject,
            normalize: NormalizeMethod::Minmax,
        }
    }
}

impl InputConfig {
    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            date_column: self.date_column.clone(),
            missing: self.missing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub enabled: bool,
    pub alpha: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            enabled: true,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    pub enabled: bool,
    pub filter: String,
    pub levels: usize,
    pub padding: Padding,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            enabled: true,
            filter: "db2".into(),
            levels: 6,
            padding: Padding::Error,
        }
    }
}

/// The multifractal stage reuses the `[wavelet]` filter, levels and padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultifractalSection {
    pub enabled: bool,
    /// Both bounds unset: −5..5, or 0..5 when some coefficient is zero.
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub p_step: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    /// `first:last`; defaults to `2:J-1`.
    pub fit_levels: Option<String>,
    pub concavity_tol: f64,
}

impl Default for MultifractalSection {
    fn default() -> Self {
        MultifractalSection {
            enabled: true,
            p_min: None,
            p_max: None,
            p_step: 0.25,
            alpha_min: 0.0,
            alpha_max: 1.5,
            alpha_step: 0.01,
            fit_levels: None,
            concavity_tol: ESTIMATED_CONCAVITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmdSection {
    pub enabled: bool,
    /// Explicit truncation rank. Mutually exclusive with `energy`.
    pub rank: Option<usize>,
    pub energy: Option<f64>,
    pub top: usize,
    pub power: PowerDefinition,
}

impl Default for DmdSection {
    fn default() -> Self {
        DmdSection {
            enabled: true,
            rank: None,
            energy: None,
            top: 8,
            power: PowerDefinition::SquaredAmplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: InputConfig,
    pub stats: StatsConfig,
    pub wavelet: WaveletConfig,
    pub multifractal: MultifractalSection,
    pub dmd: DmdSection,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. A relative input path is resolved against the
    /// directory holding the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(input), Some(dir)) = (&config.input.path, path.parent()) {
            if input.is_relative() {
                config.input.path = Some(dir.join(input));
            }
        }
        Ok(config)
    }

    /// Checks every field without touching the input.
    pub fn validate(&self) -> Result<()> {
        let input = &self.input;
        match (&input.path, &input.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either input.path or input.synth, not both".into()))
            }
            (None, None) => return Err(Error::Config("no input: set input.path or input.synth".into())),
            (None, Some(_)) => {
                if input.series == 0 || input.length < 2 {
                    return Err(Error::Config(format!(
                        "synthetic panel needs series >= 1 and length >= 2, got {}x{}",
                        input.series, input.length
                    )));
                }
                if !(input.noise >= 0.0) || !input.noise.is_finite() {
                    return Err(Error::Config(format!("input.noise must be >= 0, got {}", input.noise)));
                }
            }
            (Some(_), None) => {}
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) {
            return Err(Error::Config(format!("stats.alpha must lie in (0, 1), got {}", self.stats.alpha)));
        }
        self.filter()?;
        if self.wavelet.levels == 0 {
            return Err(Error::Config("wavelet.levels must be at least 1".into()));
        }
        if self.multifractal.enabled {
            let mf = self.multifractal_config()?;
            let levels = self.wavelet.levels;
            let range = match mf.fit_range {
                Some(r) => r,
                None => LevelRange::default_for(levels)?,
            };
            if range.last > levels {
                return Err(Error::Config(format!(
                    "multifractal.fit_levels {range} exceeds wavelet.levels {levels}"
                )));
            }
            if range.count() < 3 {
                return Err(Error::Config(format!(
                    "multifractal fit range {range} spans fewer than 3 levels \
                     (raise wavelet.levels or set fit_levels)"
                )));
            }
        }
        self.rank_selection()?;
        Ok(())
    }

    pub fn filter(&self) -> Result<FilterPair> {
        self.wavelet
            .filter
            .parse()
            .map_err(|e: Error| Error::Config(format!("wavelet.filter: {e}")))
    }

    pub fn rank_selection(&self) -> Result<RankSelection> {
        match (self.dmd.rank, self.dmd.energy) {
            (Some(_), Some(_)) => Err(Error::Config("set either dmd.rank or dmd.energy, not both".into())),
            (Some(r), None) => Ok(RankSelection::Rank(r)),
            (None, Some(e)) if e > 0.0 && e <= 1.0 => Ok(RankSelection::Energy(e)),
            (None, Some(e)) => Err(Error::Config(format!("dmd.energy must lie in (0, 1], got {e}"))),
            (None, None) => Ok(RankSelection::Energy(DEFAULT_ENERGY)),
        }
    }

    pub fn multifractal_config(&self) -> Result<MultifractalConfig> {
        let mf = &self.multifractal;
        let bad = |what: &str, e: Error| Error::Config(format!("multifractal.{what}: {e}"));
        let p_grid = match (mf.p_min, mf.p_max) {
            (Some(a), Some(b)) => Some(grid(a, b, mf.p_step).map_err(|e| bad("p grid", e))?),
            (None, None) => None,
            _ => return Err(Error::Config("set both multifractal.p_min and p_max, or neither".into())),
        };
        let alpha_grid = grid(mf.alpha_min, mf.alpha_max, mf.alpha_step).map_err(|e| bad("alpha grid", e))?;
        let fit_range = match &mf.fit_levels {
            Some(s) => Some(s.parse::<LevelRange>().map_err(|e| bad("fit_levels", e))?),
            None => None,
        };
        if !(mf.concavity_tol >= 0.0) {
            return Err(Error::Config(format!(
                "multifractal.concavity_tol must be >= 0, got {}",
                mf.concavity_tol
            )));
        }
        Ok(MultifractalConfig {
            p_grid,
            alpha_grid,
            fit_range,
            concavity_tol: mf.concavity_tol,
        })
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
