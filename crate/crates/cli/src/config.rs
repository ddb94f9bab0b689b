//! TOML configuration for sweeps and synthetic scenes.
//!
//! ```toml
//! version = 1
//!
//! [appearance]
//! latent_dim = 8
//! duplicate_prob = 0.25
//! view_noise = 0.15
//! kernel_width = 0.5
//! latent_spread = 0.2
//!
//! [sweep]          # optional; command-line flags take precedence
//! n_list = [50, 100, 200]
//! flock_sizes = [1, 3, 5, 7, 9]
//! scales = [0.0]
//! trials = 20
//! seed = 0
//! ```

use std::path::Path;

use flock_reid::SyntheticAppearanceConfig;
use serde::Deserialize;

use crate::CliError;

pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: Option<u32>,
    pub appearance: Option<SyntheticAppearanceConfig>,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_list: Option<Vec<usize>>,
    pub flock_sizes: Option<Vec<usize>>,
    pub scales: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: ConfigFile = toml::from_str(text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        if let Some(v) = cfg.version {
            if v != SUPPORTED_VERSION {
                return Err(CliError::Usage(format!(
                    "{}: unsupported config version {v}",
                    origin.display()
                )));
            }
        }
        if let Some(a) = &cfg.appearance {
            a.validate()
                .map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: cannot read: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn appearance(&self) -> SyntheticAppearanceConfig {
        self.appearance.unwrap_or_default()
    }
}
