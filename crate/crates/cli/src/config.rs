//! Run configuration: one TOML file, one section per module.
//!
//! ```toml
//! [diffusion_cli]
//! seed = 7
//!
//! [ctrw_walker]
//! mu = 1.5
//! beta_dwell = 1.0
//! # …
//!
//! [recipe]
//! name = "fig3_exponents"
//! simulator = "ctrw"
//!
//! [[recipe.sweep]]
//! label = "mu1.5"
//! mu = 1.5
//! ```
//!
//! Unknown keys anywhere are errors that name the offending key path.

use std::path::{Path, PathBuf};

use levydiff_core::analysis::CollapseOptions;
use levydiff_core::ctrw::WalkConfig;
use levydiff_core::lattice::{GridSpec, LatticeConfig};
use levydiff_core::stable::StableFitOptions;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliSection {
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Half-width (µm) of the central window left out of FWHM fits.
    pub fwhm_exclusion: Option<f64>,
    pub collapse: CollapseOptions,
    pub fit: StableFitOptions,
    /// Band about the asymptote that counts as converged for shape exponents.
    pub settle_tolerance: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            fwhm_exclusion: None,
            collapse: CollapseOptions::default(),
            fit: StableFitOptions::default(),
            settle_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    /// Snapshot files; relative paths resolve against the config file.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeName {
    Fig2Fwhm,
    Fig3Exponents,
    Fig4Collapse,
    Fig5Shape,
}

impl RecipeName {
    pub const ALL: [RecipeName; 4] = [
        RecipeName::Fig2Fwhm,
        RecipeName::Fig3Exponents,
        RecipeName::Fig4Collapse,
        RecipeName::Fig5Shape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeName::Fig2Fwhm => "fig2_fwhm",
            RecipeName::Fig3Exponents => "fig3_exponents",
            RecipeName::Fig4Collapse => "fig4_collapse",
            RecipeName::Fig5Shape => "fig5_shape",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulator {
    Ctrw,
    Semiclassical,
    Mcwf,
    Ingest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecipe {
    pub name: RecipeName,
    pub simulator: Simulator,
    /// Overrides applied to the simulator section, one table per point.
    /// An optional `label` names the point.
    #[serde(default)]
    pub sweep: Vec<toml::Table>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub diffusion_cli: CliSection,
    pub ctrw_walker: Option<WalkConfig>,
    pub sisyphus_lattice: Option<LatticeConfig>,
    pub mcwf_grid: Option<GridSpec>,
    #[serde(default)]
    pub anomalous_analysis: AnalysisSection,
    pub ingest: Option<IngestSection>,
    pub recipe: Option<ExperimentRecipe>,
}

fn config_error(origin: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{origin}: {e}"))
}

/// Deserializes a TOML value, reporting failures with their key path.
pub fn from_value<T: DeserializeOwned>(value: toml::Value, origin: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            config_error(origin, inner)
        } else {
            config_error(origin, format!("at `{path}`: {inner}"))
        }
    })
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| config_error(origin, e))?;
        from_value(toml::Value::Table(table), origin)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(ing) = cfg.ingest.as_mut() {
            let base = path.parent().unwrap_or(Path::new("."));
            for f in &mut ing.files {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form; independent of key order in the file.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn walk(&self) -> Result<&WalkConfig, CliError> {
        self.ctrw_walker
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [ctrw_walker] section".into()))
    }

    pub fn lattice(&self) -> Result<&LatticeConfig, CliError> {
        self.sisyphus_lattice
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sisyphus_lattice] section".into()))
    }
}

/// `base` with the keys of `overrides` replaced, re-validated as `T`.
pub fn apply_overrides<T>(base: &T, overrides: &toml::Table, origin: &str) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let mut table = toml::Table::try_from(base).map_err(|e| config_error(origin, e))?;
    for (k, v) in overrides {
        if k != "label" {
            table.insert(k.clone(), v.clone());
        }
    }
    from_value(toml::Value::Table(table), origin)
}
