//! Experiment configuration file: schema, parsing, and name resolution for
//! selectors and target kernels.

use anyhow::{bail, Context, Result};
use dovalid::kernels::{Kernel, Side};
use dovalid::selectors::{Indirect, SelectorKind};
use dovalid::simulation::{ExperimentConfig, DEFAULT_GRID_RESOLUTION};
use serde::Deserialize;

/// Config documents must carry exactly this version.
pub const SCHEMA_VERSION: u32 = 1;

/// Sample sizes an experiment file may request.
pub const SAMPLE_SIZE_MENU: [usize; 4] = [100, 200, 500, 1000];

/// On-disk experiment description (TOML).  Unknown fields are rejected so
/// typos surface as validation errors instead of silently applied defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub designs: Vec<u8>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub selectors: Vec<String>,
    pub seed: u64,
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default = "default_target")]
    pub target: String,
}

fn default_grid_resolution() -> usize {
    DEFAULT_GRID_RESOLUTION
}

fn default_target() -> String {
    "epanechnikov".into()
}

impl ConfigFile {
    /// Parses and version-checks a config document.
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let cfg: ConfigFile =
            toml::from_str(text).context("config file does not match the schema")?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version: this tool reads version {SCHEMA_VERSION}, the file declares {}",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    /// Resolves names and validates everything the core driver will need.
    /// Nothing is computed or written before this returns `Ok`.
    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        for &n in &self.sample_sizes {
            if !SAMPLE_SIZE_MENU.contains(&n) {
                bail!("sample_sizes: {n} is not one of {SAMPLE_SIZE_MENU:?}");
            }
        }
        let selectors = self
            .selectors
            .iter()
            .map(|name| parse_selector(name))
            .collect::<Result<Vec<_>>>()
            .context("selectors")?;
        let target = parse_target(&self.target).context("target")?;
        let experiment = ExperimentConfig {
            designs: self.designs.clone(),
            sample_sizes: self.sample_sizes.clone(),
            replications: self.replications,
            selectors,
            target,
            seed: self.seed,
            grid_resolution: self.grid_resolution,
        };
        experiment.validate()?;
        Ok(experiment)
    }
}

/// Resolves a selector name: `cv`, `icv<r>`, `icvg`, `oscv-left`,
/// `oscv-right`, `do`, `ido<r>`, `idog`, `plugin`, `median13`.
pub fn parse_selector(name: &str) -> Result<SelectorKind> {
    Ok(match name {
        "cv" => SelectorKind::Cv,
        "icvg" => SelectorKind::Icv(Kernel::gaussian()),
        "oscv-left" => SelectorKind::Oscv(Side::Left),
        "oscv-right" => SelectorKind::Oscv(Side::Right),
        "do" => SelectorKind::Do,
        "idog" => SelectorKind::Ido(Indirect::Gaussian),
        "plugin" => SelectorKind::PluginRefined,
        "median13" => SelectorKind::Median13,
        other => {
            if let Some(digits) = other.strip_prefix("icv") {
                SelectorKind::Icv(Kernel::polynomial(parse_order(digits, name)?)?)
            } else if let Some(digits) = other.strip_prefix("ido") {
                SelectorKind::Ido(Indirect::Polynomial(parse_order(digits, name)?))
            } else {
                bail!(
                    "unknown selector {name:?} (expected cv, icv<r>, icvg, oscv-left, \
                     oscv-right, do, ido<r>, idog, plugin, or median13)"
                );
            }
        }
    })
}

/// Resolves a target kernel name: `epanechnikov`/`epan`, `quartic`,
/// `gaussian`/`gauss`, or `poly<r>`.
pub fn parse_target(name: &str) -> Result<Kernel> {
    Ok(match name {
        "epanechnikov" | "epan" => Kernel::epanechnikov(),
        "quartic" => Kernel::quartic(),
        "gaussian" | "gauss" => Kernel::gaussian(),
        other => {
            if let Some(digits) = other.strip_prefix("poly") {
                Kernel::polynomial(parse_order(digits, name)?)?
            } else {
                bail!(
                    "unknown kernel {name:?} (expected epanechnikov, quartic, gaussian, \
                     or poly<r>)"
                );
            }
        }
    })
}

fn parse_order(digits: &str, name: &str) -> Result<u32> {
    digits
        .parse()
        .with_context(|| format!("{name:?}: {digits:?} is not a polynomial order"))
}
