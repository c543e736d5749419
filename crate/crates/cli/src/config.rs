//! Run configuration: TOML file values overlaid by command-line flags, then
//! filled with defaults. The resolved form is echoed as `run_config.toml`.

use std::fmt;
use std::path::{Path, PathBuf};

use bosewalk::codec::{Layout, Scaling};
use bosewalk::ensemble::WalkTemplate;
use bosewalk::eval::{Thresholds, VerifyOptions};
use serde::{Deserialize, Serialize};

pub const ECHO_FILE: &str = "run_config.toml";

/// A configuration error; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Every setting a run can take. All fields are optional so the same type
/// describes a config file, the flags of one invocation and an echo.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Starting site of each particle, counted from zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<usize>>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_oracle: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<Layout>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upscale: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pass_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(
            self, top, command, sites, particles, hopping, gamma, eta, time, starts, seed,
            workers, index, energies, unitary, check_oracle, count, layout, corpus, upscale,
            resolution, realizations, gammas, etas, input, max_kl, min_fidelity,
            min_pass_fraction, bins, out,
        );
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    pub fn write_echo(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml())?;
        Ok(path)
    }

    pub fn sites(&self) -> usize {
        self.sites.unwrap_or(10)
    }

    pub fn particles(&self) -> usize {
        self.particles
            .or_else(|| self.starts.as_ref().map(Vec::len))
            .unwrap_or(2)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    pub fn out(&self) -> Result<PathBuf, ConfigError> {
        self.out
            .clone()
            .ok_or_else(|| ConfigError("an output directory (--out) is required".into()))
    }

    /// Default start: particles on consecutive sites around the chain centre.
    fn default_starts(sites: usize, particles: usize) -> Vec<usize> {
        let first = sites.saturating_sub(particles) / 2;
        (0..particles).map(|k| (first + k).min(sites.saturating_sub(1))).collect()
    }

    pub fn starts(&self) -> Vec<usize> {
        self.starts
            .clone()
            .unwrap_or_else(|| Self::default_starts(self.sites(), self.particles()))
    }

    pub fn template(&self) -> Result<WalkTemplate, ConfigError> {
        let sites = self.sites();
        let particles = self.particles();
        let starts = self.starts();
        if sites == 0 {
            return Err(ConfigError("sites must be at least 1".into()));
        }
        if starts.len() != particles {
            return Err(ConfigError(format!(
                "starts lists {} sites but particles = {particles}",
                starts.len()
            )));
        }
        let mut occupation = vec![0u8; sites];
        for &s in &starts {
            let slot = occupation
                .get_mut(s)
                .ok_or_else(|| ConfigError(format!("start site {s} is outside a {sites}-site chain")))?;
            *slot = slot
                .checked_add(1)
                .ok_or_else(|| ConfigError(format!("too many particles on site {s}")))?;
        }
        let template = WalkTemplate {
            sites,
            particles,
            hopping: self.hopping.unwrap_or(-1.0),
            interaction: self.gamma.unwrap_or(0.0),
            disorder_bound: self.eta.unwrap_or(3.0),
            time: self.time.unwrap_or(bosewalk::dynamics::DEFAULT_TIME),
            occupation,
        };
        // surface parameter errors here rather than mid-run
        bosewalk::ensemble::WalkEngine::new(template.clone())
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(template)
    }

    pub fn layout(&self) -> Layout {
        self.layout.unwrap_or(Layout::CorrelationV1)
    }

    pub fn scaling(&self) -> Result<Scaling, ConfigError> {
        match (self.upscale, self.resolution) {
            (Some(_), Some(_)) => Err(ConfigError(
                "upscale and resolution are mutually exclusive".into(),
            )),
            (_, Some(r)) => Ok(Scaling::Resolution(r)),
            (u, None) => Ok(Scaling::Factor(u.unwrap_or(1))),
        }
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, ConfigError> {
        let defaults = VerifyOptions::default();
        let options = VerifyOptions {
            thresholds: Thresholds {
                max_kl: self.max_kl.unwrap_or(defaults.thresholds.max_kl),
                min_fidelity: self.min_fidelity.unwrap_or(defaults.thresholds.min_fidelity),
            },
            workers: self.workers(),
            bins: self.bins.unwrap_or(defaults.bins),
            min_pass_fraction: self.min_pass_fraction.unwrap_or(defaults.min_pass_fraction),
        };
        if !(0.0..=1.0).contains(&options.min_pass_fraction) {
            return Err(ConfigError("min_pass_fraction must lie in [0, 1]".into()));
        }
        if options.bins == 0 {
            return Err(ConfigError("bins must be positive".into()));
        }
        Ok(options)
    }
}
