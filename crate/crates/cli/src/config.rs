//! Run configuration: a TOML file with `[model]`, `[sim]`, `[storage]` and
//! `[output]` sections.
//!
//! Only `model.g` and `model.kappa` are required. Defaults:
//!
//! | key                   | default                       |
//! |-----------------------|-------------------------------|
//! | `model.gamma`         | 0                             |
//! | `model.F_re`, `F_im`  | 0                             |
//! | `model.phi`, `delta`  | 0                             |
//! | `model.n_atoms`       | 1                             |
//! | `model.n_max`         | 2                             |
//! | `sim.dt`              | `1e-3 / kappa`                |
//! | `sim.t_final`         | `100 / kappa`                 |
//! | `sim.n_traj`          | 100                           |
//! | `sim.seed`            | 0                             |
//! | `sim.sample_every`    | steps per `0.05` time units   |
//! | `sim.burn_in`         | `t_final / 10`                |
//! | `storage.ramp_duration` | `20 / kappa` (smooth step)  |
//! | `storage.interpolation` | `"smooth-step"`             |
//! | `storage.t_store`     | `100 / kappa`                 |
//! | `storage.t_release`   | `10 / kappa`                  |
//! | `storage.cit_factor`  | 10                            |
//! | `output.directory`    | `"."`                         |
//! | `output.formats`      | `["json", "csv"]`             |
//!
//! `model.g` and the couplings in `storage.breakpoints` are single-atom
//! values; with `n_atoms = N` they are scaled by `√N`.

use std::path::Path;

use num_complex::Complex64;
use opo_qtraj::composite::scale_n_atoms;
use opo_qtraj::storage::{Interpolation, RampSchedule, DEFAULT_RAMP_KAPPA_TIMES};
use opo_qtraj::{Error as ModelError, Params, Settings};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub g: f64,
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, rename = "F_re")]
    pub f_re: f64,
    #[serde(default, rename = "F_im")]
    pub f_im: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub n_atoms: usize,
    #[serde(default = "two")]
    pub n_max: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub sample_every: Option<usize>,
    pub burn_in: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSection {
    /// `[[t, g], ...]` ramp-down breakpoints starting at `t = 0`.
    pub breakpoints: Option<Vec<(f64, f64)>>,
    pub interpolation: Option<String>,
    pub ramp_duration: Option<f64>,
    pub t_store: Option<f64>,
    pub t_release: Option<f64>,
    pub cit_factor: Option<f64>,
    /// Storage windows for the survival curve; omitted means no curve.
    pub survival_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<String>,
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub storage: StorageSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation { key: key.to_owned(), reason: reason.into() }
}

fn positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(invalid(key, format!("must be finite and >= 0, got {x}")))
    }
}

/// Maps a model validation error onto the config key that caused it.
fn model_key(err: ModelError) -> CliError {
    match err {
        ModelError::InvalidParams { field, reason } => {
            let key = match field {
                "drive" => "model.F_re".to_owned(),
                other => format!("model.{other}"),
            };
            CliError::Validation { key, reason }
        }
        other => CliError::Model(other),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            CliError::Parse { message: e.message().to_owned(), line }
        })?;
        config.resolve()
    }

    /// Fills every default and checks every value.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let params = self.params()?;
        let kappa = params.kappa;

        let sim = &mut self.sim;
        let dt = positive("sim.dt", sim.dt.unwrap_or(1e-3 / kappa))?;
        let t_final = positive("sim.t_final", sim.t_final.unwrap_or(100.0 / kappa))?;
        if dt > t_final {
            return Err(invalid("sim.dt", "larger than sim.t_final"));
        }
        let burn_in = non_negative("sim.burn_in", sim.burn_in.unwrap_or(t_final / 10.0))?;
        if burn_in >= t_final {
            return Err(invalid("sim.burn_in", "must be < sim.t_final"));
        }
        let n_traj = sim.n_traj.unwrap_or(100);
        if n_traj == 0 {
            return Err(invalid("sim.n_traj", "must be >= 1"));
        }
        let sample_every = sim.sample_every.unwrap_or_else(|| Settings::new(t_final, dt).sample_every);
        if sample_every == 0 {
            return Err(invalid("sim.sample_every", "must be >= 1"));
        }
        *sim = SimSection {
            dt: Some(dt),
            t_final: Some(t_final),
            n_traj: Some(n_traj),
            seed: Some(sim.seed.unwrap_or(0)),
            sample_every: Some(sample_every),
            burn_in: Some(burn_in),
        };

        let st = &mut self.storage;
        let interpolation = st.interpolation.clone().unwrap_or_else(|| "smooth-step".to_owned());
        interpolation
            .parse::<Interpolation>()
            .map_err(|e| invalid("storage.interpolation", e.to_string()))?;
        if st.breakpoints.is_some() && st.ramp_duration.is_some() {
            return Err(invalid("storage.ramp_duration", "conflicts with storage.breakpoints"));
        }
        if st.breakpoints.is_none() {
            let d = st.ramp_duration.unwrap_or(DEFAULT_RAMP_KAPPA_TIMES / kappa);
            st.ramp_duration = Some(positive("storage.ramp_duration", d)?);
        }
        st.interpolation = Some(interpolation);
        st.t_store = Some(non_negative("storage.t_store", st.t_store.unwrap_or(100.0 / kappa))?);
        st.t_release = Some(non_negative("storage.t_release", st.t_release.unwrap_or(10.0 / kappa))?);
        let factor = st.cit_factor.unwrap_or(10.0);
        if !(factor.is_finite() && factor >= 1.0) {
            return Err(invalid("storage.cit_factor", "must be >= 1"));
        }
        st.cit_factor = Some(factor);
        if let Some(grid) = &st.survival_grid {
            if grid.is_empty() {
                return Err(invalid("storage.survival_grid", "must not be empty"));
            }
            for &t in grid {
                non_negative("storage.survival_grid", t)?;
            }
        }
        self.schedule()?;

        let out = &mut self.output;
        out.directory.get_or_insert_with(|| ".".to_owned());
        let formats = out.formats.get_or_insert_with(|| vec![Format::Json, Format::Csv]);
        if formats.is_empty() {
            return Err(invalid("output.formats", "must list at least one of \"json\", \"csv\""));
        }
        Ok(self)
    }

    /// Model parameters with `g` scaled to the collective coupling.
    pub fn params(&self) -> Result<Params, CliError> {
        let m = &self.model;
        let single = Params::new(m.g, m.kappa, m.gamma, 0.0)
            .with_drive(Complex64::new(m.f_re, m.f_im))
            .with_detuning(m.phi, m.delta)
            .with_n_max(m.n_max);
        single.validate().map_err(model_key)?;
        scale_n_atoms(&single, m.n_atoms).map_err(model_key)
    }

    pub fn settings(&self) -> Settings {
        let s = &self.sim;
        let mut out = Settings::new(s.t_final.unwrap_or_default(), s.dt.unwrap_or_default());
        out.sample_every = s.sample_every.unwrap_or(out.sample_every);
        out.burn_in = s.burn_in.unwrap_or(out.burn_in);
        out
    }

    pub fn seed(&self) -> u64 {
        self.sim.seed.unwrap_or(0)
    }

    pub fn dt(&self) -> f64 {
        self.sim.dt.unwrap_or_default()
    }

    pub fn formats(&self) -> &[Format] {
        self.output.formats.as_deref().unwrap_or(&[Format::Json, Format::Csv])
    }

    /// Ramp-down schedule in collective-coupling units.
    pub fn schedule(&self) -> Result<RampSchedule<f64>, CliError> {
        let scale = (self.model.n_atoms as f64).sqrt();
        let st = &self.storage;
        let interpolation = st
            .interpolation
            .as_deref()
            .unwrap_or("smooth-step")
            .parse::<Interpolation>()
            .map_err(|e| invalid("storage.interpolation", e.to_string()))?;
        let breakpoints = match &st.breakpoints {
            Some(bp) => bp.iter().map(|&(t, g)| (t, g * scale)).collect(),
            None => {
                let d = st.ramp_duration.unwrap_or(DEFAULT_RAMP_KAPPA_TIMES / self.model.kappa);
                vec![(0.0, self.model.g * scale), (d, 0.0)]
            }
        };
        RampSchedule::new(breakpoints, interpolation).map_err(|e| invalid("storage.breakpoints", e.to_string()))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    RunConfig::from_toml(&text)
}
