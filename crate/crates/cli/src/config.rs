//! Scenario configuration: sectioned TOML with flat keys, unknown keys
//! rejected so typos fail before any compute starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qbsim_core::dynamics::Driver;
use qbsim_core::model::Space;
use qbsim_core::schedule::ScheduleKind;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SweepTau,
    Trace,
    Cost,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SweepTau => "sweep-tau",
            ScenarioKind::Trace => "trace",
            ScenarioKind::Cost => "cost",
        }
    }
}

fn default_t_end_multiplier() -> f64 {
    3.0
}

fn default_unit() -> f64 {
    1.0
}

fn default_steps() -> usize {
    qbsim_core::dynamics::DEFAULT_STEPS_PER_TAU
}

fn default_quad_points() -> usize {
    qbsim_core::metrics::DEFAULT_QUAD_POINTS
}

fn default_space() -> String {
    "sector".into()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Optional echo of the subcommand; must match when present.
    pub kind: Option<String>,
    pub schedules: Vec<String>,
    #[serde(default)]
    pub drivers: Vec<String>,
    pub omega_tau_min: Option<f64>,
    pub omega_tau_max: Option<f64>,
    pub omega_tau_points: Option<usize>,
    /// Fixed Ωτ for trace runs.
    pub omega_tau: Option<f64>,
    #[serde(default = "default_t_end_multiplier")]
    pub t_end_multiplier: f64,
    #[serde(default = "default_unit")]
    pub omega_drive: f64,
    #[serde(default = "default_unit")]
    pub omega_ref: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_steps")]
    pub steps_per_tau: usize,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_space")]
    pub space: String,
    #[serde(default)]
    pub clamp_after_tau: bool,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            steps_per_tau: default_steps(),
            quad_points: default_quad_points(),
            space: default_space(),
            clamp_after_tau: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

/// Fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub schedules: Vec<ScheduleKind>,
    pub drivers: Vec<Driver>,
    pub omega_tau_grid: Vec<f64>,
    pub t_end_multiplier: f64,
    pub omega_drive: f64,
    pub omega_ref: f64,
    pub steps_per_tau: usize,
    pub quad_points: usize,
    pub space: Space,
    pub clamp_after_tau: bool,
    pub out_dir: PathBuf,
    /// The raw config, echoed into the manifest.
    pub echo: FileConfig,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_schedule(name: &str) -> Result<ScheduleKind, ConfigError> {
    match name {
        "linear" => Ok(ScheduleKind::Linear),
        "sine" => Ok(ScheduleKind::Sine),
        "cube-root" => Ok(ScheduleKind::CubeRoot),
        other => Err(ConfigError(format!(
            "unknown schedule {other:?} (expected linear | sine | cube-root)"
        ))),
    }
}

fn parse_driver(name: &str) -> Result<Driver, ConfigError> {
    match name {
        "adiabatic" => Ok(Driver::Adiabatic),
        "tqd" => Ok(Driver::Tqd),
        other => Err(ConfigError(format!(
            "unknown driver {other:?} (expected adiabatic | tqd)"
        ))),
    }
}

fn parse_space(name: &str) -> Result<Space, ConfigError> {
    match name {
        "sector" => Ok(Space::Sector3),
        "full" => Ok(Space::Full8),
        other => Err(ConfigError(format!(
            "unknown space {other:?} (expected sector | full)"
        ))),
    }
}

/// Command-line overrides applied on top of the file config.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    pub quad_points: Option<usize>,
    pub space: Option<String>,
}

pub fn load(path: &Path, kind: ScenarioKind, overrides: &Overrides) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut file: FileConfig =
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;

    if let Some(steps) = overrides.steps {
        file.numerics.steps_per_tau = steps;
    }
    if let Some(quad) = overrides.quad_points {
        file.numerics.quad_points = quad;
    }
    if let Some(space) = &overrides.space {
        file.numerics.space = space.clone();
    }
    if let Some(out) = &overrides.out {
        file.output.dir = out.clone();
    }

    resolve(file, kind)
}

pub fn resolve(file: FileConfig, kind: ScenarioKind) -> Result<Scenario, ConfigError> {
    let s = &file.scenario;
    if let Some(declared) = &s.kind {
        if declared != kind.name() {
            return Err(ConfigError(format!(
                "config declares kind {declared:?} but the {} subcommand was invoked",
                kind.name()
            )));
        }
    }
    if s.schedules.is_empty() {
        return Err(ConfigError("schedules list is empty".into()));
    }
    let schedules = s
        .schedules
        .iter()
        .map(|n| parse_schedule(n))
        .collect::<Result<Vec<_>, _>>()?;
    if kind == ScenarioKind::Cost && schedules.len() != 1 {
        return Err(ConfigError(
            "cost scenarios take exactly one schedule (rows carry no schedule column)".into(),
        ));
    }

    let drivers = if s.drivers.is_empty() {
        match kind {
            ScenarioKind::Cost => vec![],
            _ => return Err(ConfigError("drivers list is empty".into())),
        }
    } else {
        s.drivers
            .iter()
            .map(|n| parse_driver(n))
            .collect::<Result<Vec<_>, _>>()?
    };

    let omega_tau_grid = match kind {
        ScenarioKind::Trace => {
            let v = s.omega_tau.ok_or_else(|| {
                ConfigError("trace scenarios need omega_tau".into())
            })?;
            if !(v > 0.0) {
                return Err(ConfigError(format!("omega_tau must be positive, got {v}")));
            }
            vec![v]
        }
        ScenarioKind::SweepTau | ScenarioKind::Cost => {
            let (min, max, points) = match (s.omega_tau_min, s.omega_tau_max, s.omega_tau_points) {
                (Some(a), Some(b), Some(n)) => (a, b, n),
                _ => {
                    return Err(ConfigError(
                        "sweep scenarios need omega_tau_min, omega_tau_max, omega_tau_points"
                            .into(),
                    ))
                }
            };
            if !(min > 0.0) || !(max > min) {
                return Err(ConfigError(format!(
                    "need 0 < omega_tau_min < omega_tau_max, got [{min}, {max}]"
                )));
            }
            if points < 2 {
                return Err(ConfigError(format!(
                    "omega_tau_points must be at least 2, got {points}"
                )));
            }
            (0..points)
                .map(|k| min + (max - min) * (k as f64) / ((points - 1) as f64))
                .collect()
        }
    };

    if !(s.t_end_multiplier >= 1.0) {
        return Err(ConfigError(format!(
            "t_end_multiplier must be at least 1, got {}",
            s.t_end_multiplier
        )));
    }
    if !(s.omega_drive > 0.0) || !(s.omega_ref > 0.0) {
        return Err(ConfigError(
            "omega_drive and omega_ref must be positive".into(),
        ));
    }
    if file.numerics.steps_per_tau < 100 {
        return Err(ConfigError(format!(
            "steps_per_tau must be at least 100, got {}",
            file.numerics.steps_per_tau
        )));
    }
    if file.numerics.quad_points < 3 || file.numerics.quad_points % 2 == 0 {
        return Err(ConfigError(format!(
            "quad_points must be odd and at least 3, got {}",
            file.numerics.quad_points
        )));
    }
    let space = parse_space(&file.numerics.space)?;

    Ok(Scenario {
        kind,
        schedules,
        drivers,
        omega_tau_grid,
        t_end_multiplier: s.t_end_multiplier,
        omega_drive: s.omega_drive,
        omega_ref: s.omega_ref,
        steps_per_tau: file.numerics.steps_per_tau,
        quad_points: file.numerics.quad_points,
        space,
        clamp_after_tau: file.numerics.clamp_after_tau,
        out_dir: file.output.dir.clone(),
        echo: file,
    })
}
