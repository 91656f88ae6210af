//! Scenario files: JSON, unknown keys rejected at every level.
//!
//! ```json
//! {
//!   "corridor": {
//!     "sections": [{ "length_m": 920, "v_min": 60, "v_max": 85 }],
//!     "travel_times_s": null,
//!     "travel_time_decimals": null,
//!     "safe_d_m": 300
//!   },
//!   "solver": {
//!     "safe_d_list": [100, 200],
//!     "epsilon_s": 0,
//!     "tolerance_s": 1e-6,
//!     "gap_resolution_s": null
//!   },
//!   "sim": { "dt_s": 0.1, "count_by_s": null },
//!   "output": "out"
//! }
//! ```
//!
//! Only `corridor.sections` and `corridor.safe_d_m` are required. Every
//! `sim` field is optional and falls back to the reference parameters; the
//! car-following minimum distance defaults to the run's safe distance.

use std::path::{Path, PathBuf};

use eta_gap::solver::DEFAULT_GAP_TOLERANCE_S;
use eta_gap::{
    derive_travel_times, round_to_decimals, CorridorSpec, GapSolver, Mode, Section, SimConfig,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Reference corridor and parameters, bundled into the binary.
pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/paper.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub corridor: CorridorSource,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorSource {
    pub sections: Vec<Section>,
    /// Explicit per-section travel times; derived from the limit midpoints
    /// when absent.
    #[serde(default)]
    pub travel_times_s: Option<Vec<f64>>,
    /// Round derived travel times to this many decimals.
    #[serde(default)]
    pub travel_time_decimals: Option<u32>,
    pub safe_d_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub safe_d_list: Vec<f64>,
    #[serde(default)]
    pub epsilon_s: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance_s: f64,
    /// Report the smallest multiple of this step strictly above the
    /// bisection result.
    #[serde(default)]
    pub gap_resolution_s: Option<f64>,
}

fn default_tolerance() -> f64 {
    DEFAULT_GAP_TOLERANCE_S
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            safe_d_list: Vec::new(),
            epsilon_s: 0.0,
            tolerance_s: DEFAULT_GAP_TOLERANCE_S,
            gap_resolution_s: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_window_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_speed_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_des_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_min_mps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_max_mps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_by_s: Option<f64>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_SCENARIO).expect("bundled scenario parses")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Builds the corridor at the file's own safe distance.
    pub fn corridor(&self) -> Result<CorridorSpec, CliError> {
        let c = &self.corridor;
        let travel_times = match (&c.travel_times_s, c.travel_time_decimals) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "corridor: travel_times_s and travel_time_decimals are mutually exclusive"
                        .into(),
                ))
            }
            (Some(t), None) => Some(t.clone()),
            (None, Some(d)) => Some(round_to_decimals(&derive_travel_times(&c.sections)?, d)),
            (None, None) => None,
        };
        Ok(CorridorSpec::build(
            c.sections.clone(),
            c.safe_d_m,
            travel_times,
        )?)
    }

    pub fn solver(&self) -> Result<GapSolver, CliError> {
        let s = &self.solver;
        if !s.tolerance_s.is_finite() || s.tolerance_s <= 0.0 {
            return Err(CliError::Config("solver.tolerance_s must be > 0".into()));
        }
        if !s.epsilon_s.is_finite() || s.epsilon_s < 0.0 {
            return Err(CliError::Config("solver.epsilon_s must be >= 0".into()));
        }
        if let Some(r) = s.gap_resolution_s {
            if !r.is_finite() || r <= 0.0 {
                return Err(CliError::Config(
                    "solver.gap_resolution_s must be > 0".into(),
                ));
            }
        }
        Ok(GapSolver::default()
            .with_tolerance(s.tolerance_s)
            .with_resolution(s.gap_resolution_s))
    }

    /// Simulation settings for one run.
    pub fn sim_config(&self, mode: Mode, safe_d_m: f64) -> Result<SimConfig, CliError> {
        let s = &self.sim;
        let mut cfg = SimConfig::reference(mode, safe_d_m);
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.dt_s, s.dt_s);
        set(&mut cfg.entry_window_s, s.entry_window_s);
        set(&mut cfg.entry_speed_mps, s.entry_speed_mps);
        set(&mut cfg.lambda_x, s.lambda_x);
        set(&mut cfg.lambda_v, s.lambda_v);
        set(&mut cfg.t_des_s, s.t_des_s);
        set(&mut cfg.d_min_m, s.d_min_m);
        set(&mut cfg.accel_min_mps2, s.accel_min_mps2);
        set(&mut cfg.accel_max_mps2, s.accel_max_mps2);
        cfg.horizon_s = s.horizon_s;
        cfg.count_by_s = s.count_by_s;
        cfg.seed = s.seed.unwrap_or(0);
        cfg.validate()?;
        Ok(cfg)
    }
}
