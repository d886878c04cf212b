//! Scenario files: TOML with the physical unit spelled out in each key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Fading, Policy, SweepAxis};
use crate::error::{Error, Result};
use crate::model::{AlgorithmParams, Protocol, Scenario, Side, UserSpec};
use crate::queueing::ArrivalKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub side: Side,
    pub position_m: [f64; 3],
    pub arrival_rate_bps_hz: f64,
    /// Backlog at slot 0 in bits/Hz (one slot at rate `r` removes `r`).
    pub initial_queue_bits_hz: f64,
}

/// Optional experiment defaults carried by a scenario file; command-line
/// flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub policies: Option<Vec<Policy>>,
    pub slots: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub fading: Option<Fading>,
    pub arrivals: Option<ArrivalKind>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_antennas: usize,
    pub num_elements: usize,
    pub bs_position_m: [f64; 3],
    pub ris_position_m: [f64; 3],
    pub p_max_watts: f64,
    pub snr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_power_watts: Option<f64>,
    pub carrier_ghz: f64,
    pub rician_factor_g_linear: f64,
    pub rician_factor_v_linear: f64,
    pub slot_seconds: f64,
    pub protocol: Protocol,
    pub users: Vec<UserEntry>,
    #[serde(default)]
    pub algorithm: AlgorithmParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentEntry>,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            num_antennas: s.num_antennas,
            num_elements: s.num_elements,
            bs_position_m: s.bs_position,
            ris_position_m: s.ris_position,
            p_max_watts: s.p_max,
            snr_db: s.snr_db,
            noise_power_watts: s.noise_power,
            carrier_ghz: s.carrier_ghz,
            rician_factor_g_linear: s.rician_factor_g,
            rician_factor_v_linear: s.rician_factor_v,
            slot_seconds: s.slot_seconds,
            protocol: s.protocol,
            users: s
                .users
                .iter()
                .enumerate()
                .map(|(k, u)| UserEntry {
                    side: u.side,
                    position_m: u.position,
                    arrival_rate_bps_hz: s.arrival_rates[k],
                    initial_queue_bits_hz: s.initial_queues[k],
                })
                .collect(),
            algorithm: s.params.clone(),
            experiment: None,
        }
    }

    /// Builds and validates the scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let s = Scenario {
            num_antennas: self.num_antennas,
            num_elements: self.num_elements,
            users: self
                .users
                .iter()
                .enumerate()
                .map(|(id, u)| UserSpec {
                    id,
                    side: u.side,
                    position: u.position_m,
                })
                .collect(),
            bs_position: self.bs_position_m,
            ris_position: self.ris_position_m,
            p_max: self.p_max_watts,
            snr_db: self.snr_db,
            noise_power: self.noise_power_watts,
            carrier_ghz: self.carrier_ghz,
            rician_factor_g: self.rician_factor_g_linear,
            rician_factor_v: self.rician_factor_v_linear,
            slot_seconds: self.slot_seconds,
            arrival_rates: self.users.iter().map(|u| u.arrival_rate_bps_hz).collect(),
            initial_queues: self.users.iter().map(|u| u.initial_queue_bits_hz).collect(),
            protocol: self.protocol,
            params: self.algorithm.clone(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid(format!("toml encoding: {e}")))
    }
}

/// Reads a scenario file and validates it.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Option<ExperimentEntry>)> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.to_scenario().map_err(|e| e.context(path.display().to_string()))?;
    Ok((scenario, file.experiment))
}
