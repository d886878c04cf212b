//! Multi-slot simulation, sweeps over scenario parameters, scenario files
//! and result persistence.

mod config;
mod output;
mod selftest;
mod sim;

pub use config::{load_scenario, ExperimentEntry, ScenarioFile, UserEntry};
pub use output::{
    read_records, read_summary, write_outputs, RunMeta, SummaryRow, RECORDS_FILE, SUMMARY_FILE,
    TIMING_FILE, META_FILE,
};
pub use selftest::{selftest, Check};
pub use sim::{
    evaluate_rates, run_slot, simulate, simulate_trajectory, solve_policy, sweep, RunOutput,
    SlotRecord, Trajectory, TrajectoryConfig,
};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Protocol, Scenario};
use crate::queueing::ArrivalKind;

/// Per-slot decision rule of a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "ES")]
    Es,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "TS")]
    Ts,
    /// ES with the split pinned at one half.
    #[serde(rename = "UES")]
    Ues,
    /// Reflect-only and transmit-only surfaces of half size each.
    #[serde(rename = "ConvRIS")]
    ConvRis,
    #[serde(rename = "OMA-ES")]
    OmaEs,
    #[serde(rename = "OMA-MS")]
    OmaMs,
    #[serde(rename = "OMA-TS")]
    OmaTs,
    /// ES maximizing the unweighted sum rate.
    #[serde(rename = "ThroughputOpt-ES")]
    ThroughputEs,
    /// TS maximizing the unweighted sum rate.
    #[serde(rename = "ThroughputOpt-TS")]
    ThroughputTs,
}

impl Policy {
    pub const ALL: [Policy; 10] = [
        Policy::Es,
        Policy::Ms,
        Policy::Ts,
        Policy::Ues,
        Policy::ConvRis,
        Policy::OmaEs,
        Policy::OmaMs,
        Policy::OmaTs,
        Policy::ThroughputEs,
        Policy::ThroughputTs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Es => "ES",
            Policy::Ms => "MS",
            Policy::Ts => "TS",
            Policy::Ues => "UES",
            Policy::ConvRis => "ConvRIS",
            Policy::OmaEs => "OMA-ES",
            Policy::OmaMs => "OMA-MS",
            Policy::OmaTs => "OMA-TS",
            Policy::ThroughputEs => "ThroughputOpt-ES",
            Policy::ThroughputTs => "ThroughputOpt-TS",
        }
    }

    pub fn protocol(self) -> Protocol {
        match self {
            Policy::Es | Policy::Ues | Policy::ConvRis | Policy::OmaEs | Policy::ThroughputEs => Protocol::Es,
            Policy::Ms | Policy::OmaMs => Protocol::Ms,
            Policy::Ts | Policy::OmaTs | Policy::ThroughputTs => Protocol::Ts,
        }
    }

    /// Whether the slot objective ignores the queues.
    pub fn unit_weights(self) -> bool {
        matches!(self, Policy::ThroughputEs | Policy::ThroughputTs)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Policy::ALL
            .into_iter()
            .find(|p| p.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "conv-ris" | "conv" => Some(Policy::ConvRis),
                "thruputopt-es" | "throughput-es" => Some(Policy::ThroughputEs),
                "thruputopt-ts" | "throughput-ts" => Some(Policy::ThroughputTs),
                _ => None,
            })
            .ok_or_else(|| {
                let names: Vec<_> = Policy::ALL.iter().map(|p| p.name()).collect();
                Error::invalid(format!("unknown policy {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    /// Surface element count `M`.
    Elements,
    SnrDb,
    /// Multiplier applied to every mean arrival rate.
    ArrivalScale,
    /// Phase resolution applied to each optimized surface.
    QuantBits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::Elements => "elements",
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::ArrivalScale => "arrival_scale",
            SweepAxis::QuantBits => "quant_bits",
        }
    }

    /// Scenario at `value` plus the phase bits for [`SweepAxis::QuantBits`].
    pub fn apply(self, base: &Scenario, value: f64) -> Result<(Scenario, Option<u32>)> {
        let mut s = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= 4096.0 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(format!("{} needs a positive integer value, got {v}", self.name())))
            }
        };
        let bits = match self {
            SweepAxis::None => None,
            SweepAxis::Elements => {
                s.num_elements = count(value)?;
                None
            }
            SweepAxis::SnrDb => {
                s.snr_db = value;
                None
            }
            SweepAxis::ArrivalScale => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::invalid(format!("arrival scale must be nonnegative, got {value}")));
                }
                s.arrival_rates.iter_mut().for_each(|l| *l *= value);
                None
            }
            SweepAxis::QuantBits => Some(count(value)? as u32),
        };
        s.validate()?;
        Ok((s, bits))
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(SweepAxis::None),
            "elements" | "m" | "num_elements" => Ok(SweepAxis::Elements),
            "snr_db" | "snr" => Ok(SweepAxis::SnrDb),
            "arrival_scale" | "arrival_rate" | "arrivals" => Ok(SweepAxis::ArrivalScale),
            "quant_bits" | "bits" | "quantization_bits" => Ok(SweepAxis::QuantBits),
            other => Err(Error::invalid(format!(
                "unknown sweep axis {other:?}; expected none, elements, snr_db, arrival_scale or quant_bits"
            ))),
        }
    }
}

/// Channel evolution across slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    /// Independent realization each slot.
    #[default]
    Iid,
    /// The slot-0 realization held for the whole run.
    Static,
}

/// One experiment: policies × seeds × axis values, each a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub axis: SweepAxis,
    /// Axis values; ignored (a single run) when the axis is `none`.
    pub values: Vec<f64>,
    pub policies: Vec<Policy>,
    /// Horizon `T` in slots.
    pub slots: usize,
    pub seeds: Vec<u64>,
    pub fading: Fading,
    pub arrivals: ArrivalKind,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, policies: Vec<Policy>, slots: usize, seeds: Vec<u64>, out_dir: PathBuf) -> Self {
        Self {
            scenario,
            axis: SweepAxis::None,
            values: Vec::new(),
            policies,
            slots,
            seeds,
            fading: Fading::Iid,
            arrivals: ArrivalKind::Poisson,
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.policies.is_empty() {
            return Err(Error::invalid("the policy list is empty"));
        }
        if self.slots == 0 {
            return Err(Error::invalid("the horizon must be at least one slot"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("the seed list is empty"));
        }
        if self.axis != SweepAxis::None {
            if self.values.is_empty() {
                return Err(Error::invalid(format!("sweep axis {} has no values", self.axis.name())));
            }
            if self.values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("sweep values must be strictly increasing"));
            }
            for &v in &self.values {
                self.axis.apply(&self.scenario, v)?;
            }
        }
        Ok(())
    }

    /// Axis values of the run; a single `NaN` placeholder without an axis.
    pub fn points(&self) -> Vec<f64> {
        match self.axis {
            SweepAxis::None => vec![f64::NAN],
            _ => self.values.clone(),
        }
    }
}

#[cfg(test)]
mod tests;
