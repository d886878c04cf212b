//! Domain types and closed-form evaluation of SINRs, rates and constraints.

mod eval;
mod scenario;
mod types;

pub use eval::{
    achievable_rates, check_fairness, effective_channel, effective_gain, gain_matrix,
    lifted_gain, oma_rate, oma_rates, qwsr, rates_from_gains, sinr, validate_star,
    FairnessViolation, StarViolation,
};
pub(crate) use eval::fairness_violations;
pub use scenario::{AlgorithmParams, Protocol, Scenario, Side, UserSpec};
pub use types::{
    BeamformingSolution, ChannelRealization, DecodingOrder, Diagnostics, StarConfig, Trace,
    TsAllocation, AMPLITUDE_SLACK,
};

#[cfg(test)]
mod tests;
