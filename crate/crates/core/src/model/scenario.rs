use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-space of the surface a user is located in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reflection,
    Transmission,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Reflection, Side::Transmission];

    pub fn index(self) -> usize {
        match self {
            Side::Reflection => 0,
            Side::Transmission => 1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Reflection => Side::Transmission,
            Side::Transmission => Side::Reflection,
        }
    }
}

/// Surface operating protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    /// Energy splitting: continuous per-element split.
    Es,
    /// Mode switching: binary per-element split.
    Ms,
    /// Time switching: whole surface reflects or transmits per period.
    Ts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub id: usize,
    pub side: Side,
    /// Position in meters.
    pub position: [f64; 3],
}

/// Tolerances and schedule parameters of the iterative algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmParams {
    /// Fractional-increase threshold of the BCD loop.
    pub epsilon: f64,
    /// SROCR objective-change threshold.
    pub srocr_eps1: f64,
    /// SROCR `1 - gamma` threshold.
    pub srocr_eps2: f64,
    /// Inner-loop fractional-increase threshold of the penalty method.
    pub penalty_eps1: f64,
    /// Binary-violation threshold of the penalty method.
    pub penalty_eps2: f64,
    /// Initial penalty factor.
    pub eta0: f64,
    /// Penalty growth rate.
    pub zeta: f64,
    /// Initial SROCR relaxation level.
    pub gamma0: f64,
    /// Initial SROCR step size.
    pub delta0: f64,
    /// Maximum number of BCD iterations.
    pub l_max: usize,
    /// Maximum number of SROCR iterations per passive step.
    pub srocr_max_iter: usize,
    /// Eigenvalue-ratio threshold accepted as rank one for the surface blocks.
    pub srocr_rank_tol: f64,
    /// Interior-point tolerance for the convex subproblems.
    pub conic_tol: f64,
    /// Seed of the random initial surface phases.
    pub init_seed: u64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            srocr_eps1: 1e-3,
            srocr_eps2: 1e-3,
            penalty_eps1: 1e-4,
            penalty_eps2: 1e-3,
            eta0: 0.1,
            zeta: 10.0,
            gamma0: 0.0,
            delta0: 0.1,
            l_max: 50,
            srocr_max_iter: 60,
            srocr_rank_tol: 1e-4,
            conic_tol: 1e-8,
            init_seed: 0,
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("srocr_eps1", self.srocr_eps1),
            ("srocr_eps2", self.srocr_eps2),
            ("penalty_eps1", self.penalty_eps1),
            ("penalty_eps2", self.penalty_eps2),
            ("eta0", self.eta0),
            ("delta0", self.delta0),
            ("srocr_rank_tol", self.srocr_rank_tol),
            ("conic_tol", self.conic_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.zeta > 1.0) {
            return Err(Error::invalid(format!("zeta must exceed 1, got {}", self.zeta)));
        }
        if !(0.0..=1.0).contains(&self.gamma0) {
            return Err(Error::invalid(format!("gamma0 must lie in [0,1], got {}", self.gamma0)));
        }
        if self.l_max == 0 || self.srocr_max_iter == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        Ok(())
    }
}

/// Every physical and algorithmic parameter of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub num_antennas: usize,
    pub num_elements: usize,
    pub users: Vec<UserSpec>,
    pub bs_position: [f64; 3],
    pub ris_position: [f64; 3],
    /// Maximum BS transmit power in watts.
    pub p_max: f64,
    /// Reference SNR in dB used to derive the noise power.
    pub snr_db: f64,
    /// Explicit noise power in watts; overrides `snr_db` when set.
    pub noise_power: Option<f64>,
    pub carrier_ghz: f64,
    /// Linear Rician factor of the BS→surface link.
    pub rician_factor_g: f64,
    /// Linear Rician factor of the surface→user links.
    pub rician_factor_v: f64,
    pub slot_seconds: f64,
    /// Mean arrivals per user in bits/s/Hz.
    pub arrival_rates: Vec<f64>,
    /// Queue lengths at slot 0; also the weights of single-slot experiments.
    pub initial_queues: Vec<f64>,
    pub protocol: Protocol,
    pub params: AlgorithmParams,
}

impl Default for Scenario {
    /// Two users on opposite sides of a 20-element surface served by a
    /// 4-antenna BS at 2 GHz.
    fn default() -> Self {
        let rician = 10f64.powf(0.3);
        Self {
            num_antennas: 4,
            num_elements: 20,
            users: vec![
                UserSpec {
                    id: 0,
                    side: Side::Reflection,
                    position: [50.0, 250.0, 0.0],
                },
                UserSpec {
                    id: 1,
                    side: Side::Transmission,
                    position: [-50.0, 250.0, 0.0],
                },
            ],
            bs_position: [250.0, 0.0, 22.0],
            ris_position: [0.0, 250.0, 10.0],
            p_max: 40.0,
            snr_db: 5.0,
            noise_power: None,
            carrier_ghz: 2.0,
            rician_factor_g: rician,
            rician_factor_v: rician,
            slot_seconds: 1e-3,
            arrival_rates: vec![2.0, 6.0],
            initial_queues: vec![2.0, 6.0],
            protocol: Protocol::Es,
            params: AlgorithmParams::default(),
        }
    }
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn sides(&self) -> Vec<Side> {
        self.users.iter().map(|u| u.side).collect()
    }

    /// Users located on `side`, in id order.
    pub fn users_on(&self, side: Side) -> Vec<usize> {
        self.users
            .iter()
            .enumerate()
            .filter(|(_, u)| u.side == side)
            .map(|(k, _)| k)
            .collect()
    }

    /// Checks every structural invariant of the scenario.
    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::invalid("num_antennas must be at least 1"));
        }
        if self.num_elements == 0 {
            return Err(Error::invalid("num_elements must be at least 1"));
        }
        if self.users.is_empty() {
            return Err(Error::invalid("at least one user is required"));
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.id != k {
                return Err(Error::invalid(format!(
                    "user ids must be 0..K in order; entry {k} has id {}",
                    u.id
                )));
            }
            if u.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("user {k} position is not finite")));
            }
        }
        let positive = [
            ("p_max", self.p_max),
            ("carrier_ghz", self.carrier_ghz),
            ("slot_seconds", self.slot_seconds),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(n) = self.noise_power {
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::invalid(format!("noise_power must be positive, got {n}")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        for (name, v) in [
            ("rician_factor_g", self.rician_factor_g),
            ("rician_factor_v", self.rician_factor_v),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let k = self.num_users();
        if self.arrival_rates.len() != k {
            return Err(Error::Dimension {
                context: "arrival_rates",
                expected: k,
                found: self.arrival_rates.len(),
            });
        }
        if self.initial_queues.len() != k {
            return Err(Error::Dimension {
                context: "initial_queues",
                expected: k,
                found: self.initial_queues.len(),
            });
        }
        if self.arrival_rates.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("arrival rates must be finite and nonnegative"));
        }
        if self.initial_queues.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::invalid("initial queues must be finite and nonnegative"));
        }
        if matches!(self.protocol, Protocol::Es | Protocol::Ms) && k >= 2 {
            for side in Side::BOTH {
                if self.users_on(side).is_empty() {
                    return Err(Error::invalid(format!(
                        "{:?} protocol with {k} users needs users on both sides; none on {side:?}",
                        self.protocol
                    )));
                }
            }
        }
        let all = [self.bs_position, self.ris_position];
        if all[0] == all[1] || self.users.iter().any(|u| u.position == self.ris_position) {
            return Err(Error::invalid("positions must be distinct from the surface position"));
        }
        self.params.validate()
    }
}
