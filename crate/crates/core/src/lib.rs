//! Queue-aware STAR-RIS assisted NOMA downlink optimization.
//!
//! Per slot, the BS picks precoders, surface coefficients and a SIC decoding
//! order maximizing the queue-weighted sum rate (QWSR); queues then evolve
//! with the realized rates. The crate contains the system model, a channel
//! generator, the queue dynamics, an embedded interior-point conic solver,
//! the ES/MS/TS optimization algorithms with their baselines, and an
//! experiment harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix it to `f64`, which the solver tolerances assume.

pub mod channel;
pub mod conic;
pub mod error;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod queueing;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{DecodingOrder, Protocol, Scenario, Side, UserSpec};
pub use scalar::Scalar;

/// Default real scalar.
pub type Real = f64;
pub type Complex = scalar::Cx<f64>;
pub type Channel = model::ChannelRealization<f64>;
pub type Star = model::StarConfig<f64>;
pub type Solution = model::BeamformingSolution<f64>;
pub type Queues = queueing::QueueState<f64>;
pub type Problem = conic::ConicProblem<f64>;
