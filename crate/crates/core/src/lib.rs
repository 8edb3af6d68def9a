//! Decentralized infection risk scores over room-level temporal contact
//! networks.
//!
//! * [`graph`]: temporal contact graph, dataset ingestion, occupancy statistics.
//! * [`risk`]: the per-person risk score recursion.
//! * [`epidemic`]: stochastic SI/SIS on the contact graph and the
//!   homogeneous-mixing reference ODE.
//! * [`codec`]: the 27-byte risk beacon payload and RSSI bucketing.
//! * [`metrics`]: infected fraction, median-risk ratio, alerted fraction,
//!   region scores and run averaging.
//! * [`experiment`]: the seeded (β, γ, I₀) sweep runner.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the experiment runner uses.

// NaN must fail range checks, hence `!(x >= 0)` rather than `x < 0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod epidemic;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod risk;
pub mod scalar;
pub mod seeding;

pub use scalar::Scalar;

pub type RiskState = risk::RiskState<f64>;
pub type NeighborContribution = risk::NeighborContribution<f64>;
pub type ExposureModel = risk::ExposureModel<f64>;
pub type WeightModel = risk::WeightModel<f64>;
pub type VulnerabilityModel = risk::VulnerabilityModel<f64>;
pub type EpidemicParams = epidemic::EpidemicParams<f64>;
pub type OdeState = epidemic::OdeState<f64>;
pub type MetricsFrame = metrics::MetricsFrame<f64>;
pub type RunSummary = metrics::RunSummary<f64>;
pub type RunSettings = experiment::RunSettings<f64>;

pub type RiskState32 = risk::RiskState<f32>;
pub type EpidemicParams32 = epidemic::EpidemicParams<f32>;
