//! Per-person infection risk scores.
//!
//! A person's new score is the normalized combination of their own retained
//! score and every co-located neighbor's weighted exposure plus that
//! neighbor's previous score:
//!
//! ```text
//! r_i(t) = (v_i * r_i(t-1) + Σ_j w_j * (E_ij + r_j(t-1))) / (1 + Σ_j w_j)
//! ```
//!
//! Updates are synchronous: every score at epoch `t` reads only scores from
//! epoch `t-1`.

use std::cmp::Ordering;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::rssi_to_weight;
use crate::epidemic::Compartment;
use crate::graph::{GraphError, PersonId, TemporalGraph};
use crate::scalar::Scalar;
use crate::seeding::{tag, SeedStream};

/// Score of a susceptible person at start-up.
pub const BASELINE_RISK: f64 = 1.0;
/// Score assigned when a person is officially tagged infected.
pub const INFECTED_RISK: f64 = 2.0;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("state map covers {got} persons, graph has {expected}")]
    StateMismatch { expected: usize, got: usize },
    #[error("rssi-mapped exposure needs an RSSI reading")]
    MissingRssi,
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("decay never reaches the floor when vulnerability is 1")]
    Unbounded,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskState<T> {
    pub r: T,
    pub v: T,
    pub officially_infected: bool,
}

impl<T: Scalar> RiskState<T> {
    pub fn susceptible(vulnerability: T) -> Self {
        Self { r: T::lit(BASELINE_RISK), v: vulnerability, officially_infected: false }
    }
}

/// One neighbor's term in the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborContribution<T> {
    pub neighbor: PersonId,
    pub weight: T,
    pub exposure: T,
    pub prev_risk: T,
}

impl<T: Scalar> NeighborContribution<T> {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        let bits = |x: T| x.as_f64();
        self.neighbor
            .cmp(&other.neighbor)
            .then_with(|| bits(self.weight).total_cmp(&bits(other.weight)))
            .then_with(|| bits(self.exposure).total_cmp(&bits(other.exposure)))
            .then_with(|| bits(self.prev_risk).total_cmp(&bits(other.prev_risk)))
    }
}

/// Computes the next score. Contributions are summed in ascending neighbor
/// order whatever order they are passed in, so the result is bit-stable.
pub fn update_risk<T: Scalar>(prev: &RiskState<T>, contributions: &[NeighborContribution<T>]) -> T {
    let sorted = contributions.windows(2).all(|w| w[0].canonical_cmp(&w[1]) != Ordering::Greater);
    if sorted {
        weighted_update(prev, contributions)
    } else {
        let mut ordered = contributions.to_vec();
        ordered.sort_by(NeighborContribution::canonical_cmp);
        weighted_update(prev, &ordered)
    }
}

fn weighted_update<T: Scalar>(prev: &RiskState<T>, contributions: &[NeighborContribution<T>]) -> T {
    let mut numerator = prev.v * prev.r;
    let mut denominator = T::one();
    for c in contributions {
        numerator += c.weight * (c.exposure + c.prev_risk);
        denominator += c.weight;
    }
    numerator / denominator
}

/// Source of the per-neighbor exposure term `E_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ExposureModel<T> {
    /// `Δt × n`: seconds of contact times pathogens exhaled per second.
    Analytic { delta_t: T, pathogen_rate: T },
    /// `max(0, N(mu, sigma))`, drawn per contact per epoch.
    SampledNormal { mu: T, sigma: T },
    Constant { value: T },
    /// RSSI bucket value of the received advertisement.
    RssiMapped,
}

impl<T: Scalar> Default for ExposureModel<T> {
    fn default() -> Self {
        Self::SampledNormal { mu: T::lit(0.5), sigma: T::lit(0.1) }
    }
}

impl<T: Scalar> ExposureModel<T> {
    pub fn validate(&self) -> Result<(), RiskError> {
        match *self {
            Self::Analytic { delta_t, pathogen_rate } => {
                if !(delta_t >= T::zero()) || !(pathogen_rate >= T::zero()) {
                    return Err(RiskError::InvalidModel("analytic exposure needs Δt ≥ 0 and n ≥ 0".into()));
                }
            }
            Self::SampledNormal { mu, sigma } => check_normal(mu, sigma)?,
            Self::Constant { value } => {
                if !(value >= T::zero()) || !value.is_finite() {
                    return Err(RiskError::InvalidModel("constant exposure must be finite and ≥ 0".into()));
                }
            }
            Self::RssiMapped => {}
        }
        Ok(())
    }

    /// Draws one exposure value. `rssi_dbm` is only read in RSSI mode.
    pub fn exposure<R: Rng + ?Sized>(&self, rng: &mut R, rssi_dbm: Option<f64>) -> Result<T, RiskError> {
        match *self {
            Self::Analytic { delta_t, pathogen_rate } => Ok(delta_t * pathogen_rate),
            Self::SampledNormal { mu, sigma } => Ok(T::lit(sample_normal(rng, mu, sigma)?.max(0.0))),
            Self::Constant { value } => Ok(value),
            Self::RssiMapped => rssi_dbm.map(|rssi| T::lit(rssi_to_weight(rssi))).ok_or(RiskError::MissingRssi),
        }
    }
}

/// Source of the per-neighbor weight `w_j`. Sampled weights are clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WeightModel<T> {
    Constant { value: T },
    SampledNormal { mu: T, sigma: T },
}

impl<T: Scalar> Default for WeightModel<T> {
    fn default() -> Self {
        Self::Constant { value: T::one() }
    }
}

impl<T: Scalar> WeightModel<T> {
    pub fn validate(&self) -> Result<(), RiskError> {
        match *self {
            Self::Constant { value } => {
                if !(value >= T::zero() && value <= T::one()) {
                    return Err(RiskError::InvalidModel("constant weight must lie in [0, 1]".into()));
                }
                Ok(())
            }
            Self::SampledNormal { mu, sigma } => check_normal(mu, sigma),
        }
    }

    pub fn weight<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T, RiskError> {
        match *self {
            Self::Constant { value } => Ok(value),
            Self::SampledNormal { mu, sigma } => Ok(T::lit(sample_normal(rng, mu, sigma)?.clamp(0.0, 1.0))),
        }
    }
}

/// Per-person vulnerability, drawn once at initialization and clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VulnerabilityModel<T> {
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> Default for VulnerabilityModel<T> {
    fn default() -> Self {
        Self { mu: T::lit(0.5), sigma: T::lit(0.2) }
    }
}

impl<T: Scalar> VulnerabilityModel<T> {
    pub fn validate(&self) -> Result<(), RiskError> {
        check_normal(self.mu, self.sigma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T, RiskError> {
        Ok(T::lit(sample_normal(rng, self.mu, self.sigma)?.clamp(0.0, 1.0)))
    }

    /// One vulnerability per person, each from its own stream.
    pub fn sample_population(&self, persons: usize, seed: SeedStream) -> Result<Vec<T>, RiskError> {
        (0..persons as u64)
            .map(|p| self.sample(&mut seed.child(&[tag::VULNERABILITY, p]).rng()))
            .collect()
    }
}

fn check_normal<T: Scalar>(mu: T, sigma: T) -> Result<(), RiskError> {
    if !mu.is_finite() || !sigma.is_finite() || sigma < T::zero() {
        return Err(RiskError::InvalidModel(format!("normal needs finite mu and sigma ≥ 0 (mu={mu}, sigma={sigma})")));
    }
    Ok(())
}

fn sample_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, mu: T, sigma: T) -> Result<f64, RiskError> {
    let dist = Normal::new(mu.as_f64(), sigma.as_f64()).map_err(|e| RiskError::InvalidModel(e.to_string()))?;
    Ok(dist.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskOptions {
    /// While flagged infected, the published score is `max(update, 2)`.
    pub pin_infected: bool,
}

impl Default for RiskOptions {
    fn default() -> Self {
        Self { pin_infected: true }
    }
}

/// Advances every person's score by one epoch.
///
/// `states` is indexed by [`PersonId`]. Weights are drawn once per person per
/// epoch (a property of the broadcaster); exposures per ordered pair from the
/// receiving person's stream, in ascending neighbor order. Persons absent from
/// the epoch get the no-neighbor update. The result does not depend on the
/// number of worker threads.
pub fn step_population<T: Scalar>(
    graph: &TemporalGraph,
    states: &[RiskState<T>],
    epoch: u32,
    exposure: &ExposureModel<T>,
    weight: &WeightModel<T>,
    seed: SeedStream,
    options: RiskOptions,
) -> Result<Vec<RiskState<T>>, RiskError> {
    if states.len() != graph.person_count() {
        return Err(RiskError::StateMismatch { expected: graph.person_count(), got: states.len() });
    }
    if matches!(exposure, ExposureModel::RssiMapped) {
        return Err(RiskError::MissingRssi);
    }
    let snapshot = graph.snapshot(epoch)?;
    let epoch_seed = seed.child(&[u64::from(epoch)]);

    let weights: Vec<T> = (0..states.len() as u64)
        .into_par_iter()
        .map(|p| weight.weight(&mut epoch_seed.child(&[tag::WEIGHT, p]).rng()))
        .collect::<Result<_, _>>()?;

    (0..states.len() as u32)
        .into_par_iter()
        .map(|p| {
            let person = PersonId(p);
            let prev = &states[person.index()];
            let mut contributions = Vec::new();
            if snapshot.room_of(person).is_some() {
                let mut rng = epoch_seed.child(&[tag::EXPOSURE, u64::from(p)]).rng();
                for neighbor in snapshot.neighbors(person) {
                    contributions.push(NeighborContribution {
                        neighbor,
                        weight: weights[neighbor.index()],
                        exposure: exposure.exposure(&mut rng, None)?,
                        prev_risk: states[neighbor.index()].r,
                    });
                }
            }
            let mut r = update_risk(prev, &contributions);
            if options.pin_infected && prev.officially_infected {
                r = r.max(T::lit(INFECTED_RISK));
            }
            Ok(RiskState { r, ..*prev })
        })
        .collect()
}

/// Smallest number of isolated epochs after which `r * v^k <= floor`.
pub fn isolation_time_to_floor<T: Scalar>(r: T, v: T, floor: T) -> Result<u64, RiskError> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(RiskError::InvalidArgument(format!("risk must be finite and ≥ 0, got {r}")));
    }
    if !(floor > T::zero()) {
        return Err(RiskError::InvalidArgument(format!("floor must be positive, got {floor}")));
    }
    if !(v >= T::zero() && v <= T::one()) {
        return Err(RiskError::InvalidArgument(format!("vulnerability must lie in [0, 1], got {v}")));
    }
    if r <= floor {
        return Ok(0);
    }
    if v == T::one() {
        return Err(RiskError::Unbounded);
    }
    let state = RiskState { r, v, officially_infected: false };
    let mut current = state;
    let mut steps = 0u64;
    while current.r > floor {
        current.r = update_risk(&current, &[]);
        steps += 1;
    }
    Ok(steps)
}

/// Dumps one epoch of states as `epoch,person,r,v,compartment` rows.
pub fn write_state_csv<T: Scalar, W: Write>(
    out: W,
    graph: &TemporalGraph,
    epoch: u32,
    states: &[RiskState<T>],
    compartments: &[Compartment],
    header: bool,
) -> io::Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        writer.write_record(["epoch", "person", "r", "v", "compartment"])?;
    }
    for (idx, state) in states.iter().enumerate() {
        let compartment = compartments.get(idx).map(|c| c.label()).unwrap_or("");
        writer.write_record([
            epoch.to_string(),
            graph.person_name(PersonId(idx as u32)).to_owned(),
            state.r.to_string(),
            state.v.to_string(),
            compartment.to_owned(),
        ])?;
    }
    writer.flush()
}
