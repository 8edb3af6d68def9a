//! SI / SIS dynamics on the contact network.
//!
//! A susceptible person with `k` infected co-occupants becomes infected with
//! probability `1 - (1 - β)^k`; an infected person recovers with probability
//! `γ` (SIS only). Both transitions read the epoch-start compartments.

pub mod ode;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, PersonId, TemporalGraph};
use crate::risk::{RiskState, INFECTED_RISK};
use crate::scalar::Scalar;
use crate::seeding::{tag, SeedStream};

pub use ode::{ode_reference, OdePoint, OdeState};

#[derive(Debug, Error)]
pub enum EpidemicError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("compartment map covers {got} persons, expected {expected}")]
    StateMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    Susceptible,
    Infected,
}

impl Compartment {
    pub fn is_infected(self) -> bool {
        self == Compartment::Infected
    }

    pub fn label(self) -> &'static str {
        match self {
            Compartment::Susceptible => "S",
            Compartment::Infected => "I",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EpidemicModel {
    Si,
    Sis,
}

/// Per-contact transmission probability `beta`, per-person recovery
/// probability `gamma` (both per epoch) and initial infected fraction `i0`.
/// `gamma == 0` is the SI model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams<T> {
    pub beta: T,
    pub gamma: T,
    pub i0: T,
}

impl<T: Scalar> EpidemicParams<T> {
    pub fn new(beta: T, gamma: T, i0: T) -> Result<Self, EpidemicError> {
        let unit = |name: &str, x: T| {
            if x >= T::zero() && x <= T::one() {
                Ok(())
            } else {
                Err(EpidemicError::InvalidParameter(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        unit("beta", beta)?;
        unit("gamma", gamma)?;
        unit("i0", i0)?;
        Ok(Self { beta, gamma, i0 })
    }

    pub fn model(&self) -> EpidemicModel {
        if self.gamma == T::zero() {
            EpidemicModel::Si
        } else {
            EpidemicModel::Sis
        }
    }
}

/// Number of initially infected persons: `i0 · n` rounded half away from zero.
pub fn initial_infected_count(persons: usize, i0: f64) -> usize {
    ((i0 * persons as f64).round() as usize).min(persons)
}

/// Marks `initial_infected_count(persons, i0)` persons infected, chosen uniformly without replacement.
pub fn seed_infections<R: Rng + ?Sized>(
    persons: usize,
    i0: f64,
    rng: &mut R,
) -> Result<Vec<Compartment>, EpidemicError> {
    if !(0.0..=1.0).contains(&i0) {
        return Err(EpidemicError::InvalidParameter(format!("i0 must lie in [0, 1], got {i0}")));
    }
    let mut out = vec![Compartment::Susceptible; persons];
    for idx in index::sample(rng, persons, initial_infected_count(persons, i0)) {
        out[idx] = Compartment::Infected;
    }
    Ok(out)
}

/// One synchronous SI/SIS transition at `epoch`. Each person draws from its own
/// stream, so the outcome does not depend on thread count.
pub fn step_epidemic<T: Scalar>(
    graph: &TemporalGraph,
    compartments: &[Compartment],
    params: &EpidemicParams<T>,
    epoch: u32,
    seed: SeedStream,
) -> Result<Vec<Compartment>, EpidemicError> {
    if compartments.len() != graph.person_count() {
        return Err(EpidemicError::StateMismatch { expected: graph.person_count(), got: compartments.len() });
    }
    let snapshot = graph.snapshot(epoch)?;
    let beta = params.beta.as_f64();
    let gamma = params.gamma.as_f64();
    let epoch_seed = seed.child(&[u64::from(epoch)]);

    let next = (0..compartments.len() as u32)
        .into_par_iter()
        .map(|p| {
            let person = PersonId(p);
            let mut rng = epoch_seed.child(&[tag::EPIDEMIC, u64::from(p)]).rng();
            match compartments[person.index()] {
                Compartment::Susceptible => {
                    let k = snapshot.neighbors(person).filter(|n| compartments[n.index()].is_infected()).count();
                    if k == 0 || beta == 0.0 {
                        return Compartment::Susceptible;
                    }
                    let p_infect = 1.0 - (1.0 - beta).powi(k as i32);
                    if p_infect >= 1.0 || rng.random::<f64>() < p_infect {
                        Compartment::Infected
                    } else {
                        Compartment::Susceptible
                    }
                }
                Compartment::Infected => {
                    if gamma > 0.0 && rng.random::<f64>() < gamma {
                        Compartment::Susceptible
                    } else {
                        Compartment::Infected
                    }
                }
            }
        })
        .collect();
    Ok(next)
}

/// Syncs official infection flags with compartments: newly infected persons
/// are flagged and set to the infected score, recovered persons are unflagged
/// and keep their current score. Returns the number of new tags.
pub fn tag_infections<T: Scalar>(
    compartments: &[Compartment],
    states: &mut [RiskState<T>],
) -> Result<usize, EpidemicError> {
    if compartments.len() != states.len() {
        return Err(EpidemicError::StateMismatch { expected: compartments.len(), got: states.len() });
    }
    let mut tagged = 0;
    for (state, &c) in states.iter_mut().zip(compartments) {
        match (c, state.officially_infected) {
            (Compartment::Infected, false) => {
                state.officially_infected = true;
                state.r = T::lit(INFECTED_RISK);
                tagged += 1;
            }
            (Compartment::Susceptible, true) => state.officially_infected = false,
            _ => {}
        }
    }
    Ok(tagged)
}

pub fn infected_count(compartments: &[Compartment]) -> usize {
    compartments.iter().filter(|c| c.is_infected()).count()
}
