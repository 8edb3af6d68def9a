use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContactRecord, GraphError, TemporalGraph, DEFAULT_DELTA_T_SECONDS};
use crate::seeding::SeedStream;

/// Random-room mobility: every person is present every epoch, picks a room
/// uniformly at random and stays there for `dwell_epochs` epochs before
/// picking again. Each person's dwell cycle starts at a random phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub persons: u32,
    pub rooms: u32,
    pub epochs: u32,
    #[serde(default = "default_dwell")]
    pub dwell_epochs: u32,
    #[serde(default = "default_delta_t")]
    pub delta_t_seconds: u32,
}

fn default_dwell() -> u32 {
    1
}

fn default_delta_t() -> u32 {
    DEFAULT_DELTA_T_SECONDS
}

impl SyntheticSpec {
    pub fn new(persons: u32, rooms: u32, epochs: u32, dwell_epochs: u32) -> Self {
        Self { persons, rooms, epochs, dwell_epochs, delta_t_seconds: DEFAULT_DELTA_T_SECONDS }
    }
}

fn width(n: u32) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

impl TemporalGraph {
    pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Self, GraphError> {
        if spec.persons > 0 && spec.rooms == 0 {
            return Err(GraphError::InvalidSpec("persons need at least one room".into()));
        }
        if spec.dwell_epochs == 0 {
            return Err(GraphError::InvalidSpec("dwell_epochs must be at least 1".into()));
        }
        if spec.delta_t_seconds == 0 {
            return Err(GraphError::InvalidSpec("delta_t_seconds must be positive".into()));
        }
        let pw = width(spec.persons);
        let rw = width(spec.rooms);
        let person_names: Vec<String> = (0..spec.persons).map(|i| format!("p{i:0pw$}")).collect();
        let room_names: Vec<String> = (0..spec.rooms).map(|i| format!("room{i:0rw$}")).collect();

        let mut rng = SeedStream::new(seed).rng();
        let mut phase = Vec::with_capacity(spec.persons as usize);
        let mut current = Vec::with_capacity(spec.persons as usize);
        for _ in 0..spec.persons {
            phase.push(rng.random_range(0..spec.dwell_epochs));
            current.push(rng.random_range(0..spec.rooms));
        }

        let mut records = Vec::with_capacity(spec.persons as usize * spec.epochs as usize);
        for epoch in 0..spec.epochs {
            for p in 0..spec.persons as usize {
                if epoch > 0 && (epoch + phase[p]) % spec.dwell_epochs == 0 {
                    current[p] = rng.random_range(0..spec.rooms);
                }
                records.push(ContactRecord {
                    epoch,
                    person: person_names[p].clone(),
                    room: room_names[current[p] as usize].clone(),
                });
            }
        }
        let numbered = records.into_iter().enumerate().map(|(i, r)| (i + 1, r));
        Self::build(numbered, room_names.iter().cloned(), spec.delta_t_seconds)
    }
}
