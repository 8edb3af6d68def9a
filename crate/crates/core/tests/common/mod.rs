//! Shared fixtures and the naive risk-update oracle.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Normal};
use riskscore::graph::{ContactRecord, TemporalGraph};
use riskscore::risk::{ExposureModel, RiskState, WeightModel};
use riskscore::seeding::{tag, SeedStream};

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// At most 10 persons, at most 10 epochs, 1 to 3 rooms, random absences.
pub fn random_small_graph(seed: u64) -> TemporalGraph {
    let mut rng = SeedStream::new(seed).rng();
    let persons = rng.random_range(1..=10);
    let epochs = rng.random_range(1..=10);
    let rooms = rng.random_range(1..=3);
    let mut records = Vec::new();
    for epoch in 0..epochs {
        for p in 0..persons {
            if rng.random_bool(0.8) {
                records.push(ContactRecord::new(epoch, format!("p{p}"), format!("r{}", rng.random_range(0..rooms))));
            }
        }
    }
    // keep epoch range and person set fixed even if the last epoch came out empty
    if !records.iter().any(|r| r.epoch == epochs - 1) {
        records.push(ContactRecord::new(epochs - 1, "p0", "r0"));
    }
    TemporalGraph::from_records(records, 20).unwrap()
}

pub fn random_states(graph: &TemporalGraph, seed: u64) -> Vec<RiskState<f64>> {
    let mut rng = SeedStream::new(seed).rng();
    (0..graph.person_count())
        .map(|_| {
            let infected = rng.random_bool(0.3);
            RiskState {
                r: if infected { 2.0 } else { rng.random_range(0.0..3.0) },
                v: rng.random_range(0.0..=1.0),
                officially_infected: infected,
            }
        })
        .collect()
}

fn normal(rng: &mut impl Rng, mu: f64, sigma: f64) -> f64 {
    Normal::new(mu, sigma).unwrap().sample(rng)
}

/// Re-evaluates the risk recursion person by person straight from the record
/// list, sharing only the random-stream addressing with the library.
pub fn naive_step(
    graph: &TemporalGraph,
    prev: &[RiskState<f64>],
    epoch: u32,
    exposure: &ExposureModel<f64>,
    weight: &WeightModel<f64>,
    seed: SeedStream,
    pin: bool,
) -> Vec<RiskState<f64>> {
    let epoch_seed = seed.child(&[u64::from(epoch)]);
    let records: Vec<ContactRecord> = graph.records().filter(|r| r.epoch == epoch).collect();
    let index_of = |name: &str| graph.persons().iter().position(|p| p == name).unwrap();

    let weight_of = |j: usize| -> f64 {
        match *weight {
            WeightModel::Constant { value } => value,
            WeightModel::SampledNormal { mu, sigma } => {
                normal(&mut epoch_seed.child(&[tag::WEIGHT, j as u64]).rng(), mu, sigma).clamp(0.0, 1.0)
            }
        }
    };

    (0..graph.person_count())
        .map(|i| {
            let name = &graph.persons()[i];
            let room = records.iter().find(|r| &r.person == name).map(|r| r.room.clone());
            let mut neighbors: Vec<usize> = match &room {
                Some(room) => records
                    .iter()
                    .filter(|r| &r.room == room && &r.person != name)
                    .map(|r| index_of(&r.person))
                    .collect(),
                None => Vec::new(),
            };
            neighbors.sort_unstable();
            let mut rng = epoch_seed.child(&[tag::EXPOSURE, i as u64]).rng();
            let terms: Vec<(f64, f64)> = neighbors
                .iter()
                .map(|&j| {
                    let e = match *exposure {
                        ExposureModel::SampledNormal { mu, sigma } => normal(&mut rng, mu, sigma).max(0.0),
                        ExposureModel::Constant { value } => value,
                        ExposureModel::Analytic { delta_t, pathogen_rate } => delta_t * pathogen_rate,
                        ExposureModel::RssiMapped => unreachable!(),
                    };
                    (weight_of(j), e + prev[j].r)
                })
                .collect();
            let weighted: f64 = terms.iter().map(|(w, x)| w * x).sum();
            let total_weight: f64 = terms.iter().map(|(w, _)| w).sum();
            let mut r = (prev[i].v * prev[i].r + weighted) / (1.0 + total_weight);
            if pin && prev[i].officially_infected {
                r = r.max(2.0);
            }
            RiskState { r, ..prev[i] }
        })
        .collect()
}
