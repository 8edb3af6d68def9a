mod common;

use proptest::prelude::*;
use riskscore::graph::{PersonId, SyntheticSpec, TemporalGraph};
use riskscore::risk::{
    step_population, update_risk, ExposureModel, NeighborContribution, RiskOptions, RiskState, WeightModel,
};
use riskscore::seeding::SeedStream;

fn arb_state() -> impl Strategy<Value = RiskState<f64>> {
    (0.0f64..50.0, 0.0f64..=1.0).prop_map(|(r, v)| RiskState { r, v, officially_infected: false })
}

fn arb_contributions() -> impl Strategy<Value = Vec<NeighborContribution<f64>>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..5.0, 0.0f64..50.0), 0..12).prop_map(|terms| {
        terms
            .into_iter()
            .enumerate()
            .map(|(i, (weight, exposure, prev_risk))| NeighborContribution {
                neighbor: PersonId(i as u32),
                weight,
                exposure,
                prev_risk,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn output_is_non_negative(prev in arb_state(), cs in arb_contributions()) {
        prop_assert!(update_risk(&prev, &cs) >= 0.0);
    }

    #[test]
    fn no_neighbors_is_pure_decay(prev in arb_state()) {
        prop_assert_eq!(update_risk(&prev, &[]), prev.v * prev.r);
    }

    #[test]
    fn monotone_in_exposure(prev in arb_state(), cs in arb_contributions(), idx in any::<prop::sample::Index>(), bump in 0.0f64..3.0) {
        prop_assume!(!cs.is_empty());
        let k = idx.index(cs.len());
        let mut more = cs.clone();
        more[k].exposure += bump;
        prop_assert!(update_risk(&prev, &more) >= update_risk(&prev, &cs));
    }

    #[test]
    fn bounded_by_largest_term(prev in arb_state(), cs in arb_contributions()) {
        let bound = cs.iter().map(|c| c.exposure + c.prev_risk).fold(prev.v * prev.r, f64::max);
        prop_assert!(update_risk(&prev, &cs) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn order_independent_bit_for_bit(prev in arb_state(), cs in arb_contributions(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = cs.clone();
        shuffled.shuffle(&mut SeedStream::new(seed).rng());
        prop_assert_eq!(update_risk(&prev, &shuffled).to_bits(), update_risk(&prev, &cs).to_bits());
    }

    #[test]
    fn matches_naive_oracle_on_small_graphs(graph_seed in any::<u64>(), sim_seed in any::<u64>()) {
        let g = common::random_small_graph(graph_seed);
        let exposure = ExposureModel::SampledNormal { mu: 0.5, sigma: 0.1 };
        let weight = WeightModel::SampledNormal { mu: 0.7, sigma: 0.3 };
        let initial = common::random_states(&g, graph_seed ^ 0xabc);
        let seed = SeedStream::new(sim_seed);
        let mut fast = initial.clone();
        let mut slow = initial;
        for epoch in 0..g.epoch_count() as u32 {
            fast = step_population(&g, &fast, epoch, &exposure, &weight, seed, RiskOptions::default()).unwrap();
            slow = common::naive_step(&g, &slow, epoch, &exposure, &weight, seed, true);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!(common::rel_err(a.r, b.r) <= 1e-12, "{} vs {}", a.r, b.r);
            }
        }
    }
}

#[test]
fn independent_of_worker_count() {
    let g = TemporalGraph::generate_synthetic(&SyntheticSpec::new(60, 3, 12, 2), 4).unwrap();
    let states = common::random_states(&g, 17);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut s = states.clone();
            for epoch in 0..g.epoch_count() as u32 {
                s = step_population(
                    &g,
                    &s,
                    epoch,
                    &ExposureModel::default(),
                    &WeightModel::SampledNormal { mu: 0.5, sigma: 0.2 },
                    SeedStream::new(99),
                    RiskOptions::default(),
                )
                .unwrap();
            }
            s
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn f32_population_step_tracks_f64() {
    let g = TemporalGraph::generate_synthetic(&SyntheticSpec::new(20, 2, 6, 2), 1).unwrap();
    let s64 = common::random_states(&g, 5);
    let s32: Vec<RiskState<f32>> =
        s64.iter().map(|s| RiskState { r: s.r as f32, v: s.v as f32, officially_infected: s.officially_infected }).collect();
    let (mut a, mut b) = (s64, s32);
    for epoch in 0..g.epoch_count() as u32 {
        a = step_population(&g, &a, epoch, &ExposureModel::default(), &WeightModel::default(), SeedStream::new(3), RiskOptions::default())
            .unwrap();
        b = step_population(&g, &b, epoch, &ExposureModel::default(), &WeightModel::default(), SeedStream::new(3), RiskOptions::default())
            .unwrap();
    }
    for (x, y) in a.iter().zip(&b) {
        assert!(common::rel_err(x.r, f64::from(y.r)) < 1e-4);
    }
}
