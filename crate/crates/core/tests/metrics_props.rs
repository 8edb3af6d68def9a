use proptest::prelude::*;
use riskscore::epidemic::Compartment;
use riskscore::graph::{ContactRecord, PersonId, TemporalGraph};
use riskscore::metrics::{
    aggregate_runs, alerted_fraction, median_ratio, region_score, MedianRatio, MetricsFrame, Regions,
};
use riskscore::risk::RiskState;

fn states(rs: &[f64]) -> Vec<RiskState<f64>> {
    rs.iter().map(|&r| RiskState { r, v: 0.5, officially_infected: false }).collect()
}

proptest! {
    #[test]
    fn region_score_is_translation_consistent(rs in prop::collection::vec(0.0f64..10.0, 1..20), c in 0.0f64..5.0) {
        let members: Vec<PersonId> = (0..rs.len() as u32).map(PersonId).collect();
        let base = region_score(&states(&rs), &members).unwrap();
        let shifted: Vec<f64> = rs.iter().map(|r| r + c).collect();
        let moved = region_score(&states(&shifted), &members).unwrap();
        prop_assert!((moved - (base + c)).abs() < 1e-9);
        let lo = rs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
    }

    #[test]
    fn alerted_is_monotone_in_threshold(rs in prop::collection::vec(0.0f64..4.0, 1..30), a in 0.01f64..4.0, b in 0.01f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s = states(&rs);
        prop_assert!(alerted_fraction(&s, hi) <= alerted_fraction(&s, lo));
    }

    #[test]
    fn ratio_zero_whenever_nobody_infected(rs in prop::collection::vec(0.0f64..4.0, 0..30)) {
        let comps = vec![Compartment::Susceptible; rs.len()];
        prop_assert_eq!(median_ratio(&states(&rs), &comps), MedianRatio::Finite(0.0));
    }

    #[test]
    fn aggregating_identical_runs_is_identity(vals in prop::collection::vec((0.0f64..1.0, 0.0f64..5.0), 1..10), copies in 1usize..8) {
        let series: Vec<MetricsFrame<f64>> = vals
            .iter()
            .enumerate()
            .map(|(t, &(f, r))| MetricsFrame {
                epoch: t as u32,
                susceptible: 7,
                infected: 3,
                infected_fraction: f,
                median_r_infected: Some(r),
                median_r_susceptible: Some(r + 1.0),
                median_ratio: MedianRatio::Finite(r),
                alerted_fraction: f,
                region_scores: vec![Some(r), None],
            })
            .collect();
        let summary = aggregate_runs(&vec![series.clone(); copies], 0).unwrap();
        for (s, f) in summary.frames.iter().zip(&series) {
            prop_assert_eq!(s.infected_fraction, f.infected_fraction);
            prop_assert_eq!(s.median_ratio, f.median_ratio.finite());
            prop_assert_eq!(s.median_r_infected, f.median_r_infected);
            prop_assert_eq!(&s.region_scores, &f.region_scores);
        }
    }
}

#[test]
fn room_regions_match_brute_force_means() {
    let g = TemporalGraph::from_records(
        vec![
            ContactRecord::new(0, "a", "x"),
            ContactRecord::new(0, "b", "x"),
            ContactRecord::new(0, "c", "y"),
            ContactRecord::new(1, "a", "y"),
            ContactRecord::new(1, "c", "y"),
        ],
        20,
    )
    .unwrap();
    let s = states(&[1.0, 2.5, 4.0]);
    for epoch in 0..2u32 {
        let scores = Regions::Rooms.scores(&g, epoch, &s);
        for (room_idx, room) in g.rooms().iter().enumerate() {
            let members: Vec<f64> = g
                .records()
                .filter(|r| r.epoch == epoch && &r.room == room)
                .map(|r| s[g.person_id(&r.person).unwrap().index()].r)
                .collect();
            let brute = (!members.is_empty()).then(|| members.iter().sum::<f64>() / members.len() as f64);
            assert_eq!(scores[room_idx], brute);
        }
    }
}
