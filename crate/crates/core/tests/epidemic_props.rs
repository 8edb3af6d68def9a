use proptest::prelude::*;
use riskscore::epidemic::{
    infected_count, ode_reference, seed_infections, step_epidemic, Compartment, EpidemicParams,
};
use riskscore::graph::{ContactRecord, SyntheticSpec, TemporalGraph};
use riskscore::seeding::SeedStream;

fn run_chain(g: &TemporalGraph, params: &EpidemicParams<f64>, seed: u64) -> Vec<Vec<Compartment>> {
    let s = SeedStream::new(seed);
    let mut comps = seed_infections(g.person_count(), params.i0, &mut s.child(&[1]).rng()).unwrap();
    let mut out = vec![comps.clone()];
    for epoch in 0..g.epoch_count() as u32 {
        comps = step_epidemic(g, &comps, params, epoch, s.child(&[2])).unwrap();
        out.push(comps.clone());
    }
    out
}

fn graph() -> TemporalGraph {
    TemporalGraph::generate_synthetic(&SyntheticSpec::new(40, 4, 30, 3), 12).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn population_is_conserved(beta in 0.0f64..=1.0, gamma in 0.0f64..=1.0, i0 in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = graph();
        let params = EpidemicParams::new(beta, gamma, i0).unwrap();
        for comps in run_chain(&g, &params, seed) {
            prop_assert_eq!(comps.len(), g.person_count());
        }
    }

    #[test]
    fn si_is_monotone(beta in 0.0f64..=1.0, i0 in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = graph();
        let params = EpidemicParams::new(beta, 0.0, i0).unwrap();
        let chain = run_chain(&g, &params, seed);
        for w in chain.windows(2) {
            for (before, after) in w[0].iter().zip(&w[1]) {
                prop_assert!(!(before.is_infected() && !after.is_infected()));
            }
        }
    }

    #[test]
    fn zero_beta_never_infects(gamma in 0.0f64..=1.0, i0 in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = graph();
        let params = EpidemicParams::new(0.0, gamma, i0).unwrap();
        let chain = run_chain(&g, &params, seed);
        for w in chain.windows(2) {
            prop_assert!(infected_count(&w[1]) <= infected_count(&w[0]));
            for (before, after) in w[0].iter().zip(&w[1]) {
                prop_assert!(!(!before.is_infected() && after.is_infected()));
            }
        }
    }

    #[test]
    fn ode_conserves_mass(beta in 0.0f64..=1.0, gamma in 0.0f64..=1.0, i0 in 0.0f64..=1.0) {
        let params = EpidemicParams::new(beta, gamma, i0).unwrap();
        for p in ode_reference(&params, 30.0, 0.05).unwrap() {
            prop_assert!((p.state.s + p.state.i - 1.0).abs() <= 1e-9);
            prop_assert!(p.state.i >= -1e-12 && p.state.i <= 1.0 + 1e-12);
        }
    }
}

/// On a clique, homogeneous mixing holds. Per-epoch SI on `n` persons with
/// per-contact probability `b` gives `1 - (1-b)^(n i)` = `1 - exp(-β i)` with
/// `β = -n ln(1-b)`. The mean follows that discrete map closely; the
/// continuous logistic is looser since `i` is frozen within an epoch.
#[test]
fn clique_mean_tracks_ode() {
    use rayon::prelude::*;

    let n = 200usize;
    let epochs = 100u32;
    let records =
        (0..epochs).flat_map(|e| (0..n).map(move |p| ContactRecord::new(e, format!("p{p:03}"), "hall")));
    let g = TemporalGraph::from_records(records, 20).unwrap();
    let beta_ode = 0.1;
    let b = 1.0 - (-beta_ode / n as f64).exp();
    let params = EpidemicParams::new(b, 0.0, 0.1).unwrap();

    let runs = 200u64;
    let counts: Vec<Vec<usize>> = (0..runs)
        .into_par_iter()
        .map(|seed| run_chain(&g, &params, seed).iter().map(|c| infected_count(c)).collect())
        .collect();
    let mean: Vec<f64> = (0..=epochs as usize)
        .map(|t| counts.iter().map(|c| c[t] as f64).sum::<f64>() / (runs as f64 * n as f64))
        .collect();

    let ode = ode_reference(&EpidemicParams::new(beta_ode, 0.0, 0.1).unwrap(), f64::from(epochs), 0.01).unwrap();
    let mut map = 0.1;
    let (mut worst_ode, mut worst_map): (f64, f64) = (0.0, 0.0);
    for (t, m) in mean.iter().enumerate() {
        if t > 0 {
            map += (1.0 - map) * (1.0 - (-beta_ode * map).exp());
        }
        worst_ode = worst_ode.max((m - ode[t * 100].state.i).abs());
        worst_map = worst_map.max((m - map).abs());
    }
    assert!(worst_ode < 0.05, "max deviation from ode {worst_ode}");
    assert!(worst_map < 0.02, "max deviation from mean-field map {worst_map}");
}
