//! Simulator-vs-master-equation cross-checks on exactly solvable lattices.

use rayon::prelude::*;
use ssep::catalog::ProfileFn;
use ssep::dynamics::{sample_initial, simulate, BoundaryProfile, SimParams, SimTables};
use ssep::geometry::{LatticeSpec, MappingParams};
use ssep::master::{build_generator_from_tables, evolve, stationary, ExactDistribution};
use ssep::measures::ProductMeasure;
use ssep::rng::replica_rng;

fn params(d: usize, n: usize, theta: f64, c: f64, g: &str, horizon: f64, times: &[f64]) -> SimParams<f64> {
    SimParams::new(
        LatticeSpec::new(d, n).unwrap(),
        MappingParams::new(theta, c).unwrap(),
        BoundaryProfile::new(ProfileFn::parse(g).unwrap(), 0.05, d).unwrap(),
        horizon,
        times.to_vec(),
        7,
    )
    .unwrap()
}

/// Empirical state frequencies over the replica ensemble at each snapshot.
fn mc_state_frequencies(
    params: &SimParams<f64>,
    tables: &SimTables<f64>,
    initial: &ProductMeasure<f64>,
    replicas: u64,
    seed: u64,
) -> Vec<ExactDistribution<f64>> {
    let sites = params.lattice.site_count();
    let counts = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let eta0 = sample_initial(initial, &mut rng);
            simulate(params, tables, eta0, &mut rng)
                .unwrap()
                .iter()
                .map(|s| s.config.as_state().unwrap())
                .collect::<Vec<u64>>()
        })
        .fold(
            || vec![vec![0u64; 1 << sites]; params.snapshot_times.len()],
            |mut acc, states| {
                for (k, &s) in states.iter().enumerate() {
                    acc[k][s as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![vec![0u64; 1 << sites]; params.snapshot_times.len()],
            |mut a, b| {
                for (va, vb) in a.iter_mut().zip(&b) {
                    for (x, y) in va.iter_mut().zip(vb) {
                        *x += y;
                    }
                }
                a
            },
        );
    counts
        .iter()
        .map(|c| ExactDistribution::from_counts(c).unwrap())
        .collect()
}

#[test]
fn monte_carlo_matches_exact_law_in_total_variation() {
    // d=2, n=3, theta=1, non-constant g: ensemble frequencies against the
    // uniformized master equation at two times.
    let times = [0.05, 0.2];
    let p = params(2, 3, 1.0, 1.0, "affine(0.25,0.3,0.2)", 0.2, &times);
    let tables = SimTables::new(&p).unwrap();
    let initial = ProductMeasure::constant(4, 0.5).unwrap();
    let q = build_generator_from_tables(&tables).unwrap();
    let mu0 = ExactDistribution::from_product(&initial);

    let freqs = mc_state_frequencies(&p, &tables, &initial, 100_000, 99);
    for (k, &t) in times.iter().enumerate() {
        let exact = evolve(&q, &mu0, t).unwrap();
        let tv = freqs[k].total_variation(&exact);
        println!("oracle TV at t={t}: {tv:.5}");
        assert!(tv < 0.01, "t={t}: tv {tv}");
    }
}

#[test]
fn constant_g_product_measure_is_statistically_stationary() {
    // Start from Bernoulli(alpha) with g = alpha constant: the occupancy
    // marginal at t = 1 stays alpha within Monte Carlo error.
    let alpha = 0.35;
    let p = params(2, 3, 1.0, 1.0, "constant(0.35)", 1.0, &[1.0]);
    let tables = SimTables::new(&p).unwrap();
    let initial = ProductMeasure::constant(4, alpha).unwrap();
    let replicas = 100_000u64;
    let occupied: u64 = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(123, r);
            let eta0 = sample_initial(&initial, &mut rng);
            let snaps = simulate(&p, &tables, eta0, &mut rng).unwrap();
            snaps[0].config.ones() as u64
        })
        .sum();
    let mean = occupied as f64 / (replicas as f64 * 4.0);
    let se = (alpha * (1.0 - alpha) / (replicas as f64 * 4.0)).sqrt();
    println!("stationary marginal: {mean:.5} (alpha {alpha}, se {se:.5})");
    assert!((mean - alpha).abs() < 4.0 * se, "mean {mean} alpha {alpha}");

    // and exactly: the product measure is stationary for the generator
    let q = build_generator_from_tables(&tables).unwrap();
    let pi = stationary(&q).unwrap();
    let product = ExactDistribution::from_product(&initial);
    assert!(pi.total_variation(&product) < 1e-10);
}

#[test]
fn ensemble_against_exact_marginals_at_n4() {
    // coarser check on the 512-state lattice: site marginals of the
    // ensemble match the exact law within binomial error
    let times = [0.1];
    let p = params(2, 4, 1.0, 2.0, "affine(0.3,0.35,0)", 0.1, &times);
    let tables = SimTables::new(&p).unwrap();
    let initial = ProductMeasure::constant(9, 0.5).unwrap();
    let q = build_generator_from_tables(&tables).unwrap();
    let exact = evolve(&q, &ExactDistribution::from_product(&initial), 0.1).unwrap();
    let want = exact.marginals();

    let replicas = 20_000u64;
    let freqs = mc_state_frequencies(&p, &tables, &initial, replicas, 4242);
    let got = freqs[0].marginals();
    for (i, (w, g)) in want.iter().zip(&got).enumerate() {
        let se = (w * (1.0 - w) / replicas as f64).sqrt();
        assert!(
            (w - g).abs() < 4.0 * se,
            "site {i}: exact {w:.4} mc {g:.4} se {se:.5}"
        );
    }
}
