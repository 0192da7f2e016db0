//! Harness-level invariants that cut across modules.

use ssep::catalog::ProfileFn;
use ssep::harness::{run_convergence, ExperimentConfig};
use ssep::measures::reference_measure;
use ssep::pde::{solve, trapezoid_integral, BoundaryCondition, Grid};

#[test]
fn quadrature_self_check_on_catalog_functions() {
    // trapezoid at m and 2m agree within 1e-4 and match analytic values
    let cases: Vec<(ProfileFn<f64>, f64)> = vec![
        (ProfileFn::parse("constant(0.7)").unwrap(), 0.7),
        (ProfileFn::parse("affine(0.2,0.3,0.1)").unwrap(), 0.2 + 0.15 + 0.05),
        (
            ProfileFn::parse("cosine(1,0.5,0.25)").unwrap(),
            0.5, // integral of cos(pi u) over [0,1] vanishes
        ),
        (
            ProfileFn::parse("sine(2,0.5,0.25)").unwrap(),
            0.5 + 0.25 * 2.0 / std::f64::consts::PI,
        ),
    ];
    for (profile, analytic) in cases {
        let coarse = trapezoid_integral(&Grid::new(2, 32).unwrap(), |u: &[f64]| profile.eval(u));
        let fine = trapezoid_integral(&Grid::new(2, 64).unwrap(), |u: &[f64]| profile.eval(u));
        assert!(
            (coarse - fine).abs() < 1e-4,
            "{profile}: m vs 2m gap {}",
            (coarse - fine).abs()
        );
        assert!(
            (fine - analytic).abs() < 1e-4,
            "{profile}: quadrature {fine} vs analytic {analytic}"
        );
    }
}

#[test]
fn reference_measure_stays_inside_the_corollary_envelope() {
    // after a solve whose data sits in (eps0, 1 - eps0), every reference
    // density does too
    let cfg = ExperimentConfig::default(); // rho0 = g = cosine(1,0.5,0.2), eps0 = 0.1
    let bc = cfg.boundary_condition(cfg.theta);
    let solution = solve(
        |u| cfg.rho0.eval(u),
        &bc,
        cfg.t_end,
        &cfg.snapshot_times,
        cfg.grid().unwrap(),
    )
    .unwrap();
    for n in [4usize, 9, 16] {
        let emb = cfg.embedding(n, cfg.theta).unwrap();
        for field in &solution.snapshots {
            let nu = reference_measure(field, &emb).unwrap();
            for &p in nu.densities() {
                assert!(
                    p > cfg.epsilon0 && p < 1.0 - cfg.epsilon0,
                    "n={n}: density {p} outside the envelope"
                );
            }
        }
    }
}

#[test]
fn stationary_regime_error_scales_like_clt() {
    // rho0 = g = alpha with G = 1: the chain starts in its stationary law,
    // so the per-replica error is pure CLT noise of order |U_n|^{-1/2}
    let mut cfg = ExperimentConfig::default();
    cfg.apply_overrides([
        ("theta", "1"),
        ("rho0", "constant(0.5)"),
        ("g", "constant(0.5)"),
        ("test_function", "constant(1)"),
        ("n_list", "8,16"),
        ("replicas", "64"),
        ("grid_m", "16"),
    ])
    .unwrap();
    let report = run_convergence(&cfg).unwrap();
    for row in &report.rows {
        let sites = ((row.n - 1) * (row.n - 1)) as f64;
        // E|mean of Bernoulli(1/2) - 1/2| = sqrt(2/pi) * 0.5 / sqrt(sites)
        let clt = (2.0 / std::f64::consts::PI).sqrt() * 0.5 / sites.sqrt();
        assert!(
            row.mean_abs_error < 2.0 * clt && row.mean_abs_error > 0.25 * clt,
            "n={}: mean {} vs clt scale {clt}",
            row.n,
            row.mean_abs_error
        );
    }
    assert!(report.monotone_within_se);
}

#[test]
fn master_verify_entropy_vanishes_at_time_zero() {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_overrides([
        ("theta", "1"),
        ("n_list", "3"),
        ("replicas", "2000"),
        ("grid_m", "16"),
        ("t_end", "0.05"),
        ("snapshot_times", "0"),
    ])
    .unwrap();
    let report = ssep::harness::run_master_verify(&cfg).unwrap();
    let row = &report.rows[0];
    assert!(row.entropy.abs() < 1e-12, "H at t=0: {}", row.entropy);
    // roundoff-scale entropy is the degenerate edge: reported, not asserted
    assert_eq!(row.bound_holds, None);
    // starting law is the reference measure itself, so the ensemble agrees
    assert!(row.tv_mc_exact < 0.1, "tv {}", row.tv_mc_exact);
}

#[test]
fn one_dimensional_runs_are_flagged_in_metadata() {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_overrides([
        ("d", "1"),
        ("theta", "0"),
        ("rho0", "sine(1,0.5,0.25)"),
        ("g", "sine(1,0.5,0.25)"),
        ("test_function", "affine(0.5,0.2)"),
        ("n_list", "6,10"),
        ("replicas", "10"),
        ("grid_m", "16"),
    ])
    .unwrap();
    let report = run_convergence(&cfg).unwrap();
    assert!(report.notes.iter().any(|n| n.contains("d = 1")));
    let json = report.to_json().unwrap();
    assert!(json.contains("d = 1"));
}

#[test]
fn incompatible_data_is_noted_not_rejected() {
    let mut cfg = ExperimentConfig::default();
    // Dirichlet with rho0 != g on the boundary: solve proceeds, report notes
    cfg.apply_overrides([
        ("theta", "0"),
        ("rho0", "constant(0.5)"),
        ("g", "constant(0.3)"),
        ("n_list", "4"),
        ("replicas", "5"),
        ("grid_m", "16"),
    ])
    .unwrap();
    let report = run_convergence(&cfg).unwrap();
    assert!(report.notes.iter().any(|n| n.contains("incompatible")));
}
