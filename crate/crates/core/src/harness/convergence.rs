//! Hydrodynamic convergence experiment: seeded Monte Carlo ensembles of the
//! particle system against the heat-equation reference.

use rayon::prelude::*;

use super::{to_json_pretty, ExperimentConfig, VersionInfo, SCHEMA_VERSION};
use crate::dynamics::{empirical_pairing_precomputed, sample_initial, simulate, SimTables};
use crate::error::{Error, Result};
use crate::measures::ProductMeasure;
use crate::pde::{integrate_against, solve, trapezoid_error_estimate};
use crate::rng::{derive_seed, replica_rng};
use crate::Real;

/// Per `(n, t)` statistics of `|<pi_t, G> - integral(G rho)|` over the
/// replica ensemble.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub theta: Real,
    pub n: usize,
    pub t: Real,
    pub mean_abs_error: Real,
    pub std_error: Real,
    pub replicas: usize,
    pub reference_integral: Real,
    pub quadrature_budget: Real,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    pub versions: VersionInfo,
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub theta: Real,
    pub notes: Vec<String>,
    pub rows: Vec<ConvergenceRow>,
    /// Errors decrease along `n_list` for every snapshot time, allowing one
    /// pooled standard error of slack.
    pub monotone_within_se: bool,
    pub pass: bool,
}

/// Run the convergence experiment at `config.theta` across `config.n_list`.
///
/// The initial law of every replica is the Bernoulli product measure with
/// densities `rho0(m_n(x))`, so the relative entropy against the reference
/// measure vanishes at time zero.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let started = std::time::Instant::now();
    let theta = config.theta;
    let grid = config.grid()?;
    let bc = config.boundary_condition(theta);
    let solution = solve(
        |u| config.rho0.eval(u),
        &bc,
        config.t_end,
        &config.snapshot_times,
        grid,
    )?;
    let mut notes = Vec::new();
    if config.d < 2 {
        notes.push("d = 1 lies outside the d >= 2 regime of the scaling theory; run is a cross-check".into());
    }
    if !solution.compatibility.compatible {
        let note = format!(
            "rho0/g incompatible with the {} condition (defect {:.3e})",
            bc.kind_name(),
            solution.compatibility.max_defect
        );
        eprintln!("[ssep] warning: {note}");
        notes.push(note);
    }

    // Reference integrals and quadrature budgets per snapshot.
    let mut integrals = Vec::with_capacity(solution.snapshots.len());
    let mut budgets = Vec::with_capacity(solution.snapshots.len());
    for field in &solution.snapshots {
        integrals.push(integrate_against(field, |u| config.test_function.eval(u)));
        let samples: Vec<Real> = (0..grid.node_count())
            .map(|flat| {
                let point = grid.node_point::<Real>(&grid.node_indices(flat));
                config.test_function.eval(&point) * field.values()[flat]
            })
            .collect();
        budgets.push(trapezoid_error_estimate(&grid, &samples));
    }

    let mut rows = Vec::new();
    for &n in &config.n_list {
        let params = config.sim_params(n, theta)?;
        let embedding = config.embedding(n, theta)?;
        let spec = params.lattice;
        let sites = spec.enumerate_sites();
        let initial = ProductMeasure::new(
            sites
                .iter()
                .map(|s| Ok(config.rho0.eval(embedding.map_site(s)?.coords())))
                .collect::<Result<Vec<Real>>>()?,
        )?;
        let g_at: Vec<Real> = sites
            .iter()
            .map(|s| config.test_function.eval(spec.scaled_point::<Real>(s).coords()))
            .collect();
        let tables = SimTables::new(&params)?;
        let run_seed = derive_seed(config.seed, &[theta.to_bits(), n as u64]);

        let per_replica: Vec<Vec<Real>> = (0..config.replicas as u64)
            .into_par_iter()
            .map(|replica| {
                let mut rng = replica_rng(run_seed, replica);
                let eta0 = sample_initial(&initial, &mut rng);
                let snaps = simulate(&params, &tables, eta0, &mut rng)?;
                Ok(snaps
                    .iter()
                    .zip(&integrals)
                    .map(|(snap, &integral)| {
                        (empirical_pairing_precomputed(&snap.config, &g_at) - integral).abs()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        for (k, &t) in config.snapshot_times.iter().enumerate() {
            let values: Vec<Real> = per_replica.iter().map(|r| r[k]).collect();
            let count = values.len() as Real;
            let mean = values.iter().sum::<Real>() / count;
            let var = if values.len() > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>()
                    / (count - 1.0)
            } else {
                0.0
            };
            rows.push(ConvergenceRow {
                theta,
                n,
                t,
                mean_abs_error: mean,
                std_error: (var / count).sqrt(),
                replicas: config.replicas,
                reference_integral: integrals[k],
                quadrature_budget: budgets[k],
            });
        }
    }

    let monotone_within_se = monotone_check(config, &rows);
    eprintln!(
        "[ssep] convergence theta={theta}: {} rows in {:.2}s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(ConvergenceReport {
        versions: VersionInfo::current(),
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        theta,
        notes,
        rows,
        monotone_within_se,
        pass: monotone_within_se,
    })
}

fn monotone_check(config: &ExperimentConfig, rows: &[ConvergenceRow]) -> bool {
    for (k, _) in config.snapshot_times.iter().enumerate() {
        let series: Vec<&ConvergenceRow> = config
            .n_list
            .iter()
            .map(|&n| {
                rows.iter()
                    .find(|r| r.n == n && r.t == config.snapshot_times[k])
                    .expect("row exists")
            })
            .collect();
        for pair in series.windows(2) {
            let pooled = (pair[0].std_error.powi(2) + pair[1].std_error.powi(2)).sqrt();
            if pair[1].mean_abs_error > pair[0].mean_abs_error + pooled {
                return false;
            }
        }
    }
    true
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_pretty(self)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "theta,n,t,mean_abs_error,std_error,replicas,reference_integral,quadrature_budget"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.theta,
                r.n,
                r.t,
                r.mean_abs_error,
                r.std_error,
                r.replicas,
                r.reference_integral,
                r.quadrature_budget
            )?;
        }
        Ok(())
    }
}

/// The multi-theta sweep: one convergence run per entry of
/// `config.theta_list`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepReport {
    pub versions: VersionInfo,
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub runs: Vec<ConvergenceReport>,
    pub pass: bool,
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    if config.theta_list.is_empty() {
        return Err(Error::Config("theta_list is empty".into()));
    }
    let mut runs = Vec::with_capacity(config.theta_list.len());
    for &theta in &config.theta_list {
        let mut sub = config.clone();
        sub.theta = theta;
        runs.push(run_convergence(&sub)?);
    }
    let pass = runs.iter().all(|r| r.pass);
    Ok(SweepReport {
        versions: VersionInfo::current(),
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        runs,
        pass,
    })
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_pretty(self)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "theta,n,t,mean_abs_error,std_error,replicas,reference_integral,quadrature_budget"
        )?;
        for run in &self.runs {
            for r in &run.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    r.theta,
                    r.n,
                    r.t,
                    r.mean_abs_error,
                    r.std_error,
                    r.replicas,
                    r.reference_integral,
                    r.quadrature_budget
                )?;
            }
        }
        Ok(())
    }
}
