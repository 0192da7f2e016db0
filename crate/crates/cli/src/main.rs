//! `ssep` — experiment harness for the exclusion process with slow
//! boundaries and its hydrodynamic limit.
//!
//! Subcommands: `simulate`, `pde`, `compare`, `master-verify`, `sweep`.
//! Every config key can come from a `--config` file or be overridden by the
//! flag of the same name. Reports are written to `--out-dir` (or
//! `$SSEP_OUT_DIR`); the exit code is zero iff every asserted check passed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssep::dynamics::{
    sample_initial, simulate, write_trajectory_binary, write_trajectory_csv, TrajectoryHeader,
    SimTables,
};
use ssep::harness::{
    run_convergence, run_master_verify, run_pde_suite, run_sweep, ExperimentConfig,
};
use ssep::master::{build_generator_from_tables, evolve, stationary, ExactDistribution,
    MAX_STATIONARY_SITES};
use ssep::measures::reference_measure;
use ssep::pde::solve;
use ssep::rng::{derive_seed, replica_rng};

#[derive(Parser)]
#[command(name = "ssep", version, about)]
struct Cli {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for report and snapshot files.
    #[arg(long, global = true, env = "SSEP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// One optional flag per config key (flag names match the keys exactly;
/// kebab-case spellings are accepted as aliases).
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long, global = true)]
    theta: Option<String>,
    #[arg(long, global = true)]
    c: Option<String>,
    #[arg(long = "t_end", alias = "t-end", global = true)]
    t_end: Option<String>,
    #[arg(long = "snapshot_times", alias = "snapshot-times", global = true)]
    snapshot_times: Option<String>,
    #[arg(long = "n_list", alias = "n-list", global = true)]
    n_list: Option<String>,
    #[arg(long = "theta_list", alias = "theta-list", global = true)]
    theta_list: Option<String>,
    #[arg(long, global = true)]
    replicas: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long = "grid_m", alias = "grid-m", global = true)]
    grid_m: Option<String>,
    #[arg(long, global = true)]
    rho0: Option<String>,
    #[arg(long, global = true)]
    g: Option<String>,
    #[arg(long = "test_function", alias = "test-function", global = true)]
    test_function: Option<String>,
    #[arg(long = "block_radius", alias = "block-radius", global = true)]
    block_radius: Option<String>,
    #[arg(long, global = true)]
    epsilon0: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    out.push((stringify!($field), v.as_str()));
                }
            };
        }
        push!(d);
        push!(theta);
        push!(c);
        push!(t_end);
        push!(snapshot_times);
        push!(n_list);
        push!(theta_list);
        push!(replicas);
        push!(seed);
        push!(grid_m);
        push!(rho0);
        push!(g);
        push!(test_function);
        push!(block_radius);
        push!(epsilon0);
        out
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trajectories and write snapshot files.
    Simulate {
        /// Snapshot layout: `csv` or `binary`.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Also write the initial product measure per lattice size.
        #[arg(long)]
        export_measure: bool,
        /// Also write block-averaged occupancy profiles per snapshot
        /// (radius from `block_radius`, default 2).
        #[arg(long)]
        export_profiles: bool,
    },
    /// Run the PDE verification suite; optionally export the configured
    /// problem's solution fields.
    Pde {
        #[arg(long)]
        export_fields: bool,
    },
    /// Monte Carlo ensembles against the heat-equation reference at the
    /// configured theta.
    Compare,
    /// Exact master-equation diagnostics on tiny lattices.
    MasterVerify {
        /// Also export the exact laws and stationary distributions as CSV.
        #[arg(long)]
        export_distributions: bool,
    },
    /// `compare` across every entry of theta_list.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("ssep: asserted checks failed");
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("ssep: error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> ssep::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply_overrides(cli.overrides.pairs())?;
    config.validate()?;
    Ok(config)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> ssep::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(path)
}

fn run(cli: &Cli) -> ssep::Result<bool> {
    let config = load_config(cli)?;
    let dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Simulate { format, export_measure, export_profiles } => {
            cmd_simulate(&config, dir, format, *export_measure, *export_profiles)
        }
        Command::Pde { export_fields } => cmd_pde(&config, dir, *export_fields),
        Command::Compare => cmd_compare(&config, dir),
        Command::MasterVerify { export_distributions } => {
            cmd_master_verify(&config, dir, *export_distributions)
        }
        Command::Sweep => cmd_sweep(&config, dir),
    }
}

fn cmd_simulate(
    config: &ExperimentConfig,
    dir: &Path,
    format: &str,
    export_measure: bool,
    export_profiles: bool,
) -> ssep::Result<bool> {
    if format != "csv" && format != "binary" {
        return Err(ssep::Error::Config(format!(
            "unknown snapshot format `{format}` (csv or binary)"
        )));
    }
    for &n in &config.n_list {
        let params = config.sim_params(n, config.theta)?;
        let embedding = config.embedding(n, config.theta)?;
        let spec = params.lattice;
        let initial = ssep::measures::ProductMeasure::new(
            spec.enumerate_sites()
                .iter()
                .map(|s| Ok(config.rho0.eval(embedding.map_site(s)?.coords())))
                .collect::<ssep::Result<Vec<f64>>>()?,
        )?;
        if export_measure {
            let mut buf = Vec::new();
            initial.write_csv(&mut buf)?;
            let path = write_file(dir, &format!("initial_measure_n{n}.csv"), &buf)?;
            println!("wrote {}", path.display());
        }
        let tables = SimTables::new(&params)?;
        let run_seed = derive_seed(config.seed, &[config.theta.to_bits(), n as u64]);
        for replica in 0..config.replicas as u64 {
            let mut rng = replica_rng(run_seed, replica);
            let eta0 = sample_initial(&initial, &mut rng);
            let snaps = simulate(&params, &tables, eta0, &mut rng)?;
            let header = TrajectoryHeader::of(&params, replica);
            let mut buf = Vec::new();
            let name = if format == "csv" {
                write_trajectory_csv(&mut buf, &header, &snaps)?;
                format!("trajectory_n{n}_r{replica:04}.csv")
            } else {
                write_trajectory_binary(&mut buf, &header, &snaps)?;
                format!("trajectory_n{n}_r{replica:04}.bin")
            };
            write_file(dir, &name, &buf)?;
            if export_profiles {
                let radius = config.block_radius.unwrap_or(2);
                let mut buf = Vec::new();
                write_profile_csv(&mut buf, &spec, &snaps, radius)?;
                write_file(dir, &format!("profile_n{n}_r{replica:04}.csv"), &buf)?;
            }
        }
        println!(
            "simulate: n={n}, {} replicas, {} snapshot times -> {}",
            config.replicas,
            config.snapshot_times.len(),
            dir.display()
        );
    }
    Ok(true)
}

/// Block-averaged occupancy per site and snapshot: the smoothed profile
/// behind density plots.
fn write_profile_csv<W: std::io::Write>(
    mut w: W,
    spec: &ssep::geometry::LatticeSpec,
    snaps: &[ssep::dynamics::TrajectorySnapshot<f64>],
    radius: usize,
) -> ssep::Result<()> {
    write!(w, "site")?;
    for a in 1..=spec.dimension() {
        write!(w, ",x{a}")?;
    }
    for s in snaps {
        write!(w, ",t{}", s.time)?;
    }
    writeln!(w)?;
    for (idx, site) in spec.enumerate_sites().iter().enumerate() {
        write!(w, "{idx}")?;
        for &x in site.coords() {
            write!(w, ",{x}")?;
        }
        for s in snaps {
            let avg = ssep::dynamics::block_average::<f64>(spec, &s.config, site, radius)?;
            write!(w, ",{avg}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn cmd_pde(config: &ExperimentConfig, dir: &Path, export_fields: bool) -> ssep::Result<bool> {
    let report = run_pde_suite(config)?;
    let path = write_file(dir, "pde_report.json", report.to_json()?.as_bytes())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(dir, "pde_rows.csv", &csv)?;
    for row in &report.rows {
        println!(
            "{} {} {}: {:.4e} in [{:.1e}, {:.1e}] {}",
            if row.pass { "PASS" } else { "FAIL" },
            row.name,
            row.metric,
            row.value,
            row.lo,
            row.hi,
            row.bc
        );
    }
    if export_fields {
        let bc = config.boundary_condition(config.theta);
        let solution = solve(
            |u| config.rho0.eval(u),
            &bc,
            config.t_end,
            &config.snapshot_times,
            config.grid()?,
        )?;
        for field in &solution.snapshots {
            let tag = format!("{:.6}", field.time()).replace('.', "p");
            let mut buf = Vec::new();
            field.write_csv(&mut buf)?;
            write_file(dir, &format!("field_t{tag}.csv"), &buf)?;
            let mut bin = Vec::new();
            field.write_binary(&mut bin)?;
            write_file(dir, &format!("field_t{tag}.bin"), &bin)?;
        }
        println!("exported {} solution fields", solution.snapshots.len());
    }
    println!("report: {}", path.display());
    Ok(report.pass)
}

fn cmd_compare(config: &ExperimentConfig, dir: &Path) -> ssep::Result<bool> {
    let report = run_convergence(config)?;
    let path = write_file(dir, "convergence_report.json", report.to_json()?.as_bytes())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(dir, "convergence_rows.csv", &csv)?;
    for r in &report.rows {
        println!(
            "theta={} n={:3} t={}: mean |<pi,G> - int G rho| = {:.5} (se {:.5})",
            r.theta, r.n, r.t, r.mean_abs_error, r.std_error
        );
    }
    println!(
        "{} monotone decrease within pooled SE; report: {}",
        if report.monotone_within_se { "PASS" } else { "FAIL" },
        path.display()
    );
    Ok(report.pass)
}

fn cmd_master_verify(
    config: &ExperimentConfig,
    dir: &Path,
    export_distributions: bool,
) -> ssep::Result<bool> {
    let report = run_master_verify(config)?;
    let path = write_file(dir, "master_report.json", report.to_json()?.as_bytes())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(dir, "master_rows.csv", &csv)?;
    for r in &report.rows {
        println!(
            "n={} t={}: H={:.6} H/site={:.6} TV(mc,exact)={:.4} bound lhs={:.5} rhs={} {}",
            r.n,
            r.t,
            r.entropy,
            r.entropy_per_site,
            r.tv_mc_exact,
            r.bound_lhs,
            r.bound_rhs.map_or("-".into(), |v| format!("{v:.5}")),
            match r.bound_holds {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "SKIP",
            }
        );
    }
    if export_distributions {
        for &n in &config.n_list {
            let params = config.sim_params(n, config.theta)?;
            let tables = SimTables::new(&params)?;
            let generator = build_generator_from_tables(&tables)?;
            let bc = config.boundary_condition(config.theta);
            let mut times = config.snapshot_times.clone();
            if times.first().copied() != Some(0.0) {
                times.insert(0, 0.0);
            }
            let solution = solve(
                |u| config.rho0.eval(u),
                &bc,
                config.t_end,
                &times,
                config.grid()?,
            )?;
            let embedding = config.embedding(n, config.theta)?;
            let nu0 = reference_measure(&solution.snapshots[0], &embedding)?;
            let mu0 = ExactDistribution::from_product(&nu0);
            for &t in &config.snapshot_times {
                let mu = evolve(&generator, &mu0, t)?;
                let mut buf = Vec::new();
                mu.write_csv(&mut buf)?;
                let tag = format!("{t:.6}").replace('.', "p");
                write_file(dir, &format!("exact_law_n{n}_t{tag}.csv"), &buf)?;
            }
            if params.lattice.site_count() <= MAX_STATIONARY_SITES {
                let pi = stationary(&generator)?;
                let mut buf = Vec::new();
                pi.write_csv(&mut buf)?;
                write_file(dir, &format!("stationary_n{n}.csv"), &buf)?;
            }
        }
        println!("exported exact laws");
    }
    println!("report: {}", path.display());
    Ok(report.pass)
}

fn cmd_sweep(config: &ExperimentConfig, dir: &Path) -> ssep::Result<bool> {
    let report = run_sweep(config)?;
    let path = write_file(dir, "sweep_report.json", report.to_json()?.as_bytes())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(dir, "sweep_rows.csv", &csv)?;
    for run in &report.runs {
        for r in &run.rows {
            println!(
                "theta={} n={:3} t={}: mean={:.5} se={:.5}",
                r.theta, r.n, r.t, r.mean_abs_error, r.std_error
            );
        }
    }
    println!(
        "{}; report: {}",
        if report.pass { "PASS" } else { "FAIL" },
        path.display()
    );
    Ok(report.pass)
}
