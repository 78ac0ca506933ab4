//! `sqg` command line.
//!
//! Exit codes: 0 when everything ran and every audit passed, 1 on an audit
//! failure or blow-up, 2 on configuration, usage or I/O errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{decay_envelope_check, energy_balance_residual, sob_inequality_audit, AuditReport, POINCARE_C0};
use crate::dynamics::{nonlinear_pairing, simulate, Trajectory};
use crate::error::{Result, SqgError};
use crate::experiments::{
    absorbing_set_study, concatenation_check, vanishing_viscosity_study, EnsembleSpec, WeakMetricSpec,
};
use crate::persistence::{
    load_config, read_snapshot, write_diagnostics, write_snapshot, write_summary, write_table, SolverConfig,
};
use crate::presets::InitialCondition;
use crate::verify::{run_suite, Suite, PAIRING_TOL, RESIDUAL_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Parser)]
#[command(name = "sqg", version, about = "Forced dissipative SQG solver and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configured simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Vanishing-viscosity family over a decreasing list of epsilon.
    VvStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        eps: Vec<f64>,
    },
    /// Ensemble of log-spaced random initial data.
    Attractor {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        t_end: f64,
    },
    /// Oracle checks at a chosen resolution.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Straight-through run against a snapshot restart.
    RestartCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_split: f64,
    },
    /// Header and norms of an SQG1 snapshot.
    Info { path: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Spectral,
    Energy,
    #[value(name = "appendixB")]
    Estimates,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Spectral => Suite::Spectral,
            SuiteArg::Energy => Suite::Energy,
            SuiteArg::Estimates => Suite::Estimates,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_AUDIT,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &SqgError) -> i32 {
    match e {
        SqgError::BlowUp { .. } => EXIT_AUDIT,
        SqgError::Member { source, .. } => exit_code(source),
        _ => EXIT_CONFIG,
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Simulate { config } => cmd_simulate(&config),
        Command::VvStudy { config, eps } => cmd_vv_study(&config, &eps),
        Command::Attractor {
            config,
            members,
            seed,
            t_end,
        } => cmd_attractor(&config, members, seed, t_end),
        Command::Verify { suite, n, out } => cmd_verify(suite.into(), n, &out),
        Command::RestartCheck { config, t_split } => cmd_restart_check(&config, t_split),
        Command::Info { path } => cmd_info(&path),
    }
}

fn output_dir(config: &SolverConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&config.output.dir);
    fs::create_dir_all(&dir).map_err(|e| SqgError::io(&dir, e))?;
    Ok(dir)
}

fn finish(dir: &Path, reports: &[AuditReport]) -> Result<bool> {
    for r in reports {
        println!("{}", r.summary_line());
    }
    let path = dir.join(SUMMARY_FILE);
    write_summary(&path, reports)?;
    println!("summary written to {}", path.display());
    Ok(reports.iter().all(|r| r.passed))
}

fn cmd_simulate(path: &Path) -> Result<bool> {
    let config = load_config(path)?;
    let dir = output_dir(&config)?;
    let traj = match simulate(&config) {
        Ok(traj) => traj,
        Err(SqgError::BlowUp { t, last_valid }) => {
            let (t_valid, state) = *last_valid;
            let file = dir.join("last_valid.sqg1");
            write_snapshot(&file, &state, t_valid, config.model.gamma, config.model.epsilon)?;
            eprintln!(
                "blow-up at t = {t}; last valid state (t = {t_valid}) written to {}",
                file.display()
            );
            return Ok(false);
        }
        Err(e) => return Err(e),
    };

    write_diagnostics(&dir.join("diagnostics.csv"), &traj.diagnostics)?;
    for (i, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        write_snapshot(
            &dir.join(format!("snapshot_{i:05}.sqg1")),
            state,
            *t,
            config.model.gamma,
            config.model.epsilon,
        )?;
    }
    let f_l2 = traj.params.forcing.l2_norm();
    write_decay_table(&dir.join("decay.csv"), &traj, f_l2)?;

    let mut reports = vec![
        energy_report(&traj)?,
        pairing_report(&traj),
        decay_envelope_check(&traj, f_l2),
    ];
    let (alpha, gamma, beta) = (config.analysis.alpha, config.model.gamma, config.analysis.beta);
    match sob_inequality_audit(&traj, alpha, gamma, beta, &traj.params.forcing) {
        Ok(audit) => {
            let rows: Vec<Vec<f64>> = audit.rows.iter().map(|&(t, l, r)| vec![t, l, r]).collect();
            write_table(&dir.join("sob_audit.csv"), &["t".into(), "L".into(), "R".into()], &rows)?;
            reports.push(audit.report);
        }
        Err(e) => println!("sobolev inequality audit skipped: {e}"),
    }
    println!(
        "simulated to t = {} with {} steps; outputs in {}",
        traj.final_time(),
        traj.dt_history.len(),
        dir.display()
    );
    finish(&dir, &reports)
}

/// `t, l2, envelope` at the snapshot times.
fn write_decay_table(path: &Path, traj: &Trajectory, f_l2: f64) -> Result<()> {
    let t0 = traj.times[0];
    let l0 = traj.states[0].l2_norm();
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let envelope = l0 * (-POINCARE_C0 * (t - t0)).exp() + f_l2 / POINCARE_C0;
            vec![t, s.l2_norm(), envelope]
        })
        .collect();
    write_table(path, &["t".into(), "l2".into(), "envelope".into()], &rows)
}

fn energy_report(traj: &Trajectory) -> Result<AuditReport> {
    let mut report = AuditReport::new("energy_balance", RESIDUAL_TOL, "normalized energy balance residual");
    let residual = energy_balance_residual(traj, traj.times[0], traj.final_time())?;
    report.observe("residual", residual);
    report.passed = residual <= RESIDUAL_TOL;
    Ok(report)
}

fn pairing_report(traj: &Trajectory) -> AuditReport {
    let mut report = AuditReport::new("nonlinear_pairing", PAIRING_TOL, "relative to ||theta||^2");
    let worst = traj
        .states
        .iter()
        .map(|s| {
            let l2 = s.l2_norm().powi(2);
            if l2 > 0.0 {
                nonlinear_pairing(s).abs() / l2
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    report.observe("max_relative_pairing", worst);
    report.passed = worst <= PAIRING_TOL;
    report
}

fn cmd_vv_study(path: &Path, eps: &[f64]) -> Result<bool> {
    let config = load_config(path)?;
    let grid = config.grid()?;
    let theta0 = config.initial_state(&grid)?;
    let forcing = config.forcing.build(&grid)?;
    let study = vanishing_viscosity_study(
        &theta0,
        &forcing,
        config.model.gamma,
        eps,
        &config.run_spec(),
        WeakMetricSpec::DEFAULT_CUTOFF,
    )?;
    let dir = output_dir(&config)?;
    write_table(&dir.join("vv.csv"), &study.csv_columns(), &study.csv_rows())?;
    finish(&dir, std::slice::from_ref(&study.report))
}

fn cmd_attractor(path: &Path, members: usize, seed: u64, t_end: f64) -> Result<bool> {
    let config = load_config(path)?;
    if members == 0 {
        return Err(SqgError::Config("--members must be at least 1".into()));
    }
    let grid = config.grid()?;
    let params = config.model_params(&grid)?;
    let mut run = config.run_spec();
    run.t_end = t_end;
    run.holder_in_diagnostics = false;
    run.diagnostics_every = t_end;
    run.validate()?;
    let (k_min, k_max) = match config.ic {
        InitialCondition::RandomBand { k_min, k_max, .. } => (k_min, k_max),
        _ => (1.0, 4.0f64.min((grid.dealias_cutoff()) as f64)),
    };
    let spec = EnsembleSpec::log_spaced(params, run, members, seed, k_min, k_max, 0.1, 10.0);
    let study = absorbing_set_study(&spec)?;
    let dir = output_dir(&config)?;
    write_table(&dir.join("ensemble.csv"), &study.csv_columns(), &study.csv_rows())?;
    finish(&dir, std::slice::from_ref(&study.report))
}

fn cmd_verify(suite: Suite, n: usize, out: &Path) -> Result<bool> {
    let reports = run_suite(suite, n)?;
    fs::create_dir_all(out).map_err(|e| SqgError::io(out, e))?;
    finish(out, &reports)
}

fn cmd_restart_check(path: &Path, t_split: f64) -> Result<bool> {
    let config = load_config(path)?;
    let grid = config.grid()?;
    let params = config.model_params(&grid)?;
    let theta0 = config.initial_state(&grid)?;
    let dir = output_dir(&config)?;
    let report = concatenation_check(&theta0, &params, &config.run_spec(), t_split, &dir)?;
    finish(&dir, std::slice::from_ref(&report))
}

fn cmd_info(path: &Path) -> Result<bool> {
    let snap = read_snapshot(path)?;
    let state = snap.state();
    println!("file     {}", path.display());
    println!("n        {}", snap.values.grid().n());
    println!("t        {}", snap.t);
    println!("gamma    {}", snap.gamma);
    println!("epsilon  {}", snap.epsilon);
    println!("l2       {:e}", state.l2_norm());
    println!("linf     {:e}", snap.values.max_abs());
    println!("mean     {:e}", snap.values.mean());
    Ok(true)
}
