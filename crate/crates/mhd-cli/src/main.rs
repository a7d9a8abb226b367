//! Command-line driver: solve, audit, and verify trajectories.

// `!(x > 0.0)` guards are written negated on purpose so that NaN
// fails validation; parallel-column CSV writers index several vectors
// by the same row counter.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mhd_core::error::MhdError;
use mhd_core::estimates;
use mhd_core::field::{ScalarField, VectorField};
use mhd_core::grid::Grid;
use mhd_core::mms;
use mhd_core::picard::{self, PicardConfig};
use mhd_core::presets;
use mhd_core::reference;
use mhd_core::state::State;

use config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_AUDIT: u8 = 4;

#[derive(Parser)]
#[command(name = "mhd", about = "Semi-Lagrangian compressible MHD solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial-condition preset, overriding the config file.
    #[arg(long)]
    preset: Option<String>,
    /// Grid resolution per axis, overriding the config file.
    #[arg(long)]
    resolution: Option<usize>,
    /// Output directory, overriding the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the preset, audit the result, and dump the trajectory.
    Run(CommonArgs),
    /// Manufactured-solution convergence study.
    Mms {
        #[command(flatten)]
        common: CommonArgs,
        /// Resolutions of the spatial sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 12, 16])]
        resolutions: Vec<usize>,
        /// Step sizes of the temporal sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [2e-2, 1e-2, 5e-3])]
        dts: Vec<f64>,
    },
    /// Audit the estimate inequalities on a stored trajectory.
    VerifyBounds {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory of level snapshots written by `run`.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Two-run difference experiment against the Gronwall envelope.
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturbation as field:amplitude, e.g. u:1e-3.
        #[arg(long, default_value = "u:1e-3")]
        perturb: String,
    },
    /// Resolution sweep against the explicit reference oracle.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 12, 16])]
        resolutions: Vec<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &common.preset {
        cfg.preset = p.clone();
    }
    if let Some(n) = common.resolution {
        cfg.resolution = n;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn initial_state(cfg: &RunConfig) -> Result<State, MhdError> {
    match &cfg.snapshot {
        Some(path) => io::load_state(path).map(|(s, _)| s),
        None => presets::by_name(&cfg.preset, cfg.resolution),
    }
}

fn solver_failure(e: &MhdError) -> ExitCode {
    eprintln!("solver error: {e}");
    ExitCode::from(EXIT_SOLVER)
}

fn cmd_run(common: &CommonArgs) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let initial = match initial_state(&cfg) {
        Ok(s) => s,
        Err(e) => return solver_failure(&e),
    };
    let (traj, report) = match picard::solve(&initial, &cfg.physics, &cfg.picard, None) {
        Ok(r) => r,
        Err(e) => return solver_failure(&e),
    };
    if !report.converged {
        eprintln!(
            "fixed-point iteration did not converge in {} sweeps (last distance {:.3e})",
            report.sweeps,
            report.distances.last().unwrap_or(&f64::NAN)
        );
        return ExitCode::from(EXIT_SOLVER);
    }
    let records = match estimates::audit_run(&traj, &cfg.physics, cfg.picard.q) {
        Ok(r) => r,
        Err(e) => return solver_failure(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let dump = io::save_trajectory(&traj, &cfg.output_dir.join("trajectory"), cfg.cadence)
        .and_then(|_| io::write_audit_csv(&records, &cfg.output_dir.join("audits.csv")));
    if let Err(e) = dump {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_SOLVER);
    }
    let all_pass = records.iter().all(|r| r.pass);
    let ball_ok = report.ball.iter().all(|b| b.inside);
    let mut summary = format!(
        "preset: {}\nresolution: {}\nsweeps: {}\nfinal distance: {:.3e}\nball check: {}\n",
        cfg.preset,
        cfg.resolution,
        report.sweeps,
        report.distances.last().unwrap_or(&f64::NAN),
        if ball_ok { "inside" } else { "outside" }
    );
    for r in &records {
        let worst = r.margins().iter().cloned().fold(f64::INFINITY, f64::min);
        summary.push_str(&format!(
            "audit {}: {} (worst margin {:.3e})\n",
            r.name,
            if r.pass { "pass" } else { "fail" },
            worst
        ));
    }
    let _ = io::write_summary(&cfg.output_dir.join("summary.txt"), &summary);
    print!("{summary}");
    if all_pass && ball_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT)
    }
}

fn cmd_mms(common: &CommonArgs, resolutions: &[usize], dts: &[f64]) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let case = presets::single_mode_case();
    let base = PicardConfig {
        horizon: 0.04,
        dt: *dts.last().unwrap_or(&5e-3),
        tol: 1e-9,
        substeps: 2,
        ..cfg.picard.clone()
    };
    let table = match mms::convergence_study(&case, resolutions, dts, &base) {
        Ok(t) => t,
        Err(e) => return solver_failure(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Err(e) = io::write_order_csv(&table, &cfg.output_dir.join("orders.csv")) {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_SOLVER);
    }
    println!("spatial orders:  {:?}", table.spatial_order);
    println!("temporal orders: {:?}", table.temporal_order);
    let ok = table
        .spatial_order
        .map(|o| o.iter().all(|&v| v >= 3.5))
        .unwrap_or(false)
        && table
            .temporal_order
            .map(|o| o.iter().all(|&v| v >= 0.9))
            .unwrap_or(false);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT)
    }
}

fn cmd_verify_bounds(common: &CommonArgs, trajectory: &std::path::Path) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let traj = match io::load_trajectory(trajectory) {
        Ok(t) => t,
        Err(e) => return solver_failure(&e),
    };
    let records = match estimates::audit_run(&traj, &cfg.physics, cfg.picard.q) {
        Ok(r) => r,
        Err(e) => return solver_failure(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir)
        .map_err(MhdError::Io)
        .and_then(|_| io::write_audit_csv(&records, &cfg.output_dir.join("audits.csv")))
    {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_SOLVER);
    }
    let mut all_pass = true;
    for r in &records {
        println!("audit {}: {}", r.name, if r.pass { "pass" } else { "fail" });
        all_pass &= r.pass;
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT)
    }
}

fn parse_perturbation(spec: &str) -> Result<(char, f64), String> {
    let (field, amp) = spec
        .split_once(':')
        .ok_or_else(|| format!("expected field:amplitude, got '{spec}'"))?;
    let amp: f64 = amp
        .parse()
        .map_err(|_| format!("bad perturbation amplitude '{amp}'"))?;
    match field {
        "u" | "rho" | "h" => Ok((field.chars().next().unwrap(), amp)),
        other => Err(format!(
            "unknown perturbation field '{other}', expected u, rho, or h"
        )),
    }
}

fn perturb(state: &State, field: char, amp: f64) -> Result<State, MhdError> {
    let g = state.grid();
    let mut rho = state.rho.clone();
    let mut u = state.u.clone();
    let mut h = state.h.clone();
    match field {
        'u' => u = u.add(&VectorField::from_fn(g, |x| [amp * x[1].sin(), 0.0, 0.0])),
        'r' => rho = rho.add(&ScalarField::from_fn(g, |x| amp * x[0].sin())),
        _ => h = h.add(&VectorField::from_fn(g, |x| [amp * x[1].sin(), 0.0, 0.0])),
    }
    State::new(rho, u, h)
}

fn cmd_stability(common: &CommonArgs, perturb_spec: &str) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (field, amp) = match parse_perturbation(perturb_spec) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let initial = match initial_state(&cfg) {
        Ok(s) => s,
        Err(e) => return solver_failure(&e),
    };
    let run_pair = |delta: f64| -> Result<estimates::StabilityReport, MhdError> {
        let perturbed = perturb(&initial, field, delta)?;
        estimates::stability_experiment(&initial, &perturbed, &cfg.physics, &cfg.picard, None)
    };
    let full = match run_pair(amp) {
        Ok(r) => r,
        Err(e) => return solver_failure(&e),
    };
    let half = match run_pair(amp / 2.0) {
        Ok(r) => r,
        Err(e) => return solver_failure(&e),
    };
    let ratio = half.d.last().unwrap() / full.d.last().unwrap();
    let quadratic = (0.2..=0.3).contains(&ratio);
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir)
        .map_err(MhdError::Io)
        .and_then(|_| io::write_stability_csv(&full, &cfg.output_dir.join("stability.csv")))
    {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_SOLVER);
    }
    println!(
        "envelope: {}; D(T) ratio under delta halving: {ratio:.3} ({})",
        if full.pass { "holds" } else { "violated" },
        if quadratic {
            "quadratic band"
        } else {
            "outside quadratic band"
        }
    );
    if full.pass && half.pass && quadratic {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT)
    }
}

fn cmd_convergence(common: &CommonArgs, resolutions: &[usize]) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let steps = match cfg.picard.num_steps() {
        Ok(s) => s,
        Err(e) => return solver_failure(&e),
    };
    let mut gaps = Vec::new();
    for &n in resolutions {
        let initial = match presets::by_name(&cfg.preset, n) {
            Ok(s) => s,
            Err(e) => return solver_failure(&e),
        };
        let (traj, _) = match picard::solve(&initial, &cfg.physics, &cfg.picard, None) {
            Ok(r) => r,
            Err(e) => return solver_failure(&e),
        };
        let oracle =
            match reference::reference_solve(&initial, &cfg.physics, cfg.picard.dt, steps, None) {
                Ok(t) => t,
                Err(e) => return solver_failure(&e),
            };
        let gap = match reference::trajectory_gap(&traj, &oracle) {
            Ok(g) => g,
            Err(e) => return solver_failure(&e),
        };
        println!("N = {n}: cross-solver gap {gap:.3e}");
        gaps.push(gap);
        let _ = Grid::cube(n);
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] * 1.05);
    if monotone {
        ExitCode::SUCCESS
    } else {
        eprintln!("cross-solver gap did not decrease under refinement: {gaps:?}");
        ExitCode::from(EXIT_AUDIT)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(common) => cmd_run(&common),
        Command::Mms {
            common,
            resolutions,
            dts,
        } => cmd_mms(&common, &resolutions, &dts),
        Command::VerifyBounds { common, trajectory } => cmd_verify_bounds(&common, &trajectory),
        Command::Stability { common, perturb } => cmd_stability(&common, &perturb),
        Command::Convergence {
            common,
            resolutions,
        } => cmd_convergence(&common, &resolutions),
    }
}
