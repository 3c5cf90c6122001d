//! Command line driver. Three subcommands share one config format:
//!
//!   qarrive verify    identity batteries on the configured problem
//!   qarrive simulate  unitary run, arrival statistics, restriction diagnostic
//!   qarrive sweep     one simulate per swept value, combined summary
//!
//! Exit codes: 0 success, 2 config or validation error, 3 a checked
//! invariant failed, 4 numerical abort mid-run.

mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qarrive::arrival::{
    arrival_record_from, projection_report, ArrivalRecord, ProjectionReport, DEFAULT_HAZARD_FLOOR,
};
use qarrive::dynamics::{evolve, Trajectory};
use qarrive::observables::continuity_residual;
use qarrive::operators::{assemble_full, assemble_restricted_decomposed};
use qarrive::sig17;
use qarrive::verify::{all_passed, run_configured, run_small_grid};

use config::{Problem, SimConfig};

#[derive(Parser)]
#[command(name = "qarrive", version, about = "Arrival-time statistics for 1D wave packets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the operator-identity batteries and write verify.txt
    Verify(CommonArgs),
    /// Propagate the packet and write trajectory, arrival and summary CSVs
    Simulate(CommonArgs),
    /// Run one simulation per swept value and combine the summaries
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file; every key is optional and defaults to the
    /// reference transit run
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override output.dir from the config
    #[arg(long)]
    out: Option<String>,

    /// Worker threads for sweep runs (default: logical cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Also write one state snapshot CSV per record (large)
    #[arg(long)]
    record_states: bool,
}

enum Failure {
    /// Bad input: config, flags, or a precondition caught before running.
    Setup(String),
    /// A run completed but a checked invariant did not hold.
    Invariant(String),
    /// A run died mid-flight.
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Setup(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Setup(m) | Failure::Invariant(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<qarrive::Error> for Failure {
    fn from(e: qarrive::Error) -> Self {
        match e {
            qarrive::Error::EdgeContamination { .. } | qarrive::Error::SingularSystem { .. } => {
                Failure::Numerical(e.to_string())
            }
            other => Failure::Setup(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Setup(format!("io: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<SimConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))?;
            SimConfig::parse(&text).map_err(Failure::Setup)?
        }
        None => SimConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    Ok(fs::write(dir.join(name), contents)?)
}

fn cmd_verify(args: &CommonArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let problem = cfg.build()?;
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    write_file(&dir, "config.echo", &cfg.echo())?;

    let mut results = run_configured(&problem.region, &problem.potential, problem.mass)?;
    results.extend(run_small_grid()?);

    let mut report = String::new();
    for r in &results {
        report.push_str(&r.to_string());
        report.push('\n');
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    report.push_str(&format!(
        "{} checks, {} failed\n",
        results.len(),
        failed
    ));
    write_file(&dir, "verify.txt", &report)?;
    print!("{report}");

    if all_passed(&results) {
        Ok(())
    } else {
        let first = results.iter().find(|r| !r.passed).expect("a failure exists");
        Err(Failure::Invariant(format!(
            "verification failed: {} (see {})",
            first.name,
            dir.join("verify.txt").display()
        )))
    }
}

/// Scalar results of one simulation, as they appear in summary.csv.
struct RunSummary {
    peak_time: f64,
    total_arrival: f64,
    max_continuity_residual: f64,
}

struct RunOutput {
    summary: RunSummary,
    report: ProjectionReport,
    traj: Trajectory,
    record: ArrivalRecord,
    /// Set when the restricted leg aborted and the diagnostic covers only
    /// the clean prefix; holds the abort time.
    diagnostic_cut: Option<f64>,
}

/// The full simulate pipeline for one config; pure compute plus writes
/// confined to the config's output directory.
fn run_simulation(cfg: &SimConfig, record_states: bool) -> Result<RunOutput, Failure> {
    let problem: Problem = cfg.build()?;
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    write_file(&dir, "config.echo", &cfg.echo())?;

    let h = assemble_full(problem.grid, &problem.potential, problem.mass)?;
    let traj = evolve(&h, &problem.psi0, &problem.run, &problem.region, problem.mass)?;
    let record = arrival_record_from(&traj, &problem.region, problem.mass, DEFAULT_HAZARD_FLOOR)?;
    let continuity = continuity_residual(&traj.times, &traj.states, &problem.region, problem.mass)?;

    let hbar =
        assemble_restricted_decomposed(&problem.region, &problem.potential, problem.mass)?;
    let restricted_start = problem.psi0.restrict(&problem.region);
    // The lossy leg aborts once wall reflections outgrow the shrinking
    // surviving norm. The diagnostic then covers the clean prefix instead
    // of sinking the whole run; the unitary outputs are unaffected.
    let (restricted, diagnostic_cut) = match evolve(
        &hbar,
        &restricted_start,
        &problem.run,
        &problem.region,
        problem.mass,
    ) {
        Ok(t) => (t, None),
        Err(qarrive::Error::EdgeContamination { step, time, amplitude }) => {
            let every = problem.run.record_every;
            let safe_steps = (step - 1) / every * every;
            if safe_steps < 2 * every {
                return Err(qarrive::Error::EdgeContamination { step, time, amplitude }.into());
            }
            let mut prefix = problem.run;
            prefix.n_steps = safe_steps;
            let t = evolve(&hbar, &restricted_start, &prefix, &problem.region, problem.mass)?;
            (t, Some(time))
        }
        Err(e) => return Err(e.into()),
    };
    let report = if restricted.times.len() == traj.times.len() {
        projection_report(&traj, &restricted, &problem.region, problem.mass)?
    } else {
        let mut window = traj.clone();
        window.truncate_records(restricted.times.len());
        projection_report(&window, &restricted, &problem.region, problem.mass)?
    };

    {
        let mut w = BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?);
        traj.write_csv(&mut w)?;
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(fs::File::create(dir.join("arrival.csv"))?);
        record.write_csv(&mut w)?;
        w.flush()?;
    }

    let (peak_time, _) = record.peak();
    let summary = RunSummary {
        peak_time,
        total_arrival: record.total_arrival(),
        max_continuity_residual: continuity.max_abs,
    };
    write_file(
        &dir,
        "summary.csv",
        &format!(
            "peak_time,total_arrival,max_continuity_residual\n{},{},{}\n",
            sig17(summary.peak_time),
            sig17(summary.total_arrival),
            sig17(summary.max_continuity_residual)
        ),
    )?;

    if record_states {
        let snap_dir = dir.join("states");
        fs::create_dir_all(&snap_dir)?;
        for (k, state) in traj.states.iter().enumerate() {
            let name = format!("snap_{k:06}.csv");
            let mut w = BufWriter::new(fs::File::create(snap_dir.join(name))?);
            state.write_snapshot(&mut w)?;
            w.flush()?;
        }
    }

    Ok(RunOutput {
        summary,
        report,
        traj,
        record,
        diagnostic_cut,
    })
}

fn print_run(cfg: &SimConfig, out: &RunOutput) {
    let s = &out.summary;
    println!("run: {}", cfg.out_dir);
    println!(
        "  peak arrival t = {:.6}, total arrival = {:.6}, survival(T) = {:.6}",
        s.peak_time,
        s.total_arrival,
        out.record.survival.last().copied().unwrap_or(f64::NAN)
    );
    println!("  max continuity residual = {:.3e}", s.max_continuity_residual);
    let rep = &out.report;
    println!(
        "  restriction diagnostic: slopes {:.6e} (restricted) vs {:.6e} (projected), \
         flux readings {:.6e} (point) vs {:.6e} (link)",
        rep.restricted_slope, rep.projected_slope, rep.flux_point, rep.flux_link
    );
    println!(
        "  restriction diagnostic: initial-slope gap {:.3e} (tolerance {:.3e}), \
         max state gap {:.3e}",
        rep.slope_gap(),
        rep.slope_tol,
        rep.max_state_gap()
    );
    if let Some(t_abort) = out.diagnostic_cut {
        println!(
            "  note: restricted run hit the wall at t = {:.4}; diagnostic covers \
             t <= {:.4} only",
            t_abort,
            rep.times.last().copied().unwrap_or(f64::NAN)
        );
    }
    if out.traj.stability_factor > 1.0 {
        println!(
            "  warning: dt * spectral bound = {:.3} > 1; the step cannot resolve the \
             fastest retained mode",
            out.traj.stability_factor
        );
    }
    let edge = out.traj.edge_amp.last().copied().unwrap_or(0.0);
    if edge > 1e-6 {
        println!(
            "  warning: final edge amplitude {edge:.3e}; wall reflections are in play \
             near the end of the run"
        );
    }
}

fn cmd_simulate(args: &CommonArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    if cfg.sweep.is_some() {
        return Err(Failure::Setup(
            "config defines a sweep; use the sweep subcommand".into(),
        ));
    }
    let out = run_simulation(&cfg, args.record_states)?;
    print_run(&cfg, &out);
    if !out.report.consistent() {
        return Err(Failure::Invariant(format!(
            "restriction diagnostic inconsistent: initial-slope gap {:.3e} exceeds {:.3e}",
            out.report.slope_gap(),
            out.report.slope_tol
        )));
    }
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(Failure::Setup(
            "sweep requires sweep.parameter and sweep.values in the config".into(),
        ));
    };
    let parent = cfg.out_dir.clone();
    fs::create_dir_all(&parent)?;

    let subs = sweep
        .values
        .iter()
        .map(|&v| cfg.sweep_instance(sweep.parameter, v, &parent))
        .collect::<Result<Vec<_>, String>>()
        .map_err(Failure::Setup)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(Failure::Setup("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(workers);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Setup(format!("worker pool: {e}")))?;

    let record_states = args.record_states;
    let outputs: Vec<Result<RunOutput, Failure>> = pool.install(|| {
        use rayon::prelude::*;
        subs.par_iter()
            .map(|sub| run_simulation(sub, record_states))
            .collect()
    });

    let mut combined = format!(
        "{},peak_time,total_arrival,max_continuity_residual\n",
        sweep.parameter.key()
    );
    for (i, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(run) => {
                print_run(&subs[i], &run);
                let s = &run.summary;
                combined.push_str(&format!(
                    "{},{},{},{}\n",
                    sweep.values[i],
                    sig17(s.peak_time),
                    sig17(s.total_arrival),
                    sig17(s.max_continuity_residual)
                ));
            }
            Err(f) => {
                let tagged = format!("{}: {}", subs[i].out_dir, f.message());
                return Err(match f {
                    Failure::Setup(_) => Failure::Setup(tagged),
                    Failure::Invariant(_) => Failure::Invariant(tagged),
                    Failure::Numerical(_) => Failure::Numerical(tagged),
                });
            }
        }
    }
    write_file(Path::new(&parent), "summary.csv", &combined)?;
    println!("sweep summary: {}/summary.csv", parent);
    Ok(())
}
