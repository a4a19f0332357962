use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cinedrone::cinematography::{parse_psl, shot_to_manifold, MappingTables};
use cinedrone::harness::scenario::{Helix, Square};
use cinedrone::harness::{
    emit_log, emit_plot_data, load_scenario, run_closed_loop, Mode, RunOptions, RunOutput, Scenario, Trajectory,
};
use cinedrone::regulation::{DareOptions, Regulator};

#[derive(Parser)]
#[command(name = "cinedrone", version, about = "Closed-loop drone cinematography simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for logs, plot data and reports.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Stop after this many steps.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    /// Pace the simulation to wall-clock time.
    #[arg(long, global = true)]
    realtime: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios; independent scenarios run in parallel.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Parse a shot sentence and print its surface coordinates.
    ParsePsl { sentence: String },
    /// Print the step-0 gains K1, N1 and k2 of a scenario.
    Gains { scenario: PathBuf },
    /// Write a canned scenario.
    Demo { kind: DemoKind },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Square,
    Helix,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { scenarios } => run(cli, scenarios),
        Command::ParsePsl { sentence } => {
            let shot = parse_psl(sentence)?;
            let coords = shot_to_manifold::<f64>(&shot, &MappingTables::default());
            println!("{shot}");
            println!("{coords:?}");
            Ok(())
        }
        Command::Gains { scenario } => gains(cli, scenario),
        Command::Demo { kind } => demo(cli, *kind),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn run(cli: &Cli, paths: &[PathBuf]) -> Result<()> {
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let opts = RunOptions {
        steps: cli.steps,
        realtime: cli.realtime,
    };
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| scope.spawn(move || run_one(cli, path, &opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| bail!("worker panicked")))
            .collect()
    });
    let mut failed = 0;
    for (path, result) in paths.iter().zip(results) {
        if let Err(e) = result {
            eprintln!("{}: {e:#}", path.display());
            failed += 1;
        }
    }
    if failed > 0 {
        bail!("{failed} of {} scenarios failed", paths.len());
    }
    Ok(())
}

fn run_one(cli: &Cli, path: &Path, opts: &RunOptions) -> Result<()> {
    let scenario = load(cli, path)?;
    let RunOutput { report, log } = run_closed_loop(&scenario, opts)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    emit_log(&log, cli.out_dir.join(format!("{stem}.csv")))?;
    emit_plot_data(&log, cli.out_dir.join(format!("{stem}_plot.csv")))?;
    let report_json = serde_json::to_string_pretty(&report)?;
    let report_path = cli.out_dir.join(format!("{stem}_report.json"));
    fs::write(&report_path, &report_json).with_context(|| format!("writing {}", report_path.display()))?;
    if !cli.quiet {
        println!(
            "{stem}: steps {} rms {:.4} m max {:.4} m heading rms {:.4} rad saturation {:.3} ({:.2} s)",
            report.steps,
            report.rms_pos_err,
            report.max_pos_err,
            report.rms_heading_err,
            report.saturation_fraction,
            report.wall_time
        );
    }
    Ok(())
}

fn gains(cli: &Cli, path: &Path) -> Result<()> {
    let scenario = load(cli, path)?;
    let first = scenario
        .references()?
        .next()
        .context("scenario produces no reference samples")??;
    let (_, course) = scenario.initial_state(&first);
    let mut regulator = Regulator::new(
        scenario.drone_gains(),
        scenario.regulator_weights(),
        &scenario.heading_config(),
        scenario.dt,
        DareOptions::default(),
    )?;
    let update = regulator.update(course)?;
    let g = update.gains;
    println!("course = {course}");
    println!("K1 ={}", g.k1);
    println!("N1 ={}", g.n1);
    println!("k2 = n2 = {}", g.k2);
    if !cli.quiet {
        println!("(Riccati iterations: {})", update.dare_iterations);
    }
    Ok(())
}

fn demo(cli: &Cli, kind: DemoKind) -> Result<()> {
    let (name, trajectory) = match kind {
        DemoKind::Square => ("demo_square", Trajectory::Square(Square::default())),
        DemoKind::Helix => ("demo_helix", Trajectory::Helix(Helix::default())),
    };
    let mut scenario = Scenario::new(Mode::Trajectory(trajectory));
    scenario.seed = cli.seed.unwrap_or(1);
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let path = cli.out_dir.join(format!("{name}.json"));
    fs::write(&path, scenario.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    if !cli.quiet {
        println!("wrote {}", path.display());
    }
    Ok(())
}
