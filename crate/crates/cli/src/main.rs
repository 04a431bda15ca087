//! `levelcross` command-line driver.

mod output;
mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use levelcross::epfind::{find_ep, EpError, EpOptions, SearchBox};
use levelcross::model::{CouplingProfile, Scenario, SweepGrid, Tunable};
use levelcross::par::with_thread_count;
use levelcross::scenarios::{preset, PresetId};
use levelcross::sweep::{detect_crossings, run_sweep, SweepError, SweepOptions};

use output::{GridEntry, RunManifest, Tolerances};

#[derive(Parser)]
#[command(name = "levelcross", version, about = "Level crossings and exceptional points of open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the control parameter and write trajectories and crossings.
    Sweep(SweepArgs),
    /// Locate an exceptional point in a two-parameter box.
    Ep(EpArgs),
    /// Run every figure preset into one directory tree.
    Reproduce(ReproduceArgs),
    /// Write the built-in presets as scenario files.
    Presets(PresetsArgs),
}

#[derive(Args)]
struct Source {
    /// Built-in scenario (fig1 .. fig9, two_cross_two).
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<PresetId>,
    /// Scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Coupling profile override for two-level scenarios.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Re-run the scenario recorded in a manifest.
    #[arg(long, conflicts_with_all = ["preset", "scenario", "profile", "grid"])]
    from_manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write energies.svg and widths.svg.
    #[arg(long)]
    svg: bool,
    /// Grid override, `a_min:a_max:steps`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<SweepGrid>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EpArgs {
    #[command(flatten)]
    source: Source,
    /// Tuned parameter, `gamma_half:<level>` or `energy_offset:<level>`.
    #[arg(long, default_value = "gamma_half:2")]
    tune: Tunable,
    /// Search box, `a_lo:a_hi,t_lo:t_hi`.
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    search_box: SearchBox,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Run all nine figure presets.
    #[arg(long, required = true)]
    all: bool,
    /// Output root; each preset gets its own subdirectory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PresetsArgs {
    /// Output directory.
    #[arg(long, default_value = "scenarios")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Constant,
    Gaussian,
}

impl From<ProfileArg> for CouplingProfile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Constant => CouplingProfile::Constant,
            ProfileArg::Gaussian => CouplingProfile::Gaussian,
        }
    }
}

fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{text}'"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn parse_grid(text: &str) -> Result<SweepGrid, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(format!("expected a_min:a_max:steps, got '{text}'"));
    };
    let (a_min, a_max) = parse_range(&format!("{lo}:{hi}"))?;
    let steps = steps.trim().parse::<usize>().map_err(|e| format!("'{steps}': {e}"))?;
    SweepGrid::new(a_min, a_max, steps).map_err(|e| e.to_string())
}

fn parse_box(text: &str) -> Result<SearchBox, String> {
    let (a, t) = text
        .split_once(',')
        .ok_or_else(|| format!("expected a_lo:a_hi,t_lo:t_hi, got '{text}'"))?;
    SearchBox::new(parse_range(a)?, parse_range(t)?).map_err(|e| e.to_string())
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
    NotConverged,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
            Failure::NotConverged => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "invalid input: {e:#}"),
            Failure::Solver(e) => write!(f, "solver failure: {e:#}"),
            Failure::NotConverged => f.write_str("exceptional-point search did not converge"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn load_scenario(source: &Source) -> Outcome<Scenario> {
    let base = match (&source.preset, &source.scenario) {
        (Some(id), None) => preset(*id),
        (None, Some(path)) => Scenario::load(path).map_err(|e| anyhow!("{e}"))?,
        _ => return Err(anyhow!("give exactly one of --preset or --scenario").into()),
    };
    match source.profile {
        None => Ok(base),
        Some(_) if base.order() != 2 => {
            Err(anyhow!("--profile applies to two-level scenarios (fig1, fig2, fig3) only").into())
        }
        Some(p) => Ok(base.with_profile(p.into()).map_err(|e| anyhow!("{e}"))?),
    }
}

/// Six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.5}");
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn threaded<R: Send>(threads: Option<usize>, f: impl FnOnce() -> Outcome<R> + Send) -> Outcome<R> {
    with_thread_count(threads, f).map_err(|e| Failure::Input(anyhow!("--threads: {e}")))?
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(())
}

fn sweep_into(scenario: &Scenario, out: &Path, svg: bool, threads: Option<usize>) -> Outcome {
    create_dir(out)?;
    let start = Instant::now();
    let trajectories = threaded(threads, || {
        run_sweep(scenario, &SweepOptions::default()).map_err(|e| match e {
            SweepError::Model { .. } => Failure::Input(anyhow!("{e}")),
            SweepError::Solver { .. } => Failure::Solver(anyhow!("{e}")),
        })
    })?;
    let crossings = detect_crossings(&trajectories);
    let mut outputs = vec![
        output::write(out, "trajectories.csv", &output::trajectories_csv(&trajectories))?,
        output::write(out, "crossings.json", &output::crossings_json(&crossings))?,
    ];
    if svg {
        let (energies, widths) = output::plots(scenario, &trajectories);
        outputs.push(output::write(out, "energies.svg", &energies)?);
        outputs.push(output::write(out, "widths.svg", &widths)?);
    }
    let manifest = RunManifest {
        command: "sweep".into(),
        label: scenario.label().to_string(),
        grid: GridEntry::from(scenario.grid()),
        tolerances: Tolerances::current(),
        version: env!("CARGO_PKG_VERSION").into(),
        threads,
        outputs: outputs
            .iter()
            .chain(std::iter::once(&out.join("manifest.json")))
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        duration_seconds: start.elapsed().as_secs_f64(),
        scenario: serde_json::from_str(&scenario.to_json()).expect("scenario JSON parses"),
    };
    output::write(out, "manifest.json", &output::pretty(&manifest))?;
    println!(
        "{}: {} points, {} branches, {} crossing events -> {}",
        scenario.label(),
        scenario.grid().steps,
        scenario.order(),
        crossings.len(),
        out.display()
    );
    for c in &crossings {
        println!(
            "  {} between branches {} and {} at a = {}",
            c.kind.name(),
            c.branches.0 + 1,
            c.branches.1 + 1,
            sig6(c.a_cr)
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Outcome {
    let scenario = match &args.from_manifest {
        Some(path) => RunManifest::load(path)?.scenario()?,
        None => {
            let s = load_scenario(&args.source)?;
            match args.grid {
                Some(g) => s.with_grid(g).map_err(|e| anyhow!("{e}"))?,
                None => s,
            }
        }
    };
    sweep_into(&scenario, &args.out, args.svg, args.threads)
}

fn cmd_ep(args: EpArgs) -> Outcome {
    let scenario = load_scenario(&args.source)?;
    create_dir(&args.out)?;
    let report = threaded(args.threads, || {
        find_ep(&scenario, args.tune, args.search_box, &EpOptions::default()).map_err(|e| match e {
            EpError::Solver { .. } => Failure::Solver(anyhow!("{e}")),
            other => Failure::Input(anyhow!("{other}")),
        })
    })?;
    output::write(&args.out, "ep.json", &output::ep_json(&report))?;
    println!(
        "{} {}: ({}, {}) gap {:.5e}",
        scenario.label(),
        if report.converged { "EP" } else { "best candidate" },
        sig6(report.location.0),
        sig6(report.location.1),
        report.gap
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn cmd_reproduce(args: ReproduceArgs) -> Outcome {
    for id in PresetId::FIGURES {
        sweep_into(&preset(id), &args.out.join(id.name()), true, args.threads)?;
    }
    Ok(())
}

fn cmd_presets(args: PresetsArgs) -> Outcome {
    create_dir(&args.out)?;
    for id in PresetId::ALL {
        let path = args.out.join(format!("{}.json", id.name()));
        preset(id).save(&path).map_err(|e| anyhow!("{e}"))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ep(a) => cmd_ep(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Presets(a) => cmd_presets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("levelcross: {f}");
            ExitCode::from(f.code())
        }
    }
}
