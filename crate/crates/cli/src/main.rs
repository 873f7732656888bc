//! `evacsim` command-line front end.
//!
//! Exit codes: 0 success, 1 bad input, 2 internal error.

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evacsim::codes::Coded;
use evacsim::demo::{emit_demo_assets, POPULATION_SEED};
use evacsim::engine::{write_event_log, RunConfig, Scene};
use evacsim::geo::{load_world, Capacity, World};
use evacsim::population::{load_population, save_population, synthesize, HouseholdProfile, PopulationSpec};
use evacsim::risk::{Rainfall, Scenario, StormSignal, TimeOfDay, Weights};
use evacsim::stats::{self, Mode, Slice};
use evacsim::sweep::{self, Combo, SweepRow, SweepSpec};

/// Environment variable naming the default asset directory.
const ASSETS_ENV: &str = "EVACSIM_ASSETS";

#[derive(Parser)]
#[command(
    name = "evacsim",
    version,
    about = "Agent-based typhoon preemptive evacuation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a world file (and optionally a population) for consistency.
    Validate {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        population: Option<PathBuf>,
    },
    /// Synthesize a household population CSV.
    GenPopulation {
        #[arg(long)]
        world: PathBuf,
        /// Population spec file; built-in defaults when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = POPULATION_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one simulation and print a summary.
    Simulate(SimulateArgs),
    /// Run a parameter sweep and write one CSV row per run.
    Sweep(SweepArgs),
    /// Regress evacuated on the sweep parameters.
    Analyze {
        /// Sweep results CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// no-intercept, drop-one-weight or intercept-full.
        #[arg(long, default_value = "drop-one-weight")]
        mode: String,
        /// Fit the remaining columns instead of failing on aliased ones.
        #[arg(long)]
        drop_aliased: bool,
        /// Also write the coefficients as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mean evacuated against each weight for one scenario and threshold.
    Series {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the demo village, population and sweep spec.
    Demo {
        /// Target directory; defaults to $EVACSIM_ASSETS, then `demo-assets`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Storm signal level 1-3 (with --raw: code 0.25, 0.5 or 1.0).
    #[arg(long, default_value = "1")]
    storm: String,
    /// Rainfall advisory yellow, orange or red (with --raw: 0.25, 0.5 or 1.0).
    #[arg(long, default_value = "yellow")]
    rain: String,
    /// day or night (with --raw: 0.5 or 1.0).
    #[arg(long, default_value = "day")]
    time: String,
    /// Read the scenario flags as numeric risk codes.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    population: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0.7)]
    threshold: f64,
    /// w_cdm,w_hrf,w_crf
    #[arg(long, default_value = "0.1,0.1,0.1")]
    weights: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    run: RunArgs,
    /// Write the event log CSV here.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Write a one-row results CSV (sweep schema) here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 570)]
    households: usize,
    #[arg(long, default_value_t = 15)]
    rescuers: usize,
    #[arg(long, default_value_t = 4)]
    shelter_managers: usize,
    /// Household perception radius, m.
    #[arg(long, default_value_t = 50.0)]
    household_radius: f64,
    /// Rescuer perception radius, m.
    #[arg(long, default_value_t = 50.0)]
    rescuer_radius: f64,
    /// Shelter manager perception radius, m.
    #[arg(long, default_value_t = 50.0)]
    shelter_radius: f64,
    /// Household walking speed, m/s.
    #[arg(long, default_value_t = 1.4)]
    household_speed: f64,
    /// Rescuer speed, m/s.
    #[arg(long, default_value_t = 3.0)]
    rescuer_speed: f64,
    #[arg(long, default_value_t = 10.0)]
    tick_seconds: f64,
    #[arg(long, default_value_t = 5000)]
    max_ticks: u32,
    /// Earliest tick of the friends/media fallback warning.
    #[arg(long, default_value_t = 1000)]
    fallback_min: u32,
    /// Latest tick of the friends/media fallback warning.
    #[arg(long, default_value_t = 3000)]
    fallback_max: u32,
    /// Share of fallback warnings that come from media rather than friends.
    #[arg(long, default_value_t = 0.5)]
    media_share: f64,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            nb_households: self.households,
            nb_rescuers: self.rescuers,
            nb_shelter_managers: self.shelter_managers,
            household_radius: self.household_radius,
            rescuer_radius: self.rescuer_radius,
            shelter_radius: self.shelter_radius,
            household_speed: self.household_speed,
            rescuer_speed: self.rescuer_speed,
            tick_seconds: self.tick_seconds,
            max_ticks: self.max_ticks,
            fallback_ticks: (self.fallback_min, self.fallback_max),
            fallback_media_share: self.media_share,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; output is identical for any value.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides `world` in the sweep file.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Overrides `population` in the sweep file.
    #[arg(long)]
    population: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

/// Relative paths missing from the working directory are looked up in
/// `$EVACSIM_ASSETS`.
fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(ASSETS_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn input_error(message: impl Into<String>) -> evacsim::Error {
    evacsim::Error::InvalidInput(message.into())
}

impl ScenarioArgs {
    fn parse(&self) -> evacsim::Result<Scenario> {
        if self.raw {
            let code = |flag: &str, v: &str| {
                v.parse::<f64>()
                    .map_err(|_| input_error(format!("--{flag}: `{v}` is not a number")))
            };
            let storm = StormSignal::from_code(code("storm", &self.storm)?);
            let rainfall = Rainfall::from_code(code("rain", &self.rain)?);
            let time_of_day = TimeOfDay::from_code(code("time", &self.time)?);
            match (storm, rainfall, time_of_day) {
                (Some(storm), Some(rainfall), Some(time_of_day)) => Ok(Scenario {
                    storm,
                    rainfall,
                    time_of_day,
                }),
                _ => Err(input_error(
                    "raw scenario codes must be 0.25/0.5/1.0 (storm, rain) and 0.5/1.0 (time)",
                )),
            }
        } else {
            let storm = self
                .storm
                .parse::<u8>()
                .ok()
                .and_then(StormSignal::from_level)
                .ok_or_else(|| input_error(format!("--storm: expected 1, 2 or 3, got `{}`", self.storm)))?;
            let rainfall = Rainfall::from_label(&self.rain)
                .ok_or_else(|| input_error(format!("--rain: expected yellow, orange or red, got `{}`", self.rain)))?;
            let time_of_day = TimeOfDay::from_label(&self.time)
                .ok_or_else(|| input_error(format!("--time: expected day or night, got `{}`", self.time)))?;
            Ok(Scenario {
                storm,
                rainfall,
                time_of_day,
            })
        }
    }
}

fn parse_weights(s: &str) -> evacsim::Result<Weights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| input_error(format!("--weights: cannot parse `{s}`")))?;
    match parts[..] {
        [cdm, hrf, crf] => Weights::new(cdm, hrf, crf),
        _ => Err(input_error(format!("--weights: expected w_cdm,w_hrf,w_crf, got `{s}`"))),
    }
}

fn load_inputs(world: &Path, population: &Path) -> evacsim::Result<(World, Vec<HouseholdProfile>)> {
    let world = load_world(resolve(world))?;
    let profiles = load_population(resolve(population), &world)?;
    Ok((world, profiles))
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> evacsim::Result<()>) -> evacsim::Result<()> {
    let io = |e| evacsim::Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    f(&mut file)?;
    file.flush().map_err(io)
}

fn simulate(args: &SimulateArgs) -> evacsim::Result<()> {
    let (world, profiles) = load_inputs(&args.world, &args.population)?;
    let cfg = RunConfig {
        scenario: args.scenario.parse()?,
        weights: parse_weights(&args.weights)?,
        threshold: args.threshold,
        seed: args.seed,
        record_events: args.events.is_some(),
        ..args.run.config()
    };
    let result = Scene::new(&world, &profiles)?.run(&cfg)?;
    let mut out = std::io::stdout().lock();
    let c = &result.status_counts;
    let lines = [
        format!("evacuated={}", result.evacuated),
        format!("households={}", profiles.len()),
        format!("sheltered={}", c.sheltered),
        format!("evacuating={}", c.evacuating),
        format!("staying={}", c.staying),
        format!("unaware={}", c.unaware),
        format!("ticks={}", result.ticks_elapsed),
        format!("truncated={}", result.truncated),
        format!("redirects={}", result.redirects),
    ];
    for line in lines {
        writeln!(out, "{line}").ok();
    }
    for s in &result.shelters {
        let cap = match s.capacity {
            Capacity::Limited(c) => c.to_string(),
            Capacity::Unbounded => "unbounded".into(),
        };
        writeln!(
            out,
            "shelter.{}=households:{} persons:{} capacity:{}",
            s.id, s.households, s.occupancy, cap
        )
        .ok();
    }
    if let Some(path) = &args.events {
        write_file(path, |w| write_event_log(&result.event_log, w))?;
    }
    if let Some(path) = &args.summary {
        let row = SweepRow {
            combo_index: 0,
            replicate: 0,
            seed: cfg.seed,
            combo: Combo {
                scenario: cfg.scenario,
                threshold: cfg.threshold,
                weights: cfg.weights,
            },
            evacuated: result.evacuated,
            ticks: result.ticks_elapsed,
            truncated: result.truncated,
        };
        write_file(path, |w| sweep::write_rows(&[row], w))?;
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> evacsim::Result<()> {
    let spec = SweepSpec::load(resolve(&args.spec))?;
    let world_path = args
        .world
        .clone()
        .or_else(|| spec.world.clone())
        .ok_or_else(|| input_error("no world: pass --world or set `world` in the sweep file"))?;
    let pop_path = args
        .population
        .clone()
        .or_else(|| spec.population.clone())
        .ok_or_else(|| input_error("no population: pass --population or set `population` in the sweep file"))?;
    let (world, profiles) = load_inputs(&world_path, &pop_path)?;
    let scene = Scene::new(&world, &profiles)?;
    let rows = sweep::execute(&spec, &scene, &args.run.config(), args.workers)?;
    write_file(&args.out, |w| sweep::write_rows(&rows, w))?;
    let truncated = rows.iter().filter(|r| r.truncated).count();
    eprintln!(
        "{} runs written to {} ({truncated} truncated)",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

fn analyze(input: &Path, mode: &str, drop_aliased: bool, csv: Option<&Path>) -> evacsim::Result<()> {
    let mode = Mode::from_label(mode).ok_or_else(|| {
        input_error(format!(
            "--mode: expected no-intercept, drop-one-weight or intercept-full, got `{mode}`"
        ))
    })?;
    let rows = sweep::load_rows(resolve(input))?;
    let report = stats::fit_ols(&stats::design_matrix(&rows, mode)?, drop_aliased)?;
    print!("{}", report.to_table());
    if let Some(path) = csv {
        write_file(path, |w| report.write_csv(w))?;
    }
    Ok(())
}

fn series(input: &Path, scenario: &ScenarioArgs, threshold: f64, out: Option<&Path>) -> evacsim::Result<()> {
    let rows = sweep::load_rows(resolve(input))?;
    let slice = Slice {
        scenario: scenario.parse()?,
        threshold,
    };
    let points = stats::series(&rows, &slice)?;
    match out {
        Some(path) => write_file(path, |w| stats::write_series(&points, w)),
        None => stats::write_series(&points, std::io::stdout().lock()),
    }
}

fn dispatch(cli: Cli) -> evacsim::Result<()> {
    match cli.command {
        Command::Validate { world, population } => {
            let w = load_world(resolve(&world))?;
            println!(
                "world ok: {} nodes, {} edges, {} buildings, {} waterways, {} shelters, {} rescuer starts",
                w.node_count(),
                w.edges().len(),
                w.buildings().len(),
                w.waterways().len(),
                w.shelters().len(),
                w.rescuer_starts().len()
            );
            if let Some(p) = population {
                let profiles = load_population(resolve(&p), &w)?;
                Scene::new(&w, &profiles)?;
                println!("population ok: {} households", profiles.len());
            }
            Ok(())
        }
        Command::GenPopulation { world, spec, seed, out } => {
            let w = load_world(resolve(&world))?;
            let spec = match spec {
                Some(p) => PopulationSpec::load(resolve(&p))?,
                None => PopulationSpec::default(),
            };
            let profiles = synthesize(&spec, &w, seed)?;
            save_population(&profiles, &out)?;
            eprintln!("{} households written to {}", profiles.len(), out.display());
            Ok(())
        }
        Command::Simulate(args) => simulate(&args),
        Command::Sweep(args) => run_sweep(&args),
        Command::Analyze {
            input,
            mode,
            drop_aliased,
            csv,
        } => analyze(&input, &mode, drop_aliased, csv.as_deref()),
        Command::Series {
            input,
            scenario,
            threshold,
            out,
        } => series(&input, &scenario, threshold, out.as_deref()),
        Command::Demo { dir } => {
            let dir = dir
                .or_else(|| std::env::var_os(ASSETS_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("demo-assets"));
            let assets = emit_demo_assets(&dir)?;
            for p in [
                &assets.world,
                &assets.population_spec,
                &assets.population,
                &assets.sweep_spec,
            ] {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match panic::catch_unwind(AssertUnwindSafe(|| dispatch(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if let evacsim::Error::RankDeficient { dependencies, .. } = &e {
                for d in dependencies {
                    eprintln!("  {} is a linear combination of {}", d[0], d[1..].join(", "));
                }
            }
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
        Err(_) => ExitCode::from(2),
    }
}
