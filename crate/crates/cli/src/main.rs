//! Command-line front end: ad-hoc solving, grid experiments, workload generation and placement
//! validation.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible placement or failed solver run,
//! 4 I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vmplace::experiment::{
    ExperimentConfig, ExperimentError, OutputFormat, RunRecord, SolverKind, dump_placements, emit_report, execute,
    read_placement, write_report_file,
};
use vmplace::model::check_feasibility;
use vmplace::power::integrate_energy;
use vmplace::schedulers::{FitnessMode, GaConfig, OperatorSet};
use vmplace::workload::{DAY_TIMETABLE_CSV, write_vm_list};
use vmplace::PowerOptions;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "vmplace", version, about = "Energy-aware static VM placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one instance.
    Solve {
        #[arg(long, value_enum)]
        solver: SolverArg,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run BFD and GAPA over a parameter grid and seed list.
    Experiment {
        /// JSON experiment config; flags given alongside override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Solvers to run, in report order.
        #[arg(long = "solver", value_enum)]
        solvers: Vec<SolverArg>,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Include wall-clock time in the report (makes output non-reproducible).
        #[arg(long)]
        record_timing: bool,
    },
    /// Print the built-in one-day timetable.
    GenWorkload {
        /// Emit the expanded per-VM list instead of the timetable.
        #[arg(long)]
        expand: bool,
        /// Fleet whose slowest core sizes the expanded VMs.
        #[arg(long)]
        fleet: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a `vm_id,host_id` placement file against capacity and report its energy.
    Validate {
        #[arg(long)]
        placement: PathBuf,
        #[command(flatten)]
        instance: InstanceArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Bfd,
    Gapa,
    Exact,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Bfd => SolverKind::Bfd,
            SolverArg::Gapa => SolverKind::Gapa,
            SolverArg::Exact => SolverKind::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitnessArg {
    Energy,
    Snapshot,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorsArg {
    Tree,
    Gene,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct InstanceArgs {
    /// Timetable CSV or VM-list CSV; defaults to the built-in timetable.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Fleet JSON; defaults to 50 IBM x3250 and 50 Dell R620 hosts.
    #[arg(long)]
    fleet: Option<PathBuf>,
    /// Whether hosts without VMs still draw idle power.
    #[arg(long, value_enum)]
    idle_powered: Option<Switch>,
}

#[derive(Args)]
struct GaArgs {
    /// Generation count; repeat to build a grid.
    #[arg(long = "generations")]
    generations: Vec<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Crossover probability; repeat to build a grid.
    #[arg(long = "crossover")]
    crossover: Vec<f64>,
    #[arg(long)]
    mutation: Option<f64>,
    /// Seed; repeat for several runs per grid point.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long, value_enum)]
    fitness: Option<FitnessArg>,
    #[arg(long, value_enum)]
    operators: Option<OperatorsArg>,
}

#[derive(Args)]
struct OutputArgs {
    /// Report file; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Also write each run's placement to `<out>.placements/<run_id>.csv`.
    #[arg(long)]
    dump_placements: bool,
}

impl InstanceArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(p) = &self.workload {
            config.workload_path = Some(p.clone());
        }
        if let Some(p) = &self.fleet {
            config.fleet_path = Some(p.clone());
        }
        if let Some(s) = self.idle_powered {
            config.power_options = PowerOptions { idle_hosts_powered: matches!(s, Switch::On) };
        }
    }
}

impl GaArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if !self.generations.is_empty() || !self.crossover.is_empty() {
            let base = GaConfig::default();
            let generations = if self.generations.is_empty() { vec![base.generations] } else { self.generations.clone() };
            let crossover = if self.crossover.is_empty() { vec![base.crossover_prob] } else { self.crossover.clone() };
            config.ga_grid = generations
                .iter()
                .flat_map(|&g| crossover.iter().map(move |&c| GaConfig { generations: g, crossover_prob: c, ..GaConfig::default() }))
                .collect();
        }
        for ga in &mut config.ga_grid {
            if let Some(p) = self.population {
                ga.population_size = p;
            }
            if let Some(m) = self.mutation {
                ga.mutation_prob = m;
            }
            if let Some(f) = self.fitness {
                ga.fitness_mode = match f {
                    FitnessArg::Energy => FitnessMode::Energy,
                    FitnessArg::Snapshot => FitnessMode::SnapshotPower,
                };
            }
            if let Some(o) = self.operators {
                ga.operators = match o {
                    OperatorsArg::Tree => OperatorSet::Tree,
                    OperatorsArg::Gene => OperatorSet::Gene,
                };
            }
        }
        if !self.seeds.is_empty() {
            config.seeds = self.seeds.clone();
        }
    }
}

impl OutputArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(p) = &self.out {
            config.output_path = Some(p.clone());
        }
        if let Some(f) = self.format {
            config.output_format = match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            };
        }
        config.dump_placements |= self.dump_placements;
    }
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { solver, instance, ga, output } => {
            let mut config = ExperimentConfig {
                solvers: vec![solver.into()],
                ga_grid: vec![GaConfig::default()],
                seeds: vec![0],
                ..ExperimentConfig::default()
            };
            instance.apply(&mut config);
            ga.apply(&mut config);
            output.apply(&mut config);
            run(&config)
        }
        Command::Experiment { config: path, solvers, instance, ga, output, record_timing } => {
            let base = match path {
                Some(p) => ExperimentConfig::from_file(&p).map_err(Failure::from),
                None => Ok(ExperimentConfig::default()),
            };
            base.and_then(|mut config| {
                if !solvers.is_empty() {
                    config.solvers = solvers.into_iter().map(SolverKind::from).collect();
                }
                instance.apply(&mut config);
                ga.apply(&mut config);
                output.apply(&mut config);
                config.record_timing |= record_timing;
                run(&config)
            })
        }
        Command::GenWorkload { expand, fleet, out } => gen_workload(expand, fleet, out),
        Command::Validate { placement, instance } => validate(&placement, &instance),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Config(m) => (EXIT_CONFIG, m),
                Failure::Solver(m) => (EXIT_SOLVER, m),
                Failure::Io(m) => (EXIT_IO, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(config: &ExperimentConfig) -> Result<(), Failure> {
    config.validate()?;
    let loaded = config.load_instance()?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let runs = execute(config, &loaded.instance)?;
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    match &config.output_path {
        Some(path) => write_report_file(path, &records, config.output_format)?,
        None => emit_report(&records, config.output_format, io::stdout().lock())?,
    }
    if let Some(dir) = config.placement_dir().filter(|_| config.dump_placements) {
        dump_placements(&dir, &runs, &loaded.instance)?;
    }
    for r in &records {
        eprintln!("{}", summary_line(r));
    }
    let failed: Vec<&RunRecord> = records.iter().filter(|r| r.is_error()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        let ids: Vec<&str> = failed.iter().map(|r| r.run_id.as_str()).collect();
        Err(Failure::Solver(format!("{} run(s) failed: {}", failed.len(), ids.join(", "))))
    }
}

fn summary_line(r: &RunRecord) -> String {
    match (r.total_kwh, &r.error) {
        (Some(kwh), _) => {
            let hosts = r.hosts_used.map(|h| format!(" on {h} hosts")).unwrap_or_default();
            let ratio = r.ratio_vs_bfd.map(|x| format!(", BFD/this {x:.6}")).unwrap_or_default();
            format!("{}: {kwh:.6} kWh{hosts}{ratio}", r.run_id)
        }
        (None, Some(e)) => format!("{}: {} ({e})", r.run_id, r.status),
        (None, None) => format!("{}: {}", r.run_id, r.status),
    }
}

fn gen_workload(expand: bool, fleet: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), Failure> {
    let text = if expand {
        let config = ExperimentConfig { fleet_path: fleet, ..ExperimentConfig::default() };
        let loaded = config.load_instance()?;
        write_vm_list(loaded.instance.vms())
    } else {
        if fleet.is_some() {
            return Err(Failure::Config("--fleet only applies with --expand".into()));
        }
        DAY_TIMETABLE_CSV.to_string()
    };
    match out {
        Some(path) => fs::write(&path, text).map_err(io_failure(&path)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn validate(path: &Path, args: &InstanceArgs) -> Result<(), Failure> {
    let mut config = ExperimentConfig::default();
    args.apply(&mut config);
    let instance = config.load_instance()?.instance;
    let text = fs::read_to_string(path).map_err(io_failure(path))?;
    let placement = read_placement(&text, &instance)?;
    let violations = check_feasibility(&placement, &instance);
    if !violations.is_empty() {
        for v in &violations {
            println!("{v}");
        }
        return Err(Failure::Solver(format!("{} capacity violation(s)", violations.len())));
    }
    let report = integrate_energy(&placement, &instance).map_err(|e| Failure::Solver(e.to_string()))?;
    println!("feasible: {} VMs on {} hosts", instance.vms().len(), placement.hosts_used());
    println!("total_kwh: {:.6}", report.total_kwh);
    Ok(())
}
