//! Experiment runner: loads a workload and a fleet, runs the selected solvers over a GA grid and a
//! seed list, and reports one record per run plus per-grid-point mean and minimum.
//!
//! Runs execute in parallel but records always come back in config order. Wall time is left out
//! of reports unless `record_timing` is set, so the same config yields byte-identical output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HostId, ModelError, Placement, PowerOptions, ProblemInstance};
use crate::schedulers::{
    ExactOptions, FitnessMode, GaConfig, OperatorSet, SolveResult, SolverError, bfd_schedule, exact_schedule_with,
    gapa_schedule,
};
use crate::workload::{
    FleetSpec, SlotConfig, VM_LIST_COLUMNS, VmTemplate, WorkloadError, build_fleet, expand, parse_timetable,
    parse_vm_list, slot_warnings,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("report error: {0}")]
    Report(String),
}

fn read_file(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Bfd,
    Gapa,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Whether a record describes one run or summarises the seeds of a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Run,
    Mean,
    Min,
}

/// Serde name of a unit enum variant, used for CSV cells and CLI values.
fn variant_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit variants serialize to strings"),
    }
}

fn parse_variant<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown value {s:?}"))
}

macro_rules! name_conversions {
    ($($ty:ty),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&variant_name(self))
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                parse_variant(s)
            }
        }
    )*};
}

name_conversions!(SolverKind, OutputFormat, Aggregate);

/// The generations × crossover grid of the reference comparison, other settings at their defaults.
pub fn reference_grid() -> Vec<GaConfig> {
    let mut grid = Vec::new();
    for generations in [500, 1000] {
        for crossover_prob in [0.25, 0.5, 0.75] {
            grid.push(GaConfig { generations, crossover_prob, ..GaConfig::default() });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Timetable or VM-list CSV. The built-in one-day timetable when absent.
    pub workload_path: Option<PathBuf>,
    /// Fleet JSON. 50 IBM x3250 plus 50 Dell R620 when absent.
    pub fleet_path: Option<PathBuf>,
    pub solvers: Vec<SolverKind>,
    /// GA settings; each point runs once per seed and its own `seed` field is ignored.
    pub ga_grid: Vec<GaConfig>,
    pub seeds: Vec<u64>,
    pub power_options: PowerOptions,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub slots: SlotConfig,
    /// Demand of each timetable VM. One PE at the fleet's slowest core speed when absent.
    pub vm_template: Option<VmTemplate>,
    pub exact: ExactOptions,
    /// Write each run's placement under `<output_path>.placements/`.
    pub dump_placements: bool,
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            workload_path: None,
            fleet_path: None,
            solvers: vec![SolverKind::Bfd, SolverKind::Gapa],
            ga_grid: reference_grid(),
            seeds: (0..20).collect(),
            power_options: PowerOptions::default(),
            output_path: None,
            output_format: OutputFormat::Csv,
            slots: SlotConfig::default(),
            vm_template: None,
            exact: ExactOptions::default(),
            dump_placements: false,
            record_timing: false,
        }
    }
}

pub struct LoadedInstance {
    pub instance: ProblemInstance,
    /// Non-fatal workload inconsistencies.
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Parses a JSON config. Relative paths inside it are taken relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let mut config: Self = serde_json::from_str(&read_file(path)?)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.workload_path, &mut config.fleet_path, &mut config.output_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::Config(msg));
        if self.solvers.is_empty() {
            return fail("at least one solver is required".into());
        }
        if self.solvers.contains(&SolverKind::Gapa) {
            if self.ga_grid.is_empty() || self.seeds.is_empty() {
                return fail("gapa needs a non-empty ga_grid and seed list".into());
            }
            for (i, ga) in self.ga_grid.iter().enumerate() {
                ga.validate().map_err(|e| ExperimentError::Config(format!("ga_grid[{i}]: {e}")))?;
            }
        }
        if self.dump_placements && self.output_path.is_none() {
            return fail("dump_placements needs an output path".into());
        }
        Ok(())
    }

    pub fn load_instance(&self) -> Result<LoadedInstance, ExperimentError> {
        let fleet = match &self.fleet_path {
            Some(path) => FleetSpec::from_json(&read_file(path)?)?,
            None => FleetSpec::default(),
        };
        let hosts = build_fleet(&fleet)?;
        let text = match &self.workload_path {
            Some(path) => read_file(path)?,
            None => crate::workload::DAY_TIMETABLE_CSV.to_string(),
        };
        let (vms, warnings) = if is_vm_list(&text) {
            (parse_vm_list(&text)?, Vec::new())
        } else {
            let rows = parse_timetable(&text)?;
            let template = match self.vm_template {
                Some(t) => t,
                None => VmTemplate::cross_class(&hosts).expect("fleet is non-empty"),
            };
            (expand(&rows, &self.slots, template), slot_warnings(&rows, &self.slots))
        };
        let instance = ProblemInstance::with_options(vms, hosts, self.power_options)?;
        Ok(LoadedInstance { instance, warnings })
    }

    /// Directory receiving placement dumps.
    pub fn placement_dir(&self) -> Option<PathBuf> {
        let out = self.output_path.as_ref()?;
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".placements");
        Some(out.with_file_name(name))
    }
}

fn is_vm_list(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|header| header.split(',').map(str::trim).eq(VM_LIST_COLUMNS))
}

/// GA settings as reported, without the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub elite_count: usize,
    pub fitness_mode: FitnessMode,
    pub operators: OperatorSet,
}

impl From<&GaConfig> for GaParams {
    fn from(c: &GaConfig) -> Self {
        Self {
            population_size: c.population_size,
            generations: c.generations,
            crossover_prob: c.crossover_prob,
            mutation_prob: c.mutation_prob,
            elite_count: c.elite_count,
            fitness_mode: c.fitness_mode,
            operators: c.operators,
        }
    }
}

pub const STATUS_OK: &str = "OK";

/// One report line. Energies and ratios are rounded to 6 decimals before they are stored, so a
/// written report reads back to an identical record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub solver: SolverKind,
    pub aggregate: Aggregate,
    pub grid_index: Option<usize>,
    pub ga: Option<GaParams>,
    pub seed: Option<u64>,
    /// `OK` or the solver's error code.
    pub status: String,
    pub error: Option<String>,
    pub total_kwh: Option<f64>,
    pub ratio_vs_bfd: Option<f64>,
    pub hosts_used: Option<usize>,
    pub wall_time_s: Option<f64>,
    /// kWh of every host that drew power.
    pub per_host_kwh: BTreeMap<usize, f64>,
    /// Best fitness after each generation, initial population first.
    pub trajectory: Vec<f64>,
}

impl RunRecord {
    /// A single run that failed. Aggregates never count as failures themselves.
    pub fn is_error(&self) -> bool {
        self.aggregate == Aggregate::Run && self.status != STATUS_OK
    }

    fn new(run_id: String, solver: SolverKind) -> Self {
        Self {
            run_id,
            solver,
            aggregate: Aggregate::Run,
            grid_index: None,
            ga: None,
            seed: None,
            status: STATUS_OK.into(),
            error: None,
            total_kwh: None,
            ratio_vs_bfd: None,
            hosts_used: None,
            wall_time_s: None,
            per_host_kwh: BTreeMap::new(),
            trajectory: Vec::new(),
        }
    }
}

fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

/// A run's record together with the placement it produced, if any.
pub struct Run {
    pub record: RunRecord,
    pub placement: Option<Placement>,
}

enum Job {
    Bfd,
    Gapa { grid: usize, seed: u64 },
    GapaSummary { grid: usize },
    Exact,
}

/// Runs every configured solver on `instance` and returns the runs in config order.
pub fn execute(config: &ExperimentConfig, instance: &ProblemInstance) -> Result<Vec<Run>, ExperimentError> {
    config.validate()?;
    let mut jobs = Vec::new();
    for solver in &config.solvers {
        match solver {
            SolverKind::Bfd => jobs.push(Job::Bfd),
            SolverKind::Exact => jobs.push(Job::Exact),
            SolverKind::Gapa => {
                for grid in 0..config.ga_grid.len() {
                    jobs.extend(config.seeds.iter().map(|&seed| Job::Gapa { grid, seed }));
                    jobs.push(Job::GapaSummary { grid });
                }
            }
        }
    }

    let outcomes: Vec<Option<Result<SolveResult, SolverError>>> = jobs
        .par_iter()
        .map(|job| match job {
            Job::Bfd => Some(bfd_schedule(instance)),
            Job::Exact => Some(exact_schedule_with(instance, config.exact)),
            Job::Gapa { grid, seed } => Some(gapa_schedule(instance, &GaConfig { seed: *seed, ..config.ga_grid[*grid].clone() })),
            Job::GapaSummary { .. } => None,
        })
        .collect();

    let mut runs: Vec<Run> = Vec::with_capacity(jobs.len());
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let mut record = match job {
            Job::Bfd => RunRecord::new("bfd".into(), SolverKind::Bfd),
            Job::Exact => RunRecord::new("exact".into(), SolverKind::Exact),
            Job::Gapa { grid, seed } => {
                let mut r = RunRecord::new(format!("gapa-{grid}-s{seed}"), SolverKind::Gapa);
                r.grid_index = Some(*grid);
                r.ga = Some(GaParams::from(&config.ga_grid[*grid]));
                r.seed = Some(*seed);
                r
            }
            Job::GapaSummary { grid } => {
                let seeds: Vec<&RunRecord> = runs
                    .iter()
                    .map(|r| &r.record)
                    .filter(|r| r.solver == SolverKind::Gapa && r.aggregate == Aggregate::Run && r.grid_index == Some(*grid))
                    .collect();
                let summary = summarize(*grid, &config.ga_grid[*grid], &seeds);
                runs.extend(summary.into_iter().map(|record| Run { record, placement: None }));
                continue;
            }
        };
        let placement = match outcome.expect("solver jobs have outcomes") {
            Ok(result) => {
                fill_from_result(&mut record, &result, config.record_timing);
                Some(result.placement)
            }
            Err(e) => {
                record.status = e.code().into();
                record.error = Some(e.to_string());
                None
            }
        };
        runs.push(Run { record, placement });
    }

    let bfd_kwh = runs
        .iter()
        .find(|r| r.record.solver == SolverKind::Bfd && r.record.status == STATUS_OK)
        .and_then(|r| r.record.total_kwh);
    if let Some(bfd) = bfd_kwh {
        for run in &mut runs {
            run.record.ratio_vs_bfd = run.record.total_kwh.filter(|&k| k > 0.0).map(|k| round6(bfd / k));
        }
    }
    Ok(runs)
}

fn fill_from_result(record: &mut RunRecord, result: &SolveResult, record_timing: bool) {
    record.total_kwh = Some(round6(result.energy.total_kwh));
    record.hosts_used = Some(result.placement.hosts_used());
    record.per_host_kwh = result
        .energy
        .per_host
        .iter()
        .filter(|&(_, &joules)| joules > 0.0)
        .map(|(&h, _)| (h.0, round6(result.energy.host_kwh(h))))
        .collect();
    record.trajectory = result.stats.best_fitness.clone();
    if record_timing {
        record.wall_time_s = Some(round6(result.stats.wall_time.as_secs_f64()));
    }
}

/// Mean and minimum energy over the successful seeds of one grid point.
fn summarize(grid: usize, ga: &GaConfig, seeds: &[&RunRecord]) -> Vec<RunRecord> {
    let ok: Vec<&RunRecord> = seeds.iter().copied().filter(|r| r.status == STATUS_OK).collect();
    [Aggregate::Mean, Aggregate::Min]
        .into_iter()
        .map(|aggregate| {
            let mut r = RunRecord::new(format!("gapa-{grid}-{aggregate}"), SolverKind::Gapa);
            r.aggregate = aggregate;
            r.grid_index = Some(grid);
            r.ga = Some(GaParams::from(ga));
            if ok.is_empty() {
                r.status = "NO_SUCCESSFUL_RUNS".into();
                r.error = Some(format!("all {} seeds failed", seeds.len()));
                return r;
            }
            let kwh = ok.iter().filter_map(|r| r.total_kwh);
            match aggregate {
                Aggregate::Mean => r.total_kwh = Some(round6(kwh.sum::<f64>() / ok.len() as f64)),
                _ => {
                    let best = ok
                        .iter()
                        .min_by(|a, b| a.total_kwh.partial_cmp(&b.total_kwh).expect("energies are finite"))
                        .expect("non-empty");
                    r.total_kwh = best.total_kwh;
                    r.hosts_used = best.hosts_used;
                    r.seed = best.seed;
                }
            }
            r
        })
        .collect()
}

/// Loads the instance, runs the experiment and, when an output path is set, writes the report
/// and any placement dumps. Returns the records in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    config.validate()?;
    let loaded = config.load_instance()?;
    let runs = execute(config, &loaded.instance)?;
    if let Some(path) = &config.output_path {
        let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
        write_report_file(path, &records, config.output_format)?;
        if let Some(dir) = config.placement_dir().filter(|_| config.dump_placements) {
            dump_placements(&dir, &runs, &loaded.instance)?;
        }
    }
    Ok(runs.into_iter().map(|r| r.record).collect())
}

pub fn write_report_file(path: &Path, records: &[RunRecord], format: OutputFormat) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io { path: path.to_path_buf(), source };
    let mut file = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    emit_report(records, format, &mut file)?;
    file.flush().map_err(io_err)
}

pub fn dump_placements(dir: &Path, runs: &[Run], instance: &ProblemInstance) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(io_err)?;
    for run in runs {
        if let Some(p) = &run.placement {
            let path = dir.join(format!("{}.csv", run.record.run_id));
            fs::write(&path, write_placement(p, instance))
                .map_err(|source| ExperimentError::Io { path: path.clone(), source })?;
        }
    }
    Ok(())
}

/// One `vm_id,host_id` line per VM, in instance order, without a header.
pub fn write_placement(placement: &Placement, instance: &ProblemInstance) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for (vm, host) in placement.pairs(instance) {
        writer.write_record([vm, &host.to_string()]).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn read_placement(text: &str, instance: &ProblemInstance) -> Result<Placement, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ExperimentError::Config(format!("placement: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(ExperimentError::Config(format!("placement line {line}: expected vm_id,host_id")));
        }
        let host = record[1]
            .parse::<usize>()
            .map_err(|_| ExperimentError::Config(format!("placement line {line}: bad host id {:?}", &record[1])))?;
        pairs.push((record[0].to_string(), HostId(host)));
    }
    Ok(Placement::from_pairs(instance, pairs)?)
}

pub const REPORT_COLUMNS: [&str; 20] = [
    "run_id",
    "solver",
    "aggregate",
    "grid_index",
    "seed",
    "population_size",
    "generations",
    "crossover_prob",
    "mutation_prob",
    "elite_count",
    "fitness_mode",
    "operators",
    "status",
    "total_kwh",
    "ratio_vs_bfd",
    "hosts_used",
    "wall_time_s",
    "per_host_kwh",
    "trajectory",
    "error",
];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fixed6(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn to_row(r: &RunRecord) -> Vec<String> {
    let ga = r.ga.as_ref();
    vec![
        r.run_id.clone(),
        r.solver.to_string(),
        r.aggregate.to_string(),
        cell(r.grid_index),
        cell(r.seed),
        cell(ga.map(|g| g.population_size)),
        cell(ga.map(|g| g.generations)),
        cell(ga.map(|g| g.crossover_prob)),
        cell(ga.map(|g| g.mutation_prob)),
        cell(ga.map(|g| g.elite_count)),
        cell(ga.map(|g| variant_name(&g.fitness_mode))),
        cell(ga.map(|g| variant_name(&g.operators))),
        r.status.clone(),
        fixed6(r.total_kwh),
        fixed6(r.ratio_vs_bfd),
        cell(r.hosts_used),
        fixed6(r.wall_time_s),
        r.per_host_kwh.iter().map(|(h, k)| format!("{h}={k:.6}")).collect::<Vec<_>>().join(";"),
        r.trajectory.iter().map(|f| format!("{f:e}")).collect::<Vec<_>>().join(";"),
        r.error.clone().unwrap_or_default(),
    ]
}

fn parse_cell<T: FromStr>(s: &str, column: &str) -> Result<Option<T>, ExperimentError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| ExperimentError::Report(format!("bad {column} value {s:?}")))
}

fn required<T: FromStr>(s: &str, column: &str) -> Result<T, ExperimentError> {
    parse_cell(s, column)?.ok_or_else(|| ExperimentError::Report(format!("missing {column}")))
}

fn from_row(row: &csv::StringRecord) -> Result<RunRecord, ExperimentError> {
    let col = |name: &str| row.get(REPORT_COLUMNS.iter().position(|c| *c == name).expect("known column")).unwrap_or("");
    let ga = match parse_cell::<usize>(col("population_size"), "population_size")? {
        None => None,
        Some(population_size) => Some(GaParams {
            population_size,
            generations: required(col("generations"), "generations")?,
            crossover_prob: required(col("crossover_prob"), "crossover_prob")?,
            mutation_prob: required(col("mutation_prob"), "mutation_prob")?,
            elite_count: required(col("elite_count"), "elite_count")?,
            fitness_mode: parse_variant(col("fitness_mode")).map_err(ExperimentError::Report)?,
            operators: parse_variant(col("operators")).map_err(ExperimentError::Report)?,
        }),
    };
    let mut per_host_kwh = BTreeMap::new();
    for entry in col("per_host_kwh").split(';').filter(|s| !s.is_empty()) {
        let (h, k) = entry.split_once('=').ok_or_else(|| ExperimentError::Report(format!("bad per-host entry {entry:?}")))?;
        per_host_kwh.insert(required(h, "per_host_kwh")?, required(k, "per_host_kwh")?);
    }
    let trajectory = col("trajectory")
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|f| required(f, "trajectory"))
        .collect::<Result<_, _>>()?;
    let error = col("error");
    Ok(RunRecord {
        run_id: col("run_id").to_string(),
        solver: required(col("solver"), "solver")?,
        aggregate: required(col("aggregate"), "aggregate")?,
        grid_index: parse_cell(col("grid_index"), "grid_index")?,
        ga,
        seed: parse_cell(col("seed"), "seed")?,
        status: col("status").to_string(),
        error: (!error.is_empty()).then(|| error.to_string()),
        total_kwh: parse_cell(col("total_kwh"), "total_kwh")?,
        ratio_vs_bfd: parse_cell(col("ratio_vs_bfd"), "ratio_vs_bfd")?,
        hosts_used: parse_cell(col("hosts_used"), "hosts_used")?,
        wall_time_s: parse_cell(col("wall_time_s"), "wall_time_s")?,
        per_host_kwh,
        trajectory,
    })
}

/// Writes records as CSV with [`REPORT_COLUMNS`] or as a JSON array.
pub fn emit_report<W: Write>(records: &[RunRecord], format: OutputFormat, sink: W) -> Result<(), ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::Report("no records to write".into()));
    }
    let sink_err = |e: io::Error| ExperimentError::Io { path: PathBuf::from("<report>"), source: e };
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            let csv_err = |e: csv::Error| match e.into_kind() {
                csv::ErrorKind::Io(e) => sink_err(e),
                other => ExperimentError::Report(format!("{other:?}")),
            };
            writer.write_record(REPORT_COLUMNS).map_err(csv_err)?;
            for r in records {
                writer.write_record(to_row(r)).map_err(csv_err)?;
            }
            writer.flush().map_err(sink_err)
        }
        OutputFormat::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, records).map_err(|e| sink_err(e.into()))?;
            sink.write_all(b"\n").map_err(sink_err)
        }
    }
}

pub fn read_report(text: &str, format: OutputFormat) -> Result<Vec<RunRecord>, ExperimentError> {
    match format {
        OutputFormat::Json => serde_json::from_str(text).map_err(|e| ExperimentError::Report(e.to_string())),
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let header = reader.headers().map_err(|e| ExperimentError::Report(e.to_string()))?;
            if header.iter().ne(REPORT_COLUMNS) {
                return Err(ExperimentError::Report("unexpected report columns".into()));
            }
            reader
                .records()
                .map(|row| from_row(&row.map_err(|e| ExperimentError::Report(e.to_string()))?))
                .collect()
        }
    }
}
