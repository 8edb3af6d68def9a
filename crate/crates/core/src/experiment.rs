//! Seeded parameter-sweep runner.
//!
//! Every (β, γ, I₀) cell runs `runs` independent simulations. Within a run
//! each epoch performs, in order: epidemic step, infection tagging, risk
//! step, metrics snapshot. Seeds are derived from the master seed and the
//! cell's parameter values (not its position in the grid), so adding or
//! removing a cell never changes another cell's output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::epidemic::{seed_infections, step_epidemic, tag_infections, EpidemicError, EpidemicModel, EpidemicParams};
use crate::graph::{DatasetFormat, Delimiter, GraphError, PersonId, SyntheticSpec, TemporalGraph, TimeColumn};
use crate::metrics::{
    write_series_csv, write_summary_csv, MetricsError, MetricsFrame, Regions, RunAccumulator, RunSummary,
    DEFAULT_ALERT_THRESHOLD,
};
use crate::risk::{step_population, ExposureModel, RiskError, RiskOptions, RiskState, VulnerabilityModel, WeightModel};
use crate::scalar::Scalar;
use crate::seeding::{tag, SeedStream};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("data error: {0}")]
    Data(String),
}

impl ExperimentError {
    /// Process exit status: 1 config, 2 I/O, 3 data consistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Io { .. } => 2,
            ExperimentError::Data(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_owned(), source }
    }

    pub fn graph(path: &Path, err: GraphError) -> Self {
        match err {
            GraphError::Io(source) => Self::io(path, source),
            GraphError::InvalidSpec(msg) => ExperimentError::Config(msg),
            other => ExperimentError::Data(other.to_string()),
        }
    }
}

impl From<RiskError> for ExperimentError {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::InvalidModel(_) | RiskError::InvalidArgument(_) | RiskError::MissingRssi => {
                ExperimentError::Config(e.to_string())
            }
            _ => ExperimentError::Data(e.to_string()),
        }
    }
}

impl From<EpidemicError> for ExperimentError {
    fn from(e: EpidemicError) -> Self {
        match e {
            EpidemicError::InvalidParameter(_) => ExperimentError::Config(e.to_string()),
            _ => ExperimentError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for ExperimentError {
    fn from(e: MetricsError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

/// Full description of a sweep. Parsed from TOML; every key can be
/// overridden from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub delimiter: Delimiter,
    pub time_column: TimeColumn,
    pub synthetic: Option<SyntheticSpec>,
    /// Seed for the synthetic graph; defaults to `master_seed`.
    pub synthetic_seed: Option<u64>,
    pub delta_t: u32,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub i0: Vec<f64>,
    pub runs: usize,
    pub master_seed: u64,
    pub alert_threshold: f64,
    pub exposure: ExposureModel<f64>,
    pub vulnerability: VulnerabilityModel<f64>,
    pub weight: WeightModel<f64>,
    pub pin_infected: bool,
    /// Named person groups for region scores; rooms when absent.
    pub regions: Option<BTreeMap<String, Vec<String>>>,
    /// Also write every run's own series.
    pub write_runs: bool,
    pub output: PathBuf,
    /// Worker threads; `None` lets the pool decide. Never affects results.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            delimiter: Delimiter::Comma,
            time_column: TimeColumn::Epoch,
            synthetic: None,
            synthetic_seed: None,
            delta_t: crate::graph::DEFAULT_DELTA_T_SECONDS,
            beta: vec![0.0, 0.5, 1.0],
            gamma: vec![0.0, 0.75],
            i0: vec![0.0, 0.01, 0.5],
            runs: 50,
            master_seed: 2020,
            alert_threshold: DEFAULT_ALERT_THRESHOLD,
            exposure: ExposureModel::default(),
            vulnerability: VulnerabilityModel::default(),
            weight: WeightModel::default(),
            pin_infected: true,
            regions: None,
            write_runs: false,
            output: PathBuf::from("out"),
            workers: None,
        }
    }
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub beta: f64,
    pub gamma: f64,
    pub i0: f64,
}

impl Cell {
    pub fn seed(&self, master: u64) -> SeedStream {
        SeedStream::new(master).child(&[self.beta.to_bits(), self.gamma.to_bits(), self.i0.to_bits()])
    }

    pub fn run_seed(&self, master: u64, run: usize) -> u64 {
        self.seed(master).child(&[run as u64]).value()
    }

    pub fn file_stem(&self) -> String {
        format!("cell_b{}_g{}_i{}", self.beta, self.gamma, self.i0)
    }
}

fn check_list(name: &str, values: &[f64]) -> Result<(), ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Config(format!("{name} list is empty")));
    }
    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ExperimentError::Config(format!("{name} value {bad} outside [0, 1]")));
    }
    let distinct: BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
    if distinct.len() != values.len() {
        return Err(ExperimentError::Config(format!("{name} list has duplicates")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        match (&self.dataset, &self.synthetic) {
            (None, None) => return Err(ExperimentError::Config("need a dataset path or a synthetic spec".into())),
            (Some(_), Some(_)) => {
                return Err(ExperimentError::Config("dataset and synthetic are mutually exclusive".into()))
            }
            _ => {}
        }
        check_list("beta", &self.beta)?;
        check_list("gamma", &self.gamma)?;
        check_list("i0", &self.i0)?;
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be at least 1".into()));
        }
        if self.delta_t == 0 {
            return Err(ExperimentError::Config("delta_t must be positive".into()));
        }
        if !(self.alert_threshold > 0.0) {
            return Err(ExperimentError::Config("alert_threshold must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(ExperimentError::Config("workers must be at least 1".into()));
        }
        if matches!(self.exposure, ExposureModel::RssiMapped) {
            return Err(ExperimentError::Config("rssi-mapped exposure needs live RSSI readings; not simulable".into()));
        }
        self.exposure.validate()?;
        self.weight.validate()?;
        self.vulnerability.validate()?;
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &gamma in &self.gamma {
            for &beta in &self.beta {
                for &i0 in &self.i0 {
                    out.push(Cell { beta, gamma, i0 });
                }
            }
        }
        out
    }

    pub fn load_graph(&self) -> Result<TemporalGraph, ExperimentError> {
        match (&self.dataset, &self.synthetic) {
            (Some(path), _) => {
                let format =
                    DatasetFormat { delimiter: self.delimiter, time_column: self.time_column, delta_t_seconds: self.delta_t };
                TemporalGraph::ingest_path(path, &format).map_err(|e| ExperimentError::graph(path, e))
            }
            (None, Some(spec)) => {
                let spec = SyntheticSpec { delta_t_seconds: self.delta_t, ..*spec };
                TemporalGraph::generate_synthetic(&spec, self.synthetic_seed.unwrap_or(self.master_seed))
                    .map_err(|e| ExperimentError::graph(Path::new("<synthetic>"), e))
            }
            (None, None) => Err(ExperimentError::Config("need a dataset path or a synthetic spec".into())),
        }
    }

    pub fn build_regions(&self, graph: &TemporalGraph) -> Result<Regions, ExperimentError> {
        let Some(groups) = &self.regions else { return Ok(Regions::Rooms) };
        let mut out = Vec::with_capacity(groups.len());
        for (name, members) in groups {
            let mut ids: Vec<PersonId> = members
                .iter()
                .map(|m| {
                    graph.person_id(m).ok_or_else(|| ExperimentError::Data(format!("region {name:?}: unknown person {m:?}")))
                })
                .collect::<Result<_, _>>()?;
            ids.sort_unstable();
            ids.dedup();
            out.push((name.clone(), ids));
        }
        Regions::fixed(out).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// The config as recorded in the manifest: output location and worker
    /// count are left out since neither affects results.
    pub fn canonical_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
            map.remove("workers");
        }
        value
    }

    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical_json()).expect("json serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Model settings shared by all runs of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings<T> {
    pub exposure: ExposureModel<T>,
    pub weight: WeightModel<T>,
    pub vulnerability: VulnerabilityModel<T>,
    pub alert_threshold: T,
    pub risk: RiskOptions,
}

impl<T: Scalar> Default for RunSettings<T> {
    fn default() -> Self {
        Self {
            exposure: ExposureModel::default(),
            weight: WeightModel::default(),
            vulnerability: VulnerabilityModel::default(),
            alert_threshold: T::lit(DEFAULT_ALERT_THRESHOLD),
            risk: RiskOptions::default(),
        }
    }
}

impl RunSettings<f64> {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            exposure: config.exposure,
            weight: config.weight,
            vulnerability: config.vulnerability,
            alert_threshold: config.alert_threshold,
            risk: RiskOptions { pin_infected: config.pin_infected },
        }
    }
}

/// Initial state of a run: sampled vulnerabilities, seeded infections, tags applied.
pub fn initial_state<T: Scalar>(
    graph: &TemporalGraph,
    params: &EpidemicParams<T>,
    settings: &RunSettings<T>,
    seed: SeedStream,
) -> Result<(Vec<RiskState<T>>, Vec<crate::epidemic::Compartment>), ExperimentError> {
    let vulnerabilities = settings.vulnerability.sample_population(graph.person_count(), seed)?;
    let mut states: Vec<RiskState<T>> = vulnerabilities.into_iter().map(RiskState::susceptible).collect();
    let compartments =
        seed_infections(graph.person_count(), params.i0.as_f64(), &mut seed.child(&[tag::SEEDING]).rng())?;
    tag_infections(&compartments, &mut states)?;
    Ok((states, compartments))
}

/// One seeded simulation over every epoch of `graph`.
pub fn simulate_run<T: Scalar>(
    graph: &TemporalGraph,
    params: &EpidemicParams<T>,
    settings: &RunSettings<T>,
    regions: &Regions,
    run_seed: u64,
) -> Result<Vec<MetricsFrame<T>>, ExperimentError> {
    let seed = SeedStream::new(run_seed);
    let (mut states, mut compartments) = initial_state(graph, params, settings, seed)?;
    let epidemic_seed = seed.child(&[tag::EPIDEMIC]);
    let risk_seed = seed.child(&[tag::RISK]);
    let mut frames = Vec::with_capacity(graph.epoch_count());
    for epoch in 0..graph.epoch_count() as u32 {
        compartments = step_epidemic(graph, &compartments, params, epoch, epidemic_seed)?;
        tag_infections(&compartments, &mut states)?;
        states = step_population(graph, &states, epoch, &settings.exposure, &settings.weight, risk_seed, settings.risk)?;
        frames.push(MetricsFrame::capture(graph, regions, epoch, &states, &compartments, settings.alert_threshold));
    }
    Ok(frames)
}

/// Runs all `runs` simulations of one cell and averages them. Runs execute
/// in parallel chunks but are folded in run order.
pub fn run_cell(
    graph: &TemporalGraph,
    cell: &Cell,
    settings: &RunSettings<f64>,
    regions: &Regions,
    runs: usize,
    master_seed: u64,
    mut on_run: impl FnMut(usize, &[MetricsFrame<f64>]) -> Result<(), ExperimentError>,
) -> Result<RunSummary<f64>, ExperimentError> {
    let params = EpidemicParams::new(cell.beta, cell.gamma, cell.i0)?;
    let chunk = rayon::current_num_threads().max(1);
    let mut acc = RunAccumulator::new();
    for start in (0..runs).step_by(chunk) {
        let end = (start + chunk).min(runs);
        let series: Vec<Vec<MetricsFrame<f64>>> = (start..end)
            .into_par_iter()
            .map(|run| simulate_run(graph, &params, settings, regions, cell.run_seed(master_seed, run)))
            .collect::<Result<_, _>>()?;
        for (offset, s) in series.iter().enumerate() {
            on_run(start + offset, s)?;
            acc.add(s)?;
        }
    }
    Ok(acc.finish(master_seed)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub beta: f64,
    pub gamma: f64,
    pub i0: f64,
    pub model: EpidemicModel,
    pub file: String,
    pub runs: usize,
    pub run_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphInfo {
    pub persons: usize,
    pub rooms: usize,
    pub epochs: usize,
    pub delta_t_seconds: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub graph: GraphInfo,
    pub cells: Vec<CellRecord>,
}

/// Runs the whole grid and writes `<output>/<cell>.csv` per cell plus
/// `manifest.json`. Output bytes depend only on the config (minus output
/// path and worker count).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    let graph = config.load_graph()?;
    let regions = config.build_regions(&graph)?;
    let region_names = regions.names(&graph);
    let settings = RunSettings::from_config(config);
    let out = &config.output;
    fs::create_dir_all(out).map_err(|e| ExperimentError::io(out, e))?;

    let mut cells = Vec::new();
    for cell in config.cells() {
        let stem = cell.file_stem();
        let runs_dir = out.join("runs").join(&stem);
        if config.write_runs {
            fs::create_dir_all(&runs_dir).map_err(|e| ExperimentError::io(&runs_dir, e))?;
        }
        let summary = run_cell(&graph, &cell, &settings, &regions, config.runs, config.master_seed, |run, series| {
            if !config.write_runs {
                return Ok(());
            }
            let path = runs_dir.join(format!("run_{run:03}.csv"));
            let file = fs::File::create(&path).map_err(|e| ExperimentError::io(&path, e))?;
            write_series_csv(std::io::BufWriter::new(file), series, &region_names).map_err(|e| ExperimentError::io(&path, e))
        })?;

        let file = format!("{stem}.csv");
        let path = out.join(&file);
        let handle = fs::File::create(&path).map_err(|e| ExperimentError::io(&path, e))?;
        write_summary_csv(std::io::BufWriter::new(handle), &summary, &region_names)
            .map_err(|e| ExperimentError::io(&path, e))?;

        let params = EpidemicParams::new(cell.beta, cell.gamma, cell.i0)?;
        cells.push(CellRecord {
            beta: cell.beta,
            gamma: cell.gamma,
            i0: cell.i0,
            model: params.model(),
            file,
            runs: config.runs,
            run_seeds: (0..config.runs).map(|r| cell.run_seed(config.master_seed, r)).collect(),
        });
    }

    let manifest = Manifest {
        config_sha256: config.hash(),
        config: config.canonical_json(),
        graph: GraphInfo {
            persons: graph.person_count(),
            rooms: graph.room_count(),
            epochs: graph.epoch_count(),
            delta_t_seconds: graph.delta_t_seconds(),
        },
        cells,
    };
    let path = out.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| ExperimentError::io(&path, e))?;
    Ok(manifest)
}
