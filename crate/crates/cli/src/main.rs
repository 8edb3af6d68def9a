//! `riskscore`: run parameter sweeps, inspect contact datasets, generate
//! synthetic ones, and encode or decode risk beacons.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskscore::codec::{self, CodecError, DEFAULT_SERVICE_UUID, UUID_LEN};
use riskscore::experiment::{run_experiment, ExperimentConfig, ExperimentError};
use riskscore::graph::{DatasetFormat, Delimiter, GraphError, SyntheticSpec, TemporalGraph, TimeColumn};

#[derive(Parser)]
#[command(name = "riskscore", version, about = "Infection risk scores on temporal contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the (beta, gamma, i0) grid and write per-cell CSVs plus a manifest.
    Run(RunArgs),
    /// Occupancy report for a dataset.
    Stats(StatsArgs),
    /// Encode or decode a risk beacon payload.
    #[command(subcommand)]
    Codec(CodecCommand),
    /// Write a synthetic random-room dataset in canonical form.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; every key can be overridden below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Synthetic graph instead of a dataset: PERSONS,ROOMS,EPOCHS[,DWELL].
    #[arg(long, value_name = "SPEC", conflicts_with = "dataset")]
    synthetic: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    i0: Option<Vec<f64>>,
    /// Alert threshold on r.
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads. Does not change results.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write every run's own series under runs/.
    #[arg(long)]
    write_runs: bool,
    /// Any config key, e.g. `delta_t=30` or `exposure={mode="constant",value=0.5}`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct FormatArgs {
    /// Fields are separated by whitespace instead of commas.
    #[arg(long)]
    whitespace: bool,
    /// The time column holds seconds; binned by --delta-t and rebased to epoch 0.
    #[arg(long)]
    seconds: bool,
    #[arg(long, default_value_t = riskscore::graph::DEFAULT_DELTA_T_SECONDS)]
    delta_t: u32,
}

impl FormatArgs {
    fn format(&self) -> DatasetFormat {
        DatasetFormat {
            delimiter: if self.whitespace { Delimiter::Whitespace } else { Delimiter::Comma },
            time_column: if self.seconds { TimeColumn::Seconds } else { TimeColumn::Epoch },
            delta_t_seconds: self.delta_t,
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Room list (one id per line) so never-occupied rooms count toward the total.
    #[arg(long)]
    rooms: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    /// Directory for the CSV series.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Print the payload as hex.
    Encode {
        risk: f64,
        weight: f64,
        /// 16-byte service UUID as 32 hex digits.
        #[arg(long)]
        uuid: Option<String>,
    },
    /// Print `risk=.. weight=..` for a hex payload.
    Decode {
        hex: String,
        #[arg(long)]
        uuid: Option<String>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    persons: u32,
    #[arg(long)]
    rooms: u32,
    #[arg(long)]
    epochs: u32,
    /// Epochs a person stays in a room before picking again.
    #[arg(long, default_value_t = 1)]
    dwell: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Failure = (u8, String);

fn config_err(msg: impl Into<String>) -> Failure {
    (1, msg.into())
}

fn experiment_err(e: ExperimentError) -> Failure {
    (e.exit_code() as u8, e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Stats(args) => stats(args),
        Command::Codec(cmd) => codec_cmd(cmd),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), Failure> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| config_err(format!("empty key in {key:?}")))?;
    let mut node = table;
    for part in parts {
        let entry = node.entry(part.to_owned()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| config_err(format!("{part:?} in {key:?} is not a table")))?;
    }
    node.insert(last.to_owned(), value);
    Ok(())
}

/// TOML literal if it parses as one, bare string otherwise.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_owned()))
}

fn floats(values: &[f64]) -> toml::Value {
    toml::Value::Array(values.iter().map(|&v| toml::Value::Float(v)).collect())
}

fn int(value: u64, name: &str) -> Result<toml::Value, Failure> {
    i64::try_from(value).map(toml::Value::Integer).map_err(|_| config_err(format!("{name} too large")))
}

fn synthetic_spec(text: &str) -> Result<toml::Value, Failure> {
    let nums: Vec<u32> = text
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| config_err(format!("--synthetic expects PERSONS,ROOMS,EPOCHS[,DWELL], got {text:?}")))?;
    let (persons, rooms, epochs, dwell) = match nums[..] {
        [p, r, e] => (p, r, e, 1),
        [p, r, e, d] => (p, r, e, d),
        _ => return Err(config_err(format!("--synthetic expects 3 or 4 numbers, got {text:?}"))),
    };
    let mut t = toml::Table::new();
    for (k, v) in [("persons", persons), ("rooms", rooms), ("epochs", epochs), ("dwell_epochs", dwell)] {
        t.insert(k.into(), toml::Value::Integer(i64::from(v)));
    }
    Ok(toml::Value::Table(t))
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut table = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| (2, format!("{}: {e}", path.display())))?;
            text.parse::<toml::Table>().map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    if let Some(path) = &args.dataset {
        table.remove("synthetic");
        table.insert("dataset".into(), toml::Value::String(path.to_string_lossy().into_owned()));
    }
    if let Some(spec) = &args.synthetic {
        table.remove("dataset");
        table.insert("synthetic".into(), synthetic_spec(spec)?);
    }
    if let Some(out) = &args.out {
        table.insert("output".into(), toml::Value::String(out.to_string_lossy().into_owned()));
    }
    if let Some(seed) = args.seed {
        table.insert("master_seed".into(), int(seed, "--seed")?);
    }
    if let Some(runs) = args.runs {
        table.insert("runs".into(), int(runs as u64, "--runs")?);
    }
    if let Some(workers) = args.workers {
        table.insert("workers".into(), int(workers as u64, "--workers")?);
    }
    for (key, list) in [("beta", &args.beta), ("gamma", &args.gamma), ("i0", &args.i0)] {
        if let Some(list) = list {
            table.insert(key.into(), floats(list));
        }
    }
    if let Some(t) = args.threshold {
        table.insert("alert_threshold".into(), toml::Value::Float(t));
    }
    if args.write_runs {
        table.insert("write_runs".into(), toml::Value::Boolean(true));
    }
    for item in &args.set {
        let (key, value) =
            item.split_once('=').ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got {item:?}")))?;
        set_path(&mut table, key.trim(), parse_value(value.trim()))?;
    }
    let text = toml::to_string(&table).map_err(|e| config_err(e.to_string()))?;
    let config = ExperimentConfig::from_toml_str(&text).map_err(experiment_err)?;
    config.validate().map_err(experiment_err)?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let config = build_config(&args)?;
    let manifest = run_experiment(&config).map_err(experiment_err)?;
    println!(
        "{} cells x {} runs on {} persons, {} rooms, {} epochs -> {}",
        manifest.cells.len(),
        config.runs,
        manifest.graph.persons,
        manifest.graph.rooms,
        manifest.graph.epochs,
        config.output.display()
    );
    println!("config sha256 {}", manifest.config_sha256);
    Ok(())
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| (2, format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|()| w.flush()).map_err(io_err(path))
}

fn graph_err(path: &Path) -> impl Fn(GraphError) -> Failure + '_ {
    move |e| experiment_err(ExperimentError::graph(path, e))
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let mut graph = TemporalGraph::ingest_path(&args.dataset, &args.format.format()).map_err(graph_err(&args.dataset))?;
    if let Some(path) = &args.rooms {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let rooms = TemporalGraph::read_room_list(BufReader::new(file)).map_err(graph_err(path))?;
        graph = graph.with_rooms(rooms).map_err(graph_err(path))?;
    }
    let s = graph.occupancy_stats();
    println!("persons {}", graph.person_count());
    println!("rooms {}", graph.room_count());
    println!("epochs {}", graph.epoch_count());
    println!("max people present {}", s.max_people());
    println!("max mean room density {:.2}", s.max_mean_density());
    println!("max occupied room fraction {:.4}", s.max_occupied_fraction());

    let Some(out) = args.out else { return Ok(()) };
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let rooms = graph.room_count().max(1) as f64;
    write_file(&out.join("per_epoch.csv"), |w| {
        writeln!(w, "epoch,people,rooms_occupied,occupied_fraction,mean_density")?;
        for t in 0..s.people_per_epoch.len() {
            writeln!(
                w,
                "{t},{},{},{},{}",
                s.people_per_epoch[t],
                s.rooms_occupied_per_epoch[t],
                f64::from(s.rooms_occupied_per_epoch[t]) / rooms,
                s.mean_density_per_epoch[t]
            )?;
        }
        Ok(())
    })?;
    write_file(&out.join("people_per_room.csv"), |w| {
        writeln!(w, "epoch,room,people")?;
        for (t, row) in s.people_per_room_per_epoch.iter().enumerate() {
            for (room, &n) in graph.rooms().iter().zip(row) {
                if n > 0 {
                    writeln!(w, "{t},{room},{n}")?;
                }
            }
        }
        Ok(())
    })?;
    write_file(&out.join("room_occupancy.csv"), |w| {
        writeln!(w, "room,epochs_occupied")?;
        for (room, n) in graph.rooms().iter().zip(&s.room_occupancy_counts) {
            writeln!(w, "{room},{n}")?;
        }
        Ok(())
    })
}

fn uuid_arg(text: Option<&str>) -> Result<[u8; UUID_LEN], Failure> {
    match text {
        None => Ok(DEFAULT_SERVICE_UUID),
        Some(t) => codec::parse_uuid(t).ok_or_else(|| config_err(format!("uuid must be 32 hex digits, got {t:?}"))),
    }
}

fn codec_failure(e: CodecError) -> Failure {
    (3, e.class().to_owned())
}

fn codec_cmd(cmd: CodecCommand) -> Result<(), Failure> {
    match cmd {
        CodecCommand::Encode { risk, weight, uuid } => {
            let uuid = uuid_arg(uuid.as_deref())?;
            let payload = codec::encode(risk, weight, &uuid).map_err(codec_failure)?;
            println!("{}", payload.to_hex());
        }
        CodecCommand::Decode { hex: text, uuid } => {
            let uuid = uuid_arg(uuid.as_deref())?;
            let bytes = hex::decode(text.trim()).map_err(|_| (3, "corrupt".to_owned()))?;
            let beacon = codec::decode(&bytes, &uuid).map_err(codec_failure)?;
            println!("risk={:.2} weight={:.2}", beacon.risk(), beacon.weight());
        }
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = SyntheticSpec::new(args.persons, args.rooms, args.epochs, args.dwell);
    let graph = TemporalGraph::generate_synthetic(&spec, args.seed).map_err(|e| config_err(e.to_string()))?;
    match &args.out {
        Some(path) => write_file(path, |w| graph.write_canonical(w)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            graph.write_canonical(&mut lock).and_then(|()| lock.flush()).map_err(|e| (2, e.to_string()))
        }
    }
}
