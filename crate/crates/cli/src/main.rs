//! `stain`: build data, train and compare models, detect coughs in audio,
//! map environmental risk and forecast exacerbation alerts.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod config;

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stain_core::dataset::{self, fixtures, DatasetIndex, Split, SplitCounts};
use stain_core::detect::{DetectionConfig, Detector};
use stain_core::dsp::AudioClip;
use stain_core::envrisk::{self, BoundingBox, EnvFactor, RiskConfig, SensorSample, SourceKind};
use stain_core::forecast::{self, CoughEvent};
use stain_core::models::{EncoderKind, Model, ModelKind};
use stain_core::trainkit::{self, TrainConfig};
use stain_core::{Error, Result};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "stain", version, about = "Cough detection, environmental risk and exacerbation forecasting")]
struct Cli {
    /// Seed for every random choice (corpus, dataset, initialisation, shuffling).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML file with [train], [dataset], [detect], [forecast] and [risk] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cough / non-cough corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        cough_files: usize,
        #[arg(long, default_value_t = 80)]
        other_files: usize,
    },
    /// Synthesise a labelled train/test dataset from a corpus.
    Dataset(DatasetArgs),
    /// Train one model and write its checkpoint.
    Train {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value = "stain")]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Confusion matrix and metrics of a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = trainkit::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Train and evaluate several models on the same dataset.
    Bench {
        #[command(flatten)]
        data: DataArg,
        /// Directory for records.jsonl, table.txt and one checkpoint per model.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values = ["cnn", "rnn", "crnn", "stain"])]
        models: Vec<ModelKind>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Report cough events in a WAV file or a raw 16-bit mono stream.
    Detect(DetectArgs),
    /// Risk-increase grid over a bounding box.
    Riskmap {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        /// lat_min,lon_min,lat_max,lon_max
        #[arg(long, allow_hyphen_values = true)]
        bbox: String,
        #[arg(long, default_value_t = 10)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Risk increase at one location.
    Risk {
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        site: SiteArgs,
    },
    /// Cough-frequency trend, environmental amplification and alert.
    Forecast {
        /// Detector output: `timestamp_s,probability` lines.
        #[arg(long)]
        events: PathBuf,
        /// Environmental risk increase in percent; otherwise derived from snapshots.
        #[arg(long, conflicts_with = "snapshot")]
        env_pct: Option<f64>,
        #[command(flatten)]
        snapshots: SnapshotArgs,
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long)]
        horizon_days: Option<usize>,
        #[arg(long)]
        bucket_s: Option<f64>,
    },
}

#[derive(Args)]
struct DataArg {
    /// Dataset directory (containing index.tsv) or the index file itself.
    #[arg(long)]
    data: PathBuf,
}

impl DataArg {
    fn index(&self) -> Result<DatasetIndex> {
        let path = if self.data.is_dir() { self.data.join("index.tsv") } else { self.data.clone() };
        DatasetIndex::read(&path)
    }
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "cough")]
    cough_dir: String,
    #[arg(long, default_value = "other")]
    other_dir: String,
    #[arg(long)]
    out: PathBuf,
    /// Use 10 000 + 10 000 train and 1 000 + 1 000 test examples.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    train_pos: Option<usize>,
    #[arg(long)]
    train_neg: Option<usize>,
    #[arg(long)]
    test_pos: Option<usize>,
    #[arg(long)]
    test_neg: Option<usize>,
}

#[derive(Args, Default)]
struct HyperArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    encoder: Option<EncoderKind>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// WAV file, or `-` for raw little-endian 16-bit mono samples on stdin.
    #[arg(long, default_value = "-")]
    input: String,
    /// Treat a file input as raw samples instead of WAV.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    window_s: Option<f64>,
    #[arg(long)]
    hop_s: Option<f64>,
    #[arg(long)]
    refractory_s: Option<f64>,
    /// Added to every timestamp, e.g. the recording's start in UTC seconds.
    #[arg(long, default_value_t = 0.0)]
    origin: f64,
}

#[derive(Args)]
struct SnapshotArgs {
    /// SOURCE:PATH with SOURCE one of purpleair, waqi, generic. Repeatable.
    #[arg(long = "snapshot")]
    snapshot: Vec<String>,
    /// Reference time (UTC seconds) for the freshness window; defaults to the newest sample.
    #[arg(long)]
    now: Option<i64>,
}

#[derive(Args)]
struct SiteArgs {
    #[arg(long, allow_hyphen_values = true)]
    lat: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lon: Option<f64>,
    /// Explicit values override interpolated ones.
    #[arg(long)]
    pm25: Option<f64>,
    #[arg(long)]
    pm10: Option<f64>,
    #[arg(long)]
    no2: Option<f64>,
    /// Degrees Fahrenheit.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) => 3,
        Error::InvalidArgument(_) | Error::Config(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed;
    match cli.command {
        Command::Fixtures { out, cough_files, other_files } => {
            let spec = fixtures::FixtureSpec { cough_files, other_files, seed };
            let manifest = fixtures::write_fixture_corpus(&out, &spec)?;
            println!(
                "wrote {} cough and {} other files under {}",
                manifest.cough_files.len(),
                manifest.other_files.len(),
                out.display()
            );
        }
        Command::Dataset(args) => {
            let base = if args.full { SplitCounts::FULL } else { SplitCounts::DESK };
            let counts = SplitCounts {
                train_pos: args.train_pos.unwrap_or(base.train_pos),
                train_neg: args.train_neg.unwrap_or(base.train_neg),
                test_pos: args.test_pos.unwrap_or(base.test_pos),
                test_neg: args.test_neg.unwrap_or(base.test_neg),
            };
            let manifest = dataset::build_manifest(&args.corpus, &args.cough_dir, &args.other_dir)?;
            let index = dataset::build_dataset(&manifest, &cfg.dataset.spec(seed), counts, &args.out)?;
            println!("wrote {} examples to {}", index.records.len(), args.out.display());
        }
        Command::Train { data, model, out, hyper } => {
            let tc = train_config(&cfg, &hyper, model, seed);
            let outcome = trainkit::train(&data.index()?, &tc, |e, l| eprintln!("{model} epoch {e}: mean loss {l:.6}"))?;
            outcome.model.save(&outcome.meta, &out)?;
            println!("saved {model} checkpoint to {} (final loss {:.6})", out.display(), outcome.meta.final_loss);
        }
        Command::Eval { checkpoint, data, split, threshold } => {
            let (model, _) = Model::load(&checkpoint)?;
            let cm = trainkit::evaluate(&model, &data.index()?, split, threshold)?;
            let m = trainkit::metrics(&cm)?;
            println!("{}", serde_json::json!({ "split": split.name(), "confusion": cm, "metrics": m }));
        }
        Command::Bench { data, out, models, hyper } => bench(&cfg, &data, &out, &models, &hyper, seed)?,
        Command::Detect(args) => detect(&cfg, &args)?,
        Command::Riskmap { snapshots, bbox, resolution, out } => {
            let bbox = BoundingBox::parse(&bbox)?;
            let (samples, now) = load_snapshots(&snapshots)?;
            let grid = envrisk::risk_map(&samples, &cfg.risk, bbox, resolution, now)?;
            match out {
                Some(path) => std::fs::write(&path, grid.to_text()).map_err(|e| Error::file(path, e))?,
                None => print!("{}", grid.to_text()),
            }
        }
        Command::Risk { snapshots, site } => {
            let assessment = site_risk(&cfg.risk, &snapshots, &site)?;
            println!("{}", serde_json::to_string(&assessment).expect("assessment serializes"));
            println!("total risk increase: {}%", assessment.total);
        }
        Command::Forecast { events, env_pct, snapshots, site, horizon_days, bucket_s } => {
            let mut fc = cfg.forecast;
            fc.horizon_days = horizon_days.unwrap_or(fc.horizon_days);
            fc.bucket_s = bucket_s.unwrap_or(fc.bucket_s);
            let env = match env_pct {
                Some(p) => p,
                None if !snapshots.snapshot.is_empty() || has_values(&site) => {
                    site_risk(&cfg.risk, &snapshots, &site)?.total
                }
                None => 0.0,
            };
            let events = read_events(&events)?;
            let series = forecast::aggregate(&events, fc.bucket_s)?;
            let trend = forecast::fit_trend(&series)?;
            let f = forecast::make_forecast(&trend, env, fc.horizon_days, &fc)?;
            println!("{}", serde_json::to_string(&f).expect("forecast serializes"));
            println!("{f}");
        }
    }
    Ok(())
}

fn train_config(cfg: &FileConfig, hyper: &HyperArgs, kind: ModelKind, seed: u64) -> TrainConfig {
    let t = &cfg.train;
    TrainConfig {
        lr: hyper.lr.unwrap_or(t.lr),
        momentum: hyper.momentum.unwrap_or(t.momentum),
        epochs: hyper.epochs.unwrap_or(t.epochs),
        batch_size: hyper.batch_size.unwrap_or(t.batch_size),
        seed,
        kind,
        encoder: hyper.encoder.unwrap_or(t.encoder),
    }
}

fn bench(cfg: &FileConfig, data: &DataArg, out: &Path, models: &[ModelKind], hyper: &HyperArgs, seed: u64) -> Result<()> {
    let configs: Vec<TrainConfig> = models.iter().map(|&k| train_config(cfg, hyper, k, seed)).collect();
    let index = data.index()?;
    let features = configs.first().map(|c| c.model_config().features).unwrap_or_default();
    let train = trainkit::load_split(&index, Split::Train, &features)?;
    let test = trainkit::load_split(&index, Split::Test, &features)?;
    let report = trainkit::benchmark(&train, &test, &configs, |k, e, l| eprintln!("{k} epoch {e}: mean loss {l:.6}"));
    std::fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = out.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::file(path, e))
    };
    for run in &report.runs {
        if let Ok(row) = &run.result {
            write(&format!("{}.ckpt", run.config.kind), &row.outcome.checkpoint_bytes())?;
        }
    }
    write("records.jsonl", report.records_jsonl().as_bytes())?;
    write("table.txt", report.table().as_bytes())?;
    print!("{}", report.table());
    match report.first_error() {
        Some(e) => Err(match e {
            Error::Numeric(m) => Error::Numeric(m.clone()),
            other => Error::Dataset(format!("benchmark incomplete: {other}")),
        }),
        None => Ok(()),
    }
}

fn detect(cfg: &FileConfig, args: &DetectArgs) -> Result<()> {
    let dc = DetectionConfig {
        threshold: args.threshold.unwrap_or(cfg.detect.threshold),
        window_s: args.window_s.unwrap_or(cfg.detect.window_s),
        hop_s: args.hop_s.unwrap_or(cfg.detect.hop_s),
        refractory_s: args.refractory_s.unwrap_or(cfg.detect.refractory_s),
    };
    dc.validate()?;
    // The checkpoint is validated before any audio is read.
    let (model, _) = Model::load(&args.checkpoint)?;
    let mut detector = Detector::new(&model, dc)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut emit = |events: Vec<CoughEvent>| -> Result<()> {
        for e in events {
            writeln!(out, "{:.3},{:.6}", e.timestamp + args.origin, e.probability)?;
        }
        out.flush()?;
        Ok(())
    };
    if args.input != "-" && !args.raw {
        let clip = AudioClip::read(Path::new(&args.input))?;
        let clip = stain_core::dsp::resample(&clip, detector.sample_rate())?;
        emit(detector.push(clip.samples())?)?;
    } else {
        if detector.sample_rate() != 16_000 {
            return Err(Error::invalid("raw input must match the model's 16 kHz sample rate"));
        }
        let mut reader: Box<dyn Read> = if args.input == "-" {
            Box::new(io::stdin().lock())
        } else {
            let path = PathBuf::from(&args.input);
            Box::new(std::fs::File::open(&path).map_err(|e| Error::file(path, e))?)
        };
        let mut buf = vec![0u8; 6400];
        let mut carry: Option<u8> = None;
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            let mut bytes: Vec<u8> = carry.take().into_iter().collect();
            bytes.extend_from_slice(&buf[..n]);
            if bytes.len() % 2 == 1 {
                carry = bytes.pop();
            }
            let samples: Vec<f64> =
                bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0).collect();
            emit(detector.push(&samples)?)?;
        }
    }
    emit(detector.finish()?)
}

fn load_snapshots(args: &SnapshotArgs) -> Result<(Vec<SensorSample>, i64)> {
    let mut samples = Vec::new();
    for spec in &args.snapshot {
        let (kind, path) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("snapshot '{spec}' must be SOURCE:PATH")))?;
        let kind: SourceKind = kind.parse()?;
        let got = envrisk::ingest_snapshot(Path::new(path), kind)?;
        for w in &got.warnings {
            eprintln!("warning: {path}: {w}");
        }
        if !got.warnings.is_empty() {
            eprintln!("{path}: {} samples, {} dropped", got.samples.len(), got.warnings.len());
        }
        samples.extend(got.samples);
    }
    let now = args.now.or_else(|| samples.iter().map(|s| s.timestamp).max()).unwrap_or(0);
    Ok((samples, now))
}

fn has_values(site: &SiteArgs) -> bool {
    site.pm25.is_some() || site.pm10.is_some() || site.no2.is_some() || site.temperature.is_some()
}

fn site_risk(cfg: &RiskConfig, snapshots: &SnapshotArgs, site: &SiteArgs) -> Result<envrisk::RiskAssessment> {
    let mut values = BTreeMap::new();
    if !snapshots.snapshot.is_empty() {
        let (Some(lat), Some(lon)) = (site.lat, site.lon) else {
            return Err(Error::invalid("--lat and --lon are required with --snapshot"));
        };
        let (samples, now) = load_snapshots(snapshots)?;
        let i = &cfg.interpolation;
        let current = envrisk::fresh(&samples, now, i.freshness_h * 3600.0);
        for f in EnvFactor::ALL {
            if let Some(v) = envrisk::interpolate(&current, f, lat, lon, i.power, i.max_radius_km) {
                values.insert(f, v);
            }
        }
    }
    for (f, v) in [
        (EnvFactor::PM2_5, site.pm25),
        (EnvFactor::PM10, site.pm10),
        (EnvFactor::NO2, site.no2),
        (EnvFactor::TEMPERATURE, site.temperature),
    ] {
        if let Some(v) = v {
            values.insert(f, v);
        }
    }
    envrisk::risk_increase(&values, cfg)
}

/// Reads `timestamp_s,probability` lines; blank lines, `#` comments and a
/// header line are skipped.
fn read_events(path: &Path) -> Result<Vec<CoughEvent>> {
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut events = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("timestamp") {
            continue;
        }
        let parse_err = || Error::Parse {
            position: format!("{}: line {}", path.display(), n + 1),
            message: "expected 'timestamp_s,probability'".into(),
        };
        let (t, p) = line.split_once(',').ok_or_else(parse_err)?;
        let timestamp: f64 = t.trim().parse().map_err(|_| parse_err())?;
        let probability: f64 = p.trim().parse().map_err(|_| parse_err())?;
        events.push(CoughEvent { timestamp, probability });
    }
    Ok(events)
}
