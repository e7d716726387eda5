use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use airside_core::calibration::{fit_correspondences, CalibrationModel, Correspondence, FrameSize};
use airside_core::pipeline::{run_streams, PipelineConfig};
use airside_core::region::RegionGraph;
use airside_core::sim::reference::{reference_regions, reference_scenario};
use airside_core::sim::{evaluate_positions, generate, ScenarioConfig, REGIONS_FILE};
use airside_core::stream::{read_jsonl_records, TruthRecord};
use airside_core::AnalyticsFrame;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(
    name = "airside",
    version,
    about = "Airside surveillance analytics engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate detection, radar and truth streams from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a pixel-to-geographic calibration model from correspondences.
    Calibrate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 5)]
        degree: usize,
        /// Frame size as WIDTHxHEIGHT.
        #[arg(long)]
        frame: FrameSize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the analytics pipeline over detection and radar streams.
    Run(RunArgs),
    /// Compare analytics positions with ground truth.
    Eval {
        #[arg(long)]
        analytics: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Write the built-in reference scenario config and region file.
    Reference {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Detection JSONL; `-` reads standard input.
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    radar: Option<PathBuf>,
    /// Analytics JSONL; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pipeline config JSON; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tick: Option<f64>,
    #[arg(long)]
    iou_gate: Option<f64>,
    #[arg(long)]
    center_gate_px: Option<f64>,
    #[arg(long)]
    smoothing_window: Option<usize>,
    #[arg(long)]
    confirm_hits: Option<u32>,
    #[arg(long)]
    max_missed: Option<u32>,
    #[arg(long)]
    still_speed_kn: Option<f64>,
    #[arg(long)]
    speed_window: Option<usize>,
    #[arg(long)]
    fusion_gate_m: Option<f64>,
    #[arg(long)]
    fusion_window_s: Option<f64>,
}

impl RunArgs {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg: PipelineConfig = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => PipelineConfig::default(),
        };
        cfg.regions = Some(self.regions.clone());
        cfg.model = Some(self.model.clone());
        if let Some(v) = self.tick {
            cfg.tick_s = v;
            cfg.fusion.tick_s = v;
        }
        let t = &mut cfg.tracker;
        set(&mut t.iou_gate, self.iou_gate);
        set(&mut t.center_gate_px, self.center_gate_px);
        set(&mut t.smoothing_window, self.smoothing_window);
        set(&mut t.confirm_hits, self.confirm_hits);
        set(&mut t.max_missed, self.max_missed);
        set(&mut cfg.analytics.still_speed_kn, self.still_speed_kn);
        set(&mut cfg.analytics.speed_window, self.speed_window);
        set(&mut cfg.fusion.gate_m, self.fusion_gate_m);
        set(&mut cfg.fusion.window_s, self.fusion_window_s);
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(
        fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let (mut cfg, graph) = ScenarioConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let output = generate(&cfg, &graph)?;
    output.write_to_dir(out, &graph)?;
    eprintln!(
        "wrote {} frames, {} truth records, {} calibration pairs to {}",
        output.detections.len(),
        output.truth.len(),
        output.correspondences.len(),
        out.display()
    );
    Ok(())
}

fn calibrate(pairs: &Path, degree: usize, frame: FrameSize, out: &Path) -> Result<()> {
    let pairs: Vec<Correspondence> = serde_json::from_str(&read(pairs)?)
        .with_context(|| format!("parsing {}", pairs.display()))?;
    let model = fit_correspondences(&pairs, degree, frame)?;
    fs::write(out, serde_json::to_string_pretty(&model)?)
        .with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "fitted degree {} on {} pairs, rmse {:.3} m",
        model.degree(),
        pairs.len(),
        model.fit_rmse_m()
    );
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.pipeline_config()?;
    let graph = RegionGraph::from_json_str(&read(&args.regions)?)
        .with_context(|| format!("loading {}", args.regions.display()))?;
    let model: CalibrationModel = serde_json::from_str(&read(&args.model)?)
        .with_context(|| format!("loading {}", args.model.display()))?;

    let radar: Box<dyn io::BufRead> = match &args.radar {
        Some(p) => Box::new(open(p)?),
        None => Box::new(io::empty()),
    };
    let detections: Box<dyn io::BufRead> = if args.detections == Path::new("-") {
        Box::new(io::stdin().lock())
    } else {
        Box::new(open(&args.detections)?)
    };
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let n = run_streams(detections, radar, &mut out, &graph, &model, &cfg)?;
    tracing::info!(frames = n, "pipeline finished");
    Ok(())
}

fn eval(analytics: &Path, truth: &Path) -> Result<()> {
    let frames: Vec<AnalyticsFrame> = read_jsonl_records(open(analytics)?)
        .with_context(|| format!("reading {}", analytics.display()))?;
    let truth: Vec<TruthRecord> =
        read_jsonl_records(open(truth)?).with_context(|| format!("reading {}", truth.display()))?;
    let estimates: Vec<_> = frames
        .iter()
        .flat_map(|f| {
            f.tracks
                .iter()
                .filter_map(move |tr| tr.callsign.clone().map(|cs| (f.t, cs, tr.geo)))
        })
        .collect();
    let report = evaluate_positions(&estimates, &truth)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn reference(out: &Path, seed: u64) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cfg = reference_scenario(seed);
    let graph = reference_regions(&cfg.camera);
    fs::write(
        out.join(REGIONS_FILE),
        serde_json::to_string_pretty(&graph.to_file())?,
    )?;
    fs::write(
        out.join("scenario.json"),
        serde_json::to_string_pretty(&cfg)?,
    )?;
    eprintln!(
        "wrote scenario.json and {REGIONS_FILE} to {}",
        out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Calibrate {
            pairs,
            degree,
            frame,
            out,
        } => calibrate(&pairs, degree, frame, &out),
        Command::Run(args) => run(&args),
        Command::Eval { analytics, truth } => eval(&analytics, &truth),
        Command::Reference { out, seed } => reference(&out, seed),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
