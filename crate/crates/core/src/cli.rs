//! Benchmark commands: run the two applications, verify them against the
//! sequential references, and report channel memory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use thiserror::Error;

use crate::apps::dpd::{self, DpdConfigToken, DpdParams, DpdTaps, DEFAULT_PERIOD};
use crate::apps::io::{self, FormatError};
use crate::apps::motion::{
    self, Frame, MotionParams, DEFAULT_HEIGHT, DEFAULT_THRESHOLD, DEFAULT_WIDTH,
};
use crate::apps::synth;
use crate::channel::memory_bytes;
use crate::model::NetworkGraph;
use crate::runtime::{ExecutionConfig, Mapping, RunStats};

/// Relative error allowed per predistorter output sample.
pub const DPD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "dynflow", version, about = "Dynamic dataflow benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print key=value lines instead of tables.
    #[arg(long, global = true)]
    pub porcelain: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Motion Detection and report frames per second.
    Motion(MotionArgs),
    /// Run Dynamic Predistortion and report megasamples per second.
    Dpd(DpdArgs),
    /// Compare a run against the sequential reference.
    Verify(VerifyArgs),
    /// Report channel buffer memory of a network.
    Mem(MemArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum App {
    Motion,
    Dpd,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum MappingMode {
    #[default]
    Free,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct MappingArgs {
    #[arg(long, value_enum, default_value_t = MappingMode::Free)]
    pub mapping: MappingMode,
    /// Core placements, `actor=core[,...]`. Implies fixed mapping.
    #[arg(long, value_parser = parse_pins)]
    pub pin: Option<Pins>,
}

impl Default for MappingArgs {
    fn default() -> Self {
        Self {
            mapping: MappingMode::Free,
            pin: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pins(pub Vec<(String, usize)>);

pub fn parse_pins(s: &str) -> Result<Pins, String> {
    let mut pins = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (actor, core) = item
            .split_once('=')
            .ok_or_else(|| format!("pin {item:?} is not actor=core"))?;
        let core = core
            .trim()
            .parse()
            .map_err(|_| format!("pin {item:?}: core is not a number"))?;
        pins.push((actor.trim().to_string(), core));
    }
    Ok(Pins(pins))
}

#[derive(Debug, Clone, Args)]
pub struct MotionArgs {
    /// Number of synthetic frames, ignored with --input.
    #[arg(long, default_value_t = 64)]
    pub frames: usize,
    #[arg(long, default_value_t = DEFAULT_WIDTH)]
    pub width: usize,
    #[arg(long, default_value_t = DEFAULT_HEIGHT)]
    pub height: usize,
    /// Token rate of every channel.
    #[arg(long, default_value_t = 1)]
    pub rate: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Raw 8-bit frames or PGM (P5) file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Where to write output frames, raw.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

impl Default for MotionArgs {
    fn default() -> Self {
        Self {
            frames: 64,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            rate: 1,
            threshold: DEFAULT_THRESHOLD,
            seed: 1,
            input: None,
            output: None,
            reps: 1,
            mapping: MappingArgs::default(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DpdArgs {
    /// Number of synthetic samples, ignored with --input.
    #[arg(long, default_value_t = 1 << 20)]
    pub samples: usize,
    /// Samples per reconfiguration period.
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: usize,
    /// Token rate of the dynamic part. Only 1 is accepted.
    #[arg(long, default_value_t = 1)]
    pub rate: usize,
    /// Schedule file; default is seeded random configurations.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Taps file; default is seeded random taps.
    #[arg(long)]
    pub taps: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Interleaved little-endian f32 re,im samples.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[command(flatten)]
    pub mapping: MappingArgs,
}

impl Default for DpdArgs {
    fn default() -> Self {
        Self {
            samples: 1 << 20,
            period: DEFAULT_PERIOD,
            rate: 1,
            schedule: None,
            taps: None,
            seed: 1,
            input: None,
            output: None,
            reps: 1,
            mapping: MappingArgs::default(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub app: App,
    /// Perturb the reference's taps. The check is expected to fail.
    #[arg(long)]
    pub corrupt_taps: bool,
    #[command(flatten)]
    pub motion: MotionArgs,
    #[command(flatten)]
    pub dpd: DpdOnlyArgs,
}

/// DPD options that do not clash with the motion ones in `verify`.
#[derive(Debug, Clone, Args)]
pub struct DpdOnlyArgs {
    #[arg(long, default_value_t = 1 << 16)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: usize,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long)]
    pub taps: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MemArgs {
    #[arg(value_enum)]
    pub app: App,
    #[arg(long, default_value_t = DEFAULT_WIDTH)]
    pub width: usize,
    #[arg(long, default_value_t = DEFAULT_HEIGHT)]
    pub height: usize,
    /// Motion Detection token rate.
    #[arg(long, default_value_t = 1)]
    pub rate: usize,
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

impl From<motion::MotionRunError> for CliError {
    fn from(e: motion::MotionRunError) -> Self {
        match e {
            motion::MotionRunError::Build(e) => CliError::Config(e.to_string()),
            motion::MotionRunError::Run(e) => CliError::Run(e.to_string()),
        }
    }
}

impl From<dpd::DpdRunError> for CliError {
    fn from(e: dpd::DpdRunError) -> Self {
        match e {
            dpd::DpdRunError::Build(e) => CliError::Config(e.to_string()),
            dpd::DpdRunError::Run(e) => CliError::Run(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Command output: ordered key/value fields and tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub title: String,
    pub fields: Vec<(String, String)>,
    pub tables: Vec<Table>,
    /// Verification outcome, for `verify`.
    pub passed: Option<bool>,
}

impl Report {
    fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    fn field(&mut self, key: &str, value: impl ToString) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        match self.passed {
            Some(false) => 1,
            _ => 0,
        }
    }

    /// `key=value` lines. Table cells become `table.row.column=value`, keyed
    /// by the row's first cell.
    pub fn porcelain(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}={v}");
        }
        for t in &self.tables {
            for row in &t.rows {
                for (h, cell) in t.header.iter().zip(row).skip(1) {
                    let _ = writeln!(out, "{}.{}.{}={}", t.name, row[0], h, cell);
                }
            }
        }
        out
    }

    pub fn human(&self) -> String {
        let mut out = format!("{}\n", self.title);
        let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "  {k:<width$}  {v}");
        }
        for t in &self.tables {
            let mut widths: Vec<usize> = t.header.iter().map(String::len).collect();
            for row in &t.rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: &[String]| {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, &w))| {
                        if i == 0 {
                            format!("{c:<w$}")
                        } else {
                            format!("{c:>w$}")
                        }
                    })
                    .collect();
                format!("  {}\n", padded.join("  ").trim_end())
            };
            let _ = writeln!(out, "\n{}:", t.name);
            out.push_str(&line(&t.header));
            for row in &t.rows {
                out.push_str(&line(row));
            }
        }
        out
    }

    pub fn render(&self, porcelain: bool) -> String {
        if porcelain {
            self.porcelain()
        } else {
            self.human()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Motion(a) => cmd_motion(a),
        Command::Dpd(a) => cmd_dpd(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mem(a) => cmd_mem(a),
    }
}

/// Execution config for `ids`: free, or fixed with every actor placed
/// round-robin over the available cores and `--pin` entries taking
/// precedence.
pub fn execution_config(args: &MappingArgs, ids: &[String]) -> Result<ExecutionConfig, CliError> {
    let pins = args.pin.clone().unwrap_or_default();
    for (actor, _) in &pins.0 {
        if !ids.contains(actor) {
            return Err(CliError::Config(format!(
                "--pin names unknown actor `{actor}`"
            )));
        }
    }
    let mut cfg = ExecutionConfig::default();
    if args.mapping == MappingMode::Free && pins.0.is_empty() {
        return Ok(cfg);
    }
    let cores = core_affinity::get_core_ids().map_or(1, |c| c.len().max(1));
    let mut table: BTreeMap<String, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i % cores))
        .collect();
    table.extend(pins.0);
    cfg.mapping = Mapping::Fixed(table);
    Ok(cfg)
}

fn actor_ids(net: &NetworkGraph) -> Vec<String> {
    net.actors().iter().map(|a| a.id.clone()).collect()
}

fn mapping_label(cfg: &ExecutionConfig) -> &'static str {
    match cfg.mapping {
        Mapping::Free => "free",
        Mapping::Fixed(_) => "fixed",
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    xs.retain(|x| x.is_finite());
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

fn firings_table(stats: &RunStats) -> Table {
    Table {
        name: "actor".into(),
        header: ["id", "firings", "core"].map(String::from).to_vec(),
        rows: stats
            .actors
            .iter()
            .map(|a| {
                vec![
                    a.id.clone(),
                    a.firings.to_string(),
                    a.core.map_or("-".into(), |c| c.to_string()),
                ]
            })
            .collect(),
    }
}

fn memory_table(net: &NetworkGraph) -> (Table, usize) {
    let mem = memory_bytes(net);
    let table = Table {
        name: "channel".into(),
        header: [
            "id",
            "rate",
            "token_size",
            "delay",
            "capacity_tokens",
            "capacity_bytes",
        ]
        .map(String::from)
        .to_vec(),
        rows: mem
            .channels
            .iter()
            .map(|c| {
                vec![
                    c.id.clone(),
                    c.token_rate.to_string(),
                    c.token_size.to_string(),
                    if c.has_delay { "yes" } else { "no" }.to_string(),
                    c.capacity_tokens.to_string(),
                    c.capacity_bytes.to_string(),
                ]
            })
            .collect(),
    };
    (table, mem.total_bytes)
}

fn add_memory(report: &mut Report, net: &NetworkGraph) {
    let (table, total) = memory_table(net);
    report.field("channels", table.rows.len());
    report.field("memory_bytes", total);
    report.field(
        "memory_mb",
        format!("{:.4}", total as f64 / (1024.0 * 1024.0)),
    );
    report.tables.push(table);
}

fn motion_params(a: &MotionArgs) -> MotionParams {
    MotionParams {
        width: a.width,
        height: a.height,
        threshold: a.threshold,
        rate: a.rate,
    }
}

fn motion_frames(a: &MotionArgs) -> Result<Vec<Frame>, CliError> {
    let frames = match &a.input {
        Some(path) => io::read_frames(path, a.width, a.height)?,
        None => synth::frames(a.seed, a.frames, a.width, a.height),
    };
    if let Some(f) = frames
        .iter()
        .find(|f| (f.width, f.height) != (a.width, a.height))
    {
        return Err(CliError::Config(format!(
            "input frame is {}x{}, expected {}x{}",
            f.width, f.height, a.width, a.height
        )));
    }
    if a.rate == 0 || frames.len() % a.rate != 0 {
        return Err(CliError::Config(format!(
            "{} frames is not a multiple of rate {}",
            frames.len(),
            a.rate
        )));
    }
    Ok(frames)
}

fn check_reps(reps: usize) -> Result<(), CliError> {
    if reps == 0 {
        return Err(CliError::Config("--reps must be at least 1".into()));
    }
    Ok(())
}

/// Runs Motion Detection `reps` times; reports the median steady-state
/// throughput measured at the sink.
pub fn cmd_motion(a: &MotionArgs) -> Result<Report, CliError> {
    check_reps(a.reps)?;
    let params = motion_params(a);
    let frames = motion_frames(a)?;
    let (probe, _) = motion::build_motion_detection_network(&params, vec![])
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = execution_config(&a.mapping, &actor_ids(&probe))?;

    let mut fps = Vec::new();
    let mut wall = Duration::ZERO;
    let mut last = None;
    for _ in 0..a.reps {
        let (out, stats) = motion::run_motion_detection(&params, frames.clone(), &cfg)?;
        fps.extend(stats.throughput(motion::ids::SINK, a.rate as f64));
        wall += stats.wall;
        last = Some((out, stats));
    }
    let (out, stats) = last.expect("reps >= 1");
    if let Some(path) = &a.output {
        io::write_frames(path, &out)?;
    }

    let mut r = Report::new("motion detection");
    r.field("frames_in", frames.len());
    r.field("frames_out", out.len());
    r.field("width", a.width);
    r.field("height", a.height);
    r.field("rate", a.rate);
    r.field("threshold", a.threshold);
    r.field("mapping", mapping_label(&cfg));
    r.field("reps", a.reps);
    r.field(
        "frames_per_s",
        median(fps).map_or("n/a".into(), |v| format!("{v:.1}")),
    );
    r.field(
        "wall_s",
        format!("{:.4}", wall.as_secs_f64() / a.reps as f64),
    );
    r.tables.push(firings_table(&stats));
    add_memory(&mut r, &probe);
    Ok(r)
}

struct DpdInputs {
    samples: Vec<Complex<f32>>,
    taps: DpdTaps<f32>,
    schedule: Vec<DpdConfigToken>,
}

fn dpd_inputs(
    seed: u64,
    samples: usize,
    input: Option<&PathBuf>,
    taps: Option<&PathBuf>,
    schedule: Option<&PathBuf>,
) -> Result<DpdInputs, CliError> {
    Ok(DpdInputs {
        samples: match input {
            Some(p) => io::read_samples(p)?,
            None => synth::samples(seed, samples),
        },
        taps: match taps {
            Some(p) => io::parse_taps(&io::read_text(p)?)?,
            None => synth::taps(seed),
        },
        schedule: match schedule {
            Some(p) => io::parse_schedule(&io::read_text(p)?)?,
            None => synth::schedule(seed, 16),
        },
    })
}

fn dpd_probe(params: &DpdParams) -> Result<NetworkGraph, CliError> {
    let (net, _) = dpd::build_dpd_network::<f32>(
        params,
        vec![],
        &DpdTaps::identity(),
        synth::cycling_schedule(),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(net)
}

/// Runs the predistorter `reps` times; reports the median throughput in
/// megasamples per second measured at the sink.
pub fn cmd_dpd(a: &DpdArgs) -> Result<Report, CliError> {
    check_reps(a.reps)?;
    if a.rate != 1 {
        return Err(CliError::Config(format!(
            "dynamic part must run at token rate 1, got {}",
            a.rate
        )));
    }
    let params = DpdParams { period: a.period };
    let inputs = dpd_inputs(
        a.seed,
        a.samples,
        a.input.as_ref(),
        a.taps.as_ref(),
        a.schedule.as_ref(),
    )?;
    let probe = dpd_probe(&params)?;
    let dynamic_rate_one = probe.dynamic_channels().iter().all(|c| c.token_rate == 1);
    let cfg = execution_config(&a.mapping, &actor_ids(&probe))?;

    let mut msps = Vec::new();
    let mut wall = Duration::ZERO;
    let mut last = None;
    let per_firing =
        inputs.samples.len() as f64 / params.periods(inputs.samples.len()).max(1) as f64;
    for _ in 0..a.reps {
        let (out, stats) = dpd::run_dpd(
            &params,
            inputs.samples.clone(),
            &inputs.taps,
            inputs.schedule.clone(),
            &cfg,
        )?;
        msps.extend(stats.throughput(dpd::ids::SINK, per_firing / 1e6));
        wall += stats.wall;
        last = Some((out, stats));
    }
    let (out, stats) = last.expect("reps >= 1");
    if let Some(path) = &a.output {
        io::write_samples(path, &out)?;
    }

    let mut r = Report::new("dynamic predistortion");
    r.field("samples", out.len());
    r.field("period", a.period);
    r.field("schedule_len", inputs.schedule.len());
    r.field("seed", a.seed);
    r.field("dynamic_rate_one", dynamic_rate_one);
    r.field("mapping", mapping_label(&cfg));
    r.field("reps", a.reps);
    r.field(
        "msamples_per_s",
        median(msps).map_or("n/a".into(), |v| format!("{v:.3}")),
    );
    r.field(
        "wall_s",
        format!("{:.4}", wall.as_secs_f64() / a.reps as f64),
    );
    r.tables.push(firings_table(&stats));
    r.field("channels", probe.channels().len());
    Ok(r)
}

/// First position where two frame sequences differ: `(frame, pixel)`.
pub fn first_frame_divergence(a: &[Frame], b: &[Frame]) -> Option<(usize, usize)> {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if let Some(p) = x.pixels.iter().zip(&y.pixels).position(|(p, q)| p != q) {
            return Some((i, p));
        }
        if x.pixels.len() != y.pixels.len() {
            return Some((i, x.pixels.len().min(y.pixels.len())));
        }
    }
    (a.len() != b.len()).then_some((a.len().min(b.len()), 0))
}

/// First sample whose relative error exceeds `tol`, with that error.
pub fn first_sample_divergence(
    a: &[Complex<f32>],
    b: &[Complex<f32>],
    tol: f64,
) -> Option<(usize, f64)> {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let (_, err) = dpd::max_relative_error(&[*x], &[*y]).expect("equal lengths");
        if err > tol {
            return Some((i, err));
        }
    }
    (a.len() != b.len()).then_some((a.len().min(b.len()), f64::INFINITY))
}

/// Runs a network and its reference on the same input and compares them:
/// byte-exact for Motion Detection, relative error per sample for DPD.
pub fn cmd_verify(a: &VerifyArgs) -> Result<Report, CliError> {
    match a.app {
        App::Motion => verify_motion(&a.motion),
        App::Dpd => verify_dpd(a),
    }
}

fn verify_motion(a: &MotionArgs) -> Result<Report, CliError> {
    let params = motion_params(a);
    let frames = motion_frames(a)?;
    let (probe, _) = motion::build_motion_detection_network(&params, vec![])
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = execution_config(&a.mapping, &actor_ids(&probe))?;
    let expected = motion::oracle_motion_detection(&frames, a.threshold)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut r = Report::new("verify motion");
    r.field("frames", frames.len());
    r.field("rate", a.rate);
    r.field("mapping", mapping_label(&cfg));
    r.field("seed", a.seed);
    let mut divergence = None;
    for _ in 0..a.reps.max(1) {
        let (out, _) = motion::run_motion_detection(&params, frames.clone(), &cfg)?;
        divergence = first_frame_divergence(&out, &expected);
        if divergence.is_some() {
            break;
        }
    }
    match divergence {
        None => r.field("result", "PASS"),
        Some((frame, pixel)) => {
            r.field("result", "FAIL");
            r.field("first_divergent_frame", frame);
            r.field("first_divergent_pixel", pixel);
        }
    }
    r.passed = Some(divergence.is_none());
    Ok(r)
}

fn verify_dpd(a: &VerifyArgs) -> Result<Report, CliError> {
    let d = &a.dpd;
    let params = DpdParams { period: d.period };
    let inputs = dpd_inputs(
        a.motion.seed,
        d.samples,
        a.motion.input.as_ref(),
        d.taps.as_ref(),
        d.schedule.as_ref(),
    )?;
    let probe = dpd_probe(&params)?;
    let cfg = execution_config(&a.motion.mapping, &actor_ids(&probe))?;

    let mut reference_taps = inputs.taps.clone();
    if a.corrupt_taps {
        for branch in reference_taps.branches.iter_mut() {
            branch[0] += Complex::new(0.25, -0.25);
        }
    }
    let expected = dpd::oracle_dpd(&inputs.samples, &reference_taps, &inputs.schedule, d.period)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut r = Report::new("verify dpd");
    r.field("samples", inputs.samples.len());
    r.field("period", d.period);
    r.field("seed", a.motion.seed);
    r.field("schedule_len", inputs.schedule.len());
    r.field("mapping", mapping_label(&cfg));
    r.field("tolerance", DPD_TOLERANCE);
    let mut divergence = None;
    let mut worst = 0.0f64;
    for _ in 0..a.motion.reps.max(1) {
        let (out, _) = dpd::run_dpd(
            &params,
            inputs.samples.clone(),
            &inputs.taps,
            inputs.schedule.clone(),
            &cfg,
        )?;
        worst =
            worst.max(dpd::max_relative_error(&out, &expected).map_or(f64::INFINITY, |(_, e)| e));
        divergence = first_sample_divergence(&out, &expected, DPD_TOLERANCE);
        if divergence.is_some() {
            break;
        }
    }
    r.field("max_relative_error", format!("{worst:e}"));
    match divergence {
        None => r.field("result", "PASS"),
        Some((index, err)) => {
            r.field("result", "FAIL");
            r.field("first_divergent_sample", index);
            r.field("first_divergent_error", format!("{err:e}"));
        }
    }
    r.passed = Some(divergence.is_none());
    Ok(r)
}

/// Per-channel capacity and the network total.
pub fn cmd_mem(a: &MemArgs) -> Result<Report, CliError> {
    let net = match a.app {
        App::Motion => {
            let params = MotionParams {
                width: a.width,
                height: a.height,
                rate: a.rate,
                ..MotionParams::default()
            };
            motion::build_motion_detection_network(&params, vec![])
                .map_err(|e| CliError::Config(e.to_string()))?
                .0
        }
        App::Dpd => dpd_probe(&DpdParams { period: a.period })?,
    };
    let mut r = Report::new(match a.app {
        App::Motion => "channel memory: motion detection",
        App::Dpd => "channel memory: dynamic predistortion",
    });
    add_memory(&mut r, &net);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pins_parse() {
        let p = parse_pins("source=0, gauss=3").unwrap();
        assert_eq!(p.0, [("source".to_string(), 0), ("gauss".to_string(), 3)]);
        assert!(parse_pins("source").is_err());
        assert!(parse_pins("source=x").is_err());
    }

    #[test]
    fn fixed_mapping_places_every_actor() {
        let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let args = MappingArgs {
            mapping: MappingMode::Fixed,
            pin: Some(Pins(vec![("b".into(), 7)])),
        };
        let Mapping::Fixed(t) = execution_config(&args, &ids).unwrap().mapping else {
            panic!("expected fixed mapping");
        };
        assert_eq!(t.len(), 3);
        assert_eq!(t["b"], 7);
        let bad = MappingArgs {
            mapping: MappingMode::Free,
            pin: Some(Pins(vec![("zz".into(), 0)])),
        };
        assert!(execution_config(&bad, &ids).is_err());
        assert_eq!(
            execution_config(&MappingArgs::default(), &ids)
                .unwrap()
                .mapping,
            Mapping::Free
        );
    }

    #[test]
    fn divergence_helpers() {
        let f = |v: u8| Frame::filled(3, 3, v);
        assert_eq!(first_frame_divergence(&[f(0), f(1)], &[f(0), f(1)]), None);
        let mut g = f(1);
        g.pixels[4] = 9;
        assert_eq!(
            first_frame_divergence(&[f(0), f(1)], &[f(0), g]),
            Some((1, 4))
        );
        assert_eq!(first_frame_divergence(&[f(0)], &[f(0), f(1)]), Some((1, 0)));

        let a = [Complex::new(1.0f32, 0.0), Complex::new(2.0, 0.0)];
        let b = [Complex::new(1.0f32, 0.0), Complex::new(2.1, 0.0)];
        assert_eq!(first_sample_divergence(&a, &a, 1e-5), None);
        assert_eq!(first_sample_divergence(&a, &b, 1e-5).unwrap().0, 1);
    }

    #[test]
    fn report_renders_both_forms() {
        let mut r = Report::new("t");
        r.field("x", 1);
        r.tables.push(Table {
            name: "channel".into(),
            header: vec!["id".into(), "bytes".into()],
            rows: vec![vec!["c0".into(), "8".into()]],
        });
        assert_eq!(r.porcelain(), "x=1\nchannel.c0.bytes=8\n");
        assert!(r.human().contains("c0"));
        assert_eq!(r.exit_code(), 0);
        r.passed = Some(false);
        assert_eq!(r.exit_code(), 1);
    }
}
