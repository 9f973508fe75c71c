//! The `mksc` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::bench::{read_manifest, run_grid, BenchGrid, BenchOutcome, BenchRecording, ManifestEntry, SWEEP_NEIGHBORS};
use crate::config::{KernelSelection, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{Symmetrization, Weighting};
use crate::pipeline::{
    diarize_recording, load_embeddings, read_rttm_file, split_recordings, write_embeddings_csv, write_rttm_file,
    EmbeddingFormat, RecordingDiarization, Timeline,
};
use crate::scoring::score_report;
use crate::spectral::LaplacianKind;
use crate::synth::{generate, SynthConfig};

/// Kernel presets of the full ablation grid.
pub const GRID_PRESETS: [&str; 4] = ["paper5", "poly1-4", "poly1-4+arccos0-1", "all"];

#[derive(Debug, Parser)]
#[command(name = "mksc", version, about = "Multiple-kernel sparse-graph spectral clustering for speaker diarization")]
pub struct Cli {
    /// Log verbosity (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster segment embeddings and write RTTM plus summaries.
    Diarize(DiarizeArgs),
    /// Score hypothesis RTTM against a reference.
    Score(ScoreArgs),
    /// Generate a synthetic corpus with references and a manifest.
    Synth(SynthArgs),
    /// Run an ablation grid over a manifest and tabulate DER.
    Bench(BenchArgs),
    /// Sweep the neighbor count and tabulate deviation from the best DER.
    Sweep(SweepArgs),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Settings shared by every command that runs the pipeline. Unset flags
/// keep the config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON config file (default: $MKSC_CONFIG when set).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Kernel preset or '+'-separated kernel list.
    #[arg(long)]
    pub kernels: Option<String>,
    /// Neighbors kept per vertex and kernel.
    #[arg(long, short = 'c')]
    pub neighbors: Option<usize>,
    /// Keep full kernel matrices instead of the k-nearest-neighbor graph.
    #[arg(long)]
    pub no_sparsify: bool,
    /// equal | entropy
    #[arg(long, value_parser = parse_enum::<Weighting>)]
    pub weighting: Option<Weighting>,
    /// average | max
    #[arg(long, value_parser = parse_enum::<Symmetrization>)]
    pub symmetrization: Option<Symmetrization>,
    /// unnormalized | normalized
    #[arg(long, value_parser = parse_enum::<LaplacianKind>)]
    pub laplacian: Option<LaplacianKind>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Use this speaker count instead of the eigengap estimate.
    #[arg(long)]
    pub k_oracle: Option<usize>,
    #[arg(long)]
    pub kmeans_restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reject embeddings of any other dimension.
    #[arg(long)]
    pub expected_dim: Option<usize>,
    /// auto | binary | csv
    #[arg(long, value_parser = parse_enum::<EmbeddingFormat>)]
    pub format: Option<EmbeddingFormat>,
    /// Total collar width in seconds.
    #[arg(long)]
    pub collar: Option<f64>,
    /// Exclude overlapped reference speech from scoring.
    #[arg(long)]
    pub ignore_overlap: bool,
    /// Worker threads (0: one per core). Outputs do not depend on it.
    #[arg(long, short = 'j', default_value_t = 0)]
    pub jobs: usize,
}

impl PipelineArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(k) = &self.kernels {
            cfg.kernels = KernelSelection::Named(k.clone());
        }
        if let Some(c) = self.neighbors {
            cfg.neighbors = c;
        }
        if self.no_sparsify {
            cfg.sparsify = false;
        }
        if let Some(w) = self.weighting {
            cfg.weighting = w;
        }
        if let Some(s) = self.symmetrization {
            cfg.symmetrization = s;
        }
        if let Some(l) = self.laplacian {
            cfg.laplacian = l;
        }
        if let Some(k) = self.k_max {
            cfg.k_max = k;
        }
        if self.k_oracle.is_some() {
            cfg.k_oracle = self.k_oracle;
        }
        if let Some(r) = self.kmeans_restarts {
            cfg.kmeans_restarts = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.expected_dim.is_some() {
            cfg.expected_dim = self.expected_dim;
        }
        if let Some(f) = self.format {
            cfg.embedding_format = f;
        }
        if let Some(c) = self.collar {
            cfg.collar = c;
        }
        if self.ignore_overlap {
            cfg.ignore_overlap = true;
        }
        cfg.pipeline()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct DiarizeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Embeddings file (binary or CSV).
    #[arg(long, requires = "segments", conflicts_with = "manifest")]
    pub emb: Option<PathBuf>,
    /// Segments file aligned with --emb.
    #[arg(long, requires = "emb")]
    pub segments: Option<PathBuf>,
    /// Manifest of recordings: `id emb seg [ref]` per line.
    #[arg(long, required_unless_present = "emb")]
    pub manifest: Option<PathBuf>,
    /// Output directory (default: output_dir from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stop at the first failing recording.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference RTTM file or directory of .rttm files.
    #[arg(long = "ref", value_name = "PATH")]
    pub reference: PathBuf,
    /// Hypothesis RTTM file or directory of .rttm files.
    #[arg(long = "hyp", value_name = "PATH")]
    pub hypothesis: PathBuf,
    /// Total collar width in seconds.
    #[arg(long, default_value_t = 0.25)]
    pub collar: f64,
    /// Exclude overlapped reference speech.
    #[arg(long)]
    pub ignore_overlap: bool,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Fail when a reference recording has no hypothesis.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 192)]
    pub d: usize,
    #[arg(long, default_value_t = 40)]
    pub segments_per_speaker: usize,
    #[arg(long, default_value_t = 5)]
    pub turn_segments: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    pub min_angle: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of recordings; recording i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub recordings: usize,
    #[arg(long, default_value = "synth")]
    pub prefix: String,
    /// Write embeddings as CSV instead of binary.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Manifest with reference RTTM for every recording.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Kernel selection axis (repeatable).
    #[arg(long = "grid-kernels", value_name = "SELECTION")]
    pub grid_kernels: Vec<String>,
    #[arg(long = "grid-neighbors", value_delimiter = ',')]
    pub grid_neighbors: Vec<usize>,
    #[arg(long = "grid-sparsify", value_delimiter = ',')]
    pub grid_sparsify: Vec<bool>,
    #[arg(long = "grid-laplacian", value_delimiter = ',', value_parser = parse_enum::<LaplacianKind>)]
    pub grid_laplacian: Vec<LaplacianKind>,
    #[arg(long = "grid-weighting", value_delimiter = ',', value_parser = parse_enum::<Weighting>)]
    pub grid_weighting: Vec<Weighting>,
    /// Every preset x c in 11..19 x sparsify x Laplacian x weighting.
    #[arg(long, conflicts_with_all = ["grid_kernels", "grid_neighbors", "grid_sparsify", "grid_laplacian", "grid_weighting"])]
    pub full: bool,
    /// Directory for der.tsv, ranks.tsv, deviation.tsv and bench.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Neighbor counts to try.
    #[arg(long = "values", value_delimiter = ',', default_values_t = SWEEP_NEIGHBORS)]
    pub values: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Diarize(a) => cmd_diarize(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Timing<'a> {
    recording_id: &'a str,
    wall_time_secs: f64,
}

fn write_outputs(dir: &Path, result: &RecordingDiarization) -> Result<()> {
    let id = &result.summary.recording_id;
    write_rttm_file(&result.timeline, &dir.join(format!("{id}.rttm")))?;
    write_json(&dir.join(format!("{id}.summary.json")), &result.summary)?;
    write_json(
        &dir.join(format!("{id}.timing.json")),
        &Timing { recording_id: id, wall_time_secs: result.wall_time_secs },
    )
}

/// A unit of diarization work: one recording, or a load failure labelled
/// with the name it was listed under.
type Job = std::result::Result<(crate::EmbeddingSet, Vec<crate::pipeline::Segment>), (String, Error)>;

fn load_jobs(args: &DiarizeArgs, cfg: &RunConfig) -> Result<Vec<(String, Job)>> {
    let entries: Vec<ManifestEntry> = match (&args.manifest, &args.emb, &args.segments) {
        (Some(m), _, _) => read_manifest(m)?,
        (None, Some(e), Some(s)) => vec![ManifestEntry {
            recording_id: e.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned()),
            embeddings: e.clone(),
            segments: s.clone(),
            reference: None,
        }],
        _ => return Err(Error::Config("give --emb with --segments, or --manifest".into())),
    };
    let mut jobs = Vec::new();
    for entry in entries {
        let loaded = load_embeddings(&entry.embeddings, &entry.segments, cfg.embedding_format, cfg.expected_dim)
            .and_then(|(emb, segs)| split_recordings(&emb, &segs));
        match loaded {
            Ok(parts) => {
                for (emb, segs) in parts {
                    jobs.push((segs[0].recording_id.clone(), Ok((emb, segs))));
                }
            }
            Err(e) => jobs.push((entry.recording_id.clone(), Err((entry.recording_id, e)))),
        }
    }
    Ok(jobs)
}

pub fn cmd_diarize(args: &DiarizeArgs) -> Result<ExitCode> {
    let cfg = args.pipeline.resolve()?;
    let pipeline = cfg.pipeline()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let jobs = load_jobs(args, &cfg)?;
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in &jobs {
        if !seen.insert(id.as_str()) {
            return Err(Error::Config(format!("recording '{id}' appears more than once")));
        }
    }
    let results: Vec<(String, Result<RecordingDiarization>)> = with_jobs(args.pipeline.jobs, || {
        jobs.into_par_iter()
            .map(|(id, job)| {
                let result = match job {
                    Ok((emb, segs)) => diarize_recording(&emb, &segs, &pipeline),
                    Err((_, e)) => Err(e),
                };
                (id, result)
            })
            .collect()
    })?;

    let mut failed = 0usize;
    for (id, result) in results {
        match result.and_then(|r| write_outputs(&out, &r).map(|_| r)) {
            Ok(r) => log::info!("{id}: n={} k*={} nnz={}", r.summary.n, r.summary.k_star, r.summary.nnz),
            Err(e) => {
                eprintln!("error: recording {id}: {e}");
                failed += 1;
                if args.strict {
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn read_rttm_path(path: &Path) -> Result<Timeline> {
    if !path.is_dir() {
        return read_rttm_file(path);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "rttm"))
        .collect();
    files.sort();
    let mut turns = Vec::new();
    for f in files {
        turns.extend(read_rttm_file(&f)?.into_turns());
    }
    Ok(Timeline::new(turns))
}

pub fn cmd_score(args: &ScoreArgs) -> Result<ExitCode> {
    let reference = read_rttm_path(&args.reference)?;
    let hypothesis = read_rttm_path(&args.hypothesis)?;
    let cfg = crate::scoring::DerConfig {
        collar: args.collar,
        include_overlap: !args.ignore_overlap,
    };
    let report = score_report(&reference, &hypothesis, &cfg)?;
    for id in &report.missing_hypothesis {
        eprintln!("warning: no hypothesis for reference recording {id} (scored as missed)");
    }
    for id in &report.unmatched_hypothesis {
        eprintln!("warning: hypothesis recording {id} has no reference (not scored)");
    }
    print!("{}", report.to_tsv());
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(if args.strict && !report.missing_hypothesis.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<ExitCode> {
    if args.recordings == 0 {
        return Err(Error::Config("--recordings must be >= 1".into()));
    }
    let mut manifest = String::new();
    for i in 0..args.recordings {
        let id = if args.recordings == 1 { args.prefix.clone() } else { format!("{}{:03}", args.prefix, i) };
        let cfg = SynthConfig {
            k: args.k,
            d: args.d,
            segments_per_speaker: args.segments_per_speaker,
            turn_segments: args.turn_segments,
            noise_sigma: args.noise,
            min_center_angle: args.min_angle,
            seed: args.seed.wrapping_add(i as u64),
            recording_id: id.clone(),
            ..Default::default()
        };
        let corpus = generate(&cfg)?;
        let files = corpus.write(&args.out)?;
        let emb_name = if args.csv {
            let csv = args.out.join(format!("{id}.csv"));
            std::fs::remove_file(&files.embeddings).map_err(|e| Error::io(&files.embeddings, e))?;
            write_embeddings_csv(&csv, &corpus.embeddings)?;
            format!("{id}.csv")
        } else {
            format!("{id}.emb")
        };
        manifest.push_str(&format!("{id} {emb_name} {id}.seg {id}.ref.rttm\n"));
    }
    let path = args.out.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_bench(manifest: &Path, cfg: &RunConfig) -> Result<Vec<BenchRecording>> {
    read_manifest(manifest)?
        .iter()
        .map(|e| BenchRecording::from_manifest(e, cfg.embedding_format, cfg.expected_dim))
        .collect()
}

fn report_bench(outcome: &BenchOutcome, out: Option<&Path>, transposed: bool) -> Result<ExitCode> {
    println!("# DER (%)");
    print!("{}", if transposed { outcome.der.to_tsv_transposed(100.0) } else { outcome.der.to_tsv(100.0) });
    println!("# average rank");
    print!("{}", outcome.ranks_tsv());
    if let Some(dev) = &outcome.deviation {
        println!("# deviation from the minimum DER (%)");
        print!("{}", dev.to_tsv_transposed(100.0));
    }
    if let Some((name, mean)) = outcome.best_config() {
        println!("# lowest mean deviation: {name} ({:.3})", 100.0 * mean);
    }
    for (config, rec, err) in &outcome.failures {
        eprintln!("error: {config} on {rec}: {err}");
    }
    if let Some(dir) = out {
        outcome.write(dir)?;
    }
    Ok(if outcome.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let base = args.pipeline.resolve()?;
    let grid = if args.full {
        BenchGrid {
            kernels: GRID_PRESETS.iter().map(|s| s.to_string()).collect(),
            neighbors: SWEEP_NEIGHBORS.to_vec(),
            sparsify: vec![true, false],
            laplacian: vec![LaplacianKind::Unnormalized, LaplacianKind::NormalizedSymmetric],
            weighting: vec![Weighting::Equal, Weighting::Entropy],
        }
    } else {
        BenchGrid {
            kernels: args.grid_kernels.clone(),
            neighbors: args.grid_neighbors.clone(),
            sparsify: args.grid_sparsify.clone(),
            laplacian: args.grid_laplacian.clone(),
            weighting: args.grid_weighting.clone(),
        }
    };
    let points = grid.expand(&base)?;
    let recordings = load_bench(&args.manifest, &base)?;
    let outcome = with_jobs(args.pipeline.jobs, || run_grid(&points, &recordings))?;
    report_bench(&outcome, args.out.as_deref(), false)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let base = args.pipeline.resolve()?;
    let points = BenchGrid::neighbor_sweep(&args.values).expand(&base)?;
    let recordings = load_bench(&args.manifest, &base)?;
    let outcome = with_jobs(args.pipeline.jobs, || run_grid(&points, &recordings))?;
    report_bench(&outcome, args.out.as_deref(), true)
}
