//! Command-line surface: mine, bench, featurize, synth.
//!
//! Exit codes: 0 success, 2 ran clean but found nothing, 1 error. Every run
//! prints a machine-readable header (config echo plus dataset fingerprint)
//! to stderr so results can be reproduced exactly.

use crate::ccsm::{mine_binned_baseline, mine_continuous, CcsmConfig, ContinuousFeatures, NGramInput};
use crate::dataset::io::{self, Format, LoadedData};
use crate::dataset::synth::{generate_synthetic, SyntheticSpec};
use crate::dataset::{from_parts, stratified_sample, Column, ColumnData, Dataset};
use crate::navfeat::{build_vocabulary, vectorize, NavigationLog, VocabSidecar};
use crate::ranking::{
    rank_findings, render_report, score_categorical, score_continuous, ExpectedBasis, RankConfig,
    ReportFormat, RunInfo, ScoredFinding,
};
use crate::stucco::{mine_categorical, CategoricalMining, MinerConfig};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_FINDINGS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ccsm", about = "Contrast set mining for grouped crash reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for the miners; defaults to available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine contrast sets and write a ranked report.
    Mine(MineArgs),
    /// Compare the continuous miner against equi-width binning baselines.
    Bench(BenchArgs),
    /// Turn navigation logs into TF-IDF n-gram feature columns.
    Featurize(FeaturizeArgs),
    /// Generate a synthetic dataset from a spec file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Categorical,
    Continuous,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Complement,
    Population,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value = "group")]
    pub group_col: String,
    #[arg(long, value_enum, default_value_t = Mode::Mixed)]
    pub mode: Mode,
    /// Largeness threshold: support difference (categorical) or mean
    /// difference (continuous).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 3)]
    pub max_ngram: usize,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out_format: OutFormat,
    /// Minimum document frequency for n-gram vocabulary entries.
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, value_enum, default_value_t = BasisArg::Complement)]
    pub expected_basis: BasisArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value = "group")]
    pub group_col: String,
    /// Total row counts to benchmark at, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-engine execution cap in seconds.
    #[arg(long, default_value_t = 3600)]
    pub timeout_secs: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "group")]
    pub group_col: String,
    #[arg(long, default_value_t = 2)]
    pub max_ngram: usize,
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SyntheticSpec JSON path.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> i32 {
    #[cfg(feature = "parallel")]
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let r = match cli.command {
        Command::Mine(args) => cmd_mine(&args),
        Command::Bench(args) => cmd_bench(&args).map(|()| EXIT_OK),
        Command::Featurize(args) => cmd_featurize(&args).map(|()| EXIT_OK),
        Command::Synth(args) => cmd_synth(&args).map(|()| EXIT_OK),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn infer_format(path: &Path, flag: Option<FormatArg>) -> Format {
    match flag {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Jsonl) => Format::Jsonl,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => Format::Jsonl,
            _ => Format::Csv,
        },
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn print_run_header(config: &serde_json::Value, fingerprint: &str) {
    eprintln!(
        "{}",
        serde_json::json!({"run": {"config": config, "dataset_fingerprint": fingerprint}})
    );
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn score_categorical_mining(
    d: &Dataset,
    mining: &CategoricalMining,
    basis: ExpectedBasis,
    level: f64,
) -> Vec<ScoredFinding> {
    let mut out = Vec::new();
    for m in &mining.findings {
        for g in 0..d.n_groups() {
            if let Some(f) =
                score_categorical(d, &m.set, g, &m.table, basis, level, m.p_value, m.low_count)
            {
                out.push(f);
            }
        }
    }
    out
}

pub fn cmd_mine(args: &MineArgs) -> Result<i32> {
    let format = infer_format(&args.input, args.format);
    let LoadedData { dataset, nav_logs } = io::load(&args.input, format, None, &args.group_col)?;
    let fingerprint = dataset.fingerprint();
    let config = serde_json::json!({
        "command": "mine",
        "input": args.input,
        "group_col": args.group_col,
        "mode": format!("{:?}", args.mode).to_lowercase(),
        "delta": args.delta,
        "alpha": args.alpha,
        "max_depth": args.max_depth,
        "max_ngram": args.max_ngram,
        "top_k": args.top_k,
        "seed": args.seed,
        "timeout_secs": args.timeout_secs,
        "min_df": args.min_df,
        "min_count": args.min_count,
        "expected_basis": format!("{:?}", args.expected_basis).to_lowercase(),
    });
    print_run_header(&config, &fingerprint);

    let timeout = args.timeout_secs.map(Duration::from_secs);
    let basis = match args.expected_basis {
        BasisArg::Complement => ExpectedBasis::Complement,
        BasisArg::Population => ExpectedBasis::Population,
    };
    let rank_cfg = RankConfig {
        top_k: args.top_k,
        ..Default::default()
    };
    let mut findings: Vec<ScoredFinding> = Vec::new();

    if matches!(args.mode, Mode::Categorical | Mode::Mixed) {
        let cat_cols = dataset.categorical_column_indices();
        if cat_cols.is_empty() {
            if args.mode == Mode::Categorical {
                return Err(Error::NoCategoricalColumns);
            }
        } else {
            let cfg = MinerConfig {
                delta: args.delta.unwrap_or(0.05),
                alpha: args.alpha,
                max_depth: args.max_depth,
                min_count: args.min_count,
                timeout,
                ..Default::default()
            };
            let mining = mine_categorical(&dataset, &cfg)?;
            findings.extend(score_categorical_mining(
                &dataset,
                &mining,
                basis,
                rank_cfg.level,
            ));
        }
    }

    if matches!(args.mode, Mode::Continuous | Mode::Mixed) {
        let plain_columns = dataset.continuous_column_indices();
        let cfg = CcsmConfig {
            delta: args.delta.unwrap_or(0.0),
            alpha: args.alpha,
            max_ngram: args.max_ngram,
            min_count: args.min_count,
            timeout,
        };
        let matrix;
        let ngrams = match &nav_logs {
            Some(logs) => {
                let vocab = build_vocabulary(logs, 1, args.min_df)?;
                matrix = vectorize(logs, &vocab)?;
                Some(NGramInput {
                    logs,
                    ngram_len: 1,
                    matrix: &matrix,
                })
            }
            None => None,
        };
        if plain_columns.is_empty() && ngrams.is_none() {
            if args.mode == Mode::Continuous {
                return Err(Error::NoCandidateFeatures);
            }
        } else {
            let features = ContinuousFeatures {
                plain_columns,
                ngrams,
            };
            let mining = mine_continuous(&dataset, &features, &cfg)?;
            for m in &mining.findings {
                for g in 0..dataset.n_groups() {
                    if let Some(f) = score_continuous(
                        &dataset.group_names,
                        &m.candidate.name,
                        g,
                        &m.stats,
                        rank_cfg.level,
                        m.p_value,
                    ) {
                        findings.push(f);
                    }
                }
            }
        }
    }

    let ranked = rank_findings(findings, &rank_cfg);
    let run = RunInfo {
        timestamp: timestamp(),
        config,
        dataset_fingerprint: fingerprint,
    };
    let format = match args.out_format {
        OutFormat::Json => ReportFormat::Json,
        OutFormat::Markdown => ReportFormat::Markdown,
    };
    write_output(&args.out, &render_report(&ranked, format, &run)?)?;
    Ok(if ranked.is_empty() {
        EXIT_NO_FINDINGS
    } else {
        EXIT_OK
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchRow {
    pub rows: usize,
    pub engine: String,
    pub seconds: f64,
    pub candidates_tested: usize,
    pub emitted: usize,
    pub peak_level_width: usize,
    pub timed_out: bool,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let format = infer_format(&args.input, args.format);
    let LoadedData { dataset, .. } = io::load(&args.input, format, None, &args.group_col)?;
    if dataset.continuous_column_indices().is_empty() {
        return Err(Error::NoCandidateFeatures);
    }
    let fingerprint = dataset.fingerprint();
    let config = serde_json::json!({
        "command": "bench",
        "input": args.input,
        "sizes": args.sizes,
        "delta": args.delta,
        "alpha": args.alpha,
        "max_depth": args.max_depth,
        "min_count": args.min_count,
        "seed": args.seed,
        "timeout_secs": args.timeout_secs,
    });
    print_run_header(&config, &fingerprint);

    let timeout = Some(Duration::from_secs(args.timeout_secs));
    let mut rows: Vec<BenchRow> = Vec::new();
    for &size in &args.sizes {
        let per_group = (size / dataset.n_groups()).max(1);
        let sample = stratified_sample(&dataset, per_group, args.seed);
        let features = ContinuousFeatures {
            plain_columns: sample.continuous_column_indices(),
            ngrams: None,
        };
        let ccsm_cfg = CcsmConfig {
            delta: args.delta,
            alpha: args.alpha,
            min_count: args.min_count,
            timeout,
            ..Default::default()
        };
        let start = Instant::now();
        let mining = mine_continuous(&sample, &features, &ccsm_cfg)?;
        rows.push(BenchRow {
            rows: sample.n_rows(),
            engine: "ccsm".into(),
            seconds: start.elapsed().as_secs_f64(),
            candidates_tested: mining.stats.candidates_tested,
            emitted: mining.findings.len(),
            peak_level_width: mining.stats.peak_level_width,
            timed_out: mining.stats.timed_out,
        });
        for bins in [3usize, 10] {
            let cfg = MinerConfig {
                delta: args.delta,
                alpha: args.alpha,
                max_depth: args.max_depth,
                min_count: args.min_count,
                timeout,
                ..Default::default()
            };
            let start = Instant::now();
            let mining = mine_binned_baseline(&sample, bins, &cfg)?;
            rows.push(BenchRow {
                rows: sample.n_rows(),
                engine: format!("binned-{bins}"),
                seconds: start.elapsed().as_secs_f64(),
                candidates_tested: mining.stats.candidates_tested,
                emitted: mining.findings.len(),
                peak_level_width: mining.stats.peak_level_width,
                timed_out: mining.stats.timed_out,
            });
        }
    }

    let mut csv = String::from("rows,engine,seconds,candidates_tested,emitted,peak_level_width,timed_out\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:.6},{},{},{},{}\n",
            r.rows, r.engine, r.seconds, r.candidates_tested, r.emitted, r.peak_level_width,
            r.timed_out
        ));
    }
    write_output(&args.out, &csv)?;

    eprintln!(
        "{:>8} {:>10} {:>10} {:>12} {:>8} {:>10} {:>9}",
        "rows", "engine", "seconds", "candidates", "emitted", "peak", "timed_out"
    );
    for r in &rows {
        eprintln!(
            "{:>8} {:>10} {:>10.3} {:>12} {:>8} {:>10} {:>9}",
            r.rows, r.engine, r.seconds, r.candidates_tested, r.emitted, r.peak_level_width,
            r.timed_out
        );
    }
    Ok(())
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<()> {
    let LoadedData { dataset, nav_logs } =
        io::load(&args.input, Format::Jsonl, None, &args.group_col)?;
    let logs: Vec<NavigationLog> = nav_logs.ok_or(Error::NoNavLogs)?;
    let fingerprint = dataset.fingerprint();
    let config = serde_json::json!({
        "command": "featurize",
        "input": args.input,
        "group_col": args.group_col,
        "max_ngram": args.max_ngram,
        "min_df": args.min_df,
    });
    print_run_header(&config, &fingerprint);

    let mut columns: Vec<Column> = dataset.columns.clone();
    let mut sidecars: Vec<VocabSidecar> = Vec::new();
    for n in 1..=args.max_ngram {
        let vocab = build_vocabulary(&logs, n, args.min_df)?;
        let matrix = vectorize(&logs, &vocab)?;
        for (name, values) in matrix.names.into_iter().zip(matrix.columns) {
            columns.push(Column {
                name,
                data: ColumnData::Continuous { values },
            });
        }
        sidecars.push(vocab.to_sidecar());
    }
    let out_dataset = from_parts(
        columns,
        dataset.group_column.clone(),
        dataset.group_names.clone(),
        dataset.group_of.clone(),
    )?;
    let out_format = infer_format(&args.out, None);
    io::write_to_path(&out_dataset, &args.out, out_format)?;
    let sidecar_path = args.out.with_extension("vocab.json");
    fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecars)? + "\n")?;
    eprintln!(
        "wrote {} feature columns to {}, vocabulary to {}",
        out_dataset.columns.len() - dataset.columns.len(),
        args.out.display(),
        sidecar_path.display()
    );
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let raw = fs::read_to_string(&args.spec)?;
    let spec: SyntheticSpec = serde_json::from_str(&raw)?;
    let dataset = generate_synthetic(&spec)?;
    let out_format = infer_format(&args.out, None);
    io::write_to_path(&dataset, &args.out, out_format)?;
    let manifest = serde_json::json!({
        "seed": spec.seed,
        "rows": dataset.n_rows(),
        "groups": dataset.group_names,
        "dataset_fingerprint": dataset.fingerprint(),
        "planted_categorical": spec.planted_categorical,
        "planted_continuous": spec.planted_continuous,
    });
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
