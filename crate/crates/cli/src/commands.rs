use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pda_core::channel::channel_ber;
use pda_core::io::{gen_random_block, read_mapping_table, write_mapping_table, write_pattern};
use pda_core::neural::{train, write_checkpoint};
use pda_core::scoring::{block_score, tensor_builds};
use pda_core::types::apply_permutation;
use pda_core::ArchConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dataset::{self, Manifest, Subset, MANIFEST_FILE, SPLIT_FILE};
use crate::error::{CliError, CliResult};
use crate::solve::{solve, uplift_percent, Arrangement, Model, SolverKind};

#[derive(Debug, Parser)]
#[command(name = "pda", version, about = "Page data arrangement for QLC 3D NAND blocks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random blocks plus a seed manifest.
    Gen(GenArgs),
    /// Write a seeded 7:3 train/test split of a dataset directory.
    Split(SplitArgs),
    /// Print the block score of a pattern file.
    Score(ScoreArgs),
    /// Arrange one block and write its mapping table.
    Arrange(ArrangeArgs),
    /// Train the LSTM arranger on a dataset directory.
    Train(TrainArgs),
    /// Run a block through the synthetic retention channel.
    Simulate(SimulateArgs),
    /// Run several solvers over a dataset and report score uplift.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 16)]
    pub wordlines: usize,
    #[arg(long, default_value_t = 64)]
    pub cells: usize,
    /// Block k is generated from seed + k.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Run configuration (coupling coefficients).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ArrangeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub solver: SolverKind,
    /// Checkpoint for `--solver lstm`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out_map: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Iterations for `random` and `sa`, overriding the configuration.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Also print evaluation and score-tensor construction counts.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Per-epoch loss history; defaults to the model path with a
    /// `.loss.csv` extension.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// Defaults to `train` when the directory has a split, else `all`.
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `train.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Mapping table to apply before programming.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Run configuration; its `[retention]` and `[arch]` sections apply.
    #[arg(long)]
    pub retention_config: Option<PathBuf>,
    /// Overrides `retention.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub solvers: Vec<SolverKind>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Block k uses seed + k for stochastic solvers.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    /// Where to write the CSV report.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Split(a) => cmd_split(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Arrange(a) => cmd_arrange(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Compare(a) => cmd_compare(a, out),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::at(path.display(), e))
}

fn required_dir(flag: &Option<PathBuf>, run: &RunConfig) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| run.paths.data_dir.clone())
        .ok_or_else(|| CliError::usage("--data-dir is required (or paths.data_dir in --config)"))
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let arch = ArchConfig::new(a.wordlines, a.cells);
    arch.validate().map_err(CliError::usage)?;
    if a.blocks == 0 {
        return Err(CliError::usage("--blocks must be at least 1"));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::at(a.out.display(), e))?;
    let manifest = Manifest::new(a.wordlines, a.cells, a.seed, a.blocks);
    for entry in &manifest.blocks {
        let block = gen_random_block(&arch, entry.seed)?;
        write_file(&a.out.join(&entry.file), &write_pattern(&block)?)?;
    }
    write_file(&a.out.join(MANIFEST_FILE), manifest.to_toml()?.as_bytes())?;
    writeln!(
        out,
        "wrote {} blocks of {}x{} to {}",
        a.blocks,
        a.wordlines,
        a.cells,
        a.out.display()
    )?;
    Ok(())
}

pub fn cmd_split(a: &SplitArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = dataset::write_split(&a.data_dir, a.seed)?;
    let train = rows.iter().filter(|r| r.set == dataset::SplitSet::Train).count();
    writeln!(
        out,
        "train {train} / test {} written to {}",
        rows.len() - train,
        a.data_dir.join(SPLIT_FILE).display()
    )?;
    Ok(())
}

pub fn cmd_score(a: &ScoreArgs, out: &mut dyn Write) -> CliResult<()> {
    let run = RunConfig::load_or_default(a.config.as_deref())?;
    let block = dataset::read_block(&a.input)?;
    let arch = run.arch_for_data(block.num_wordlines(), block.cells_per_page())?;
    writeln!(out, "{}", block_score(&block, &arch)?)?;
    Ok(())
}

pub fn cmd_arrange(a: &ArrangeArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut run = RunConfig::load_or_default(a.config.as_deref())?;
    if let Some(it) = a.iterations {
        if it == 0 {
            return Err(CliError::usage("--iterations must be at least 1"));
        }
        run.random.iterations = Some(it);
        run.anneal.iterations = Some(it);
    }
    let model_path = a.model.clone().or_else(|| run.paths.model.clone());
    let model = match (a.solver, &model_path) {
        (SolverKind::Lstm, None) => return Err(CliError::usage("--solver lstm needs --model")),
        (SolverKind::Lstm, Some(p)) => Some(Model::load(p)?),
        _ => None,
    };
    let block = dataset::read_block(&a.input)?;
    let arch = run.arch_for_data(block.num_wordlines(), block.cells_per_page())?;
    let builds_before = tensor_builds();
    let original = block_score(&block, &arch)?;
    let result = solve(a.solver, &block, &arch, &run, a.seed, model.as_ref())?;
    let builds = tensor_builds() - builds_before;
    if let Some(path) = &a.out_map {
        write_file(path, &write_mapping_table(&result.perm)?)?;
    }
    writeln!(
        out,
        "solver {} original {} arranged {} uplift {:.4}%",
        a.solver,
        original,
        result.score,
        uplift_percent(result.score, original)
    )?;
    writeln!(out, "mapping {:?}", result.perm.as_slice())?;
    if a.stats {
        writeln!(out, "evaluations {}", result.evaluations)?;
        writeln!(out, "score_tensor_builds {builds}")?;
        writeln!(out, "elapsed_ms {:.3}", ms(result.elapsed))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut run = RunConfig::load_or_default(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        run.train.seed = Some(seed);
    }
    if let Some(epochs) = a.epochs {
        run.train.epochs = Some(epochs);
    }
    run.validate()?;
    let dir = required_dir(&a.data_dir, &run)?;
    let subset = a
        .subset
        .unwrap_or(if dir.join(SPLIT_FILE).exists() { Subset::Train } else { Subset::All });
    let blocks: Vec<_> = dataset::load_blocks(&dir, subset)?.into_iter().map(|b| b.pattern).collect();
    let (n, c) = (blocks[0].num_wordlines(), blocks[0].cells_per_page());
    let arch = run.arch_for_data(n, c)?;
    let net = run.network(c, n);
    let cfg = run.train_config();

    let outcome = train(&blocks, &arch, &net, &cfg)?;
    write_file(&a.out_model, &write_checkpoint(&net, &outcome.params)?)?;
    let loss_path = a
        .loss_csv
        .clone()
        .unwrap_or_else(|| a.out_model.with_extension("loss.csv"));
    let mut w = csv::Writer::from_path(&loss_path).map_err(|e| CliError::at(loss_path.display(), e))?;
    for (epoch, &loss) in outcome.loss_history.iter().enumerate() {
        w.serialize(LossRow { epoch: epoch + 1, loss })?;
    }
    w.flush()?;

    writeln!(
        out,
        "trained on {} blocks ({n}x{c}), {} epochs, hidden {}, {} linear layer(s)",
        blocks.len(),
        cfg.epochs,
        net.hidden_size,
        net.num_linear_layers
    )?;
    writeln!(
        out,
        "initial mean S_m {:.6} mean row max {:.6}",
        outcome.initial.mean_expected_score, outcome.initial.mean_row_max
    )?;
    writeln!(
        out,
        "final   mean S_m {:.6} mean row max {:.6}",
        outcome.last.mean_expected_score, outcome.last.mean_row_max
    )?;
    writeln!(out, "model {} loss {}", a.out_model.display(), loss_path.display())?;
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let run = RunConfig::load_or_default(a.retention_config.as_deref())?;
    let mut rcfg = run.retention();
    if let Some(seed) = a.seed {
        rcfg.seed = seed;
    }
    let mut block = dataset::read_block(&a.input)?;
    if let Some(path) = &a.map {
        let bytes = std::fs::read(path).map_err(|e| CliError::at(path.display(), e))?;
        let table = read_mapping_table(&bytes).map_err(|e| CliError::at(path.display(), e))?;
        block = apply_permutation(&block, &table.to_permutation()).map_err(|e| CliError::at(path.display(), e))?;
    }
    let arch = run.arch_for_data(block.num_wordlines(), block.cells_per_page())?;
    let ber = channel_ber(&block, &arch, &rcfg)?;
    writeln!(out, "score {}", block_score(&block, &arch)?)?;
    writeln!(out, "synthetic BER {ber:.6}")?;
    Ok(())
}

/// One row of the comparison report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub solver: String,
    pub blocks: usize,
    pub mean_score: f64,
    pub min_score: f64,
    pub max_score: f64,
    pub mean_uplift_pct: f64,
    /// Summed solver time over all blocks.
    pub time_ms: f64,
    pub errors: usize,
}

pub fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let run = RunConfig::load_or_default(a.config.as_deref())?;
    let dir = required_dir(&a.data_dir, &run)?;
    let mut solvers = a.solvers.clone();
    solvers.dedup();
    let model = if solvers.contains(&SolverKind::Lstm) {
        let path = a
            .model
            .clone()
            .or_else(|| run.paths.model.clone())
            .ok_or_else(|| CliError::usage("lstm in --solvers needs --model"))?;
        Some(Model::load(&path)?)
    } else {
        None
    };
    let blocks = dataset::load_blocks(&dir, a.subset)?;
    let (n, c) = (blocks[0].pattern.num_wordlines(), blocks[0].pattern.cells_per_page());
    let arch = run.arch_for_data(n, c)?;

    let per_block: Vec<(f64, Vec<CliResult<Arrangement>>)> = blocks
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            let seed = a.seed.wrapping_add(k as u64);
            let identity = block_score(&b.pattern, &arch).map_err(CliError::from);
            let results = solvers
                .iter()
                .map(|&s| {
                    solve(s, &b.pattern, &arch, &run, seed, model.as_ref()).map_err(|e| CliError::at(&b.file, e))
                })
                .collect();
            identity.map(|id| (id, results))
        })
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::with_capacity(solvers.len());
    let mut failures = Vec::new();
    for (si, &solver) in solvers.iter().enumerate() {
        let mut scores = Vec::new();
        let mut uplift = 0.0;
        let mut time = Duration::ZERO;
        let mut errors = 0;
        for (identity, results) in &per_block {
            match &results[si] {
                Ok(r) => {
                    scores.push(r.score);
                    uplift += uplift_percent(r.score, *identity);
                    time += r.elapsed;
                }
                Err(e) => {
                    if errors == 0 {
                        failures.push(format!("{solver}: {e}"));
                    }
                    errors += 1;
                }
            }
        }
        let count = scores.len().max(1) as f64;
        let nan_if_empty = |v: f64| if scores.is_empty() { f64::NAN } else { v };
        rows.push(ReportRow {
            solver: solver.name().to_string(),
            blocks: scores.len(),
            mean_score: nan_if_empty(scores.iter().sum::<f64>() / count),
            min_score: nan_if_empty(scores.iter().copied().fold(f64::INFINITY, f64::min)),
            max_score: nan_if_empty(scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            mean_uplift_pct: nan_if_empty(uplift / count),
            time_ms: ms(time),
            errors,
        });
    }

    let identity_mean = per_block.iter().map(|(id, _)| id).sum::<f64>() / per_block.len() as f64;
    writeln!(
        out,
        "{} blocks of {n}x{c} from {}, identity mean score {identity_mean:.3}",
        per_block.len(),
        dir.display()
    )?;
    out.write_all(format_report(&rows).as_bytes())?;
    if let Some(path) = &a.csv {
        write_file(path, report_csv(&rows)?.as_bytes())?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("solver failures: {}", failures.join("; "))))
    }
}

/// Aligned plain-text table.
pub fn format_report(rows: &[ReportRow]) -> String {
    let header = ["solver", "blocks", "mean", "min", "max", "uplift%", "time_ms", "errors"];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.solver.clone(),
                r.blocks.to_string(),
                format!("{:.3}", r.mean_score),
                format!("{:.3}", r.min_score),
                format!("{:.3}", r.max_score),
                format!("{:.4}", r.mean_uplift_pct),
                format!("{:.3}", r.time_ms),
                r.errors.to_string(),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &cells {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut text = String::new();
    let mut line = |fields: &[String]| {
        let parts: Vec<String> = fields
            .iter()
            .enumerate()
            .map(|(i, f)| if i == 0 { format!("{f:<w$}", w = width[i]) } else { format!("{f:>w$}", w = width[i]) })
            .collect();
        text.push_str(parts.join("  ").trim_end());
        text.push('\n');
    };
    line(&header.map(String::from));
    for row in &cells {
        line(row);
    }
    text
}

pub fn report_csv(rows: &[ReportRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
