//! One entry point over every arrangement method.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use pda_core::neural::{arrange, read_checkpoint, NetworkConfig, NetworkParams};
use pda_core::scoring::block_score;
use pda_core::solvers::{exhaustive_best, greedy_arrange, random_search, simulated_annealing};
use pda_core::types::apply_permutation;
use pda_core::{ArchConfig, BlockPattern, Permutation};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum SolverKind {
    Exhaustive,
    Random,
    Greedy,
    Sa,
    Lstm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::Random => "random",
            SolverKind::Greedy => "greedy",
            SolverKind::Sa => "sa",
            SolverKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A trained network loaded from a checkpoint.
#[derive(Clone, Debug)]
pub struct Model {
    pub net: NetworkConfig,
    pub params: NetworkParams,
}

impl Model {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::at(path.display(), e))?;
        let (net, params) = read_checkpoint(&bytes).map_err(|e| CliError::at(path.display(), e))?;
        Ok(Model { net, params })
    }

    /// The network must read `C`-wide pages and emit `N` positions.
    pub fn check_shape(&self, pattern: &BlockPattern) -> CliResult<()> {
        let (n, c) = (pattern.num_wordlines(), pattern.cells_per_page());
        if self.net.input_dim != c || self.net.output_dim != n {
            return Err(CliError::Data(format!(
                "model expects {}x{} blocks, got {n}x{c}",
                self.net.output_dim, self.net.input_dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Arrangement {
    pub perm: Permutation,
    pub score: f64,
    pub evaluations: u64,
    pub elapsed: Duration,
}

/// Runs `kind` on one block. Stochastic solvers draw from `seed`.
pub fn solve(
    kind: SolverKind,
    pattern: &BlockPattern,
    arch: &ArchConfig,
    run: &RunConfig,
    seed: u64,
    model: Option<&Model>,
) -> CliResult<Arrangement> {
    let result = match kind {
        SolverKind::Exhaustive => exhaustive_best(pattern, arch)?,
        SolverKind::Random => random_search(pattern, arch, run.random_iterations(), seed)?,
        SolverKind::Greedy => greedy_arrange(pattern, arch)?,
        SolverKind::Sa => {
            let start = greedy_arrange(pattern, arch)?.score;
            simulated_annealing(pattern, arch, &run.anneal().schedule(start, seed))?
        }
        SolverKind::Lstm => {
            let model = model.ok_or_else(|| CliError::usage("--solver lstm needs --model"))?;
            model.check_shape(pattern)?;
            let start = Instant::now();
            let perm = arrange(pattern, &model.params, &model.net)?;
            let elapsed = start.elapsed();
            let score = block_score(&apply_permutation(pattern, &perm)?, arch)?;
            return Ok(Arrangement {
                perm,
                score,
                evaluations: 0,
                elapsed,
            });
        }
    };
    Ok(Arrangement {
        perm: result.perm,
        score: result.score,
        evaluations: result.evaluations,
        elapsed: result.elapsed,
    })
}

/// `100 * (score - baseline) / baseline`.
pub fn uplift_percent(score: f64, baseline: f64) -> f64 {
    100.0 * (score - baseline) / baseline
}
