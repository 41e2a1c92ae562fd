//! Classical arrangement baselines: exhaustive enumeration, random search,
//! greedy construction and simulated annealing.
//!
//! All solvers score candidates through the [`ScoreTensor`], so a candidate
//! costs `N - 2` lookups. The reported score is always recomputed with
//! [`block_score`] on the arranged pattern.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scoring::{block_score, build_score_tensor, ScoreTensor};
use crate::types::{apply_permutation, ArchConfig, BlockPattern, Permutation};

/// Largest `N` accepted by [`exhaustive_best`].
pub const EXHAUSTIVE_LIMIT: usize = 9;

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub perm: Permutation,
    pub score: f64,
    /// Number of complete arrangements scored.
    pub evaluations: u64,
    pub elapsed: Duration,
}

impl SolverResult {
    fn finish(pattern: &BlockPattern, cfg: &ArchConfig, perm: Permutation, evaluations: u64, start: Instant) -> Result<Self> {
        let score = block_score(&apply_permutation(pattern, &perm)?, cfg)?;
        Ok(SolverResult {
            perm,
            score,
            evaluations,
            elapsed: start.elapsed(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub iterations: u64,
    pub seed: u64,
}

impl AnnealSchedule {
    pub const DEFAULT_COOLING: f64 = 0.999;
    pub const DEFAULT_ITERATIONS: u64 = 10_000;
    /// Default initial temperature as a fraction of the greedy start score.
    pub const DEFAULT_T0_FRACTION: f64 = 0.05;

    /// The default schedule for a given greedy start score.
    pub fn for_start_score(start_score: f64, seed: u64) -> Self {
        AnnealSchedule {
            initial_temperature: Self::DEFAULT_T0_FRACTION * start_score,
            cooling_factor: Self::DEFAULT_COOLING,
            iterations: Self::DEFAULT_ITERATIONS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_temperature.is_finite() && self.initial_temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "initial_temperature must be positive, got {}",
                self.initial_temperature
            )));
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cooling_factor must lie in (0, 1), got {}",
                self.cooling_factor
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn prepare(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<ScoreTensor> {
    let n = pattern.num_wordlines();
    if n < 3 {
        return Err(Error::TooFewWordlines(n));
    }
    build_score_tensor(pattern, cfg)
}

/// Rearranges `perm` into the next permutation in lexicographic order.
/// Returns `false` after the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Best of all `N!` arrangements; ties go to the lexicographically smallest.
pub fn exhaustive_best(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<SolverResult> {
    let start = Instant::now();
    let n = pattern.num_wordlines();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManyWordlines {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let tensor = prepare(pattern, cfg)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_score = tensor.arrangement_score(&perm);
    let mut evaluations = 1;
    while next_permutation(&mut perm) {
        evaluations += 1;
        let s = tensor.arrangement_score(&perm);
        if s > best_score {
            best_score = s;
            best.copy_from_slice(&perm);
        }
    }
    SolverResult::finish(pattern, cfg, Permutation::from_vec_unchecked(best), evaluations, start)
}

/// Best of `iterations` uniformly sampled permutations (Fisher-Yates on a
/// `ChaCha8Rng` seeded with `seed`). The first sample wins ties.
pub fn random_search(pattern: &BlockPattern, cfg: &ArchConfig, iterations: u64, seed: u64) -> Result<SolverResult> {
    let start = Instant::now();
    if iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    let tensor = prepare(pattern, cfg)?;
    let n = pattern.num_wordlines();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for _ in 0..iterations {
        perm.shuffle(&mut rng);
        let s = tensor.arrangement_score(&perm);
        if s > best_score {
            best_score = s;
            best = perm.clone();
        }
    }
    SolverResult::finish(pattern, cfg, Permutation::from_vec_unchecked(best), iterations, start)
}

/// Greedy completion of one ordered starting pair.
fn greedy_from(tensor: &ScoreTensor, first: usize, second: usize) -> Vec<usize> {
    let n = tensor.len();
    let mut placed = vec![false; n];
    let mut seq = Vec::with_capacity(n);
    seq.extend([first, second]);
    placed[first] = true;
    placed[second] = true;
    while seq.len() < n {
        let (a, b) = (seq[seq.len() - 2], seq[seq.len() - 1]);
        let mut pick = usize::MAX;
        let mut pick_score = f64::NEG_INFINITY;
        for w in (0..n).filter(|&w| !placed[w]) {
            let s = tensor.get(a, b, w);
            if s > pick_score {
                pick_score = s;
                pick = w;
            }
        }
        placed[pick] = true;
        seq.push(pick);
    }
    seq
}

fn greedy_with_tensor(tensor: &ScoreTensor) -> (Vec<usize>, f64, u64) {
    let n = tensor.len();
    let mut best = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    let mut evaluations = 0;
    for u in 0..n {
        for v in (0..n).filter(|&v| v != u) {
            let seq = greedy_from(tensor, u, v);
            let s = tensor.arrangement_score(&seq);
            evaluations += 1;
            if s > best_score {
                best_score = s;
                best = seq;
            }
        }
    }
    (best, best_score, evaluations)
}

/// Nearest-neighbor style construction over triples: from every ordered
/// starting pair, repeatedly append the unplaced page that maximizes the
/// newest triple's score, then keep the best completed sequence.
pub fn greedy_arrange(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<SolverResult> {
    let start = Instant::now();
    let tensor = prepare(pattern, cfg)?;
    let (best, _, evaluations) = greedy_with_tensor(&tensor);
    SolverResult::finish(pattern, cfg, Permutation::from_vec_unchecked(best), evaluations, start)
}

/// Start offsets of the triples touching position `i` or `j`, deduplicated.
fn touched_triples(n: usize, i: usize, j: usize, out: &mut Vec<usize>) {
    out.clear();
    for p in [i, j] {
        for t in p.saturating_sub(2)..=p.min(n - 3) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
}

fn triples_sum(tensor: &ScoreTensor, seq: &[usize], starts: &[usize]) -> f64 {
    starts
        .iter()
        .map(|&t| tensor.get(seq[t], seq[t + 1], seq[t + 2]))
        .sum()
}

/// Score change from swapping positions `i` and `j` of `seq`, computed from
/// the at most six triples the swap touches. `seq` is left unchanged.
pub fn swap_delta(tensor: &ScoreTensor, seq: &mut [usize], i: usize, j: usize) -> f64 {
    let mut starts = Vec::with_capacity(6);
    touched_triples(seq.len(), i, j, &mut starts);
    let before = triples_sum(tensor, seq, &starts);
    seq.swap(i, j);
    let after = triples_sum(tensor, seq, &starts);
    seq.swap(i, j);
    after - before
}

/// Metropolis search over position swaps, started from the greedy
/// arrangement. Improving or neutral moves are always accepted, worse moves
/// with probability `exp(delta / T)`; `T` is multiplied by the cooling
/// factor after every step. Returns the best state ever visited.
pub fn simulated_annealing(pattern: &BlockPattern, cfg: &ArchConfig, schedule: &AnnealSchedule) -> Result<SolverResult> {
    anneal(pattern, cfg, schedule, None)
}

/// Like [`simulated_annealing`], also returning the score of the chain after
/// every accepted move (the greedy start first).
pub fn simulated_annealing_trace(
    pattern: &BlockPattern,
    cfg: &ArchConfig,
    schedule: &AnnealSchedule,
) -> Result<(SolverResult, Vec<f64>)> {
    let mut trace = Vec::new();
    let r = anneal(pattern, cfg, schedule, Some(&mut trace))?;
    Ok((r, trace))
}

fn anneal(
    pattern: &BlockPattern,
    cfg: &ArchConfig,
    schedule: &AnnealSchedule,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SolverResult> {
    let start = Instant::now();
    schedule.validate()?;
    let tensor = prepare(pattern, cfg)?;
    let n = tensor.len();
    let (mut current, mut current_score, mut evaluations) = greedy_with_tensor(&tensor);
    let mut best = current.clone();
    let mut best_score = current_score;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut temperature = schedule.initial_temperature;
    let mut starts = Vec::with_capacity(6);
    if let Some(t) = trace.as_deref_mut() {
        t.push(current_score);
    }
    for _ in 0..schedule.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        touched_triples(n, i, j, &mut starts);
        let before = triples_sum(&tensor, &current, &starts);
        current.swap(i, j);
        let delta = triples_sum(&tensor, &current, &starts) - before;
        evaluations += 1;
        let accept = delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp();
        if accept {
            current_score += delta;
            if current_score > best_score {
                // resync so float drift cannot accumulate into the best score
                current_score = tensor.arrangement_score(&current);
                best_score = current_score;
                best.copy_from_slice(&current);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(current_score);
            }
        } else {
            current.swap(i, j);
        }
        temperature *= schedule.cooling_factor;
    }
    SolverResult::finish(pattern, cfg, Permutation::from_vec_unchecked(best), evaluations, start)
}

/// [`simulated_annealing`] with the default schedule derived from the greedy
/// start score.
pub fn simulated_annealing_default(pattern: &BlockPattern, cfg: &ArchConfig, seed: u64) -> Result<SolverResult> {
    let tensor = prepare(pattern, cfg)?;
    let (_, greedy_score, _) = greedy_with_tensor(&tensor);
    let schedule = AnnealSchedule::for_start_score(greedy_score.max(f64::MIN_POSITIVE), seed);
    simulated_annealing(pattern, cfg, &schedule)
}
