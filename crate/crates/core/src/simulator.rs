//! Monte Carlo simulation of prepare → measure → postselect.
//!
//! Each trial samples an intermediate outcome with the Born rule, collapses
//! the state with the Lüders rule, then samples the final measurement in a
//! basis made of `|b⟩` and a fixed orthonormal completion. Trial `i` draws
//! from its own substream, and only integer counts are accumulated, so the
//! statistics are bit-identical for any number of worker threads.

use rand::Rng;
use rayon::prelude::*;

use crate::abl::{born_distribution, luders_update, PrePostContext};
use crate::error::{Error, Result};
use crate::linalg::{basis_completion, inner, Ket, ObservableDecomposition};
use crate::rng::substream;

/// Outcome of one simulated run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    /// Present iff an intermediate measurement was made.
    pub intermediate_branch: Option<usize>,
    /// Index into the final basis; 0 is `|b⟩`.
    pub final_branch: usize,
    pub postselected: bool,
}

/// Inverse-CDF sampling. A draw that falls past the accumulated total
/// (rounding) is clamped to the last branch with positive weight.
fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn final_weights(state: &Ket, final_basis: &[Ket]) -> Result<Vec<f64>> {
    final_basis
        .iter()
        .map(|e| Ok(inner(e, state)?.norm_sqr()))
        .collect()
}

/// Precomputed sampling tables for one context and optional observable.
#[derive(Clone, Debug)]
pub struct Pipeline {
    /// Born weights of the intermediate branches; empty without a measurement.
    intermediate: Vec<f64>,
    /// Final-basis weights, one row per intermediate branch (or a single row
    /// for the unmeasured state).
    finals: Vec<Vec<f64>>,
}

impl Pipeline {
    pub fn new(ctx: &PrePostContext, observable: Option<&ObservableDecomposition>) -> Result<Self> {
        let final_basis = basis_completion(ctx.b());
        match observable {
            None => Ok(Self {
                intermediate: Vec::new(),
                finals: vec![final_weights(ctx.a(), &final_basis)?],
            }),
            Some(obs) => {
                let mut intermediate = born_distribution(ctx.a(), obs)?;
                let mut finals = Vec::with_capacity(obs.len());
                for (weight, p) in intermediate.iter_mut().zip(obs.projectors()) {
                    match luders_update(ctx.a(), p) {
                        Ok(collapsed) => finals.push(final_weights(&collapsed, &final_basis)?),
                        Err(Error::ZeroProjection) => {
                            *weight = 0.0;
                            finals.push(vec![0.0; final_basis.len()]);
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok(Self {
                    intermediate,
                    finals,
                })
            }
        }
    }

    pub fn has_measurement(&self) -> bool {
        !self.intermediate.is_empty()
    }

    pub fn branches(&self) -> usize {
        self.intermediate.len()
    }

    pub fn run_trial<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialRecord {
        let (intermediate_branch, row) = if self.has_measurement() {
            let i = sample_index(&self.intermediate, rng.random::<f64>());
            (Some(i), &self.finals[i])
        } else {
            (None, &self.finals[0])
        };
        let final_branch = sample_index(row, rng.random::<f64>());
        TrialRecord {
            intermediate_branch,
            final_branch,
            postselected: final_branch == 0,
        }
    }
}

/// One trial from scratch. Prefer [`Pipeline`] for repeated runs.
pub fn run_trial<R: Rng + ?Sized>(
    ctx: &PrePostContext,
    observable: Option<&ObservableDecomposition>,
    rng: &mut R,
) -> Result<TrialRecord> {
    Ok(Pipeline::new(ctx, observable)?.run_trial(rng))
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Tally {
    trials: u64,
    postselected: u64,
    /// Postselected counts per intermediate branch.
    counts: Vec<u64>,
}

impl Tally {
    fn empty(branches: usize) -> Self {
        Self {
            trials: 0,
            postselected: 0,
            counts: vec![0; branches],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.postselected += other.postselected;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

fn tally(pipeline: &Pipeline, trials: u64, seed: u64) -> Tally {
    let branches = pipeline.branches();
    (0..trials)
        .into_par_iter()
        .fold(
            || Tally::empty(branches),
            |mut t, i| {
                let record = pipeline.run_trial(&mut substream(seed, i));
                t.trials += 1;
                if record.postselected {
                    t.postselected += 1;
                    if let Some(k) = record.intermediate_branch {
                        t.counts[k] += 1;
                    }
                }
                t
            },
        )
        .reduce(|| Tally::empty(branches), Tally::merge)
}

/// `sqrt(f (1 - f) / n)`.
pub fn binomial_stderr(f: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (f * (1.0 - f) / n as f64).sqrt()
}

/// Postselected frequencies of the intermediate branches.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub trials: u64,
    pub postselected_count: u64,
    pub counts: Vec<u64>,
    pub conditional_freq: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl EnsembleStats {
    /// `(freq - expected) / stderr` per branch. A branch with zero stderr
    /// scores 0 on an exact match and ±∞ otherwise.
    pub fn z_scores(&self, expected: &[f64]) -> Vec<f64> {
        self.conditional_freq
            .iter()
            .zip(&self.stderr)
            .zip(expected)
            .map(|((f, s), e)| {
                let d = f - e;
                if *s > 0.0 {
                    d / s
                } else if d == 0.0 {
                    0.0
                } else {
                    d.signum() * f64::INFINITY
                }
            })
            .collect()
    }

    pub fn postselected_fraction(&self) -> f64 {
        self.postselected_count as f64 / self.trials as f64
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

/// Empirical ABL distribution from postselected trials.
pub fn estimate_abl(
    ctx: &PrePostContext,
    observable: &ObservableDecomposition,
    trials: u64,
    seed: u64,
) -> Result<EnsembleStats> {
    check_trials(trials)?;
    let pipeline = Pipeline::new(ctx, Some(observable))?;
    let t = tally(&pipeline, trials, seed);
    if t.postselected == 0 {
        return Err(Error::NoPostselectedTrials { trials });
    }
    let n = t.postselected;
    let conditional_freq: Vec<f64> = t.counts.iter().map(|&c| c as f64 / n as f64).collect();
    let stderr = conditional_freq
        .iter()
        .map(|&f| binomial_stderr(f, n))
        .collect();
    Ok(EnsembleStats {
        trials: t.trials,
        postselected_count: n,
        counts: t.counts,
        conditional_freq,
        stderr,
    })
}

/// Fraction of trials that pass postselection.
pub fn estimate_final_probability(
    ctx: &PrePostContext,
    observable: Option<&ObservableDecomposition>,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    check_trials(trials)?;
    let pipeline = Pipeline::new(ctx, observable)?;
    let t = tally(&pipeline, trials, seed);
    Ok(t.postselected as f64 / t.trials as f64)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}
