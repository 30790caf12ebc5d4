//! Sample statistics and deterministic parallel trial execution.

use rayon::prelude::*;
use serde::Serialize;

/// Trials per work unit. Block boundaries depend only on the trial count, so
/// reductions are identical for any thread count.
pub const BLOCK_TRIALS: u64 = 1024;

/// Running sums for a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn summary(&self) -> MeanStderr {
        let n = self.count as f64;
        let mean = self.sum / n;
        let variance = if self.count > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanStderr {
            mean,
            stderr: (variance / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
}

impl MeanStderr {
    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Mean and standard error of `samples` (two-pass).
pub fn mean_stderr(samples: &[f64]) -> MeanStderr {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanStderr {
        mean,
        stderr: (variance / n).sqrt(),
    }
}

/// Runs `trials` trials in parallel blocks and folds them in trial order.
///
/// `init` creates a block accumulator, `step(acc, trial)` runs one trial and
/// `merge` combines block accumulators left to right.
pub fn run_trials<A, I, F, M>(trials: u64, init: I, step: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let start = b * BLOCK_TRIALS;
            let end = (start + BLOCK_TRIALS).min(trials);
            for t in start..end {
                step(&mut acc, t);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in partials {
        merge(&mut total, part);
    }
    total
}
