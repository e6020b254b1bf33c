//! Population-based optimizers over a box-bounded continuous space.
//!
//! Both optimizers draw every random number for an iteration before any
//! candidate is evaluated, so results are identical whether the batch is
//! evaluated sequentially or on the rayon pool.

use std::fmt::Write as _;
use std::time::Duration;

use rand::Rng as _;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod lsa;
pub mod pso;

pub type Rng = ChaCha8Rng;

/// Something to minimize.
pub trait Objective: Sync {
    fn cost(&self, x: &[f64]) -> Result<f64>;
}

/// Plain closures are objectives that cannot fail.
impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn cost(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Value(format!(
                "bounds need matching non-empty lower/upper vectors ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Bounds {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(SearchSpace { lower, upper })
    }

    /// The same interval in every dimension.
    pub fn uniform(dims: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dims], vec![upper; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| (*lo..=*hi).contains(v))
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Independent uniform draw in every dimension.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                if lo == hi {
                    lo
                } else {
                    lo + (hi - lo) * rng.random::<f64>()
                }
            })
            .collect()
    }

    /// Reflection through the centre of the box: `lower + upper − x`.
    pub fn opposite(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (lo + hi - v).clamp(*lo, *hi))
            .collect()
    }
}

/// Evaluate a batch in order, optionally on the rayon pool.
pub(crate) fn evaluate_batch<O: Objective + ?Sized>(
    objective: &O,
    candidates: &[&[f64]],
    parallel: bool,
) -> Result<Vec<f64>> {
    if parallel {
        candidates.par_iter().map(|x| objective.cost(x)).collect()
    } else {
        candidates.iter().map(|x| objective.cost(x)).collect()
    }
}

/// Best-so-far history of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// Best objective after each iteration (index 0 is iteration 1).
    pub best_per_iteration: Vec<f64>,
    /// Cumulative objective evaluations after each iteration.
    pub evaluations_per_iteration: Vec<u64>,
    pub best_position: Vec<f64>,
    pub best_objective: f64,
    pub evaluations: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ConvergenceTrace {
    pub fn is_non_increasing(&self) -> bool {
        self.best_per_iteration.windows(2).all(|w| w[1] <= w[0])
    }

    /// `iteration,best_objective,evaluations` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,best_objective,evaluations\n");
        for (i, (best, evals)) in self
            .best_per_iteration
            .iter()
            .zip(&self.evaluations_per_iteration)
            .enumerate()
        {
            let _ = writeln!(out, "{},{},{}", i + 1, best, evals);
        }
        out
    }
}
