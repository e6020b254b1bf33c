//! Global-best particle swarm optimizer.

use std::time::Instant;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{evaluate_batch, ConvergenceTrace, Objective, Rng, SearchSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InertiaSchedule {
    /// `w_max` at the first iteration falling linearly to `w_min` at the last.
    LinearDecreasing,
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub population: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub inertia: InertiaSchedule,
    /// Velocity limit per dimension as a fraction of that dimension's width.
    pub v_clamp_fraction: f64,
    /// Start with random velocities in the clamp range instead of at rest.
    pub random_initial_velocity: bool,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            population: 100,
            iterations: 35,
            c1: 2.0,
            c2: 2.0,
            w_min: 0.4,
            w_max: 0.9,
            inertia: InertiaSchedule::LinearDecreasing,
            v_clamp_fraction: 0.2,
            random_initial_velocity: false,
            seed: 0,
            parallel: false,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Value(format!("PSO parameters: {m}")));
        if self.population < 1 || self.iterations < 1 {
            return bad("population and iterations must be at least 1");
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return bad("acceleration coefficients must be non-negative");
        }
        if !(0.0 < self.w_min && self.w_min <= self.w_max) {
            return bad("inertia bounds need 0 < w_min <= w_max");
        }
        if let InertiaSchedule::Constant { value } = self.inertia {
            if !(value >= 0.0 && value.is_finite()) {
                return bad("constant inertia must be non-negative");
            }
        }
        if !(self.v_clamp_fraction > 0.0 && self.v_clamp_fraction <= 1.0) {
            return bad("v_clamp_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Inertia weight at a 1-based iteration.
pub fn inertia(t: usize, params: &PsoParams) -> f64 {
    match params.inertia {
        InertiaSchedule::Constant { value } => value,
        InertiaSchedule::LinearDecreasing => {
            if params.iterations <= 1 {
                return params.w_max;
            }
            let frac = (t.saturating_sub(1)) as f64 / (params.iterations - 1) as f64;
            params.w_max - (params.w_max - params.w_min) * frac
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_objective: f64,
}

pub fn run_pso<O: Objective + ?Sized>(
    params: &PsoParams,
    objective: &O,
    space: &SearchSpace,
) -> Result<ConvergenceTrace> {
    params.validate()?;
    let start = Instant::now();
    let mut rng = Rng::seed_from_u64(params.seed);
    let dims = space.dims();
    let v_max: Vec<f64> = (0..dims)
        .map(|d| params.v_clamp_fraction * space.width(d))
        .collect();

    let positions: Vec<Vec<f64>> = (0..params.population)
        .map(|_| space.sample(&mut rng))
        .collect();
    let velocities: Vec<Vec<f64>> = (0..params.population)
        .map(|_| {
            v_max
                .iter()
                .map(|&vm| {
                    if params.random_initial_velocity && vm > 0.0 {
                        rng.random_range(-vm..=vm)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = positions.iter().map(Vec::as_slice).collect();
    let energies = evaluate_batch(objective, &refs, params.parallel)?;
    let mut evaluations = energies.len() as u64;

    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .zip(velocities)
        .zip(energies)
        .map(|((position, velocity), energy)| Particle {
            best_position: position.clone(),
            position,
            velocity,
            best_objective: energy,
        })
        .collect();
    let (mut g_pos, mut g_best) = global_best(&swarm);

    let mut best_per_iteration = Vec::with_capacity(params.iterations);
    let mut evaluations_per_iteration = Vec::with_capacity(params.iterations);
    for t in 1..=params.iterations {
        let w = inertia(t, params);
        for p in swarm.iter_mut() {
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let x = p.position[d];
                let v = w * p.velocity[d]
                    + params.c1 * r1 * (p.best_position[d] - x)
                    + params.c2 * r2 * (g_pos[d] - x);
                p.velocity[d] = v.clamp(-v_max[d], v_max[d]);
                p.position[d] = x + p.velocity[d];
            }
            space.clamp(&mut p.position);
        }

        let refs: Vec<&[f64]> = swarm.iter().map(|p| p.position.as_slice()).collect();
        let energies = evaluate_batch(objective, &refs, params.parallel)?;
        evaluations += energies.len() as u64;
        for (p, e) in swarm.iter_mut().zip(energies) {
            if e < p.best_objective {
                p.best_objective = e;
                p.best_position.clone_from(&p.position);
            }
        }
        let (pos, best) = global_best(&swarm);
        if best < g_best {
            g_best = best;
            g_pos = pos;
        }
        best_per_iteration.push(g_best);
        evaluations_per_iteration.push(evaluations);
    }

    Ok(ConvergenceTrace {
        best_per_iteration,
        evaluations_per_iteration,
        best_position: g_pos,
        best_objective: g_best,
        evaluations,
        wall_time: start.elapsed(),
    })
}

fn global_best(swarm: &[Particle]) -> (Vec<f64>, f64) {
    let best = swarm
        .iter()
        .min_by(|a, b| a.best_objective.total_cmp(&b.best_objective))
        .expect("swarm is non-empty");
    (best.best_position.clone(), best.best_objective)
}
