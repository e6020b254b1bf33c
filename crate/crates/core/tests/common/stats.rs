//! Moment checks on the LSA sampling primitives, 10⁵ draws each, accepted
//! within three standard errors.

use dgopt_core::optim::lsa::{init_step_leaders, lead_projectile, space_projectile, LsaParams};
use dgopt_core::optim::{Rng, SearchSpace};
use rand::SeedableRng;

pub const N: usize = 100_000;

pub struct MomentCheck {
    pub name: &'static str,
    pub observed: f64,
    pub expected: f64,
    pub std_err: f64,
}

impl MomentCheck {
    pub fn z(&self) -> f64 {
        (self.observed - self.expected).abs() / self.std_err
    }

    pub fn passed(&self) -> bool {
        self.z() <= 3.0
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn uniform_init() -> Vec<MomentCheck> {
    let (a, b) = (2.0, 33.0);
    let space = SearchSpace::uniform(1, a, b).unwrap();
    let params = LsaParams {
        population: N,
        seed: 101,
        ..LsaParams::default()
    };
    let mut rng = Rng::seed_from_u64(101);
    let zero = |_: &[f64]| 0.0;
    let xs: Vec<f64> = init_step_leaders(&params, &space, &zero, &mut rng)
        .unwrap()
        .into_iter()
        .map(|c| c.position[0])
        .collect();
    let w = b - a;
    let n = N as f64;
    vec![
        MomentCheck {
            name: "uniform init mean",
            observed: mean(&xs),
            expected: (a + b) / 2.0,
            std_err: (w * w / 12.0 / n).sqrt(),
        },
        MomentCheck {
            name: "uniform init variance",
            observed: variance(&xs),
            expected: w * w / 12.0,
            std_err: (w.powi(4) / 180.0 / n).sqrt(),
        },
    ]
}

pub fn space_steps() -> Vec<MomentCheck> {
    let mu = 1.0;
    // Wide box so clamping never bites.
    let space = SearchSpace::uniform(1, -1e3, 1e3).unwrap();
    let mut rng = Rng::seed_from_u64(202);
    let steps: Vec<f64> = (0..N)
        .map(|_| space_projectile(&[0.0], &[mu], &space, &mut rng)[0])
        .collect();
    let abs: Vec<f64> = steps.iter().map(|s| s.abs()).collect();
    let sq: Vec<f64> = steps.iter().map(|s| s * s).collect();
    let n = N as f64;
    vec![
        MomentCheck {
            name: "space step E|X|",
            observed: mean(&abs),
            expected: mu,
            std_err: (mu * mu / n).sqrt(),
        },
        MomentCheck {
            name: "space step E[X^2]",
            observed: mean(&sq),
            expected: 2.0 * mu * mu,
            std_err: (20.0 * mu.powi(4) / n).sqrt(),
        },
        MomentCheck {
            name: "space step sign balance",
            observed: mean(&steps),
            expected: 0.0,
            std_err: (2.0 * mu * mu / n).sqrt(),
        },
    ]
}

pub fn lead_steps() -> Vec<MomentCheck> {
    let sigma = 2.0;
    let space = SearchSpace::uniform(1, -1e3, 1e3).unwrap();
    let mut rng = Rng::seed_from_u64(303);
    let steps: Vec<f64> = (0..N)
        .map(|_| lead_projectile(&[5.0], &[sigma], &space, &mut rng)[0] - 5.0)
        .collect();
    let sq: Vec<f64> = steps.iter().map(|s| s * s).collect();
    let n = N as f64;
    vec![
        MomentCheck {
            name: "lead step mean",
            observed: mean(&steps),
            expected: 0.0,
            std_err: sigma / n.sqrt(),
        },
        MomentCheck {
            name: "lead step E[X^2]",
            observed: mean(&sq),
            expected: sigma * sigma,
            std_err: (2.0 * sigma.powi(4) / n).sqrt(),
        },
    ]
}

pub fn all() -> Vec<MomentCheck> {
    let mut v = uniform_init();
    v.extend(space_steps());
    v.extend(lead_steps());
    v
}
