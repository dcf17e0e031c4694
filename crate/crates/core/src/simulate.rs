//! Birkhoff averages of monomials along simulated trajectories.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::invariance::{Dynamics, SystemModel};
use crate::polynomial::MultiIndex;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub x0: Vec<f64>,
    /// Total number of steps `N`; averages use steps `B+1..=N`.
    pub iterations: u64,
    pub burn_in: u64,
    pub indices: Vec<MultiIndex>,
    /// Noise seed for Markov systems.
    pub seed: u64,
    /// `(lower, upper)` in user coordinates; defaults to the set's box doubled about its centre.
    pub escape: Option<(Vec<f64>, Vec<f64>)>,
}

impl TrajectoryConfig {
    /// All monomials up to `degree`, burn-in 1000, seed 0.
    pub fn new(x0: Vec<f64>, iterations: u64, degree: u32) -> Self {
        let n = x0.len();
        TrajectoryConfig {
            x0,
            iterations,
            burn_in: 1000,
            indices: MultiIndex::enumerate(n, degree),
            seed: 0,
            escape: None,
        }
    }
}

fn escape_box(model: &SystemModel, cfg: &TrajectoryConfig) -> (Vec<f64>, Vec<f64>) {
    cfg.escape.clone().unwrap_or_else(|| {
        let s = model.set().scaling();
        let lo = s.center().iter().zip(s.half_width()).map(|(c, h)| c - 2.0 * h).collect();
        let hi = s.center().iter().zip(s.half_width()).map(|(c, h)| c + 2.0 * h).collect();
        (lo, hi)
    })
}

/// Visits every state `T^i(x0)` for `i = 1..=N`, calling `visit(i, x)`.
fn run<F: FnMut(u64, &[f64])>(model: &SystemModel, cfg: &TrajectoryConfig, mut visit: F) -> Result<()> {
    let n = model.dim();
    if cfg.x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, system has {n} states",
            cfg.x0.len()
        )));
    }
    if cfg.iterations == 0 || cfg.iterations <= cfg.burn_in {
        return Err(Error::InvalidParameter(format!(
            "need iterations > burn_in, got {} and {}",
            cfg.iterations, cfg.burn_in
        )));
    }
    let (lo, hi) = escape_box(model, cfg);
    let outside = |x: &[f64]| x.iter().zip(lo.iter().zip(&hi)).any(|(v, (l, h))| !(*l..=*h).contains(v));
    if outside(&cfg.x0) {
        return Err(Error::InvalidParameter("initial state lies outside the escape box".into()));
    }
    let mut x = cfg.x0.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut joint = vec![0.0; 0];
    for i in 1..=cfg.iterations {
        let next = match model.dynamics() {
            Dynamics::Discrete { map } => map.evaluate(&x),
            Dynamics::DiscreteMarkov { map, noise } => {
                let dist = noise.distribution().ok_or_else(|| {
                    Error::Unsupported("simulating a Markov system needs a noise distribution, not only moments".into())
                })?;
                joint.clear();
                joint.extend_from_slice(&x);
                joint.extend(dist.sample(&mut rng));
                map.evaluate(&joint)
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "trajectory simulation is only available for discrete-time systems, not {:?}",
                    other.kind()
                )))
            }
        };
        if outside(&next) || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Escaped {
                iteration: i,
                last_state: x,
            });
        }
        x = next;
        visit(i, &x);
    }
    Ok(())
}

/// Post-burn-in states of the trajectory.
pub fn trajectory(model: &SystemModel, cfg: &TrajectoryConfig) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity((cfg.iterations.saturating_sub(cfg.burn_in)) as usize);
    run(model, cfg, |i, x| {
        if i > cfg.burn_in {
            out.push(x.to_vec());
        }
    })?;
    Ok(out)
}

/// Birkhoff averages of the user-frame monomials `x^alpha`, `alpha` in `cfg.indices`.
pub fn estimate_moments(model: &SystemModel, cfg: &TrajectoryConfig) -> Result<BTreeMap<MultiIndex, f64>> {
    let n = model.dim();
    if let Some(a) = cfg.indices.iter().find(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch(format!(
            "moment index {:?} does not match {n} states",
            a.exponents()
        )));
    }
    let max_deg = cfg
        .indices
        .iter()
        .flat_map(|a| a.exponents().iter().copied())
        .max()
        .unwrap_or(0) as usize;
    let mut sums = vec![0.0; cfg.indices.len()];
    let mut powers = vec![vec![1.0; max_deg + 1]; n];
    run(model, cfg, |i, x| {
        if i <= cfg.burn_in {
            return;
        }
        for (p, &v) in powers.iter_mut().zip(x) {
            for e in 1..=max_deg {
                p[e] = p[e - 1] * v;
            }
        }
        for (s, a) in sums.iter_mut().zip(&cfg.indices) {
            *s += a
                .exponents()
                .iter()
                .enumerate()
                .map(|(j, &e)| powers[j][e as usize])
                .product::<f64>();
        }
    })?;
    let count = (cfg.iterations - cfg.burn_in) as f64;
    Ok(cfg
        .indices
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / count))
        .collect())
}

/// Independent trajectories in parallel; results keep the order of `cfgs`.
pub fn estimate_many(model: &SystemModel, cfgs: &[TrajectoryConfig]) -> Vec<Result<BTreeMap<MultiIndex, f64>>> {
    cfgs.par_iter().map(|c| estimate_moments(model, c)).collect()
}
