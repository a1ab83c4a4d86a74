//! Global-best particle swarm.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Evaluator, Objective, OptResult, OptimError, SearchSpace, DISCARDED_OBJECTIVE};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub population: usize,
    /// Zero is allowed: the result is then the best initial particle.
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub velocity_fraction: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 50,
            iterations: 10,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_fraction: 0.2,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.population < 1 {
            return Err(OptimError::InvalidConfig("population must be at least 1"));
        }
        if !(self.velocity_fraction > 0.0 && self.velocity_fraction.is_finite()) {
            return Err(OptimError::InvalidConfig("velocity fraction must be positive"));
        }
        if ![self.inertia, self.cognitive, self.social].iter().all(|c| c.is_finite()) {
            return Err(OptimError::InvalidConfig("coefficients must be finite"));
        }
        Ok(())
    }
}

pub fn pso_run<O: Objective>(objective: &mut O, space: &SearchSpace, config: &PsoConfig) -> Result<OptResult, OptimError> {
    config.validate()?;
    let d = space.dims();
    let n = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax: Vec<f64> = (0..d).map(|j| config.velocity_fraction * space.range(j)).collect();

    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push((0..d).map(|j| space.lower()[j] + rng.random::<f64>() * space.range(j)).collect());
        velocities.push((0..d).map(|j| (2.0 * rng.random::<f64>() - 1.0) * vmax[j]).collect());
    }

    let mut eval = Evaluator::new(objective, space);
    let agents: Vec<usize> = (0..n).collect();
    let values = eval.evaluate(&agents, &positions)?;
    let mut personal: Vec<Vec<f64>> = positions.clone();
    let mut personal_value: Vec<f64> = values.into_iter().map(|v| v.unwrap_or(DISCARDED_OBJECTIVE)).collect();
    let mut g = best_index(&personal_value);

    let mut history = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        eval.iteration = t + 1;
        for i in 0..n {
            for j in 0..d {
                let r1 = rng.random::<f64>();
                let r2 = rng.random::<f64>();
                let x = positions[i][j];
                let v = config.inertia * velocities[i][j]
                    + config.cognitive * r1 * (personal[i][j] - x)
                    + config.social * r2 * (personal[g][j] - x);
                let v = v.clamp(-vmax[j], vmax[j]);
                velocities[i][j] = v;
                positions[i][j] = x + v;
            }
            space.clamp_in_place(&mut positions[i]);
        }
        let values = eval.evaluate(&agents, &positions)?;
        for (i, v) in values.into_iter().enumerate() {
            if let Some(v) = v {
                if v < personal_value[i] {
                    personal_value[i] = v;
                    personal[i].clone_from(&positions[i]);
                }
            }
        }
        g = best_index(&personal_value);
        history.push(eval.best_objective);
    }
    Ok(eval.finish(history))
}

fn best_index(values: &[f64]) -> usize {
    (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty population")
}
