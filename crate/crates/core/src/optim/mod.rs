//! Population-based minimizers over box-bounded search spaces.
//!
//! [`smo_run`] is Spider Monkey Optimization (local/global leader phases,
//! leader learning, stagnation-triggered local re-randomization and group
//! fission/fusion). [`pso_run`] is a global-best particle swarm baseline.
//!
//! Both minimize. Higher-is-better objectives must be negated by the caller.
//! Dimensions flagged in [`SearchSpace::integer_mask`] are searched
//! continuously and rounded half away from zero before every evaluation.
//!
//! Every random number a phase needs is drawn from the seeded stream before
//! the phase's candidates are handed to [`Objective::evaluate_batch`], so a
//! parallel objective cannot change the trajectory.

mod pso;
mod smo;

use alloc::string::String;
use alloc::vec::Vec;

pub use self::pso::{pso_run, PsoConfig};
pub use self::smo::{
    global_leader_phase, leader_decision_phases, leader_learning_phases, local_leader_phase,
    selection_probability, smo_init, smo_run, Leader, SmoConfig, Swarm,
};

use crate::math::{clamp, round_half_away};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ObjectiveError(pub String);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("invalid search space: {0}")]
    InvalidSpace(&'static str),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("objective is not finite: {0}")]
    NonFiniteObjective(f64),
    #[error("objective failed for agent {agent} at iteration {iteration}: {source}")]
    Objective {
        agent: usize,
        iteration: usize,
        source: ObjectiveError,
    },
}

/// Something to minimize.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError>;

    /// Evaluates several points; results must be in input order.
    fn evaluate_batch(&mut self, xs: &[Vec<f64>]) -> Vec<Result<f64, ObjectiveError>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }
}

/// Adapts a plain closure.
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok((self.0)(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer_mask: Vec<bool>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, integer_mask: Vec<bool>) -> Result<Self, OptimError> {
        if lower.is_empty() {
            return Err(OptimError::InvalidSpace("at least one dimension required"));
        }
        if lower.len() != upper.len() || lower.len() != integer_mask.len() {
            return Err(OptimError::InvalidSpace("bounds and mask lengths differ"));
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(OptimError::InvalidSpace("need finite lower < upper in every dimension"));
        }
        for ((&lo, &hi), &int) in lower.iter().zip(&upper).zip(&integer_mask) {
            if int && libm::ceil(lo) > libm::floor(hi) {
                return Err(OptimError::InvalidSpace("integer dimension contains no integer"));
            }
        }
        Ok(Self {
            lower,
            upper,
            integer_mask,
        })
    }

    /// Continuous box with no integer dimensions.
    pub fn continuous(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimError> {
        let mask = alloc::vec![false; lower.len()];
        Self::new(lower, upper, mask)
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

    pub fn integer_mask(&self) -> &[bool] {
        &self.integer_mask
    }

    pub fn range(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = clamp(*v, self.lower[j], self.upper[j]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && x.iter().enumerate().all(|(j, &v)| v >= self.lower[j] && v <= self.upper[j])
    }

    /// The point the objective actually sees: masked dimensions rounded
    /// and kept inside the integer part of the box.
    pub fn evaluation_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let v = clamp(v, self.lower[j], self.upper[j]);
                if self.integer_mask[j] {
                    clamp(round_half_away(v), libm::ceil(self.lower[j]), libm::floor(self.upper[j]))
                } else {
                    v
                }
            })
            .collect()
    }
}

/// A non-finite objective value that was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct Discard {
    pub iteration: usize,
    pub agent: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    /// Best point as evaluated (integer dimensions rounded).
    pub best_position: Vec<f64>,
    pub best_objective: f64,
    /// Best-so-far objective after each iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub discarded: Vec<Discard>,
}

/// Minimization value to positive fitness: `1 / (1 + v)` for `v >= 0`,
/// `1 + |v|` otherwise. Strictly decreasing in `v`.
pub fn fitness_of(v: f64) -> Result<f64, OptimError> {
    if !v.is_finite() {
        return Err(OptimError::NonFiniteObjective(v));
    }
    Ok(if v >= 0.0 { 1.0 / (1.0 + v) } else { 1.0 + v.abs() })
}

/// Stand-in objective for discarded agents: finite, worse than anything real.
pub(crate) const DISCARDED_OBJECTIVE: f64 = f64::MAX;

/// Batch evaluation with bookkeeping shared by both optimizers.
pub(crate) struct Evaluator<'a, O: Objective> {
    objective: &'a mut O,
    space: &'a SearchSpace,
    pub iteration: usize,
    pub evaluations: usize,
    pub discarded: Vec<Discard>,
    pub best_position: Vec<f64>,
    pub best_objective: f64,
}

impl<'a, O: Objective> Evaluator<'a, O> {
    pub fn new(objective: &'a mut O, space: &'a SearchSpace) -> Self {
        Self {
            objective,
            space,
            iteration: 0,
            evaluations: 0,
            discarded: Vec::new(),
            best_position: Vec::new(),
            best_objective: f64::INFINITY,
        }
    }

    /// Evaluates `positions` (continuous coordinates) for the given agents.
    /// Non-finite values come back as `None` and are recorded.
    pub fn evaluate(&mut self, agents: &[usize], positions: &[Vec<f64>]) -> Result<Vec<Option<f64>>, OptimError> {
        let points: Vec<Vec<f64>> = positions.iter().map(|p| self.space.evaluation_point(p)).collect();
        let results = self.objective.evaluate_batch(&points);
        self.evaluations += points.len();
        let mut out = Vec::with_capacity(points.len());
        for ((res, point), &agent) in results.into_iter().zip(points).zip(agents) {
            let v = res.map_err(|source| OptimError::Objective {
                agent,
                iteration: self.iteration,
                source,
            })?;
            if !v.is_finite() {
                self.discarded.push(Discard {
                    iteration: self.iteration,
                    agent,
                    value: v,
                });
                out.push(None);
                continue;
            }
            if v < self.best_objective || self.best_position.is_empty() {
                self.best_objective = v;
                self.best_position = point;
            }
            out.push(Some(v));
        }
        Ok(out)
    }

    pub fn finish(self, history: Vec<f64>) -> OptResult {
        let mut best_position = self.best_position;
        let mut best_objective = self.best_objective;
        if best_position.is_empty() {
            // every evaluation was discarded
            best_position = self.space.evaluation_point(self.space.lower());
            best_objective = DISCARDED_OBJECTIVE;
        }
        OptResult {
            best_position,
            best_objective,
            history,
            evaluations: self.evaluations,
            discarded: self.discarded,
        }
    }
}
