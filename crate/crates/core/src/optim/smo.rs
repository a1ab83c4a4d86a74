//! Spider Monkey Optimization.
//!
//! The swarm is partitioned into contiguous groups. Each iteration runs:
//!
//! 1. local leader phase: every dimension of an agent is perturbed with
//!    probability `1 - pr` towards its group leader and relative to a random
//!    group peer; greedy acceptance;
//! 2. global leader phase: agent `i` is selected with probability
//!    `0.9 fit_i / max_fit + 0.1` and moves one random dimension towards the
//!    global leader; greedy acceptance;
//! 3. local and global leader learning (stagnation counters);
//! 4. local leader decision: a group whose leader stagnated for
//!    `local_leader_limit` iterations has every member either re-sampled
//!    uniformly or pulled towards the global leader and away from its local
//!    leader;
//! 5. global leader decision: after `global_leader_limit` stagnant
//!    iterations the largest group splits in two, or all groups fuse once
//!    `max_groups` is reached.
//!
//! `pr` ramps linearly from `perturbation_rate.0` to `perturbation_rate.1`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fitness_of, Evaluator, Objective, OptResult, OptimError, SearchSpace, DISCARDED_OBJECTIVE};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoConfig {
    pub population: usize,
    pub iterations: usize,
    pub max_groups: usize,
    pub local_leader_limit: usize,
    pub global_leader_limit: usize,
    pub perturbation_rate: (f64, f64),
    pub seed: u64,
}

impl SmoConfig {
    /// Defaults for a `dims`-dimensional problem: 50 agents, 10 iterations,
    /// up to 5 groups, local limit `dims * N`, global limit `N / 2`, pr
    /// ramping from 0.1 to 0.4.
    pub fn for_dims(dims: usize) -> Self {
        let population = 50;
        Self {
            population,
            iterations: 10,
            max_groups: 5,
            local_leader_limit: dims * population,
            global_leader_limit: population / 2,
            perturbation_rate: (0.1, 0.4),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        if self.population < 4 {
            return Err(OptimError::InvalidConfig("population must be at least 4"));
        }
        if self.iterations < 1 {
            return Err(OptimError::InvalidConfig("iterations must be at least 1"));
        }
        if self.max_groups < 1 || self.local_leader_limit < 1 || self.global_leader_limit < 1 {
            return Err(OptimError::InvalidConfig("group count and leader limits must be at least 1"));
        }
        let (a, b) = self.perturbation_rate;
        if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
            return Err(OptimError::InvalidConfig("perturbation rate must stay within [0, 1]"));
        }
        Ok(())
    }

    /// Perturbation rate at iteration `t` (0-based).
    pub fn perturbation_at(&self, t: usize) -> f64 {
        let (a, b) = self.perturbation_rate;
        if self.iterations <= 1 {
            return a;
        }
        a + (b - a) * t as f64 / (self.iterations - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leader {
    pub position: Vec<f64>,
    pub objective: f64,
    /// Consecutive learning phases without improvement.
    pub stagnation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub positions: Vec<Vec<f64>>,
    pub objective_values: Vec<f64>,
    pub fitness: Vec<f64>,
    /// Contiguous agent index ranges, in order, covering the population.
    pub groups: Vec<Range<usize>>,
    pub local_leaders: Vec<Leader>,
    pub global_leader: Leader,
}

impl Swarm {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn set_agent(&mut self, i: usize, position: Vec<f64>, objective: f64) {
        self.positions[i] = position;
        self.objective_values[i] = objective;
        self.fitness[i] = fitness_of(objective).expect("stored objectives are finite");
    }

    fn best_in(&self, range: Range<usize>) -> usize {
        range
            .min_by(|&a, &b| self.objective_values[a].total_cmp(&self.objective_values[b]))
            .expect("groups are non-empty")
    }

    /// Resets every local leader to its group's best member.
    fn recompute_local_leaders(&mut self) {
        self.local_leaders = self
            .groups
            .clone()
            .into_iter()
            .map(|g| {
                let b = self.best_in(g);
                Leader {
                    position: self.positions[b].clone(),
                    objective: self.objective_values[b],
                    stagnation: 0,
                }
            })
            .collect();
    }
}

fn uniform_position(space: &SearchSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..space.dims())
        .map(|j| space.lower()[j] + rng.random::<f64>() * space.range(j))
        .collect()
}

#[inline]
fn symmetric(rng: &mut ChaCha8Rng) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}

/// A random peer of `i` inside `group`, or `None` for singleton groups.
fn random_peer(group: &Range<usize>, i: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
    let n = group.len();
    if n < 2 {
        return None;
    }
    let k = rng.random_range(0..n - 1);
    let r = group.start + k;
    Some(if r >= i { r + 1 } else { r })
}

fn objective_or_discarded(v: Option<f64>) -> f64 {
    v.unwrap_or(DISCARDED_OBJECTIVE)
}

/// Evaluates candidates and keeps the strictly improving ones.
fn greedy_accept<O: Objective>(
    swarm: &mut Swarm,
    agents: Vec<usize>,
    candidates: Vec<Vec<f64>>,
    eval: &mut Evaluator<'_, O>,
) -> Result<(), OptimError> {
    if agents.is_empty() {
        return Ok(());
    }
    let values = eval.evaluate(&agents, &candidates)?;
    for ((i, cand), v) in agents.into_iter().zip(candidates).zip(values) {
        if let Some(v) = v {
            if v < swarm.objective_values[i] {
                swarm.set_agent(i, cand, v);
            }
        }
    }
    Ok(())
}

/// Uniform initialization, a single group, leaders by greedy selection.
pub(crate) fn init_with<O: Objective>(
    space: &SearchSpace,
    config: &SmoConfig,
    eval: &mut Evaluator<'_, O>,
    rng: &mut ChaCha8Rng,
) -> Result<Swarm, OptimError> {
    let n = config.population;
    let positions: Vec<Vec<f64>> = (0..n).map(|_| uniform_position(space, rng)).collect();
    let agents: Vec<usize> = (0..n).collect();
    let values = eval.evaluate(&agents, &positions)?;
    let objective_values: Vec<f64> = values.into_iter().map(objective_or_discarded).collect();
    let fitness = objective_values
        .iter()
        .map(|&v| fitness_of(v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut swarm = Swarm {
        positions,
        objective_values,
        fitness,
        groups: vec![0..n],
        local_leaders: Vec::new(),
        global_leader: Leader {
            position: Vec::new(),
            objective: f64::INFINITY,
            stagnation: 0,
        },
    };
    swarm.recompute_local_leaders();
    let best = swarm.best_in(0..n);
    swarm.global_leader = Leader {
        position: swarm.positions[best].clone(),
        objective: swarm.objective_values[best],
        stagnation: 0,
    };
    Ok(swarm)
}

/// Builds the initial swarm for `objective` with the config's seed.
pub fn smo_init<O: Objective>(objective: &mut O, space: &SearchSpace, config: &SmoConfig) -> Result<Swarm, OptimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = Evaluator::new(objective, space);
    init_with(space, config, &mut eval, &mut rng)
}

pub(crate) fn local_leader_phase_with<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    pr: f64,
    eval: &mut Evaluator<'_, O>,
    rng: &mut ChaCha8Rng,
) -> Result<(), OptimError> {
    let mut agents = Vec::new();
    let mut candidates = Vec::new();
    for (k, group) in swarm.groups.iter().enumerate() {
        let leader = &swarm.local_leaders[k].position;
        for i in group.clone() {
            let Some(r) = random_peer(group, i, rng) else {
                continue;
            };
            let cur = &swarm.positions[i];
            let mut cand = cur.clone();
            let mut moved = false;
            for j in 0..space.dims() {
                if rng.random::<f64>() >= pr {
                    let a = rng.random::<f64>();
                    let b = symmetric(rng);
                    cand[j] = cur[j] + a * (leader[j] - cur[j]) + b * (swarm.positions[r][j] - cur[j]);
                    moved = true;
                }
            }
            space.clamp_in_place(&mut cand);
            if moved && cand != *cur {
                agents.push(i);
                candidates.push(cand);
            }
        }
    }
    greedy_accept(swarm, agents, candidates, eval)
}

/// Local leader phase as a standalone step (fresh generator from `seed`).
pub fn local_leader_phase<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    pr: f64,
    objective: &mut O,
    seed: u64,
) -> Result<(), OptimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval = Evaluator::new(objective, space);
    local_leader_phase_with(swarm, space, pr, &mut eval, &mut rng)
}

/// Selection probability of an agent in the global leader phase.
pub fn selection_probability(fit: f64, max_fit: f64) -> f64 {
    // dividing first keeps the result at most 1 when fit == max_fit
    0.9 * (fit / max_fit) + 0.1
}

pub(crate) fn global_leader_phase_with<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    eval: &mut Evaluator<'_, O>,
    rng: &mut ChaCha8Rng,
) -> Result<(), OptimError> {
    let max_fit = swarm.fitness.iter().copied().fold(0.0, f64::max);
    let mut agents = Vec::new();
    let mut candidates = Vec::new();
    for group in &swarm.groups {
        for i in group.clone() {
            let prob = selection_probability(swarm.fitness[i], max_fit);
            if rng.random::<f64>() >= prob {
                continue;
            }
            let Some(r) = random_peer(group, i, rng) else {
                continue;
            };
            let j = rng.random_range(0..space.dims());
            let cur = &swarm.positions[i];
            let a = rng.random::<f64>();
            let b = symmetric(rng);
            let mut cand = cur.clone();
            cand[j] = cur[j] + a * (swarm.global_leader.position[j] - cur[j]) + b * (swarm.positions[r][j] - cur[j]);
            space.clamp_in_place(&mut cand);
            if cand != *cur {
                agents.push(i);
                candidates.push(cand);
            }
        }
    }
    greedy_accept(swarm, agents, candidates, eval)
}

pub fn global_leader_phase<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    objective: &mut O,
    seed: u64,
) -> Result<(), OptimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval = Evaluator::new(objective, space);
    global_leader_phase_with(swarm, space, &mut eval, &mut rng)
}

/// Local and global leader learning. A leader adopts the best member it
/// oversees when that member is strictly better; otherwise its stagnation
/// counter grows.
pub fn leader_learning_phases(swarm: &mut Swarm) {
    for k in 0..swarm.groups.len() {
        let b = swarm.best_in(swarm.groups[k].clone());
        let leader = &mut swarm.local_leaders[k];
        if swarm.objective_values[b] < leader.objective {
            leader.position = swarm.positions[b].clone();
            leader.objective = swarm.objective_values[b];
            leader.stagnation = 0;
        } else {
            leader.stagnation += 1;
        }
    }
    let b = swarm.best_in(0..swarm.len());
    let gl = &mut swarm.global_leader;
    if swarm.objective_values[b] < gl.objective {
        gl.position = swarm.positions[b].clone();
        gl.objective = swarm.objective_values[b];
        gl.stagnation = 0;
    } else {
        gl.stagnation += 1;
    }
}

pub(crate) fn leader_decision_phases_with<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    config: &SmoConfig,
    pr: f64,
    eval: &mut Evaluator<'_, O>,
    rng: &mut ChaCha8Rng,
) -> Result<(), OptimError> {
    // local leader decision
    let mut agents = Vec::new();
    let mut moved = Vec::new();
    for k in 0..swarm.groups.len() {
        if swarm.local_leaders[k].stagnation < config.local_leader_limit {
            continue;
        }
        swarm.local_leaders[k].stagnation = 0;
        for i in swarm.groups[k].clone() {
            let pos = if rng.random::<f64>() < pr {
                let cur = &swarm.positions[i];
                let gl = &swarm.global_leader.position;
                let ll = &swarm.local_leaders[k].position;
                let mut p: Vec<f64> = (0..space.dims())
                    .map(|j| {
                        let a = rng.random::<f64>();
                        let b = rng.random::<f64>();
                        cur[j] + a * (gl[j] - cur[j]) + b * (cur[j] - ll[j])
                    })
                    .collect();
                space.clamp_in_place(&mut p);
                p
            } else {
                uniform_position(space, rng)
            };
            agents.push(i);
            moved.push(pos);
        }
    }
    if !agents.is_empty() {
        let values = eval.evaluate(&agents, &moved)?;
        for ((i, pos), v) in agents.into_iter().zip(moved).zip(values) {
            swarm.set_agent(i, pos, objective_or_discarded(v));
        }
    }

    // global leader decision
    if swarm.global_leader.stagnation >= config.global_leader_limit {
        swarm.global_leader.stagnation = 0;
        if swarm.groups.len() < config.max_groups {
            split_largest_group(swarm);
        } else {
            swarm.groups = vec![0..swarm.len()];
        }
        swarm.recompute_local_leaders();
    }
    Ok(())
}

pub fn leader_decision_phases<O: Objective>(
    swarm: &mut Swarm,
    space: &SearchSpace,
    config: &SmoConfig,
    pr: f64,
    objective: &mut O,
    seed: u64,
) -> Result<(), OptimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval = Evaluator::new(objective, space);
    leader_decision_phases_with(swarm, space, config, pr, &mut eval, &mut rng)
}

/// Sorts the largest group's members by their first coordinate and cuts it
/// in half. Groups of one agent are left alone.
fn split_largest_group(swarm: &mut Swarm) {
    let (k, group) = swarm
        .groups
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .expect("at least one group");
    if group.len() < 2 {
        return;
    }
    let mut members: Vec<(Vec<f64>, f64, f64)> = group
        .clone()
        .map(|i| (swarm.positions[i].clone(), swarm.objective_values[i], swarm.fitness[i]))
        .collect();
    members.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    for (offset, (p, v, f)) in members.into_iter().enumerate() {
        let i = group.start + offset;
        swarm.positions[i] = p;
        swarm.objective_values[i] = v;
        swarm.fitness[i] = f;
    }
    let mid = group.start + group.len() / 2;
    swarm.groups.splice(k..=k, [group.start..mid, mid..group.end]);
}

/// Full optimization run.
pub fn smo_run<O: Objective>(objective: &mut O, space: &SearchSpace, config: &SmoConfig) -> Result<OptResult, OptimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = Evaluator::new(objective, space);
    let mut swarm = init_with(space, config, &mut eval, &mut rng)?;
    let mut history = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        eval.iteration = t + 1;
        let pr = config.perturbation_at(t);
        local_leader_phase_with(&mut swarm, space, pr, &mut eval, &mut rng)?;
        global_leader_phase_with(&mut swarm, space, &mut eval, &mut rng)?;
        leader_learning_phases(&mut swarm);
        leader_decision_phases_with(&mut swarm, space, config, pr, &mut eval, &mut rng)?;
        history.push(eval.best_objective);
    }
    Ok(eval.finish(history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnObjective;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn config(n: usize, iterations: usize, seed: u64) -> SmoConfig {
        SmoConfig {
            population: n,
            iterations,
            seed,
            ..SmoConfig::for_dims(2)
        }
    }

    #[test]
    fn defaults_follow_conventions() {
        let c = SmoConfig::for_dims(3);
        assert_eq!(c.population, 50);
        assert_eq!(c.iterations, 10);
        assert_eq!(c.max_groups, 5);
        assert_eq!(c.local_leader_limit, 150);
        assert_eq!(c.global_leader_limit, 25);
        assert_eq!(c.perturbation_at(0), 0.1);
        assert!((c.perturbation_at(9) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(config(3, 5, 0).validate().is_err());
        assert!(config(4, 0, 0).validate().is_err());
        let mut c = config(4, 1, 0);
        c.perturbation_rate = (0.1, 1.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn init_respects_bounds_and_leaders() {
        let space = SearchSpace::continuous(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let swarm = smo_init(&mut FnObjective(sphere), &space, &config(20, 1, 9)).unwrap();
        assert!(swarm.positions.iter().all(|p| space.contains(p)));
        assert_eq!(swarm.groups, vec![0..20]);
        let min = swarm.objective_values.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(swarm.global_leader.objective, min);
        assert!(swarm.fitness.iter().all(|&f| f > 0.0));
    }

    #[test]
    fn near_degenerate_bounds() {
        let space = SearchSpace::continuous(vec![1.0 - 1e-9], vec![1.0]).unwrap();
        let swarm = smo_init(&mut FnObjective(sphere), &space, &config(8, 1, 1)).unwrap();
        assert!(swarm.positions.iter().all(|p| space.contains(p)));
    }

    #[test]
    fn singleton_groups_are_skipped() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &config(4, 1, 3)).unwrap();
        swarm.groups = vec![0..1, 1..2, 2..3, 3..4];
        swarm.recompute_local_leaders();
        let before = swarm.clone();
        let mut calls = 0;
        local_leader_phase(&mut swarm, &space, 0.0, &mut FnObjective(|x: &[f64]| { calls += 1; sphere(x) }), 5).unwrap();
        assert_eq!(swarm, before);
        assert_eq!(calls, 0);
    }

    #[test]
    fn agent_on_leader_with_identical_peer_stays_put() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &config(4, 1, 3)).unwrap();
        let p = vec![0.25, -0.5];
        for i in 0..4 {
            swarm.positions[i] = p.clone();
            swarm.objective_values[i] = sphere(&p);
        }
        swarm.recompute_local_leaders();
        let before = swarm.clone();
        local_leader_phase(&mut swarm, &space, 0.0, &mut FnObjective(sphere), 11).unwrap();
        assert_eq!(swarm.positions, before.positions);
        assert_eq!(swarm.objective_values, before.objective_values);
    }

    #[test]
    fn probability_range() {
        assert_eq!(selection_probability(2.0, 2.0), 1.0);
        assert!((selection_probability(1e-300, 2.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fusion_and_split() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let mut cfg = config(7, 1, 2);
        cfg.max_groups = 2;
        cfg.global_leader_limit = 3;
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &cfg).unwrap();
        swarm.global_leader.stagnation = 3;
        leader_decision_phases(&mut swarm, &space, &cfg, 0.1, &mut FnObjective(sphere), 0).unwrap();
        assert_eq!(swarm.groups.len(), 2);
        let sizes: Vec<usize> = swarm.groups.iter().map(|g| g.len()).collect();
        assert!(sizes[0].abs_diff(sizes[1]) <= 1);
        assert_eq!(swarm.global_leader.stagnation, 0);
        // first group holds the smaller first coordinates
        let max_left = swarm.groups[0].clone().map(|i| swarm.positions[i][0]).fold(f64::MIN, f64::max);
        let min_right = swarm.groups[1].clone().map(|i| swarm.positions[i][0]).fold(f64::MAX, f64::min);
        assert!(max_left <= min_right);

        swarm.global_leader.stagnation = 3;
        leader_decision_phases(&mut swarm, &space, &cfg, 0.1, &mut FnObjective(sphere), 0).unwrap();
        assert_eq!(swarm.groups, vec![0..7]);
        assert_eq!(swarm.local_leaders.len(), 1);
    }

    #[test]
    fn below_thresholds_nothing_changes() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let cfg = config(6, 1, 2);
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &cfg).unwrap();
        let before = swarm.clone();
        leader_decision_phases(&mut swarm, &space, &cfg, 0.1, &mut FnObjective(sphere), 0).unwrap();
        assert_eq!(swarm, before);
    }

    #[test]
    fn local_stagnation_relocates_group() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let mut cfg = config(6, 1, 2);
        cfg.local_leader_limit = 2;
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &cfg).unwrap();
        swarm.local_leaders[0].stagnation = 2;
        let before = swarm.clone();
        leader_decision_phases(&mut swarm, &space, &cfg, 0.1, &mut FnObjective(sphere), 4).unwrap();
        assert_eq!(swarm.local_leaders[0].stagnation, 0);
        assert_ne!(swarm.positions, before.positions);
        assert!(swarm.positions.iter().all(|p| space.contains(p)));
        for (p, v) in swarm.positions.iter().zip(&swarm.objective_values) {
            assert_eq!(sphere(p), *v);
        }
    }

    #[test]
    fn counters_follow_improvement() {
        let space = SearchSpace::continuous(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let mut swarm = smo_init(&mut FnObjective(sphere), &space, &config(8, 1, 6)).unwrap();
        swarm.groups = vec![0..4, 4..8];
        swarm.recompute_local_leaders();

        // nothing changed: every counter increments
        leader_learning_phases(&mut swarm);
        assert!(swarm.local_leaders.iter().all(|l| l.stagnation == 1));
        assert_eq!(swarm.global_leader.stagnation, 1);

        // improve group 1 only, beyond the global best
        swarm.positions[5] = vec![0.0, 0.0];
        swarm.objective_values[5] = -1.0;
        leader_learning_phases(&mut swarm);
        assert_eq!(swarm.local_leaders[0].stagnation, 2);
        assert_eq!(swarm.local_leaders[1].stagnation, 0);
        assert_eq!(swarm.global_leader.stagnation, 0);

        // improve every group
        swarm.objective_values[0] = -5.0;
        swarm.objective_values[6] = -6.0;
        leader_learning_phases(&mut swarm);
        assert!(swarm.local_leaders.iter().all(|l| l.stagnation == 0));
        assert_eq!(swarm.global_leader.stagnation, 0);
    }

    #[test]
    fn single_iteration_bookkeeping() {
        let space = SearchSpace::continuous(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let r = smo_run(&mut FnObjective(sphere), &space, &config(4, 1, 8)).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0], r.best_objective);
        assert_eq!(sphere(&r.best_position), r.best_objective);
    }

    #[test]
    fn linear_objective_reaches_lower_bound() {
        let space = SearchSpace::continuous(vec![0.0], vec![10.0]).unwrap();
        let r = smo_run(&mut FnObjective(|x: &[f64]| x[0]), &space, &config(20, 50, 4)).unwrap();
        assert!(r.best_objective <= 0.5, "{}", r.best_objective);
    }

    #[test]
    fn integer_dims_reach_objective_as_integers() {
        let space = SearchSpace::new(vec![5.0, 10.0], vec![30.0, 100.0], vec![true, false]).unwrap();
        let mut seen_fraction = false;
        let mut f = FnObjective(|x: &[f64]| {
            seen_fraction |= x[0].fract() != 0.0 || x[0] < 5.0 || x[0] > 30.0;
            (x[0] - 17.0).abs() + (x[1] - 42.0).abs()
        });
        let r = smo_run(&mut f, &space, &config(12, 15, 1)).unwrap();
        assert!(!seen_fraction);
        assert_eq!(r.best_position[0].fract(), 0.0);
    }

    #[test]
    fn non_finite_values_are_discarded() {
        let space = SearchSpace::continuous(vec![-1.0], vec![1.0]).unwrap();
        let mut f = FnObjective(|x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] * x[0] });
        let r = smo_run(&mut f, &space, &config(10, 5, 2)).unwrap();
        assert!(r.best_objective.is_finite());
        assert!(r.discarded.iter().all(|d| d.value.is_nan()));
    }

    #[test]
    fn objective_errors_carry_agent_context() {
        struct Failing;
        impl Objective for Failing {
            fn evaluate(&mut self, _: &[f64]) -> Result<f64, crate::optim::ObjectiveError> {
                Err(crate::optim::ObjectiveError("boom".into()))
            }
        }
        let space = SearchSpace::continuous(vec![-1.0], vec![1.0]).unwrap();
        let err = smo_run(&mut Failing, &space, &config(4, 1, 0)).unwrap_err();
        assert!(matches!(err, OptimError::Objective { agent: 0, iteration: 0, .. }));
    }
}
