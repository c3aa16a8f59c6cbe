//! Genetic algorithm for power-aware allocation.
//!
//! Generational GA over host-index chromosomes with roulette selection, repair to feasibility and
//! elitism. Variation works either on single genes (single-point crossover plus random-reset
//! mutation) or, by default, on host groups of the allocation tree as well; see [`OperatorSet`].
//! Every random draw happens on the coordinating thread; only fitness evaluation fans out to the
//! rayon pool, so results do not depend on the thread count.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree_ops::{dissolve_mutation, group_crossover};
use super::{Chromosome, SolveResult, SolverError, SolverStats, crossover, mutate, repair, select_parents};
use crate::model::{HostLoads, Placement, ProblemInstance};
use crate::power::{report_from_loads, snapshot_watts, total_joules};

/// Generator used by [`gapa_schedule`], seeded with `seed_from_u64(config.seed)`.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Reciprocal of total energy over the horizon.
    #[default]
    Energy,
    /// Reciprocal of summed host power at the instant of peak aggregate demand.
    SnapshotPower,
}

/// Which variation operators produce offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSet {
    /// Host-group crossover, then per-gene mutation followed by host dissolution, both at
    /// `mutation_prob`. Displaced VMs are reinserted where energy grows least. An offspring that
    /// duplicates one already in the next generation has one random VM moved to another host.
    #[default]
    Tree,
    /// Single-point crossover and per-gene random-reset mutation only.
    Gene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub elite_count: usize,
    pub seed: u64,
    pub fitness_mode: FitnessMode,
    pub operators: OperatorSet,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            generations: 500,
            crossover_prob: 0.5,
            mutation_prob: 0.01,
            elite_count: 1,
            seed: 0,
            fitness_mode: FitnessMode::Energy,
            operators: OperatorSet::Tree,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |msg: String| Err(SolverError::InvalidConfig(msg));
        if self.population_size == 0 {
            return fail("population_size must be positive".into());
        }
        if self.generations == 0 {
            return fail("generations must be positive".into());
        }
        for (name, p) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.elite_count >= self.population_size {
            return fail(format!(
                "elite_count {} must be below population_size {}",
                self.elite_count, self.population_size
            ));
        }
        Ok(())
    }
}

/// Higher is better. The chromosome must already be feasible.
pub fn fitness(chromosome: &Chromosome, instance: &ProblemInstance, mode: FitnessMode) -> Result<f64, SolverError> {
    let host_count = instance.hosts().len();
    if chromosome.len() != instance.vms().len() || chromosome.genes.iter().any(|&g| g >= host_count) {
        return Err(SolverError::Contract("chromosome does not match the instance".into()));
    }
    let loads = HostLoads::from_genes(instance, &chromosome.genes);
    let violations = loads.violations(instance);
    if !violations.is_empty() {
        return Err(SolverError::Infeasible(violations));
    }
    let cost = match mode {
        FitnessMode::Energy => total_joules(instance, &loads),
        FitnessMode::SnapshotPower => snapshot_watts(instance, &loads),
    };
    if !(cost.is_finite() && cost > 0.0) {
        return Err(SolverError::Contract(format!("non-positive cost {cost}; fitness undefined")));
    }
    Ok(1.0 / cost)
}

fn evaluate(population: &[Chromosome], instance: &ProblemInstance, mode: FitnessMode) -> Result<Vec<f64>, SolverError> {
    population.par_iter().map(|c| fitness(c, instance, mode)).collect()
}

fn random_chromosome<R: Rng + ?Sized>(vm_count: usize, host_count: usize, rng: &mut R) -> Chromosome {
    Chromosome::new((0..vm_count).map(|_| rng.gen_range(0..host_count)).collect())
}

/// Random chromosomes drawn per initial individual before giving up.
const INIT_ATTEMPTS: usize = 64;

/// A repaired uniformly random chromosome, redrawing when repair gets stuck.
fn random_feasible<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Result<Chromosome, SolverError> {
    let mut last = None;
    for _ in 0..INIT_ATTEMPTS {
        let raw = random_chromosome(instance.vms().len(), instance.hosts().len(), rng);
        match repair(&raw, instance, rng) {
            Ok(c) => return Ok(c),
            // Demand above total fleet capacity: no redraw can help.
            Err(e @ SolverError::Unrepairable { attempts: 0 }) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Moves one random VM to a different random host and repairs; `None` if repair gets stuck.
fn perturb<R: Rng + ?Sized>(c: &Chromosome, instance: &ProblemInstance, rng: &mut R) -> Result<Option<Chromosome>, SolverError> {
    let mut genes = c.genes.clone();
    let vm = rng.gen_range(0..genes.len());
    let host = rng.gen_range(0..instance.hosts().len() - 1);
    genes[vm] = if host >= genes[vm] { host + 1 } else { host };
    match repair(&Chromosome::new(genes), instance, rng) {
        Ok(c) => Ok(Some(c)),
        Err(SolverError::Unrepairable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Index of the fittest individual, lowest index on ties.
fn fittest(fitnesses: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitnesses.iter().enumerate() {
        if f > fitnesses[best] {
            best = i;
        }
    }
    best
}

pub fn gapa_schedule(instance: &ProblemInstance, config: &GaConfig) -> Result<SolveResult, SolverError> {
    let started = Instant::now();
    config.validate()?;
    let vm_count = instance.vms().len();
    let host_count = instance.hosts().len();
    if vm_count == 0 {
        return Err(SolverError::EmptyInstance);
    }
    if host_count == 0 {
        return Err(SolverError::NoHosts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mode = config.fitness_mode;

    let mut population = Vec::with_capacity(config.population_size);
    for _ in 0..config.population_size {
        population.push(random_feasible(instance, &mut rng)?);
    }
    let mut fitnesses = evaluate(&population, instance, mode)?;
    let mut evaluations = population.len() as u64;

    let first = fittest(&fitnesses);
    let mut best = (population[first].clone(), fitnesses[first]);
    let mut trajectory = Vec::with_capacity(config.generations + 1);
    trajectory.push(best.1);

    for _ in 0..config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]));
        let mut next: Vec<Chromosome> = ranked[..config.elite_count].iter().map(|&i| population[i].clone()).collect();
        let mut next_fit: Vec<f64> = ranked[..config.elite_count].iter().map(|&i| fitnesses[i]).collect();

        let mut children = Vec::with_capacity(config.population_size - next.len());
        while next.len() + children.len() < config.population_size {
            let (a, b) = select_parents(&population, &fitnesses, &mut rng)?;
            let (c1, c2) = match config.operators {
                OperatorSet::Gene => crossover(a, b, config.crossover_prob, &mut rng)?,
                OperatorSet::Tree => group_crossover(a, b, config.crossover_prob, instance, &mut rng)?,
            };
            for (child, parent) in [(c1, a), (c2, b)] {
                if next.len() + children.len() == config.population_size {
                    break;
                }
                let mut child = mutate(&child, config.mutation_prob, host_count, &mut rng)?;
                if config.operators == OperatorSet::Tree {
                    child = dissolve_mutation(&child, config.mutation_prob, instance, &mut rng)?;
                }
                // Repair can strand a VM on fragmented capacity even when the instance is
                // feasible; such offspring fall back to their (feasible) parent.
                let mut child = match repair(&child, instance, &mut rng) {
                    Ok(c) => c,
                    Err(SolverError::Unrepairable { .. }) => parent.clone(),
                    Err(e) => return Err(e),
                };
                if config.operators == OperatorSet::Tree
                    && host_count > 1
                    && next.iter().chain(&children).any(|c| *c == child)
                {
                    child = perturb(&child, instance, &mut rng)?.unwrap_or(child);
                }
                children.push(child);
            }
        }
        let child_fit = evaluate(&children, instance, mode)?;
        evaluations += children.len() as u64;
        next.extend(children);
        next_fit.extend(child_fit);
        population = next;
        fitnesses = next_fit;

        let i = fittest(&fitnesses);
        if fitnesses[i] > best.1 {
            best = (population[i].clone(), fitnesses[i]);
        }
        trajectory.push(best.1);
    }

    let loads = HostLoads::from_genes(instance, &best.0.genes);
    Ok(SolveResult {
        placement: Placement::from_indices_unchecked(&best.0.genes),
        energy: report_from_loads(instance, &loads),
        stats: SolverStats {
            solver: "gapa".into(),
            generations_run: config.generations,
            best_fitness: trajectory,
            evaluations,
            wall_time: started.elapsed(),
            rng: Some(RNG_ALGORITHM.into()),
        },
    })
}
