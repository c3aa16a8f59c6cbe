//! Roulette selection, single-point crossover and uniform random-reset mutation.

use rand::Rng;

use super::{Chromosome, SolverError};

/// Two independent fitness-proportional draws. The same individual may be returned twice.
pub fn select_parents<'a, R: Rng + ?Sized>(
    population: &'a [Chromosome],
    fitnesses: &[f64],
    rng: &mut R,
) -> Result<(&'a Chromosome, &'a Chromosome), SolverError> {
    if population.is_empty() || population.len() != fitnesses.len() {
        return Err(SolverError::Contract(format!(
            "{} individuals with {} fitness values",
            population.len(),
            fitnesses.len()
        )));
    }
    if fitnesses.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(SolverError::Contract("fitness values must be positive and finite".into()));
    }
    let total: f64 = fitnesses.iter().sum();
    let a = roulette(fitnesses, total, rng);
    let b = roulette(fitnesses, total, rng);
    Ok((&population[a], &population[b]))
}

fn roulette<R: Rng + ?Sized>(fitnesses: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.r#gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, f) in fitnesses.iter().enumerate() {
        acc += f;
        if target < acc {
            return i;
        }
    }
    fitnesses.len() - 1
}

/// With probability `prob`, swaps tails at a uniform cut in `[1, n-1]`; otherwise copies the parents.
pub fn crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    prob: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome), SolverError> {
    check_lengths(a, b)?;
    check_prob(prob)?;
    let n = a.len();
    if !rng.gen_bool(prob) || n < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.gen_range(1..n);
    crossover_at(a, b, cut)
}

/// Single-point crossover at a fixed cut: children take `a[..cut] ++ b[cut..]` and `b[..cut] ++ a[cut..]`.
pub fn crossover_at(a: &Chromosome, b: &Chromosome, cut: usize) -> Result<(Chromosome, Chromosome), SolverError> {
    check_lengths(a, b)?;
    if cut > a.len() {
        return Err(SolverError::Contract(format!("cut {cut} beyond length {}", a.len())));
    }
    let mut c1 = a.genes[..cut].to_vec();
    c1.extend_from_slice(&b.genes[cut..]);
    let mut c2 = b.genes[..cut].to_vec();
    c2.extend_from_slice(&a.genes[cut..]);
    Ok((Chromosome::new(c1), Chromosome::new(c2)))
}

/// Each gene is independently reset, with probability `prob`, to a uniform host in `0..host_count`.
pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    prob: f64,
    host_count: usize,
    rng: &mut R,
) -> Result<Chromosome, SolverError> {
    check_prob(prob)?;
    if host_count == 0 {
        return Err(SolverError::NoHosts);
    }
    let mut out = c.clone();
    for gene in &mut out.genes {
        if rng.gen_bool(prob) {
            *gene = rng.gen_range(0..host_count);
        }
    }
    Ok(out)
}

fn check_lengths(a: &Chromosome, b: &Chromosome) -> Result<(), SolverError> {
    if a.len() != b.len() {
        return Err(SolverError::Contract(format!("parent lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

fn check_prob(p: f64) -> Result<(), SolverError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SolverError::Contract(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}
