//! Variation operators acting on the host level of the allocation tree.
//!
//! Both operators displace whole host groups and then reinsert the displaced VMs one by one,
//! preferring hosts that are already in use and, among those, the one whose energy grows least.

use rand::Rng;

use super::bfd::incremental_energy;
use super::{Chromosome, SolverError};
use crate::model::{HostLoads, ProblemInstance};

/// Host-group crossover: the child starts as `base` and inherits from `donor` every VM the donor
/// places on hosts `lo..hi`. VMs that `base` had on those hosts but the donor does not are
/// reinserted.
pub fn group_crossover_at(
    base: &Chromosome,
    donor: &Chromosome,
    hosts: std::ops::Range<usize>,
    instance: &ProblemInstance,
) -> Result<Chromosome, SolverError> {
    if base.len() != donor.len() || base.len() != instance.vms().len() {
        return Err(SolverError::Contract("parents do not match the instance".into()));
    }
    let mut genes = base.genes.clone();
    let mut displaced = Vec::new();
    for vm in 0..genes.len() {
        if hosts.contains(&donor.genes[vm]) {
            genes[vm] = donor.genes[vm];
        } else if hosts.contains(&base.genes[vm]) {
            displaced.push(vm);
        }
    }
    reinsert(instance, &mut genes, &displaced, None);
    Ok(Chromosome::new(genes))
}

/// With probability `prob`, builds two children by host-group crossover over independently drawn
/// host ranges; otherwise returns copies of the parents.
pub fn group_crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    prob: f64,
    instance: &ProblemInstance,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome), SolverError> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(SolverError::Contract(format!("probability {prob} outside [0, 1]")));
    }
    let m = instance.hosts().len();
    if m == 0 {
        return Err(SolverError::NoHosts);
    }
    if !rng.gen_bool(prob) {
        return Ok((a.clone(), b.clone()));
    }
    let range = |rng: &mut R| {
        let lo = rng.gen_range(0..m);
        lo..rng.gen_range(lo + 1..=m)
    };
    let first = range(rng);
    let second = range(rng);
    Ok((group_crossover_at(a, b, first, instance)?, group_crossover_at(b, a, second, instance)?))
}

/// Each occupied host node is dissolved with probability `prob`: its VMs are reinserted elsewhere.
pub fn dissolve_mutation<R: Rng + ?Sized>(
    c: &Chromosome,
    prob: f64,
    instance: &ProblemInstance,
    rng: &mut R,
) -> Result<Chromosome, SolverError> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(SolverError::Contract(format!("probability {prob} outside [0, 1]")));
    }
    let mut genes = c.genes.clone();
    for host in 0..instance.hosts().len() {
        if !rng.gen_bool(prob) {
            continue;
        }
        dissolve_host(instance, &mut genes, host);
    }
    Ok(Chromosome::new(genes))
}

fn dissolve_host(instance: &ProblemInstance, genes: &mut [usize], host: usize) {
    let displaced: Vec<usize> = (0..genes.len()).filter(|&vm| genes[vm] == host).collect();
    if !displaced.is_empty() {
        reinsert(instance, genes, &displaced, Some(host));
    }
}

/// Places each displaced VM, in order, on the feasible host with the least incremental energy,
/// looking first at hosts already carrying other VMs. A VM that fits nowhere keeps its gene and
/// is left to repair.
fn reinsert(instance: &ProblemInstance, genes: &mut [usize], displaced: &[usize], excluded: Option<usize>) {
    let m = instance.hosts().len();
    let mut is_displaced = vec![false; genes.len()];
    for &vm in displaced {
        is_displaced[vm] = true;
    }
    let mut loads = HostLoads::empty(instance);
    let mut in_use = vec![false; m];
    for (vm, &h) in genes.iter().enumerate() {
        if !is_displaced[vm] {
            loads.add(instance, vm, h);
            in_use[h] = true;
        }
    }
    for &vm in displaced {
        let cheapest = |only_in_use: bool, loads: &mut HostLoads| {
            let mut best: Option<(usize, f64)> = None;
            for h in 0..m {
                if Some(h) == excluded || (only_in_use && !in_use[h]) || !loads.fits(instance, vm, h) {
                    continue;
                }
                let delta = incremental_energy(instance, loads, vm, h);
                if best.is_none_or(|(_, d)| delta < d) {
                    best = Some((h, delta));
                }
            }
            best.map(|(h, _)| h)
        };
        if let Some(h) = cheapest(true, &mut loads).or_else(|| cheapest(false, &mut loads)) {
            genes[vm] = h;
        }
        loads.add(instance, vm, genes[vm]);
        in_use[genes[vm]] = true;
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{HostSpec, VmRequest};
    use crate::power::PowerModel;

    fn worked_example() -> ProblemInstance {
        let vms = (0..16).map(|i| VmRequest::new(format!("v{i:02}"), 1, 2200.0, 0, 8100)).collect();
        let mut hosts: Vec<_> = (0..4).map(|i| HostSpec::new(i, 4, 2933.0, Arc::new(PowerModel::ibm_x3250()))).collect();
        hosts.push(HostSpec::new(4, 16, 2200.0, Arc::new(PowerModel::dell_r620())));
        ProblemInstance::new(vms, hosts).unwrap()
    }

    #[test]
    fn dissolving_last_ibm_host_completes_dell_packing() {
        let inst = worked_example();
        let mut genes = vec![4; 16];
        genes[3] = 0;
        genes[7] = 0;
        let c = Chromosome::new(genes.clone());
        dissolve_host(&inst, &mut genes, 0);
        assert_eq!(genes, vec![4; 16]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(dissolve_mutation(&c, 0.0, &inst, &mut rng).unwrap(), c);
        assert!(dissolve_mutation(&c, -1.0, &inst, &mut rng).is_err());
    }

    #[test]
    fn crossover_injects_donor_groups() {
        let inst = worked_example();
        let base = Chromosome::new((0..16).map(|i| i / 4).collect());
        let donor = Chromosome::new(vec![4; 16]);
        let child = group_crossover_at(&base, &donor, 4..5, &inst).unwrap();
        assert_eq!(child.genes, vec![4; 16]);
        // Donor uses none of hosts 0..2, so base's VMs there are displaced and reinserted.
        let child = group_crossover_at(&base, &donor, 0..2, &inst).unwrap();
        assert!(child.genes[8..].iter().zip(&base.genes[8..]).all(|(a, b)| a == b));
        assert!(HostLoads::from_genes(&inst, &child.genes).is_feasible(&inst));
    }

    #[test]
    fn crossover_without_probability_copies() {
        let inst = worked_example();
        let a = Chromosome::new(vec![4; 16]);
        let b = Chromosome::new((0..16).map(|i| i / 4).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(group_crossover(&a, &b, 0.0, &inst, &mut rng).unwrap(), (a.clone(), b.clone()));
        assert!(group_crossover(&a, &b, 2.0, &inst, &mut rng).is_err());
        assert!(group_crossover_at(&a, &Chromosome::new(vec![0]), 0..1, &inst).is_err());
    }

    proptest! {
        #[test]
        fn tree_operators_preserve_length_range_and_feasibility(
            seed in any::<u64>(),
            raw in proptest::collection::vec((0usize..5, 0usize..5), 16),
            pc in 0.0f64..=1.0,
            pm in 0.0f64..=1.0,
        ) {
            let inst = worked_example();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = super::super::repair(&Chromosome::new(raw.iter().map(|r| r.0).collect()), &inst, &mut rng).unwrap();
            let b = super::super::repair(&Chromosome::new(raw.iter().map(|r| r.1).collect()), &inst, &mut rng).unwrap();
            let (c1, c2) = group_crossover(&a, &b, pc, &inst, &mut rng).unwrap();
            let m1 = dissolve_mutation(&c1, pm, &inst, &mut rng).unwrap();
            for x in [&c1, &c2, &m1] {
                prop_assert_eq!(x.len(), 16);
                prop_assert!(x.genes.iter().all(|&g| g < 5));
                // Feasible parents with spare capacity stay feasible after reinsertion.
                prop_assert!(HostLoads::from_genes(&inst, &x.genes).is_feasible(&inst));
            }
        }
    }
}
