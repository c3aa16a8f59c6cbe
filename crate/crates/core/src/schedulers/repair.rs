use rand::Rng;

use super::{Chromosome, SolverError};
use crate::model::{HostLoads, ProblemInstance, within_capacity};

/// Random fallbacks allowed per VM before giving up.
const RANDOM_RETRIES_PER_VM: usize = 8;

/// Restores capacity feasibility of a chromosome.
///
/// Repeatedly takes the earliest violating (interval, host), evicts the highest-indexed VM
/// contributing to it and moves that VM to the lowest-indexed host that can take it for its
/// whole interval. A VM that fits nowhere goes to a random host; after a bounded number of such
/// fallbacks the chromosome is declared unrepairable. Feasible inputs are returned unchanged.
pub fn repair<R: Rng + ?Sized>(c: &Chromosome, instance: &ProblemInstance, rng: &mut R) -> Result<Chromosome, SolverError> {
    let host_count = instance.hosts().len();
    if c.len() != instance.vms().len() {
        return Err(SolverError::Contract(format!("{} genes for {} VMs", c.len(), instance.vms().len())));
    }
    if host_count == 0 {
        return if c.is_empty() { Ok(c.clone()) } else { Err(SolverError::NoHosts) };
    }
    if let Some(&bad) = c.genes.iter().find(|&&g| g >= host_count) {
        return Err(SolverError::Contract(format!("gene refers to host {bad} of {host_count}")));
    }

    let mut genes = c.genes.clone();
    let mut loads = HostLoads::from_genes(instance, &genes);
    if loads.is_feasible(instance) {
        return Ok(c.clone());
    }
    if exceeds_fleet_capacity(instance) {
        return Err(SolverError::Unrepairable { attempts: 0 });
    }

    let tl = instance.timeline();
    let budget = RANDOM_RETRIES_PER_VM * genes.len().max(1);
    let mut attempts = 0;
    while let Some((segment, host)) = loads.first_violation(instance) {
        let evicted = (0..genes.len())
            .rev()
            .find(|&i| genes[i] == host && tl.span(i).contains(&segment))
            .expect("an overloaded host has active VMs");
        loads.remove(instance, evicted, host);
        let target = match (0..host_count).find(|&h| h != host && loads.fits(instance, evicted, h)) {
            Some(h) => h,
            None => {
                attempts += 1;
                if attempts > budget {
                    return Err(SolverError::Unrepairable { attempts });
                }
                rng.gen_range(0..host_count)
            }
        };
        genes[evicted] = target;
        loads.add(instance, evicted, target);
    }
    Ok(Chromosome::new(genes))
}

/// Whether aggregate demand at some instant exceeds the whole fleet's PE or MIPS capacity.
fn exceeds_fleet_capacity(instance: &ProblemInstance) -> bool {
    let tl = instance.timeline();
    let fleet_pe: u64 = instance.hosts().iter().map(|h| u64::from(h.pe_count)).sum();
    let fleet_mips: f64 = instance.hosts().iter().map(|h| h.total_mips()).sum();
    let mut pe = vec![0u64; tl.segment_count()];
    let mut mips = vec![0.0; tl.segment_count()];
    for (i, vm) in instance.vms().iter().enumerate() {
        for s in tl.span(i) {
            pe[s] += u64::from(vm.pe_count);
            mips[s] += vm.total_mips();
        }
    }
    pe.iter().zip(&mips).any(|(&p, &m)| p > fleet_pe || !within_capacity(m, fleet_mips))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{HostSpec, Placement, VmRequest, check_feasibility};
    use crate::power::PowerModel;

    fn host(id: usize, pe: u32) -> HostSpec {
        HostSpec::new(id, pe, 1000.0, Arc::new(PowerModel::ibm_x3250()))
    }

    fn vms(n: usize) -> Vec<VmRequest> {
        (0..n).map(|i| VmRequest::new(format!("v{i}"), 1, 1000.0, 0, 60)).collect()
    }

    #[test]
    fn feasible_is_fixed_point() {
        let inst = ProblemInstance::new(vms(4), vec![host(0, 4), host(1, 4)]).unwrap();
        let c = Chromosome::new(vec![1, 0, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(repair(&c, &inst, &mut rng).unwrap(), c);
    }

    #[test]
    fn single_eviction_to_empty_host() {
        let inst = ProblemInstance::new(vms(5), vec![host(0, 4), host(1, 4)]).unwrap();
        let c = Chromosome::new(vec![0; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = repair(&c, &inst, &mut rng).unwrap();
        assert_eq!(r.genes, vec![0, 0, 0, 0, 1]);
    }

    #[test]
    fn over_capacity_is_unrepairable() {
        let inst = ProblemInstance::new(vms(9), vec![host(0, 4), host(1, 4)]).unwrap();
        let c = Chromosome::new(vec![0; 9]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(repair(&c, &inst, &mut rng), Err(SolverError::Unrepairable { .. })));
    }

    #[test]
    fn fragmented_capacity_exhausts_retries() {
        // Total PEs suffice (4) but a 2-PE VM fits on no 1-PE host.
        let vms = vec![VmRequest::new("wide", 2, 10.0, 0, 10)];
        let hosts = (0..4).map(|i| HostSpec::new(i, 1, 1000.0, Arc::new(PowerModel::ibm_x3250()))).collect();
        let inst = ProblemInstance::new(vms, hosts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(repair(&Chromosome::new(vec![0]), &inst, &mut rng), Err(SolverError::Unrepairable { .. })));
    }

    #[test]
    fn repaired_output_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vms: Vec<_> = (0..30)
            .map(|i| VmRequest::new(format!("v{i}"), 1 + (i % 3) as u32, 400.0, (i * 7 % 50) as u64, 20 + (i % 5) as u64))
            .collect();
        let inst = ProblemInstance::new(vms, (0..16).map(|i| host(i, 4)).collect()).unwrap();
        for _ in 0..50 {
            let c = Chromosome::new((0..30).map(|_| rng.gen_range(0..16)).collect());
            let r = repair(&c, &inst, &mut rng).unwrap();
            let p = Placement::from_indices_unchecked(&r.genes);
            assert!(check_feasibility(&p, &inst).is_empty());
        }
    }

    proptest::proptest! {
        #[test]
        fn repair_is_sound(
            specs in proptest::collection::vec((1u32..4, 0u64..40, 1u64..25, 0usize..6), 1..25),
            host_pes in proptest::collection::vec(1u32..6, 1..6),
            seed in proptest::prelude::any::<u64>(),
        ) {
            let vms: Vec<_> = specs.iter().enumerate()
                .map(|(i, &(pe, start, d, _))| VmRequest::new(format!("v{i}"), pe, 100.0, start, d))
                .collect();
            let hosts = host_pes.iter().enumerate().map(|(i, &pe)| host(i, pe)).collect::<Vec<_>>();
            let m = hosts.len();
            let inst = ProblemInstance::new(vms, hosts).unwrap();
            let c = Chromosome::new(specs.iter().map(|s| s.3 % m).collect());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match repair(&c, &inst, &mut rng) {
                Ok(r) => {
                    proptest::prop_assert_eq!(r.len(), c.len());
                    let p = Placement::from_indices_unchecked(&r.genes);
                    proptest::prop_assert!(check_feasibility(&p, &inst).is_empty());
                }
                Err(e) => {
                    let unrepairable = matches!(e, SolverError::Unrepairable { .. });
                    proptest::prop_assert!(unrepairable, "unexpected error {:?}", e);
                }
            }
        }
    }
}
