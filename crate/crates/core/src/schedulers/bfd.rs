use std::cmp::Ordering;
use std::time::Instant;

use super::{SolveResult, SolverError, SolverStats};
use crate::model::{HostLoads, Placement, ProblemInstance};
use crate::power::{report_from_loads, segment_watts};

/// Earliest-start-first ordering with least-incremental-energy host choice.
///
/// VMs are taken by ascending start time, then descending total MIPS, then ascending id. Each
/// goes to the feasible host whose energy over the VM's interval grows the least, counting the
/// cost of switching on an empty host. Ties go to the lowest host id.
pub fn bfd_schedule(instance: &ProblemInstance) -> Result<SolveResult, SolverError> {
    let started = Instant::now();
    if instance.vms().is_empty() {
        return Err(SolverError::EmptyInstance);
    }
    if instance.hosts().is_empty() {
        return Err(SolverError::NoHosts);
    }
    let vms = instance.vms();
    let mut order: Vec<usize> = (0..vms.len()).collect();
    order.sort_by(|&a, &b| {
        vms[a]
            .start_time
            .cmp(&vms[b].start_time)
            .then_with(|| vms[b].total_mips().partial_cmp(&vms[a].total_mips()).unwrap_or(Ordering::Equal))
            .then_with(|| vms[a].id.cmp(&vms[b].id))
    });

    let mut loads = HostLoads::empty(instance);
    let mut genes = vec![0; vms.len()];
    let mut evaluations = 0u64;
    for &vm in &order {
        let mut best: Option<(usize, f64)> = None;
        for host in 0..instance.hosts().len() {
            if !loads.fits(instance, vm, host) {
                continue;
            }
            evaluations += 1;
            let delta = incremental_energy(instance, &mut loads, vm, host);
            if best.is_none_or(|(_, d)| delta < d) {
                best = Some((host, delta));
            }
        }
        let (host, _) = best.ok_or_else(|| SolverError::NoFeasibleHost(vms[vm].id.clone()))?;
        genes[vm] = host;
        loads.add(instance, vm, host);
    }

    // Rebuilt from scratch: probing leaves rounding residue in the incremental loads.
    let energy = report_from_loads(instance, &HostLoads::from_genes(instance, &genes));
    Ok(SolveResult {
        placement: Placement::from_indices_unchecked(&genes),
        energy,
        stats: SolverStats::deterministic("bfd", evaluations, started.elapsed()),
    })
}

/// Joules added on `host` over the VM's interval if the VM were placed there.
pub(super) fn incremental_energy(instance: &ProblemInstance, loads: &mut HostLoads, vm: usize, host: usize) -> f64 {
    let tl = instance.timeline();
    let before: f64 = tl.span(vm).map(|s| segment_watts(instance, loads, host, s).1 * tl.segment_len(s) as f64).sum();
    loads.add(instance, vm, host);
    let after: f64 = tl.span(vm).map(|s| segment_watts(instance, loads, host, s).1 * tl.segment_len(s) as f64).sum();
    loads.remove(instance, vm, host);
    after - before
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{HostId, HostSpec, VmRequest, check_feasibility};
    use crate::power::PowerModel;

    fn ibm(id: usize) -> HostSpec {
        HostSpec::new(id, 4, 2933.0, Arc::new(PowerModel::ibm_x3250()))
    }

    fn dell(id: usize) -> HostSpec {
        HostSpec::new(id, 16, 2200.0, Arc::new(PowerModel::dell_r620()))
    }

    #[test]
    fn lowest_host_wins_ties() {
        let inst = ProblemInstance::new(vec![VmRequest::new("v", 1, 500.0, 0, 10)], vec![ibm(0), ibm(1)]).unwrap();
        let r = bfd_schedule(&inst).unwrap();
        assert_eq!(r.placement.host_of(0), HostId(0));
    }

    #[test]
    fn sixteen_vms_fill_four_ibm_hosts() {
        let vms: Vec<_> = (0..16).map(|i| VmRequest::new(format!("v{i:02}"), 1, 2200.0, 0, 8100)).collect();
        let inst = ProblemInstance::new(vms, vec![ibm(0), ibm(1), ibm(2), ibm(3), dell(4)]).unwrap();
        let r = bfd_schedule(&inst).unwrap();
        assert!(r.placement.hosts().iter().all(|h| h.0 < 4));
        assert_eq!(r.placement.hosts_used(), 4);
        assert!(check_feasibility(&r.placement, &inst).is_empty());
    }

    #[test]
    fn reports_vm_that_fits_nowhere() {
        let inst = ProblemInstance::new(vec![VmRequest::new("huge", 8, 100.0, 0, 10)], vec![ibm(0)]).unwrap();
        assert_eq!(bfd_schedule(&inst).unwrap_err(), SolverError::NoFeasibleHost("huge".into()));
        let empty = ProblemInstance::new(vec![], vec![ibm(0)]).unwrap();
        assert_eq!(bfd_schedule(&empty).unwrap_err(), SolverError::EmptyInstance);
    }

    #[test]
    fn reuses_active_host_over_waking_idle_one() {
        // Second VM is cheaper on the already-running host than on a fresh one.
        let vms = vec![VmRequest::new("a", 1, 1000.0, 0, 100), VmRequest::new("b", 1, 1000.0, 0, 100)];
        let inst = ProblemInstance::new(vms, vec![ibm(0), ibm(1)]).unwrap();
        let r = bfd_schedule(&inst).unwrap();
        assert_eq!(r.placement.hosts(), &[HostId(0), HostId(0)]);
    }
}
