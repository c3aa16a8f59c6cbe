//! Exhaustive search over all assignments, used as a ground-truth oracle for small instances.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{SolveResult, SolverError, SolverStats};
use crate::model::{HostLoads, Placement, ProblemInstance};
use crate::power::{report_from_loads, total_joules};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactOptions {
    /// Maximum number of complete assignments to enumerate.
    pub budget: u64,
    /// Skip assignments that differ only by permuting identical hosts or identical consecutive VMs.
    pub symmetry_reduction: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { budget: 10_000_000, symmetry_reduction: false }
    }
}

pub fn exact_schedule(instance: &ProblemInstance) -> Result<SolveResult, SolverError> {
    exact_schedule_with(instance, ExactOptions::default())
}

/// Minimum-energy feasible placement; ties go to the lexicographically smallest gene vector.
///
/// Without symmetry reduction `host_count^vm_count` must fit the budget up front. With it, the
/// budget caps the number of canonical assignments actually visited. Either way the returned
/// optimum is the same: the lexicographically smallest member of every symmetry orbit satisfies
/// both canonical-form rules, so it is never pruned.
pub fn exact_schedule_with(instance: &ProblemInstance, options: ExactOptions) -> Result<SolveResult, SolverError> {
    let started = Instant::now();
    let n = instance.vms().len();
    let m = instance.hosts().len();
    if n == 0 {
        return Err(SolverError::EmptyInstance);
    }
    if m == 0 {
        return Err(SolverError::NoHosts);
    }
    if !options.symmetry_reduction {
        let required = u32::try_from(n).ok().and_then(|n| (m as u128).checked_pow(n));
        match required {
            Some(r) if r <= u128::from(options.budget) => {}
            Some(r) => return Err(SolverError::BudgetExceeded { required: r.to_string(), budget: options.budget }),
            None => {
                return Err(SolverError::BudgetExceeded { required: format!("{m}^{n}"), budget: options.budget });
            }
        }
    }

    let hosts = instance.hosts();
    let host_class: Vec<usize> = (0..m)
        .map(|h| {
            (0..=h)
                .find(|&k| {
                    hosts[k].pe_count == hosts[h].pe_count
                        && hosts[k].mips_per_pe == hosts[h].mips_per_pe
                        && hosts[k].power_model == hosts[h].power_model
                })
                .unwrap()
        })
        .collect();
    let vms = instance.vms();
    let twin_of_previous: Vec<bool> = (0..n)
        .map(|i| {
            i > 0 && {
                let (a, b) = (&vms[i - 1], &vms[i]);
                a.pe_count == b.pe_count
                    && a.mips_per_pe == b.mips_per_pe
                    && a.start_time == b.start_time
                    && a.duration == b.duration
            }
        })
        .collect();

    let mut search = Search {
        instance,
        options,
        host_class,
        twin_of_previous,
        loads: HostLoads::empty(instance),
        genes: vec![0; n],
        used: vec![0; m],
        leaves: 0,
        best: None,
    };
    search.descend(0)?;

    let (_, genes) = search.best.ok_or(SolverError::NoFeasibleAssignment)?;
    let loads = HostLoads::from_genes(instance, &genes);
    Ok(SolveResult {
        placement: Placement::from_indices_unchecked(&genes),
        energy: report_from_loads(instance, &loads),
        stats: SolverStats::deterministic("exact", search.leaves, started.elapsed()),
    })
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    options: ExactOptions,
    host_class: Vec<usize>,
    twin_of_previous: Vec<bool>,
    loads: HostLoads,
    genes: Vec<usize>,
    used: Vec<usize>,
    leaves: u64,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, vm: usize) -> Result<(), SolverError> {
        if vm == self.genes.len() {
            self.leaves += 1;
            if self.leaves > self.options.budget {
                return Err(SolverError::BudgetExceeded {
                    required: format!("more than {}", self.options.budget),
                    budget: self.options.budget,
                });
            }
            let joules = total_joules(self.instance, &self.loads);
            if self.best.as_ref().is_none_or(|(b, _)| joules < b * (1.0 - 1e-12)) {
                self.best = Some((joules, self.genes.clone()));
            }
            return Ok(());
        }
        for host in 0..self.host_class.len() {
            if self.options.symmetry_reduction && self.is_redundant(vm, host) {
                continue;
            }
            if !self.loads.fits(self.instance, vm, host) {
                continue;
            }
            self.genes[vm] = host;
            self.used[host] += 1;
            self.loads.add(self.instance, vm, host);
            let outcome = self.descend(vm + 1);
            self.loads.remove(self.instance, vm, host);
            self.used[host] -= 1;
            outcome?;
        }
        Ok(())
    }

    fn is_redundant(&self, vm: usize, host: usize) -> bool {
        if self.twin_of_previous[vm] && host < self.genes[vm - 1] {
            return true;
        }
        self.used[host] == 0
            && (0..host).any(|h| self.host_class[h] == self.host_class[host] && self.used[h] == 0)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{HostId, HostSpec, VmRequest};
    use crate::power::PowerModel;

    fn ibm(id: usize) -> HostSpec {
        HostSpec::new(id, 4, 2933.0, Arc::new(PowerModel::ibm_x3250()))
    }

    fn dell(id: usize) -> HostSpec {
        HostSpec::new(id, 16, 2200.0, Arc::new(PowerModel::dell_r620()))
    }

    #[test]
    fn single_vm_goes_to_cheapest_host() {
        let vm = VmRequest::new("v", 1, 2200.0, 0, 100);
        let inst = ProblemInstance::new(vec![vm], vec![dell(0), ibm(1), ibm(2)]).unwrap();
        let r = exact_schedule(&inst).unwrap();
        assert_eq!(r.placement.host_of(0), HostId(1));
    }

    #[test]
    fn budget_and_infeasibility() {
        let vms: Vec<_> = (0..30).map(|i| VmRequest::new(format!("v{i}"), 1, 1.0, 0, 1)).collect();
        let inst = ProblemInstance::new(vms, vec![ibm(0), ibm(1)]).unwrap();
        assert!(matches!(exact_schedule(&inst), Err(SolverError::BudgetExceeded { .. })));

        let vms: Vec<_> = (0..5).map(|i| VmRequest::new(format!("v{i}"), 1, 1.0, 0, 1)).collect();
        let inst = ProblemInstance::new(vms, vec![ibm(0)]).unwrap();
        assert_eq!(exact_schedule(&inst).unwrap_err(), SolverError::NoFeasibleAssignment);
    }

    #[test]
    fn symmetry_reduction_agrees_with_plain_search() {
        let vms: Vec<_> = (0..7)
            .map(|i| VmRequest::new(format!("v{i}"), 1 + (i % 2) as u32, 900.0, (i / 3) as u64 * 10, 15))
            .collect();
        let inst = ProblemInstance::new(vms, vec![ibm(0), ibm(1), ibm(2), dell(3)]).unwrap();
        let plain = exact_schedule(&inst).unwrap();
        let reduced = exact_schedule_with(&inst, ExactOptions { symmetry_reduction: true, ..Default::default() }).unwrap();
        assert_eq!(plain.placement, reduced.placement);
        assert!(reduced.stats.evaluations < plain.stats.evaluations);
    }

    #[test]
    fn worked_example_optimum_is_single_dell() {
        let vms = (0..16).map(|i| VmRequest::new(format!("v{i:02}"), 1, 2200.0, 0, 8100)).collect();
        let inst = ProblemInstance::new(vms, vec![ibm(0), ibm(1), ibm(2), ibm(3), dell(4)]).unwrap();
        let opts = ExactOptions { symmetry_reduction: true, ..Default::default() };
        let r = exact_schedule_with(&inst, opts).unwrap();
        assert!(r.placement.hosts().iter().all(|&h| h == HostId(4)));
        assert!(((r.energy.total_kwh - 263.0 * 8100.0 / 3.6e6) / r.energy.total_kwh).abs() < 1e-12);
        assert!(matches!(exact_schedule(&inst), Err(SolverError::BudgetExceeded { .. })));
    }
}
