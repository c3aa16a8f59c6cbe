use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::model::{Placement, ProblemInstance};

/// A candidate allocation: `genes[i]` is the host index of VM `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Self {
        Self { genes }
    }

    pub fn from_placement(placement: &Placement) -> Self {
        Self { genes: placement.host_indices() }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn to_placement(&self, instance: &ProblemInstance) -> Result<Placement, SolverError> {
        let hosts = self.genes.iter().map(|&h| crate::model::HostId(h)).collect();
        Placement::new(instance, hosts).map_err(|e| SolverError::Contract(e.to_string()))
    }

    /// Three-level tree view: root, one node per host, the host's VMs as leaves.
    pub fn to_tree(&self, host_count: usize) -> Result<AllocationTree, SolverError> {
        let mut hosts = vec![Vec::new(); host_count];
        for (vm, &h) in self.genes.iter().enumerate() {
            hosts
                .get_mut(h)
                .ok_or_else(|| SolverError::Contract(format!("gene {vm} refers to host {h} of {host_count}")))?
                .push(vm);
        }
        Ok(AllocationTree { hosts })
    }
}

/// Root with host nodes at the second level and VM leaves at the third.
///
/// `hosts[j]` lists the VM indices hanging under host `j`, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationTree {
    pub hosts: Vec<Vec<usize>>,
}

impl AllocationTree {
    /// Flattens the tree back into a gene vector. Every VM must appear under exactly one host.
    pub fn to_chromosome(&self, vm_count: usize) -> Result<Chromosome, SolverError> {
        let mut genes = vec![None; vm_count];
        for (h, vms) in self.hosts.iter().enumerate() {
            for &vm in vms {
                let slot = genes
                    .get_mut(vm)
                    .ok_or_else(|| SolverError::Contract(format!("leaf {vm} outside 0..{vm_count}")))?;
                if slot.replace(h).is_some() {
                    return Err(SolverError::Contract(format!("VM {vm} appears under two hosts")));
                }
            }
        }
        let genes = genes
            .into_iter()
            .enumerate()
            .map(|(vm, h)| h.ok_or_else(|| SolverError::Contract(format!("VM {vm} missing from tree"))))
            .collect::<Result<_, _>>()?;
        Ok(Chromosome { genes })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn tree_shape() {
        let c = Chromosome::new(vec![1, 0, 1, 2]);
        let t = c.to_tree(4).unwrap();
        assert_eq!(t.hosts, vec![vec![1], vec![0, 2], vec![3], vec![]]);
        assert!(c.to_tree(2).is_err());
    }

    #[test]
    fn malformed_trees_rejected() {
        let twice = AllocationTree { hosts: vec![vec![0], vec![0, 1]] };
        assert!(twice.to_chromosome(2).is_err());
        let missing = AllocationTree { hosts: vec![vec![0]] };
        assert!(missing.to_chromosome(2).is_err());
        let stray = AllocationTree { hosts: vec![vec![0, 5]] };
        assert!(stray.to_chromosome(2).is_err());
    }

    proptest! {
        #[test]
        fn gene_tree_round_trip(host_count in 1usize..8, genes in proptest::collection::vec(0usize..8, 0..40)) {
            let genes: Vec<usize> = genes.into_iter().map(|g| g % host_count).collect();
            let c = Chromosome::new(genes);
            let tree = c.to_tree(host_count).unwrap();
            prop_assert_eq!(tree.to_chromosome(c.len()).unwrap(), c.clone());
            prop_assert_eq!(tree.to_chromosome(c.len()).unwrap().to_tree(host_count).unwrap(), tree);
        }
    }
}
