#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use vmplace::model::HostLoads;
use vmplace::power::host_power;
use vmplace::schedulers::{Chromosome, repair};
use vmplace::{HostSpec, Placement, PowerModel, PowerOptions, ProblemInstance, VmRequest};

pub fn ibm(id: usize) -> HostSpec {
    HostSpec::new(id, 4, 2933.0, Arc::new(PowerModel::ibm_x3250()))
}

pub fn dell(id: usize) -> HostSpec {
    HostSpec::new(id, 16, 2200.0, Arc::new(PowerModel::dell_r620()))
}

/// Sixteen single-PE lab VMs over one 8100 s session on 4 IBM hosts plus one Dell host.
pub fn worked_example(mips_per_pe: f64) -> ProblemInstance {
    let vms = (0..16).map(|i| VmRequest::new(format!("v{i:02}"), 1, mips_per_pe, 0, 8100)).collect();
    ProblemInstance::new(vms, vec![ibm(0), ibm(1), ibm(2), ibm(3), dell(4)]).unwrap()
}

pub struct Shape {
    pub max_vms: usize,
    pub max_hosts: usize,
    pub max_start: u64,
    pub max_duration: u64,
}

/// Random mix of IBM and Dell hosts with VMs of 1 to 4 PEs at arbitrary core speeds.
pub fn random_instance<R: Rng>(rng: &mut R, shape: &Shape, options: PowerOptions) -> ProblemInstance {
    let n = rng.gen_range(1..=shape.max_vms);
    let m = rng.gen_range(1..=shape.max_hosts);
    let hosts = (0..m).map(|h| if rng.gen_bool(0.5) { ibm(h) } else { dell(h) }).collect();
    let vms = (0..n)
        .map(|i| {
            VmRequest::new(
                format!("vm{i}"),
                rng.gen_range(1..=4),
                rng.gen_range(100.0..2200.0),
                rng.gen_range(0..=shape.max_start),
                rng.gen_range(1..=shape.max_duration),
            )
        })
        .collect();
    ProblemInstance::with_options(vms, hosts, options).unwrap()
}

/// A random instance together with a feasible placement for it.
pub fn random_feasible<R: Rng>(rng: &mut R, shape: &Shape, options: PowerOptions) -> (ProblemInstance, Placement) {
    loop {
        let instance = random_instance(rng, shape, options);
        let m = instance.hosts().len();
        let raw = Chromosome::new((0..instance.vms().len()).map(|_| rng.gen_range(0..m)).collect());
        if let Ok(c) = repair(&raw, &instance, rng) {
            assert!(HostLoads::from_genes(&instance, &c.genes).is_feasible(&instance));
            let placement = c.to_placement(&instance).unwrap();
            return (instance, placement);
        }
    }
}

/// Energy by summing instantaneous power once per second over the horizon.
pub fn riemann_joules(placement: &Placement, instance: &ProblemInstance) -> f64 {
    let mut joules = 0.0;
    for t in 0..instance.horizon() {
        for host in instance.hosts() {
            let active: Vec<&VmRequest> = instance
                .vms()
                .iter()
                .enumerate()
                .filter(|&(i, vm)| placement.host_of(i) == host.id && vm.is_active_at(t))
                .map(|(_, vm)| vm)
                .collect();
            let powered = !active.is_empty() || instance.options().idle_hosts_powered;
            joules += host_power(host, &active, powered).unwrap();
        }
    }
    joules
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}
