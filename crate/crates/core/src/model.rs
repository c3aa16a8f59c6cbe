//! Problem instances, placements and capacity feasibility over time.
//!
//! Every VM occupies the half-open interval `[start, start + duration)` on exactly one host.
//! Host load only changes at VM start or end times, so all time-dependent checks operate on
//! the segments between consecutive event boundaries.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::PowerModel;

/// Relative slack used when comparing summed MIPS demand against host capacity.
pub(crate) const CAPACITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid VM {id}: {reason}")]
    InvalidVm { id: String, reason: String },
    #[error("invalid host {id}: {reason}")]
    InvalidHost { id: HostId, reason: String },
    #[error("duplicate VM id {0}")]
    DuplicateVm(String),
    #[error("host at position {position} has id {id}, hosts must be numbered 0..N-1")]
    HostNumbering { position: usize, id: HostId },
    #[error("unknown host {0}")]
    UnknownHost(HostId),
    #[error("unknown VM {0}")]
    UnknownVm(String),
    #[error("placement is not total: {0}")]
    NotTotal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostId(pub usize);

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A timed, non-preemptible CPU demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmRequest {
    pub id: String,
    pub pe_count: u32,
    pub mips_per_pe: f64,
    /// Seconds.
    pub start_time: u64,
    /// Seconds.
    pub duration: u64,
}

impl VmRequest {
    pub fn new(id: impl Into<String>, pe_count: u32, mips_per_pe: f64, start_time: u64, duration: u64) -> Self {
        Self { id: id.into(), pe_count, mips_per_pe, start_time, duration }
    }

    pub fn end_time(&self) -> u64 {
        self.start_time + self.duration
    }

    pub fn total_mips(&self) -> f64 {
        f64::from(self.pe_count) * self.mips_per_pe
    }

    pub fn is_active_at(&self, t: u64) -> bool {
        self.start_time <= t && t < self.end_time()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| Err(ModelError::InvalidVm { id: self.id.clone(), reason: reason.to_string() });
        if self.pe_count == 0 {
            return fail("pe_count must be at least 1");
        }
        if !(self.mips_per_pe.is_finite() && self.mips_per_pe > 0.0) {
            return fail("mips_per_pe must be positive");
        }
        if self.duration == 0 {
            return fail("duration must be positive");
        }
        Ok(())
    }
}

/// A physical machine with homogeneous cores and a sampled power curve.
#[derive(Debug, Clone, PartialEq)]
pub struct HostSpec {
    pub id: HostId,
    pub pe_count: u32,
    pub mips_per_pe: f64,
    pub power_model: Arc<PowerModel>,
}

impl HostSpec {
    pub fn new(id: usize, pe_count: u32, mips_per_pe: f64, power_model: Arc<PowerModel>) -> Self {
        Self { id: HostId(id), pe_count, mips_per_pe, power_model }
    }

    pub fn total_mips(&self) -> f64 {
        f64::from(self.pe_count) * self.mips_per_pe
    }

    fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| Err(ModelError::InvalidHost { id: self.id, reason: reason.to_string() });
        if self.pe_count == 0 {
            return fail("pe_count must be at least 1");
        }
        if !(self.mips_per_pe.is_finite() && self.mips_per_pe > 0.0) {
            return fail("mips_per_pe must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerOptions {
    /// When set, hosts draw idle power over the whole horizon even while empty.
    pub idle_hosts_powered: bool,
}

/// Event boundaries of an instance: the sorted start/end times plus 0 and the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    boundaries: Vec<u64>,
    spans: Vec<Range<usize>>,
    peak_segment: Option<usize>,
}

impl Timeline {
    fn build(vms: &[VmRequest]) -> Self {
        let mut set = BTreeSet::new();
        set.insert(0);
        for vm in vms {
            set.insert(vm.start_time);
            set.insert(vm.end_time());
        }
        let boundaries: Vec<u64> = if vms.is_empty() { Vec::new() } else { set.into_iter().collect() };
        let index = |t: u64| boundaries.binary_search(&t).expect("boundary present");
        let spans: Vec<Range<usize>> = vms.iter().map(|vm| index(vm.start_time)..index(vm.end_time())).collect();

        let segment_count = boundaries.len().saturating_sub(1);
        let mut demand = vec![0.0; segment_count];
        for (vm, span) in vms.iter().zip(&spans) {
            for s in span.clone() {
                demand[s] += vm.total_mips();
            }
        }
        let mut peak_segment = None;
        let mut peak = 0.0;
        for (s, &d) in demand.iter().enumerate() {
            if d > peak {
                peak = d;
                peak_segment = Some(s);
            }
        }
        Self { boundaries, spans, peak_segment }
    }

    /// Sorted distinct boundary times, starting at 0 and ending at the horizon.
    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    pub fn segment(&self, s: usize) -> (u64, u64) {
        (self.boundaries[s], self.boundaries[s + 1])
    }

    pub fn segment_len(&self, s: usize) -> u64 {
        self.boundaries[s + 1] - self.boundaries[s]
    }

    /// Segment indices covered by the VM at `vm_index`.
    pub fn span(&self, vm_index: usize) -> Range<usize> {
        self.spans[vm_index].clone()
    }

    /// Segment with the highest aggregate MIPS demand (earliest on ties).
    pub fn peak_segment(&self) -> Option<usize> {
        self.peak_segment
    }

    /// Segment containing time `t`, if `t` lies before the horizon.
    pub fn segment_at(&self, t: u64) -> Option<usize> {
        if self.boundaries.is_empty() || t >= *self.boundaries.last().unwrap() {
            return None;
        }
        Some(match self.boundaries.binary_search(&t) {
            Ok(i) => i,
            Err(i) => i - 1,
        })
    }
}

/// An immutable SVMAP instance: VMs, hosts and the power policy.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    vms: Vec<VmRequest>,
    hosts: Vec<HostSpec>,
    options: PowerOptions,
    timeline: Timeline,
    vm_index: HashMap<String, usize>,
}

impl ProblemInstance {
    pub fn new(vms: Vec<VmRequest>, hosts: Vec<HostSpec>) -> Result<Self, ModelError> {
        Self::with_options(vms, hosts, PowerOptions::default())
    }

    pub fn with_options(vms: Vec<VmRequest>, hosts: Vec<HostSpec>, options: PowerOptions) -> Result<Self, ModelError> {
        let mut vm_index = HashMap::with_capacity(vms.len());
        for (i, vm) in vms.iter().enumerate() {
            vm.validate()?;
            if vm_index.insert(vm.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateVm(vm.id.clone()));
            }
        }
        for (position, host) in hosts.iter().enumerate() {
            host.validate()?;
            if host.id.0 != position {
                return Err(ModelError::HostNumbering { position, id: host.id });
            }
        }
        let timeline = Timeline::build(&vms);
        Ok(Self { vms, hosts, options, timeline, vm_index })
    }

    pub fn vms(&self) -> &[VmRequest] {
        &self.vms
    }

    pub fn hosts(&self) -> &[HostSpec] {
        &self.hosts
    }

    pub fn options(&self) -> PowerOptions {
        self.options
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn horizon(&self) -> u64 {
        self.vms.iter().map(VmRequest::end_time).max().unwrap_or(0)
    }

    pub fn vm_position(&self, id: &str) -> Option<usize> {
        self.vm_index.get(id).copied()
    }

    pub fn host(&self, id: HostId) -> Result<&HostSpec, ModelError> {
        self.hosts.get(id.0).ok_or(ModelError::UnknownHost(id))
    }

    /// Same VMs and hosts under a different power policy.
    pub fn with_power_options(&self, options: PowerOptions) -> Self {
        Self { options, ..self.clone() }
    }
}

/// Total assignment of the instance's VMs to hosts, stored in VM order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    hosts: Vec<HostId>,
}

impl Placement {
    /// Builds a placement from per-VM host ids in instance order.
    pub fn new(instance: &ProblemInstance, hosts: Vec<HostId>) -> Result<Self, ModelError> {
        if hosts.len() != instance.vms().len() {
            return Err(ModelError::NotTotal(format!(
                "{} assignments for {} VMs",
                hosts.len(),
                instance.vms().len()
            )));
        }
        for &h in &hosts {
            instance.host(h)?;
        }
        Ok(Self { hosts })
    }

    /// Builds a placement from `(vm id, host id)` pairs in any order.
    pub fn from_pairs<I, S>(instance: &ProblemInstance, pairs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (S, HostId)>,
        S: AsRef<str>,
    {
        let mut hosts: Vec<Option<HostId>> = vec![None; instance.vms().len()];
        for (vm, host) in pairs {
            let vm = vm.as_ref();
            let i = instance.vm_position(vm).ok_or_else(|| ModelError::UnknownVm(vm.to_string()))?;
            instance.host(host)?;
            if hosts[i].replace(host).is_some() {
                return Err(ModelError::NotTotal(format!("VM {vm} assigned more than once")));
            }
        }
        let hosts = hosts
            .into_iter()
            .enumerate()
            .map(|(i, h)| h.ok_or_else(|| ModelError::NotTotal(format!("VM {} is unassigned", instance.vms()[i].id))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { hosts })
    }

    pub(crate) fn from_indices_unchecked(genes: &[usize]) -> Self {
        Self { hosts: genes.iter().map(|&h| HostId(h)).collect() }
    }

    pub fn host_of(&self, vm_index: usize) -> HostId {
        self.hosts[vm_index]
    }

    pub fn hosts(&self) -> &[HostId] {
        &self.hosts
    }

    pub fn host_indices(&self) -> Vec<usize> {
        self.hosts.iter().map(|h| h.0).collect()
    }

    /// `(vm id, host id)` pairs in instance order.
    pub fn pairs<'a>(&'a self, instance: &'a ProblemInstance) -> impl Iterator<Item = (&'a str, HostId)> + 'a {
        instance.vms().iter().zip(&self.hosts).map(|(vm, &h)| (vm.id.as_str(), h))
    }

    /// Number of distinct hosts with at least one VM.
    pub fn hosts_used(&self) -> usize {
        self.hosts.iter().collect::<BTreeSet<_>>().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    PeOverflow,
    MipsOverflow,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::PeOverflow => "PE_OVERFLOW",
            ViolationKind::MipsOverflow => "MIPS_OVERFLOW",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub host_id: HostId,
    /// Start of the violating event interval, seconds.
    pub time: u64,
    pub kind: ViolationKind,
    pub demand: f64,
    pub capacity: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on host {} at t={}s: demand {} > capacity {}",
            self.kind, self.host_id, self.time, self.demand, self.capacity
        )
    }
}

/// Per-host, per-segment PE and MIPS load for a (possibly partial) assignment.
#[derive(Debug, Clone)]
pub struct HostLoads {
    segments: usize,
    pe: Vec<u32>,
    mips: Vec<f64>,
}

impl HostLoads {
    pub fn empty(instance: &ProblemInstance) -> Self {
        let segments = instance.timeline().segment_count();
        let cells = segments * instance.hosts().len();
        Self { segments, pe: vec![0; cells], mips: vec![0.0; cells] }
    }

    /// Loads of a complete assignment given as host indices in VM order.
    pub fn from_genes(instance: &ProblemInstance, genes: &[usize]) -> Self {
        let mut loads = Self::empty(instance);
        for (i, &h) in genes.iter().enumerate() {
            loads.add(instance, i, h);
        }
        loads
    }

    fn cell(&self, host: usize, segment: usize) -> usize {
        host * self.segments + segment
    }

    pub fn pe(&self, host: usize, segment: usize) -> u32 {
        self.pe[self.cell(host, segment)]
    }

    pub fn mips(&self, host: usize, segment: usize) -> f64 {
        self.mips[self.cell(host, segment)]
    }

    pub fn add(&mut self, instance: &ProblemInstance, vm_index: usize, host: usize) {
        let vm = &instance.vms()[vm_index];
        for s in instance.timeline().span(vm_index) {
            let c = self.cell(host, s);
            self.pe[c] += vm.pe_count;
            self.mips[c] += vm.total_mips();
        }
    }

    pub fn remove(&mut self, instance: &ProblemInstance, vm_index: usize, host: usize) {
        let vm = &instance.vms()[vm_index];
        for s in instance.timeline().span(vm_index) {
            let c = self.cell(host, s);
            self.pe[c] -= vm.pe_count;
            self.mips[c] -= vm.total_mips();
            if self.pe[c] == 0 {
                self.mips[c] = 0.0;
            }
        }
    }

    /// Whether adding the VM to `host` keeps the host within capacity over the VM's interval.
    pub fn fits(&self, instance: &ProblemInstance, vm_index: usize, host: usize) -> bool {
        let vm = &instance.vms()[vm_index];
        let spec = &instance.hosts()[host];
        instance.timeline().span(vm_index).all(|s| {
            let c = self.cell(host, s);
            self.pe[c] + vm.pe_count <= spec.pe_count && within_capacity(self.mips[c] + vm.total_mips(), spec.total_mips())
        })
    }

    /// Violations of one host within one segment, PE before MIPS.
    pub(crate) fn cell_violations(&self, instance: &ProblemInstance, host: usize, segment: usize) -> Vec<Violation> {
        let spec = &instance.hosts()[host];
        let c = self.cell(host, segment);
        let time = instance.timeline().segment(segment).0;
        let mut out = Vec::new();
        if self.pe[c] > spec.pe_count {
            out.push(Violation {
                host_id: spec.id,
                time,
                kind: ViolationKind::PeOverflow,
                demand: f64::from(self.pe[c]),
                capacity: f64::from(spec.pe_count),
            });
        }
        if !within_capacity(self.mips[c], spec.total_mips()) {
            out.push(Violation {
                host_id: spec.id,
                time,
                kind: ViolationKind::MipsOverflow,
                demand: self.mips[c],
                capacity: spec.total_mips(),
            });
        }
        out
    }

    /// Earliest violating `(segment, host)` in time-then-host order.
    pub(crate) fn first_violation(&self, instance: &ProblemInstance) -> Option<(usize, usize)> {
        (0..self.segments).find_map(|s| {
            (0..instance.hosts().len()).find(|&h| !self.cell_violations(instance, h, s).is_empty()).map(|h| (s, h))
        })
    }

    pub fn violations(&self, instance: &ProblemInstance) -> Vec<Violation> {
        let mut out = Vec::new();
        for s in 0..self.segments {
            for h in 0..instance.hosts().len() {
                out.extend(self.cell_violations(instance, h, s));
            }
        }
        out
    }

    pub fn is_feasible(&self, instance: &ProblemInstance) -> bool {
        self.first_violation(instance).is_none()
    }
}

pub(crate) fn within_capacity(demand: f64, capacity: f64) -> bool {
    demand <= capacity * (1.0 + CAPACITY_EPS)
}

/// VMs placed on `host_id` whose interval contains `t`, in instance order.
pub fn active_vms(placement: &Placement, instance: &ProblemInstance, host_id: HostId, t: u64) -> Result<Vec<String>, ModelError> {
    instance.host(host_id)?;
    Ok(instance
        .vms()
        .iter()
        .zip(placement.hosts())
        .filter(|(vm, h)| **h == host_id && vm.is_active_at(t))
        .map(|(vm, _)| vm.id.clone())
        .collect())
}

/// Every capacity violation of the placement, ordered by time then host id.
pub fn check_feasibility(placement: &Placement, instance: &ProblemInstance) -> Vec<Violation> {
    HostLoads::from_genes(instance, &placement.host_indices()).violations(instance)
}
