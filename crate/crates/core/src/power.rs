//! Sampled utilization-to-power curves and exact energy integration.
//!
//! A host with no active VM draws nothing unless `idle_hosts_powered` is set, in which case it
//! draws its idle power for the whole horizon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HostId, HostLoads, HostSpec, Placement, ProblemInstance, VmRequest, Violation, within_capacity};

pub const JOULES_PER_KWH: f64 = 3.6e6;

/// Number of samples in a power curve: utilization 0.0, 0.1, ..., 1.0.
pub const SAMPLE_COUNT: usize = 11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("utilization {0} outside [0, 1]")]
    Domain(f64),
    #[error("invalid power model {name}: {reason}")]
    InvalidModel { name: String, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("placement is infeasible ({} violations, first: {})", .0.len(), .0[0])]
    Infeasible(Vec<Violation>),
}

/// Power draw in watts sampled at 11 evenly spaced utilization levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPowerModel")]
pub struct PowerModel {
    name: String,
    samples: [f64; SAMPLE_COUNT],
}

#[derive(Deserialize)]
struct RawPowerModel {
    name: String,
    samples: Vec<f64>,
}

impl TryFrom<RawPowerModel> for PowerModel {
    type Error = PowerError;

    fn try_from(raw: RawPowerModel) -> Result<Self, Self::Error> {
        PowerModel::new(raw.name, raw.samples)
    }
}

impl PowerModel {
    pub const IBM_X3250: &'static str = "ibm-x3250";
    pub const DELL_R620: &'static str = "dell-r620";

    pub fn new(name: impl Into<String>, samples: Vec<f64>) -> Result<Self, PowerError> {
        let name = name.into();
        let invalid = |reason: String| PowerError::InvalidModel { name: name.clone(), reason };
        let samples: [f64; SAMPLE_COUNT] = samples
            .try_into()
            .map_err(|s: Vec<f64>| invalid(format!("expected {SAMPLE_COUNT} samples, got {}", s.len())))?;
        if let Some(bad) = samples.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid(format!("sample {bad} is not a non-negative wattage")));
        }
        Ok(Self { name, samples })
    }

    /// IBM System x3250 (1 x Xeon X3470, 4 cores at 2933 MHz).
    pub fn ibm_x3250() -> Self {
        Self {
            name: Self::IBM_X3250.to_string(),
            samples: [41.6, 46.7, 52.3, 57.9, 65.4, 73.0, 80.7, 89.5, 99.6, 105.0, 113.0],
        }
    }

    /// Dell PowerEdge R620 (1 x Xeon E5-2660, 16 cores at 2.2 GHz).
    pub fn dell_r620() -> Self {
        Self {
            name: Self::DELL_R620.to_string(),
            samples: [56.1, 79.3, 89.6, 102.0, 121.0, 132.0, 149.0, 171.0, 195.0, 225.0, 263.0],
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            Self::IBM_X3250 => Some(Self::ibm_x3250()),
            Self::DELL_R620 => Some(Self::dell_r620()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[f64; SAMPLE_COUNT] {
        &self.samples
    }

    pub fn idle_watts(&self) -> f64 {
        self.samples[0]
    }

    pub fn max_watts(&self) -> f64 {
        self.samples[SAMPLE_COUNT - 1]
    }

    /// Piecewise-linear power at utilization `u`; exact at the sample points.
    pub fn interpolate(&self, u: f64) -> Result<f64, PowerError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(PowerError::Domain(u));
        }
        Ok(self.interpolate_clamped(u))
    }

    pub(crate) fn interpolate_clamped(&self, u: f64) -> f64 {
        let pos = u.clamp(0.0, 1.0) * (SAMPLE_COUNT - 1) as f64;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return self.samples[nearest as usize];
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        self.samples[lo] + (self.samples[lo + 1] - self.samples[lo]) * frac
    }
}

/// Parses a JSON document holding either one power model or an array of them.
pub fn parse_power_models(json: &str) -> Result<Vec<PowerModel>, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(PowerModel),
        Many(Vec<PowerModel>),
    }
    Ok(match serde_json::from_str(json)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(ms) => ms,
    })
}

pub fn interpolate_power(model: &PowerModel, u: f64) -> Result<f64, PowerError> {
    model.interpolate(u)
}

/// Fraction of the host's total MIPS consumed by `active`.
pub fn utilization(host: &HostSpec, active: &[&VmRequest]) -> Result<f64, PowerError> {
    let pe: u64 = active.iter().map(|vm| u64::from(vm.pe_count)).sum();
    let mips: f64 = active.iter().map(|vm| vm.total_mips()).sum();
    if pe > u64::from(host.pe_count) {
        return Err(PowerError::Contract(format!("{pe} PEs requested on host {} with {}", host.id, host.pe_count)));
    }
    if !within_capacity(mips, host.total_mips()) {
        return Err(PowerError::Contract(format!(
            "{mips} MIPS requested on host {} with {}",
            host.id,
            host.total_mips()
        )));
    }
    Ok((mips / host.total_mips()).min(1.0))
}

pub fn host_power(host: &HostSpec, active: &[&VmRequest], powered_on: bool) -> Result<f64, PowerError> {
    if !powered_on {
        if !active.is_empty() {
            return Err(PowerError::Contract(format!("host {} is off but has {} active VMs", host.id, active.len())));
        }
        return Ok(0.0);
    }
    Ok(host.power_model.interpolate_clamped(utilization(host, active)?))
}

/// Watts drawn by `host` in `segment` given precomputed loads.
pub(crate) fn segment_watts(instance: &ProblemInstance, loads: &HostLoads, host: usize, segment: usize) -> (f64, f64) {
    let pe = loads.pe(host, segment);
    if pe == 0 && !instance.options().idle_hosts_powered {
        return (0.0, 0.0);
    }
    let spec = &instance.hosts()[host];
    let u = (loads.mips(host, segment) / spec.total_mips()).min(1.0);
    (u, spec.power_model.interpolate_clamped(u))
}

/// Total joules of a feasible assignment; skips report construction.
pub(crate) fn total_joules(instance: &ProblemInstance, loads: &HostLoads) -> f64 {
    let tl = instance.timeline();
    let mut total = 0.0;
    for h in 0..instance.hosts().len() {
        for s in 0..tl.segment_count() {
            let (_, w) = segment_watts(instance, loads, h, s);
            total += w * tl.segment_len(s) as f64;
        }
    }
    total
}

/// Sum of host power at the segment of peak aggregate demand.
pub(crate) fn snapshot_watts(instance: &ProblemInstance, loads: &HostLoads) -> f64 {
    match instance.timeline().peak_segment() {
        Some(s) => (0..instance.hosts().len()).map(|h| segment_watts(instance, loads, h, s).1).sum(),
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSegment {
    pub start: u64,
    pub end: u64,
    pub host_id: HostId,
    pub utilization: f64,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_host: BTreeMap<HostId, f64>,
    pub total_joules: f64,
    pub total_kwh: f64,
    /// Piecewise-constant power timeline; each host's segments partition `[0, horizon)`.
    pub segments: Vec<PowerSegment>,
}

impl EnergyReport {
    pub fn host_kwh(&self, host: HostId) -> f64 {
        self.per_host.get(&host).copied().unwrap_or(0.0) / JOULES_PER_KWH
    }
}

pub fn integrate_energy(placement: &Placement, instance: &ProblemInstance) -> Result<EnergyReport, PowerError> {
    let loads = HostLoads::from_genes(instance, &placement.host_indices());
    let violations = loads.violations(instance);
    if !violations.is_empty() {
        return Err(PowerError::Infeasible(violations));
    }
    Ok(report_from_loads(instance, &loads))
}

pub(crate) fn report_from_loads(instance: &ProblemInstance, loads: &HostLoads) -> EnergyReport {
    let tl = instance.timeline();
    let mut per_host = BTreeMap::new();
    let mut segments = Vec::with_capacity(instance.hosts().len() * tl.segment_count());
    let mut total_joules = 0.0;
    for host in instance.hosts() {
        let mut joules = 0.0;
        for s in 0..tl.segment_count() {
            let (start, end) = tl.segment(s);
            let (utilization, watts) = segment_watts(instance, loads, host.id.0, s);
            joules += watts * (end - start) as f64;
            segments.push(PowerSegment { start, end, host_id: host.id, utilization, watts });
        }
        per_host.insert(host.id, joules);
        total_joules += joules;
    }
    EnergyReport { per_host, total_joules, total_kwh: total_joules / JOULES_PER_KWH, segments }
}
