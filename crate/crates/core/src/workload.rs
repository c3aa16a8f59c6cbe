//! Timetable ingestion and host fleet construction.
//!
//! A timetable row books a lab session for one class group; it expands into one VM per student,
//! all sharing the session's start time and duration. Slot masks mark occupied periods with any
//! of `1`-`9`/`0` and free periods with `-`; the occupied run must be contiguous.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HostSpec, VmRequest};
use crate::power::PowerModel;

/// One-day lab timetable shipped as the reference workload (211 students in 7 groups).
pub const DAY_TIMETABLE_CSV: &str = "\
day,subject,class_id,group_id,students,slot_mask,duration_s
6,506007,CT10QUEE,QT01,5,---456----------,8100
6,501129,CT11QUEE,QT01,5,123-------------,8100
6,501133,DUTHINH6,DT04,35,123-------------,8100
6,501133,DUTHINH5,DT01,45,---456----------,8100
6,501133,DUTHINH5,DT02,45,---456----------,8100
6,501133,DUTHINH6,DT05,35,123-------------,8100
6,501133,DUTHINH6,DT06,41,123-------------,8100
";

pub const TIMETABLE_COLUMNS: [&str; 7] = ["day", "subject", "class_id", "group_id", "students", "slot_mask", "duration_s"];

/// Header of the plain VM-list format, one VM per line.
pub const VM_LIST_COLUMNS: [&str; 5] = ["id", "pe_count", "mips_per_pe", "start_time", "duration"];

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimetableRow {
    pub day: u32,
    pub subject: String,
    pub class_id: String,
    pub group_id: String,
    pub students: u32,
    pub slot_mask: String,
    /// Seconds.
    pub duration: u64,
}

impl TimetableRow {
    /// 1-based index of the first occupied slot.
    pub fn first_slot(&self) -> usize {
        self.slot_mask.chars().position(|c| c != '-').map_or(0, |p| p + 1)
    }

    pub fn run_length(&self) -> usize {
        self.slot_mask.chars().filter(|&c| c != '-').count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlotConfig {
    /// Seconds per slot.
    pub slot_length: u64,
    /// Seconds added to every start time.
    pub day_origin: u64,
    pub slots_per_day: usize,
}

impl Default for SlotConfig {
    fn default() -> Self {
        Self { slot_length: 2700, day_origin: 0, slots_per_day: 15 }
    }
}

/// Per-VM demand used when expanding timetable rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmTemplate {
    pub pe_count: u32,
    pub mips_per_pe: f64,
}

impl VmTemplate {
    /// One PE sized to the slowest core in the fleet, so a VM fits any host class.
    pub fn cross_class(hosts: &[HostSpec]) -> Option<Self> {
        hosts
            .iter()
            .map(|h| h.mips_per_pe)
            .min_by(f64::total_cmp)
            .map(|mips_per_pe| Self { pe_count: 1, mips_per_pe })
    }
}

fn validate_mask(mask: &str) -> Result<(), String> {
    if mask.is_empty() {
        return Err("empty slot mask".into());
    }
    if let Some(bad) = mask.chars().find(|c| !(c.is_ascii_digit() || *c == '-')) {
        return Err(format!("invalid character {bad:?} in slot mask {mask:?}"));
    }
    let occupied: Vec<usize> = mask.char_indices().filter(|(_, c)| *c != '-').map(|(i, _)| i).collect();
    match (occupied.first(), occupied.last()) {
        (None, _) | (_, None) => Err(format!("slot mask {mask:?} has no occupied slot")),
        (Some(first), Some(last)) if last - first + 1 != occupied.len() => {
            Err(format!("slot mask {mask:?} is not one contiguous run"))
        }
        _ => Ok(()),
    }
}

/// Parses a comma- or tab-separated timetable with one header line.
pub fn parse_timetable(text: &str) -> Result<Vec<TimetableRow>, WorkloadError> {
    let Some(header) = text.lines().find(|l| !l.trim().is_empty()) else {
        return Ok(Vec::new());
    };
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let columns = reader.headers().map_err(|e| WorkloadError::Parse { line: 1, reason: e.to_string() })?.len();
    if columns != TIMETABLE_COLUMNS.len() {
        return Err(WorkloadError::Parse {
            line: 1,
            reason: format!("expected {} columns ({}), found {columns}", TIMETABLE_COLUMNS.len(), TIMETABLE_COLUMNS.join(",")),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| WorkloadError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |reason: String| WorkloadError::Parse { line, reason };
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != TIMETABLE_COLUMNS.len() {
            return Err(fail(format!("expected {} fields, found {}", TIMETABLE_COLUMNS.len(), record.len())));
        }
        let field = |i: usize| record.get(i).unwrap_or_default();
        let number = |i: usize| -> Result<u64, WorkloadError> {
            field(i)
                .parse::<u64>()
                .map_err(|_| fail(format!("{} must be a non-negative integer, got {:?}", TIMETABLE_COLUMNS[i], field(i))))
        };
        let day = u32::try_from(number(0)?).map_err(|_| fail("day out of range".into()))?;
        let students = u32::try_from(number(4)?).map_err(|_| fail("students out of range".into()))?;
        if students == 0 {
            return Err(fail("students must be positive".into()));
        }
        let duration = number(6)?;
        if duration == 0 {
            return Err(fail("duration_s must be positive".into()));
        }
        let slot_mask = field(5).to_string();
        validate_mask(&slot_mask).map_err(fail)?;
        rows.push(TimetableRow {
            day,
            subject: field(1).to_string(),
            class_id: field(2).to_string(),
            group_id: field(3).to_string(),
            students,
            slot_mask,
            duration,
        });
    }
    Ok(rows)
}

/// Non-fatal inconsistencies between masks, durations and the slot grid.
pub fn slot_warnings(rows: &[TimetableRow], slots: &SlotConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let label = format!("row {} ({}/{})", i + 1, row.class_id, row.group_id);
        let expected = row.run_length() as u64 * slots.slot_length;
        if row.duration != expected {
            warnings.push(format!(
                "{label}: duration {} s differs from {} slots x {} s = {expected} s",
                row.duration,
                row.run_length(),
                slots.slot_length
            ));
        }
        let last = row.first_slot() + row.run_length() - 1;
        if last > slots.slots_per_day {
            warnings.push(format!("{label}: session ends in slot {last}, beyond {} slots per day", slots.slots_per_day));
        }
    }
    warnings
}

/// One VM per student. Ids are `class/group/ordinal`, numbered per (class, group) in file order.
pub fn expand(rows: &[TimetableRow], slots: &SlotConfig, template: VmTemplate) -> Vec<VmRequest> {
    let mut next_ordinal: HashMap<(&str, &str), u32> = HashMap::new();
    let mut vms = Vec::with_capacity(rows.iter().map(|r| r.students as usize).sum());
    for row in rows {
        let start = slots.day_origin + (row.first_slot() as u64 - 1) * slots.slot_length;
        let ordinal = next_ordinal.entry((&row.class_id, &row.group_id)).or_insert(0);
        for _ in 0..row.students {
            vms.push(VmRequest::new(
                format!("{}/{}/{:03}", row.class_id, row.group_id, ordinal),
                template.pe_count,
                template.mips_per_pe,
                start,
                row.duration,
            ));
            *ordinal += 1;
        }
    }
    vms
}

/// Reads a VM list with the [`VM_LIST_COLUMNS`] header. Values are checked when the instance is
/// built, not here.
pub fn parse_vm_list(text: &str) -> Result<Vec<VmRequest>, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| WorkloadError::Parse { line: 1, reason: e.to_string() })?;
    if header.iter().ne(VM_LIST_COLUMNS) {
        return Err(WorkloadError::Parse { line: 1, reason: format!("expected header {}", VM_LIST_COLUMNS.join(",")) });
    }
    reader
        .deserialize()
        .map(|r: Result<VmRequest, csv::Error>| {
            r.map_err(|e| WorkloadError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn write_vm_list(vms: &[VmRequest]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for vm in vms {
        writer.serialize(vm).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetEntry {
    /// Name of a built-in or user-supplied power model.
    pub model: String,
    pub count: usize,
    pub pe_count: u32,
    pub mips_per_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub entries: Vec<FleetEntry>,
    /// Extra power models referenced by name from `entries`.
    #[serde(default)]
    pub power_models: Vec<PowerModel>,
}

impl FleetSpec {
    pub fn ibm(count: usize) -> FleetEntry {
        FleetEntry { model: PowerModel::IBM_X3250.into(), count, pe_count: 4, mips_per_pe: 2933.0 }
    }

    pub fn dell(count: usize) -> FleetEntry {
        FleetEntry { model: PowerModel::DELL_R620.into(), count, pe_count: 16, mips_per_pe: 2200.0 }
    }

    pub fn new(entries: Vec<FleetEntry>) -> Self {
        Self { entries, power_models: Vec::new() }
    }

    pub fn from_json(json: &str) -> Result<Self, WorkloadError> {
        serde_json::from_str(json).map_err(|e| WorkloadError::Config(format!("fleet file: {e}")))
    }

    pub fn host_count(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }
}

impl Default for FleetSpec {
    /// 100 hosts, half IBM x3250 and half Dell R620.
    fn default() -> Self {
        Self::new(vec![Self::ibm(50), Self::dell(50)])
    }
}

/// Hosts numbered `0..N` in entry order, each bound to its power model.
pub fn build_fleet(spec: &FleetSpec) -> Result<Vec<HostSpec>, WorkloadError> {
    if spec.host_count() == 0 {
        return Err(WorkloadError::Config("fleet has no hosts".into()));
    }
    let mut hosts = Vec::with_capacity(spec.host_count());
    for entry in &spec.entries {
        let model = spec
            .power_models
            .iter()
            .find(|m| m.name() == entry.model)
            .cloned()
            .or_else(|| PowerModel::builtin(&entry.model))
            .ok_or_else(|| WorkloadError::Config(format!("unknown power model {:?}", entry.model)))?;
        if entry.pe_count == 0 || !(entry.mips_per_pe.is_finite() && entry.mips_per_pe > 0.0) {
            return Err(WorkloadError::Config(format!("fleet entry {:?} needs positive pe_count and mips_per_pe", entry.model)));
        }
        let model = Arc::new(model);
        for _ in 0..entry.count {
            hosts.push(HostSpec::new(hosts.len(), entry.pe_count, entry.mips_per_pe, Arc::clone(&model)));
        }
    }
    Ok(hosts)
}
