//! Energy-aware static VM allocation.
//!
//! Hosts carry sampled utilization-to-power curves, VMs are timed non-preemptible CPU demands,
//! and a [`model::Placement`] assigns every VM to one host for its whole interval. The
//! [`schedulers`] module provides a best-fit-decreasing baseline, a genetic algorithm and an
//! exhaustive oracle; [`experiment`] drives them over parameter grids and writes reports.

pub mod experiment;
pub mod model;
pub mod power;
pub mod schedulers;
pub mod workload;

pub use model::{HostId, HostSpec, Placement, PowerOptions, ProblemInstance, Violation, ViolationKind, VmRequest};
pub use power::{EnergyReport, PowerModel};
