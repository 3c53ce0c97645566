//! Flow, relative periodic orbits and their census on energy levels.

pub mod census;
pub mod flow;
pub mod lemma1;
pub mod modes;
pub mod nondegeneracy;
pub mod shooting;

pub use census::{canonical_period, level_census, orbit_distance, same_orbit, CensusOptions, CensusReport, CensusRow};
pub use flow::{default_step, equivariance_flow_check, flow, flow_steps, FlowOptions, FlowResult, Scheme};
pub use lemma1::{lemma1_distance, lemma1_scan, Lemma1Scan};
pub use modes::{linear_families, mode_frame, scale_to_energy, LinearFamily, ModeFrame};
pub use nondegeneracy::{weak_nondegeneracy, Nondegeneracy};
pub use shooting::{floquet_multipliers, rpo_shoot, RpoRecord, RpoSeed, ShootingOptions};
