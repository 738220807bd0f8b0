//! Certified upper bounds on the Lempert function and the chain distances `k^(m)`.

mod chain;
mod disk;
mod lempert;
mod structured;
mod sweep;

pub use chain::{axis_two_chain, chain_ladder, chain_reduce, chain_upper_bound, DiskChain, WaypointStrategy};
pub use disk::{certify_disk, circle_max, exhaustion_slack, AnalyticDisk, Containment, LegDisk, SliceDisk};
pub use lempert::{
    lempert_on_exhaustion, lempert_upper_bound, ChainLeg, LempertOutcome, OptConfig, StructuredMode, Target,
    WarmStart,
};
pub use sweep::{epsilon_sweep, SweepRow, SweepTable, K2_CONSTANT_TOL};
