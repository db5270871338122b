//! Range, trace and entropy computations for random walks on finitely
//! generated groups.

pub mod classify;
pub mod config;
pub mod dist_exact;
pub mod estimate_mc;
pub mod groups;
pub mod ladder;
pub mod stream;
pub mod trace_codec;
pub mod walk;

pub use groups::{GroupDescriptor, GroupElement, GroupEnumeration, GroupError, StepDistribution};
pub use stream::RngStreamSpec;
pub use walk::{RangeSet, RangeState, TraceDigraph, Trajectory};
