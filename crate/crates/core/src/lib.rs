//! Exhaustive districting analysis on small dual graphs.
//!
//! Blocks of a dual graph are dense indices `0..k` (row-major on grids) and
//! every set of blocks is a `u64` bitmask, so graphs hold at most 64 blocks.
//! Districting plans, voter distributions and districts are all bitmasks;
//! counting a party's blocks in a district is one AND and one popcount.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, parallel
//! drivers and the command line live in the `gerrygrid` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod districting;
pub mod enumeration;
pub mod error;
pub mod evaluator;
pub mod graph;
pub mod metrics;
pub mod optimizers;
pub mod rng;
pub mod symmetry;

pub use analysis::{
    extremes, ols_slope, slope_table, sweep, sweep_range, Extremes, SlopeAccumulator, SlopeRow, SlopeTable, SweepMode,
    SweepRecord,
};
pub use districting::{is_contiguous, is_legal, DistrictingPlan};
pub use enumeration::{enumerate_distributions, enumerate_plans, enumerate_partitions, PlanSet};
pub use error::{Error, Result};
pub use evaluator::{chain_step, ChainConfig, ChainState, Evaluator, SampleMode};
pub use graph::{BlockId, BlockSet, DualGraph, MAX_BLOCKS};
pub use metrics::{clus, clusp, district_rep, num_of, rep_stats, total_rep, Ratio, RepStats, Seats, VoterDistribution};
pub use optimizers::{
    compare, evolve, prob_accept, random_benchmark, rrils, rsa, simulated_anneal, step_random, Algorithm,
    CurvePoint, OptimizerConfig, TrialResult,
};
pub use symmetry::{canonicalize, Symmetry};
