//! Dynamic channel assignment for interference mitigation.
//!
//! The pipeline runs in five steps:
//!
//! 1. [`measurement_round`]: every source transmits once in a globally
//!    orthogonal slot while each region's observer relay records the
//!    received power, giving a [`PowerMatrix`].
//! 2. [`build_interference_list`]: region `i` lists every foreign source
//!    whose power at its observer exceeds `min_own(i) - delta_thr_db`.
//! 3. Lists are exchanged between relays (modelled as lossless).
//! 4. [`merge_interference_sets`]: `IS_i = IL_i ∪ {(i,k) : (i,k) ∈ IL_j, j ≠ i}`.
//! 5. [`assign_channels`]: interference-set members keep their TDMA slot on
//!    an exclusive (slot, sub-channel) cell; every other source is dealt the
//!    remaining cells and may reuse them concurrently with other regions.

mod example;
mod lists;
mod matrix;
mod schedule;

pub use example::{example_matrix, worked_example_lists, worked_example_sets, WorkedExample};
pub use lists::{
    build_interference_list, build_interference_lists, exceeds_threshold, merge_interference_sets, pin_probability,
    pinned_nodes, probabilistic_interference_lists, InterferenceList, InterferenceSet,
};
pub use matrix::{measurement_round, PowerMatrix};
pub use schedule::{
    assign_channels, assign_channels_probabilistic, baseline_schedule, schedule_grid, write_schedule_csv, Cell,
    ChannelPlan, Schedules, SlotSchedule,
};
