//! Càdlàg paths on `[0, 1]` and Skorokhod J1 geometry.

mod io;
mod j1;
mod path;
mod time_change;

pub use j1::{
    best_time_change, distance_to_step_class, j1_distance, j1_objective, step_j1_exact,
    uniform_distance, J1Bracket,
};
pub(crate) use j1::largest_jumps;
pub use path::{CadlagPath, JumpEvent, DEFAULT_DELTA, DEFAULT_JUMP_FLOOR};
pub use time_change::{compose_time_change, l1_distance_composed, sup_distance_composed, TimeChange};
