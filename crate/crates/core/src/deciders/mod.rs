//! Inverse-shadowing deciders, certificates, and the brute-force oracle.

mod decide;
pub mod oracle;
mod th;
mod tube;
mod types;

pub use decide::{decide_robust_is, decide_t0_is, decide_weak_is};
pub use oracle::{oracle_find_escape, oracle_path_enum, reference_tube};
pub use th::{
    count_delta_bijections, decide_th_is, enumerate_delta_bijections, BijectionCount,
    BijectionError, Permutation,
};
pub use tube::{max_tube_horizon, tube_ok, tube_ok_from, HorizonTable, TubeBalls};
pub use types::*;

/// Dispatches on the query's class.
pub fn decide(query: &ISQuery<'_>) -> Result<ISVerdict, DecideError> {
    match query.class {
        MethodClass::T0 => decide_t0_is(query),
        MethodClass::Th => decide_th_is(query),
    }
}
