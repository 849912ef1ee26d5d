//! Inverse shadowing on finite metric dynamical systems.
//!
//! The crate builds the δ-pseudo-orbit transition graph of a self-map on a
//! finite metric space and decides inverse shadowing through level-set tube
//! containment, with witnesses and counterexample paths attached to every
//! verdict. Resolution-bounded dynamical moduli and a theorem suite with
//! machine-checkable certificates sit on top.

pub mod deciders;
pub mod graph;
pub mod harness;
pub mod metric;
pub mod pointset;
pub mod properties;
pub mod system;

pub use deciders::{
    decide, decide_robust_is, decide_t0_is, decide_th_is, decide_weak_is,
    enumerate_delta_bijections, max_tube_horizon, oracle_path_enum, tube_ok, DeciderConfig,
    Horizon, ISQuery, ISVerdict, MethodClass, Mode, Outcome, TubeHorizon,
};
pub use harness::{run_all, run_suite, Certificate, SuiteOptions, TheoremId, TheoremSuiteResult};
pub use graph::{build_graph, Comparison, is_pseudo_orbit, shadows, Direction, TimedPath, TransitionGraph};
pub use metric::{validate_metric, Distance, FiniteMetricSpace, MetricError, Point};
pub use pointset::PointSet;
pub use system::{make_zoo_system, OrbitTrace, SystemMap, ZooFamily};
