//! Level-set tube containment: `L_k(S) ⊆ B_ε(f^k(x))`.

use std::collections::HashSet;

use crate::graph::{Comparison, Direction, TimedPath, TransitionGraph};
use crate::metric::Point;
use crate::pointset::PointSet;
use crate::system::OrbitTrace;

use super::types::{DecideError, Horizon, Mode, TubeCheck, TubeHorizon};

/// ε-balls around every point, built once per `(system, ε)`.
#[derive(Debug, Clone)]
pub struct TubeBalls {
    balls: Vec<PointSet>,
}

impl TubeBalls {
    pub fn new(graph: &TransitionGraph<'_>, eps: f64, comparison: Comparison) -> Self {
        let space = graph.system().space();
        let n = space.len();
        let balls = (0..n)
            .map(|c| PointSet::from_points(n, (0..n).filter(|&p| comparison.within(space.dist(c, p), eps))))
            .collect();
        TubeBalls { balls }
    }

    #[inline]
    pub fn ball(&self, c: Point) -> &PointSet {
        &self.balls[c]
    }
}

/// Result of scanning one time direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Scan {
    /// First violated `k >= 0`.
    FailsAt(u64),
    /// A `(level, orbit phase)` state repeated with containment holding throughout.
    Stable,
    /// Containment held for every `k <= limit`.
    HeldTo(u64),
}

impl Scan {
    pub(crate) fn horizon(self) -> TubeHorizon {
        match self {
            Scan::FailsAt(k) => TubeHorizon::Finite(k.saturating_sub(1)),
            Scan::Stable => TubeHorizon::Infinite,
            Scan::HeldTo(c) => TubeHorizon::Undetermined(c),
        }
    }
}

fn target(trace: &OrbitTrace, direction: Direction, k: u64) -> usize {
    match direction {
        Direction::Forward => trace.phase(k),
        Direction::Backward => trace.backward_phase(k),
    }
}

/// Scans `k = 0, 1, ...` up to `limit`. With `detect` set, stops as soon as
/// the pair `(L_k, phase of f^{±k}(x))` repeats; since that pair evolves
/// deterministically, a repeat proves containment for all `k`.
pub(crate) fn scan(
    graph: &TransitionGraph<'_>,
    balls: &TubeBalls,
    trace: &OrbitTrace,
    start: &PointSet,
    direction: Direction,
    limit: u64,
    detect: bool,
) -> Scan {
    let mut level = start.clone();
    let mut seen: HashSet<(PointSet, usize)> = HashSet::new();
    let mut k = 0u64;
    loop {
        let phase = target(trace, direction, k);
        if !level.is_subset(balls.ball(trace.at_phase(phase))) {
            return Scan::FailsAt(k);
        }
        if detect && !seen.insert((level.clone(), phase)) {
            return Scan::Stable;
        }
        if k >= limit {
            return Scan::HeldTo(limit);
        }
        level = graph.step(&level, direction);
        k += 1;
    }
}

/// Joint scan over the directions a mode requires.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeScan {
    pub forward: Scan,
    pub backward: Option<Scan>,
}

impl ModeScan {
    pub(crate) fn horizon(&self) -> TubeHorizon {
        let fwd = self.forward.horizon();
        match self.backward {
            Some(b) => fwd.meet(b.horizon()),
            None => fwd,
        }
    }

    /// Earliest failing signed time, preferring the forward side on ties.
    pub(crate) fn fail_index(&self) -> Option<i64> {
        let f = match self.forward {
            Scan::FailsAt(k) => Some(k),
            _ => None,
        };
        let b = match self.backward {
            Some(Scan::FailsAt(k)) => Some(k),
            _ => None,
        };
        match (f, b) {
            (Some(f), Some(b)) if b < f => Some(-(b as i64)),
            (Some(f), _) => Some(f as i64),
            (None, Some(b)) => Some(-(b as i64)),
            (None, None) => None,
        }
    }
}

pub(crate) fn scan_mode(
    graph: &TransitionGraph<'_>,
    balls: &TubeBalls,
    trace: &OrbitTrace,
    start: &PointSet,
    mode: Mode,
    limit: u64,
    detect: bool,
) -> ModeScan {
    let forward = scan(graph, balls, trace, start, Direction::Forward, limit, detect);
    let backward = (mode == Mode::BiInfinite)
        .then(|| scan(graph, balls, trace, start, Direction::Backward, limit, detect));
    ModeScan { forward, backward }
}

/// Segment from `start` reaching, at signed time `fail_index`, a point outside the tube.
pub(crate) fn counterexample_path(
    graph: &TransitionGraph<'_>,
    balls: &TubeBalls,
    trace: &OrbitTrace,
    start: &PointSet,
    fail_index: i64,
) -> Option<TimedPath> {
    let (direction, k) = if fail_index >= 0 {
        (Direction::Forward, fail_index as u64)
    } else {
        (Direction::Backward, fail_index.unsigned_abs())
    };
    let seq = graph.level_sequence(start, direction, k as usize).ok()?;
    let centre = trace.at_phase(target(trace, direction, k));
    let escaping = seq.level(k as usize)?.difference(balls.ball(centre)).first()?;
    seq.path_to(graph, escaping, k as usize)
}

/// Checks `L_k(start) ⊆ B_ε(f^k(x))` for every `|k| <= horizon` the mode covers.
pub fn tube_ok_from(
    graph: &TransitionGraph<'_>,
    x: Point,
    start: &PointSet,
    eps: f64,
    horizon: u64,
    mode: Mode,
) -> Result<TubeCheck, DecideError> {
    let system = graph.system();
    system.space().check_point(x)?;
    if mode == Mode::BiInfinite {
        graph.check_direction(Direction::Backward)?;
    }
    if start.is_empty() {
        return Err(crate::graph::GraphError::EmptyStart.into());
    }
    let trace = system.orbit_trace(x, None)?;
    let balls = TubeBalls::new(graph, eps, Comparison::Strict);
    let scan = scan_mode(graph, &balls, &trace, start, mode, horizon, false);
    let fail_index = scan.fail_index();
    Ok(TubeCheck { ok: fail_index.is_none(), fail_index })
}

/// Tube containment from the single point `y`.
pub fn tube_ok(
    graph: &TransitionGraph<'_>,
    x: Point,
    y: Point,
    eps: f64,
    horizon: u64,
    mode: Mode,
) -> Result<TubeCheck, DecideError> {
    graph.system().space().check_point(y)?;
    tube_ok_from(graph, x, &PointSet::singleton(graph.len(), y), eps, horizon, mode)
}

/// Per-candidate `N*(x, y)` for `y ∈ B_ε(x)` and their maximum `N*(x)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HorizonTable {
    pub x: Point,
    pub candidates: Vec<(Point, TubeHorizon)>,
    pub best: TubeHorizon,
}

pub fn max_tube_horizon(
    graph: &TransitionGraph<'_>,
    x: Point,
    eps: f64,
    mode: Mode,
    cap: Option<u64>,
) -> Result<HorizonTable, DecideError> {
    let system = graph.system();
    system.space().check_point(x)?;
    if mode == Mode::BiInfinite {
        graph.check_direction(Direction::Backward)?;
    }
    let trace = system.orbit_trace(x, None)?;
    let cap = cap.unwrap_or(4 * system.len() as u64 * trace.period as u64).max(1);
    let balls = TubeBalls::new(graph, eps, Comparison::Strict);
    let candidates: Vec<_> = balls
        .ball(x)
        .iter()
        .map(|y| {
            let start = PointSet::singleton(graph.len(), y);
            (y, scan_mode(graph, &balls, &trace, &start, mode, cap, true).horizon())
        })
        .collect();
    let best = candidates
        .iter()
        .map(|&(_, h)| h)
        .max_by_key(|h| h.rank())
        .unwrap_or(TubeHorizon::Finite(0));
    Ok(HorizonTable { x, candidates, best })
}

/// Scan limit for a query: the finite horizon if it exceeds the cap.
pub(crate) fn horizon_limit(horizon: Horizon, cap: u64) -> u64 {
    match horizon {
        Horizon::Finite(n) => n.max(cap),
        Horizon::Full => cap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, is_pseudo_orbit};
    use crate::system::{make_zoo_system, SystemMap};

    fn zoo(s: &str) -> SystemMap {
        make_zoo_system(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn rotation_tube_examples() {
        let rot = zoo("rotation:8,1");
        let g = build_graph(&rot, 0.13).unwrap();
        let one = tube_ok(&g, 0, 0, 0.2, 1, Mode::Positive).unwrap();
        assert_eq!(one, TubeCheck { ok: true, fail_index: None });
        let two = tube_ok(&g, 0, 0, 0.2, 2, Mode::Positive).unwrap();
        assert_eq!(two, TubeCheck { ok: false, fail_index: Some(2) });

        let trace = rot.orbit_trace(0, None).unwrap();
        let balls = TubeBalls::new(&g, 0.2, Comparison::Strict);
        let start = PointSet::singleton(8, 0);
        let path = counterexample_path(&g, &balls, &trace, &start, 2).unwrap();
        assert_eq!(path.points, vec![0, 0, 0]);
        assert!(is_pseudo_orbit(&rot, &path.points, 0.13));

        let back = tube_ok(&g, 0, 0, 0.2, 2, Mode::BiInfinite).unwrap();
        assert_eq!(back.fail_index, Some(2));
    }

    #[test]
    fn tight_delta_always_ok() {
        for s in ["rotation:8,1", "doubling:9", "doubling:8", "swap_pair:0.5"] {
            let sys = zoo(s);
            let g = build_graph(&sys, sys.space().min_gap() * 0.99).unwrap();
            for x in 0..sys.len() {
                assert!(tube_ok(&g, x, x, 1e-6, 50, Mode::Positive).unwrap().ok, "{s}");
                let table = max_tube_horizon(&g, x, 1e-6, Mode::Positive, None).unwrap();
                assert_eq!(table.best, TubeHorizon::Infinite, "{s}");
            }
        }
    }

    #[test]
    fn horizon_tables() {
        let rot9 = zoo("rotation:9,1");
        let g = build_graph(&rot9, 0.12).unwrap();
        let t = max_tube_horizon(&g, 0, 0.3, Mode::Positive, None).unwrap();
        assert!(t.candidates.contains(&(0, TubeHorizon::Finite(2))));

        let dbl9 = zoo("doubling:9");
        let g = build_graph(&dbl9, 0.12).unwrap();
        let t = max_tube_horizon(&g, 0, 0.3, Mode::Positive, None).unwrap();
        assert!(t.candidates.contains(&(0, TubeHorizon::Finite(1))));

        let g = build_graph(&rot9, 0.11).unwrap();
        let t = max_tube_horizon(&g, 0, 0.3, Mode::Positive, None).unwrap();
        assert!(t.candidates.contains(&(0, TubeHorizon::Infinite)));
    }

    #[test]
    fn errors_propagate() {
        let dbl = zoo("doubling:8");
        let g = build_graph(&dbl, 0.1).unwrap();
        assert!(tube_ok(&g, 0, 0, 0.2, 2, Mode::BiInfinite).is_err());
        assert!(tube_ok(&g, 9, 0, 0.2, 2, Mode::Positive).is_err());
    }

    #[test]
    fn undetermined_when_cap_too_small() {
        let rot = zoo("rotation:8,1");
        let g = build_graph(&rot, 0.1).unwrap();
        let t = max_tube_horizon(&g, 0, 0.2, Mode::Positive, Some(3)).unwrap();
        assert_eq!(t.best, TubeHorizon::Undetermined(3));
    }
}
