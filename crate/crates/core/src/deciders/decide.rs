//! Deciders for the class of all δ-methods.
//!
//! A point `y` witnesses `x` iff every δ-pseudo-orbit from `y` stays in the
//! ε-tube around the orbit of `x`. Because level sets are path-complete,
//! this is the level condition `L_k({y}) ⊆ B_ε(f^k(x))`, so adversarial
//! methods never need to be enumerated. Candidates are restricted to
//! `B_ε(x)`: every method starts at its own point, so `k = 0` forces
//! `d(x, y) < ε`.

use crate::graph::{build_graph_with, Direction, TimedPath, TransitionGraph};
use crate::metric::Point;
use crate::pointset::PointSet;

use super::tube::{counterexample_path, horizon_limit, scan_mode, TubeBalls};
use super::types::{
    CandidateHorizon, Counterexample, DecideError, DecisionKind, Horizon, ISQuery, ISVerdict,
    MethodClass, Mode, Outcome, PointVerdict, TubeHorizon,
};

fn require_class(query: &ISQuery<'_>, class: MethodClass) -> Result<(), DecideError> {
    if query.class != class {
        return Err(DecideError::InvalidQuery(format!(
            "decider handles class {class}, query asks for {}",
            query.class
        )));
    }
    Ok(())
}

/// Picks the candidate with the largest horizon; ties go to the smaller index.
pub(crate) fn best_candidate(candidates: &[CandidateHorizon]) -> Option<CandidateHorizon> {
    candidates.iter().copied().reduce(|best, c| {
        if c.horizon.rank() > best.horizon.rank() {
            c
        } else {
            best
        }
    })
}

/// Witness choice: `x` itself if it qualifies, else the smallest index.
pub(crate) fn point_outcome(
    x: Point,
    candidates: &[CandidateHorizon],
    horizon: Horizon,
) -> (Outcome, Option<Point>) {
    let covering = |c: &&CandidateHorizon| c.horizon.covers(horizon);
    let own = candidates.iter().filter(covering).find(|c| c.y == x);
    if let Some(c) = own.or_else(|| candidates.iter().find(covering)) {
        return (Outcome::True, Some(c.y));
    }
    let pending = candidates
        .iter()
        .any(|c| matches!(c.horizon, TubeHorizon::Undetermined(_)));
    (if pending { Outcome::Undetermined } else { Outcome::False }, None)
}

fn decide_levels(query: &ISQuery<'_>, robust: bool) -> Result<ISVerdict, DecideError> {
    require_class(query, MethodClass::T0)?;
    let system = query.system;
    let (eps, delta) = (query.eps.get(), query.delta.get());
    let graph = build_graph_with(system, delta, query.config.edges)?;
    let balls = TubeBalls::new(&graph, eps, query.config.tube);
    let n = system.len();

    let start_for = |y: Point| -> PointSet {
        if robust {
            let space = system.space();
            PointSet::from_points(
                n,
                space.points().filter(|&z| query.config.edges.within(space.dist(y, z), delta)),
            )
        } else {
            PointSet::singleton(n, y)
        }
    };

    let mut points = Vec::with_capacity(n);
    for x in system.space().points() {
        let trace = system.orbit_trace(x, None)?;
        let limit = horizon_limit(query.horizon, query.cap_for_period(trace.period));
        let mut candidates = Vec::new();
        let mut scans = Vec::new();
        for y in balls.ball(x).iter() {
            let start = start_for(y);
            let scan = scan_mode(&graph, &balls, &trace, &start, query.mode, limit, true);
            candidates.push(CandidateHorizon { y, horizon: scan.horizon() });
            scans.push(scan);
        }
        let (outcome, witness) = point_outcome(x, &candidates, query.horizon);
        let tube_horizon = candidates
            .iter()
            .map(|c| c.horizon)
            .max_by_key(|h| h.rank())
            .unwrap_or(TubeHorizon::Finite(0));
        let counterexample = if outcome == Outcome::False {
            best_candidate(&candidates).and_then(|best| {
                let idx = candidates.iter().position(|c| c.y == best.y)?;
                let fail_index = scans[idx].fail_index()?;
                let path =
                    counterexample_path(&graph, &balls, &trace, &start_for(best.y), fail_index)?;
                Some(Counterexample { candidate: best.y, fail_index, path, bijection: None })
            })
        } else {
            None
        };
        points.push(PointVerdict {
            x,
            outcome,
            witness,
            tube_horizon: Some(tube_horizon),
            candidates,
            counterexample,
        });
    }
    let overall = Outcome::all(points.iter().map(|p| p.outcome));
    Ok(ISVerdict {
        kind: if robust { DecisionKind::Robust } else { DecisionKind::Plain },
        class: MethodClass::T0,
        mode: query.mode,
        eps: query.eps,
        delta: query.delta,
        horizon: query.horizon,
        overall,
        points,
        diagnostics: Vec::new(),
    })
}

/// Inverse shadowing for the class of all δ-methods, finite horizon or full.
pub fn decide_t0_is(query: &ISQuery<'_>) -> Result<ISVerdict, DecideError> {
    decide_levels(query, false)
}

/// As [`decide_t0_is`], but the witness is the whole δ-ball around `y`:
/// every pseudo-orbit starting anywhere in `B_δ(y)` must stay in the tube.
pub fn decide_robust_is(query: &ISQuery<'_>) -> Result<ISVerdict, DecideError> {
    decide_levels(query, true)
}

fn reach_cone(graph: &TransitionGraph<'_>, y: Point, mode: Mode) -> PointSet {
    let start = PointSet::singleton(graph.len(), y);
    let mut cone = graph.closure(&start, Direction::Forward);
    if mode == Mode::BiInfinite {
        cone.union_with(&graph.closure(&start, Direction::Backward));
    }
    cone
}

fn escape_path(
    graph: &TransitionGraph<'_>,
    from: Point,
    target: &PointSet,
    mode: Mode,
) -> Option<TimedPath> {
    let n = graph.len();
    let mut directions = vec![Direction::Forward];
    if mode == Mode::BiInfinite {
        directions.push(Direction::Backward);
    }
    directions
        .into_iter()
        .filter_map(|d| {
            let reach = graph.closure(&PointSet::singleton(n, from), d);
            let p = reach.difference(target).first()?;
            graph.shortest_chain(from, p, d)
        })
        .min_by_key(|p| p.points.len())
}

/// Weak inverse shadowing: some `y` whose whole δ-chain cone lies in
/// `B_ε(Orb(x))`; time order along the orbit is irrelevant.
///
/// Any point may witness. Tried in order: `x`, the rest of `B_ε(x)`, then
/// everything else, each group by index.
pub fn decide_weak_is(query: &ISQuery<'_>) -> Result<ISVerdict, DecideError> {
    require_class(query, MethodClass::T0)?;
    let system = query.system;
    let (eps, delta) = (query.eps.get(), query.delta.get());
    let graph = build_graph_with(system, delta, query.config.edges)?;
    let balls = TubeBalls::new(&graph, eps, query.config.tube);
    let n = system.len();

    let mut points = Vec::with_capacity(n);
    for x in system.space().points() {
        let orbit = PointSet::from_points(n, system.orbit_points(x)?);
        let mut target = PointSet::empty(n);
        for o in orbit.iter() {
            target.union_with(balls.ball(o));
        }
        let near = balls.ball(x);
        let order = std::iter::once(x)
            .chain(near.iter().filter(|&p| p != x))
            .chain(system.space().points().filter(|p| !near.contains(*p)));
        let mut witness = None;
        for y in order {
            if reach_cone(&graph, y, query.mode).is_subset(&target) {
                witness = Some(y);
                break;
            }
        }
        let counterexample = if witness.is_none() {
            escape_path(&graph, x, &target, query.mode).map(|path| {
                let fail_index =
                    if path.start_time < 0 { path.start_time } else { path.end_time() };
                Counterexample { candidate: x, fail_index, path, bijection: None }
            })
        } else {
            None
        };
        points.push(PointVerdict {
            x,
            outcome: if witness.is_some() { Outcome::True } else { Outcome::False },
            witness,
            tube_horizon: None,
            candidates: Vec::new(),
            counterexample,
        });
    }
    let overall = Outcome::all(points.iter().map(|p| p.outcome));
    Ok(ISVerdict {
        kind: DecisionKind::Weak,
        class: MethodClass::T0,
        mode: query.mode,
        eps: query.eps,
        delta: query.delta,
        horizon: Horizon::Full,
        overall,
        points,
        diagnostics: Vec::new(),
    })
}
