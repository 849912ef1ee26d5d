//! Methods induced by bijections `h` with `d(f(i), h(i)) < δ`.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Comparison, TimedPath};
use crate::metric::Point;
use crate::system::{OrbitTrace, SystemMap};

use super::decide::{best_candidate, point_outcome};
use super::tube::horizon_limit;
use super::types::{
    CandidateHorizon, Counterexample, DecideError, DecisionKind, ISQuery, ISVerdict,
    MethodClass, Mode, Outcome, PointVerdict, TubeHorizon,
};

pub type Permutation = Vec<Point>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BijectionError {
    #[error("more than {limit} admissible bijections; enumeration truncated")]
    LimitExceeded { limit: usize, partial: Vec<Permutation> },
}

/// All permutations `h` with `h(i) ∈ B_δ(f(i))`, in lexicographic order.
///
/// Backtracking over candidate sets with distinctness: a search for systems
/// of distinct representatives. Points with fewer candidates are assigned
/// first and dead branches are cut as soon as an unassigned point runs out
/// of free candidates.
pub fn enumerate_delta_bijections(
    system: &SystemMap,
    delta: f64,
    limit: usize,
) -> Result<Vec<Permutation>, BijectionError> {
    enumerate_with(system, delta, limit, Comparison::Strict)
}

pub(crate) fn enumerate_with(
    system: &SystemMap,
    delta: f64,
    limit: usize,
    comparison: Comparison,
) -> Result<Vec<Permutation>, BijectionError> {
    let n = system.len();
    let space = system.space();
    let options: Vec<Vec<Point>> = (0..n)
        .map(|i| {
            let fi = system.apply(i);
            (0..n).filter(|&v| comparison.within(space.dist(fi, v), delta)).collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (options[i].len(), i));

    struct Search<'s> {
        options: &'s [Vec<Point>],
        order: &'s [usize],
        used: Vec<bool>,
        assign: Vec<Point>,
        found: Vec<Permutation>,
        limit: usize,
        truncated: bool,
    }

    impl Search<'_> {
        fn viable(&self, depth: usize) -> bool {
            self.order[depth..]
                .iter()
                .all(|&i| self.options[i].iter().any(|&v| !self.used[v]))
        }

        fn run(&mut self, depth: usize) {
            if self.truncated {
                return;
            }
            if depth == self.order.len() {
                if self.found.len() >= self.limit {
                    self.truncated = true;
                    return;
                }
                self.found.push(self.assign.clone());
                return;
            }
            let i = self.order[depth];
            for idx in 0..self.options[i].len() {
                let v = self.options[i][idx];
                if self.used[v] {
                    continue;
                }
                self.used[v] = true;
                self.assign[i] = v;
                if self.viable(depth + 1) {
                    self.run(depth + 1);
                }
                self.used[v] = false;
                if self.truncated {
                    return;
                }
            }
        }
    }

    let mut search = Search {
        options: &options,
        order: &order,
        used: vec![false; n],
        assign: vec![usize::MAX; n],
        found: Vec::new(),
        limit,
        truncated: false,
    };
    if search.viable(0) {
        search.run(0);
    }
    let mut found = search.found;
    found.sort();
    if search.truncated {
        Err(BijectionError::LimitExceeded { limit, partial: found })
    } else {
        Ok(found)
    }
}

#[derive(Debug, Clone, Copy)]
enum HScan {
    FailsAt(u64),
    Stable,
    HeldTo(u64),
}

impl HScan {
    fn horizon(self) -> TubeHorizon {
        match self {
            HScan::FailsAt(k) => TubeHorizon::Finite(k.saturating_sub(1)),
            HScan::Stable => TubeHorizon::Infinite,
            HScan::HeldTo(c) => TubeHorizon::Undetermined(c),
        }
    }
}

struct Tracker<'a> {
    system: &'a SystemMap,
    eps: f64,
    tube: Comparison,
}

impl Tracker<'_> {
    /// Follows `step^k(y)` against `f^{±k}(x)` until failure, a repeated
    /// `(point, phase)` pair, or `limit`.
    fn scan(&self, step: &[Point], y: Point, trace: &OrbitTrace, backward: bool, limit: u64) -> HScan {
        let space = self.system.space();
        let mut seen = HashSet::new();
        let mut p = y;
        let mut k = 0u64;
        loop {
            let phase = if backward { trace.backward_phase(k) } else { trace.phase(k) };
            if !self.tube.within(space.dist(p, trace.at_phase(phase)), self.eps) {
                return HScan::FailsAt(k);
            }
            if !seen.insert((p, phase)) {
                return HScan::Stable;
            }
            if k >= limit {
                return HScan::HeldTo(limit);
            }
            p = step[p];
            k += 1;
        }
    }
}

fn inverse(perm: &[Point]) -> Permutation {
    let mut inv = vec![0; perm.len()];
    for (i, &v) in perm.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

fn orbit_segment(step: &[Point], y: Point, k: u64, backward: bool) -> TimedPath {
    let mut pts = vec![y];
    for _ in 0..k {
        pts.push(step[*pts.last().expect("nonempty")]);
    }
    if backward {
        pts.reverse();
        TimedPath { start_time: -(k as i64), points: pts }
    } else {
        TimedPath { start_time: 0, points: pts }
    }
}

/// Inverse shadowing for the bijection-induced class, by direct iteration
/// of every admissible `h`.
///
/// If enumeration hits the limit, points refuted by the partial set are
/// still definite failures; points that survive it are undetermined.
pub fn decide_th_is(query: &ISQuery<'_>) -> Result<ISVerdict, DecideError> {
    if query.class != MethodClass::Th {
        return Err(DecideError::InvalidQuery(format!(
            "decider handles class th, query asks for {}",
            query.class
        )));
    }
    let system = query.system;
    let (eps, delta) = (query.eps.get(), query.delta.get());
    let mut diagnostics = Vec::new();
    let (perms, truncated) =
        match enumerate_with(system, delta, query.config.th_limit, query.config.edges) {
            Ok(p) => (p, false),
            Err(BijectionError::LimitExceeded { limit, partial }) => {
                diagnostics.push(format!(
                    "bijection enumeration truncated at {limit}; surviving points are undetermined"
                ));
                (partial, true)
            }
        };
    diagnostics.insert(0, format!("{} admissible bijections", perms.len()));
    let inverses: Vec<Permutation> = perms.iter().map(|h| inverse(h)).collect();
    let tracker = Tracker { system, eps, tube: query.config.tube };
    let space = system.space();

    let mut points = Vec::with_capacity(system.len());
    for x in space.points() {
        let trace = system.orbit_trace(x, None)?;
        let limit = horizon_limit(query.horizon, query.cap_for_period(trace.period));
        let mut candidates = Vec::new();
        // for each candidate: the worst bijection and its failing signed time
        let mut worst: Vec<Option<(usize, i64)>> = Vec::new();
        for y in space.points().filter(|&y| query.config.tube.within(space.dist(x, y), eps)) {
            let mut horizon = TubeHorizon::Infinite;
            let mut worst_h: Option<(usize, i64)> = None;
            for (hi, h) in perms.iter().enumerate() {
                let fwd = tracker.scan(h, y, &trace, false, limit);
                let bwd = (query.mode == Mode::BiInfinite)
                    .then(|| tracker.scan(&inverses[hi], y, &trace, true, limit));
                let mut hz = fwd.horizon();
                if let Some(b) = bwd {
                    hz = hz.meet(b.horizon());
                }
                if hz.rank() < horizon.rank() {
                    horizon = hz;
                    let fail = match (fwd, bwd) {
                        (HScan::FailsAt(f), Some(HScan::FailsAt(b))) if b < f => Some(-(b as i64)),
                        (HScan::FailsAt(f), _) => Some(f as i64),
                        (_, Some(HScan::FailsAt(b))) => Some(-(b as i64)),
                        _ => None,
                    };
                    worst_h = fail.map(|k| (hi, k));
                }
            }
            if perms.is_empty() {
                // no admissible bijection: the class is empty and every y qualifies
                horizon = TubeHorizon::Infinite;
            }
            candidates.push(CandidateHorizon { y, horizon });
            worst.push(worst_h);
        }
        let (mut outcome, mut witness) = point_outcome(x, &candidates, query.horizon);
        if truncated && outcome == Outcome::True {
            outcome = Outcome::Undetermined;
            witness = None;
        }
        let tube_horizon = candidates
            .iter()
            .map(|c| c.horizon)
            .max_by_key(|h| h.rank())
            .unwrap_or(TubeHorizon::Finite(0));
        let counterexample = (outcome == Outcome::False)
            .then(|| {
                let best = best_candidate(&candidates)?;
                let idx = candidates.iter().position(|c| c.y == best.y)?;
                let (hi, k) = worst[idx]?;
                let path = if k >= 0 {
                    orbit_segment(&perms[hi], best.y, k as u64, false)
                } else {
                    orbit_segment(&inverses[hi], best.y, k.unsigned_abs(), true)
                };
                Some(Counterexample {
                    candidate: best.y,
                    fail_index: k,
                    path,
                    bijection: Some(perms[hi].clone()),
                })
            })
            .flatten();
        points.push(PointVerdict {
            x,
            outcome,
            witness,
            tube_horizon: if truncated { None } else { Some(tube_horizon) },
            candidates,
            counterexample,
        });
    }
    let overall = Outcome::all(points.iter().map(|p| p.outcome));
    Ok(ISVerdict {
        kind: DecisionKind::Plain,
        class: MethodClass::Th,
        mode: query.mode,
        eps: query.eps,
        delta: query.delta,
        horizon: query.horizon,
        overall,
        points,
        diagnostics,
    })
}

/// Count of admissible bijections, or the limit if truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BijectionCount {
    pub count: usize,
    pub truncated: bool,
}

pub fn count_delta_bijections(system: &SystemMap, delta: f64, limit: usize) -> BijectionCount {
    match enumerate_delta_bijections(system, delta, limit) {
        Ok(v) => BijectionCount { count: v.len(), truncated: false },
        Err(BijectionError::LimitExceeded { partial, .. }) => {
            BijectionCount { count: partial.len(), truncated: true }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deciders::Horizon;
    use crate::graph::is_pseudo_orbit;
    use crate::system::{make_zoo_system, ZooFamily};
    use proptest::prelude::*;

    fn zoo(s: &str) -> SystemMap {
        make_zoo_system(&s.parse().unwrap()).unwrap()
    }

    /// Every permutation of `0..n`, by Heap's algorithm.
    fn all_permutations(n: usize) -> Vec<Permutation> {
        fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Permutation>) {
            if k <= 1 {
                out.push(a.clone());
                return;
            }
            for i in 0..k {
                heap(k - 1, a, out);
                if k % 2 == 0 {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
            }
        }
        let mut out = Vec::new();
        heap(n, &mut (0..n).collect(), &mut out);
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn swap_pair_counts() {
        let swap = zoo("swap_pair:0.5");
        assert_eq!(enumerate_delta_bijections(&swap, 0.6, 100).unwrap(), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(enumerate_delta_bijections(&swap, 0.4, 100).unwrap(), vec![vec![1, 0]]);
    }

    #[test]
    fn tight_delta_forces_f() {
        let rot = zoo("rotation:8,3");
        let tight = rot.space().min_gap();
        assert_eq!(enumerate_delta_bijections(&rot, tight, 10).unwrap(), vec![rot.map_table().to_vec()]);
        let dbl = zoo("doubling:8");
        assert!(enumerate_delta_bijections(&dbl, 0.1, 10).unwrap().is_empty());
    }

    #[test]
    fn limit_reports_partial() {
        let id = zoo("identity:5");
        let err = enumerate_delta_bijections(&id, 10.0, 7).unwrap_err();
        let BijectionError::LimitExceeded { partial, .. } = err;
        assert_eq!(partial.len(), 7);
        assert_eq!(count_delta_bijections(&id, 10.0, 1000), BijectionCount { count: 120, truncated: false });
    }

    #[test]
    fn th_swap_pair_verdicts() {
        let swap = zoo("swap_pair:0.5");
        let q = ISQuery::new(&swap, 0.3, 0.6, Horizon::Finite(2), Mode::Positive, MethodClass::Th).unwrap();
        let v = decide_th_is(&q).unwrap();
        assert_eq!(v.overall, Outcome::False);
        let cx = v.points[0].counterexample.as_ref().unwrap();
        assert!(is_pseudo_orbit(&swap, &cx.path.points, 0.6));

        let q = ISQuery::new(&swap, 0.3, 0.4, Horizon::Finite(2), Mode::Positive, MethodClass::Th).unwrap();
        let v = decide_th_is(&q).unwrap();
        assert_eq!(v.overall, Outcome::True);
        assert!(v.points.iter().all(|p| p.witness == Some(p.x)));
    }

    #[test]
    fn truncated_enumeration_is_undetermined_or_false() {
        let id = zoo("identity:4");
        let mut q = ISQuery::new(&id, 10.0, 10.0, Horizon::Full, Mode::Positive, MethodClass::Th).unwrap();
        q.config.th_limit = 3;
        let v = decide_th_is(&q).unwrap();
        assert_eq!(v.overall, Outcome::Undetermined);
        q.eps = crate::metric::Distance::new(0.1).unwrap();
        let v = decide_th_is(&q).unwrap();
        assert_eq!(v.overall, Outcome::False);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_filtered_permutations(n in 1usize..=6, table in proptest::collection::vec(0usize..6, 6), delta in 0.05f64..0.6) {
            let space = crate::metric::FiniteMetricSpace::circle_grid(n).unwrap();
            let table: Vec<_> = table[..n].iter().map(|&t| t % n).collect();
            let sys = SystemMap::new(space, table, "random").unwrap();
            let expected: Vec<_> = all_permutations(n)
                .into_iter()
                .filter(|h| (0..n).all(|i| sys.space().dist(sys.apply(i), h[i]) < delta))
                .collect();
            prop_assert_eq!(enumerate_delta_bijections(&sys, delta, usize::MAX).unwrap(), expected);
        }

        #[test]
        fn rotation_th_iterates_are_pseudo_orbits(n in 2usize..8, delta in 0.05f64..0.5) {
            let sys = make_zoo_system(&ZooFamily::Rotation { n, shift: 1 }).unwrap();
            for h in enumerate_delta_bijections(&sys, delta, 10_000).unwrap() {
                let seg = orbit_segment(&h, 0, 2 * n as u64, false);
                prop_assert!(is_pseudo_orbit(&sys, &seg.points, delta));
            }
        }
    }
}
