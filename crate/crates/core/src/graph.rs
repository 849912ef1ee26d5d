//! The δ-pseudo-orbit transition relation and level-set dynamics.
//!
//! `v` is a successor of `u` iff `d(f(u), v) < δ`. Finite paths in this graph
//! are exactly the finite δ-pseudo-orbit segments, and the forward level set
//! `L_k(S)` is the set of time-`k` values of all segments starting in `S`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{MetricError, Point};
use crate::pointset::PointSet;
use crate::system::SystemMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("delta must be positive and finite, got {0}")]
    NonpositiveDelta(f64),
    #[error("backward levels require a bijective system")]
    BackwardOnNonInvertible,
    #[error("start set is empty")]
    EmptyStart,
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// How a realized distance is compared against a threshold.
///
/// `Strict` is the only semantics the library uses; `NonStrict` exists so
/// tests can inject a flipped comparison and check that the certificate
/// machinery catches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    #[default]
    Strict,
    NonStrict,
}

impl Comparison {
    #[inline]
    pub fn within(self, d: f64, r: f64) -> bool {
        match self {
            Comparison::Strict => d < r,
            Comparison::NonStrict => d <= r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// A finite path indexed by consecutive integer times starting at `start_time`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedPath {
    pub start_time: i64,
    pub points: Vec<Point>,
}

impl TimedPath {
    pub fn end_time(&self) -> i64 {
        self.start_time + self.points.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<Point> {
        let i = t.checked_sub(self.start_time)?;
        usize::try_from(i).ok().and_then(|i| self.points.get(i).copied())
    }
}

#[derive(Debug, Clone)]
pub struct TransitionGraph<'a> {
    system: &'a SystemMap,
    delta: f64,
    comparison: Comparison,
    succ: Vec<PointSet>,
    pred: Vec<PointSet>,
}

/// Builds the strict δ-relation in O(n²).
pub fn build_graph(system: &SystemMap, delta: f64) -> Result<TransitionGraph<'_>, GraphError> {
    build_graph_with(system, delta, Comparison::Strict)
}

pub fn build_graph_with(
    system: &SystemMap,
    delta: f64,
    comparison: Comparison,
) -> Result<TransitionGraph<'_>, GraphError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(GraphError::NonpositiveDelta(delta));
    }
    let n = system.len();
    let space = system.space();
    let mut succ = vec![PointSet::empty(n); n];
    let mut pred = vec![PointSet::empty(n); n];
    for u in 0..n {
        let fu = system.apply(u);
        for v in 0..n {
            if comparison.within(space.dist(fu, v), delta) {
                succ[u].insert(v);
                pred[v].insert(u);
            }
        }
    }
    Ok(TransitionGraph { system, delta, comparison, succ, pred })
}

impl<'a> TransitionGraph<'a> {
    pub fn system(&self) -> &'a SystemMap {
        self.system
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn comparison(&self) -> Comparison {
        self.comparison
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn succ(&self, u: Point) -> &PointSet {
        &self.succ[u]
    }

    pub fn pred(&self, v: Point) -> &PointSet {
        &self.pred[v]
    }

    fn neighbours(&self, u: Point, direction: Direction) -> &PointSet {
        match direction {
            Direction::Forward => &self.succ[u],
            Direction::Backward => &self.pred[u],
        }
    }

    /// One level step: union of successors (or predecessors) of `set`.
    pub fn step(&self, set: &PointSet, direction: Direction) -> PointSet {
        let mut next = PointSet::empty(self.len());
        for u in set.iter() {
            next.union_with(self.neighbours(u, direction));
        }
        next
    }

    pub fn check_direction(&self, direction: Direction) -> Result<(), GraphError> {
        if direction == Direction::Backward && !self.system.is_bijective() {
            Err(GraphError::BackwardOnNonInvertible)
        } else {
            Ok(())
        }
    }

    /// Levels `L_0 = start, L_{k+1} = step(L_k)` up to `max_k`, stopping early
    /// once a level repeats.
    pub fn level_sequence(
        &self,
        start: &PointSet,
        direction: Direction,
        max_k: usize,
    ) -> Result<LevelSequence, GraphError> {
        self.check_direction(direction)?;
        if start.is_empty() {
            return Err(GraphError::EmptyStart);
        }
        let mut levels = vec![start.clone()];
        let mut seen = HashMap::from([(start.clone(), 0usize)]);
        let mut stabilization = None;
        for k in 1..=max_k {
            let next = self.step(&levels[k - 1], direction);
            if let Some(&j) = seen.get(&next) {
                stabilization = Some(Stabilization { repeat_index: j, cycle_length: k - j });
                break;
            }
            seen.insert(next.clone(), k);
            levels.push(next);
        }
        Ok(LevelSequence { start: start.clone(), direction, levels, stabilization })
    }

    /// Every point on some finite δ-chain from `start` (including `start`).
    pub fn reachable_set(&self, start: Point) -> Result<PointSet, GraphError> {
        self.system.space().check_point(start)?;
        Ok(self.closure(&PointSet::singleton(self.len(), start), Direction::Forward))
    }

    /// Fixpoint of `S ∪ step(S)`.
    pub fn closure(&self, start: &PointSet, direction: Direction) -> PointSet {
        let mut reached = start.clone();
        let mut frontier = start.clone();
        while !frontier.is_empty() {
            let next = self.step(&frontier, direction);
            frontier = next.difference(&reached);
            reached.union_with(&frontier);
        }
        reached
    }

    /// Strong connectivity of the δ-relation; a single point counts as transitive.
    pub fn is_chain_transitive(&self) -> bool {
        let n = self.len();
        let seed = PointSet::singleton(n, 0);
        self.closure(&seed, Direction::Forward).len() == n
            && self.closure(&seed, Direction::Backward).len() == n
    }

    /// Shortest δ-chain from `from` to `to` in the given direction, in time order.
    pub fn shortest_chain(&self, from: Point, to: Point, direction: Direction) -> Option<TimedPath> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut visited = PointSet::singleton(n, from);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for v in self.neighbours(u, direction).iter() {
                if visited.insert(v) {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if !visited.contains(to) {
            return None;
        }
        let mut chain = vec![to];
        while *chain.last().expect("nonempty") != from {
            let last = *chain.last().expect("nonempty");
            chain.push(parent[last]);
        }
        let len = chain.len() as i64;
        Some(match direction {
            Direction::Forward => {
                chain.reverse();
                TimedPath { start_time: 0, points: chain }
            }
            Direction::Backward => TimedPath { start_time: -(len - 1), points: chain },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stabilization {
    pub repeat_index: usize,
    pub cycle_length: usize,
}

/// Level sets `L_0, L_1, ...` of δ-pseudo-orbit segments from a start set.
#[derive(Debug, Clone)]
pub struct LevelSequence {
    pub start: PointSet,
    pub direction: Direction,
    pub levels: Vec<PointSet>,
    pub stabilization: Option<Stabilization>,
}

impl LevelSequence {
    /// `L_k`, folded through the detected cycle when `k` lies past the stored levels.
    pub fn level(&self, k: usize) -> Option<&PointSet> {
        if let Some(level) = self.levels.get(k) {
            return Some(level);
        }
        let s = self.stabilization?;
        Some(&self.levels[s.repeat_index + (k - s.repeat_index) % s.cycle_length])
    }

    /// Recovers a segment `x_0 ∈ L_0, ..., x_k = target` by intersecting
    /// levels with predecessor (forward) or successor (backward) sets.
    /// Returned in time order: times `0..=k` forward, `-k..=0` backward.
    pub fn path_to(&self, graph: &TransitionGraph<'_>, target: Point, k: usize) -> Option<TimedPath> {
        if !self.level(k)?.contains(target) {
            return None;
        }
        let back = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        let mut chain = vec![target];
        for i in (1..=k).rev() {
            let cur = *chain.last().expect("nonempty");
            let prev = self.level(i - 1)?.intersection(graph.neighbours(cur, back)).first()?;
            chain.push(prev);
        }
        Some(match self.direction {
            Direction::Forward => {
                chain.reverse();
                TimedPath { start_time: 0, points: chain }
            }
            Direction::Backward => TimedPath { start_time: -(k as i64), points: chain },
        })
    }
}

/// True iff `d(f(seq[k]), seq[k+1]) < δ` for every consecutive pair.
pub fn is_pseudo_orbit(system: &SystemMap, seq: &[Point], delta: f64) -> bool {
    seq.iter().all(|&p| p < system.len())
        && seq
            .windows(2)
            .all(|w| system.space().dist(system.apply(w[0]), w[1]) < delta)
}

/// True iff the sequences stay pointwise strictly within `eps`.
pub fn shadows(
    system: &SystemMap,
    a: &[Point],
    b: &[Point],
    eps: f64,
) -> Result<bool, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).all(|(&p, &q)| system.space().dist(p, q) < eps))
}
