//! Independent references for the level-set deciders.
//!
//! Nothing here reads the transition graph's bitsets or the configured
//! comparison rules: successors come straight from the strict edge
//! predicate `d(f(u), v) < δ`, orbits from direct iteration of the map
//! table, and shadowing from [`shadows`].

use std::collections::BTreeMap;

use crate::graph::{shadows, TimedPath, TransitionGraph};
use crate::metric::Point;
use crate::system::SystemMap;

use super::types::{DecideError, Mode};

pub const DEFAULT_PATH_BUDGET: u64 = 2_000_000;

fn successors(system: &SystemMap, u: Point, delta: f64) -> Vec<Point> {
    let fu = system.apply(u);
    (0..system.len()).filter(|&v| system.space().dist(fu, v) < delta).collect()
}

fn predecessors(system: &SystemMap, v: Point, delta: f64) -> Vec<Point> {
    (0..system.len())
        .filter(|&u| system.space().dist(system.apply(u), v) < delta)
        .collect()
}

/// `f^k(x)` for `k = 0..=horizon` by iteration, or `f^{-k}(x)` via the inverse table.
fn orbit_segment(system: &SystemMap, x: Point, horizon: usize, backward: bool) -> Vec<Point> {
    let step: Vec<Point> = if backward {
        let mut inv = vec![usize::MAX; system.len()];
        for (i, &v) in system.map_table().iter().enumerate() {
            inv[v] = i;
        }
        inv
    } else {
        system.map_table().to_vec()
    };
    let mut out = vec![x];
    for _ in 0..horizon {
        out.push(step[*out.last().expect("nonempty")]);
    }
    out
}

/// Depth-first enumeration of every length-`horizon` chain from `start`,
/// stopping at the first one that does not ε-shadow `target`.
struct Enumerator<'a> {
    system: &'a SystemMap,
    delta: f64,
    eps: f64,
    backward: bool,
    target: Vec<Point>,
    budget: u64,
    visited: u64,
}

impl Enumerator<'_> {
    fn run(&mut self, path: &mut Vec<Point>) -> Result<Option<Vec<Point>>, DecideError> {
        if path.len() == self.target.len() {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(DecideError::BudgetExceeded(self.budget));
            }
            let ok = shadows(self.system, path, &self.target, self.eps)?;
            return Ok(if ok { None } else { Some(path.clone()) });
        }
        let last = *path.last().expect("nonempty");
        let next = if self.backward {
            predecessors(self.system, last, self.delta)
        } else {
            successors(self.system, last, self.delta)
        };
        for v in next {
            path.push(v);
            let found = self.run(path)?;
            path.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// First δ-pseudo-orbit segment (up to `horizon` steps each way the mode
/// covers) from a point of `starts` that leaves the ε-tube around `x`,
/// truncated at its first violation.
pub fn oracle_find_escape(
    system: &SystemMap,
    x: Point,
    starts: &[Point],
    eps: f64,
    delta: f64,
    horizon: usize,
    mode: Mode,
    budget: u64,
) -> Result<Option<TimedPath>, DecideError> {
    system.space().check_point(x)?;
    let mut directions = vec![false];
    if mode == Mode::BiInfinite {
        if !system.is_bijective() {
            return Err(crate::graph::GraphError::BackwardOnNonInvertible.into());
        }
        directions.push(true);
    }
    let mut visited = 0;
    for &backward in &directions {
        let target = orbit_segment(system, x, horizon, backward);
        for &s in starts {
            system.space().check_point(s)?;
            let mut e = Enumerator {
                system,
                delta,
                eps,
                backward,
                target: target.clone(),
                budget,
                visited,
            };
            let found = e.run(&mut vec![s])?;
            visited = e.visited;
            if let Some(seq) = found {
                let first_bad = seq
                    .iter()
                    .zip(&target)
                    .position(|(&p, &q)| system.space().dist(p, q) >= eps)
                    .expect("escaping path has a violation");
                let mut pts = seq[..=first_bad].to_vec();
                return Ok(Some(if backward {
                    pts.reverse();
                    TimedPath { start_time: -(first_bad as i64), points: pts }
                } else {
                    TimedPath { start_time: 0, points: pts }
                }));
            }
        }
    }
    Ok(None)
}

/// True iff every δ-pseudo-orbit segment from `y` of length `horizon`
/// (forward, and backward in bi-infinite mode) ε-shadows the orbit of `x`.
pub fn oracle_path_enum(
    graph: &TransitionGraph<'_>,
    x: Point,
    y: Point,
    eps: f64,
    horizon: usize,
    mode: Mode,
) -> Result<bool, DecideError> {
    let escape = oracle_find_escape(
        graph.system(),
        x,
        &[y],
        eps,
        graph.delta(),
        horizon,
        mode,
        DEFAULT_PATH_BUDGET,
    )?;
    Ok(escape.is_none())
}

/// Level-set containment recomputed with ordered maps and the strict
/// predicates; usable at horizons where path enumeration explodes.
/// Returns an escaping segment when containment fails.
pub fn reference_tube(
    system: &SystemMap,
    x: Point,
    starts: &[Point],
    eps: f64,
    delta: f64,
    horizon: usize,
    mode: Mode,
) -> Result<Option<TimedPath>, DecideError> {
    system.space().check_point(x)?;
    let mut directions = vec![false];
    if mode == Mode::BiInfinite {
        if !system.is_bijective() {
            return Err(crate::graph::GraphError::BackwardOnNonInvertible.into());
        }
        directions.push(true);
    }
    let mut best: Option<TimedPath> = None;
    for backward in directions {
        let target = orbit_segment(system, x, horizon, backward);
        // level k: point -> parent at level k-1
        let mut levels: Vec<BTreeMap<Point, Point>> =
            vec![starts.iter().map(|&s| (s, s)).collect()];
        for k in 0..=horizon {
            let level = &levels[k];
            if let Some((&bad, _)) =
                level.iter().find(|(&p, _)| system.space().dist(p, target[k]) >= eps)
            {
                let mut pts = vec![bad];
                for j in (1..=k).rev() {
                    let cur = *pts.last().expect("nonempty");
                    pts.push(levels[j][&cur]);
                }
                let path = if backward {
                    TimedPath { start_time: -(k as i64), points: pts }
                } else {
                    pts.reverse();
                    TimedPath { start_time: 0, points: pts }
                };
                let len = path.points.len();
                if best.as_ref().is_none_or(|b| len < b.points.len()) {
                    best = Some(path);
                }
                break;
            }
            if k == horizon {
                break;
            }
            let mut next = BTreeMap::new();
            for &u in level.keys() {
                let step = if backward {
                    predecessors(system, u, delta)
                } else {
                    successors(system, u, delta)
                };
                for v in step {
                    next.entry(v).or_insert(u);
                }
            }
            levels.push(next);
        }
    }
    Ok(best)
}
