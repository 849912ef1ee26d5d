//! Machine-checkable evidence attached to suite cells.
//!
//! Revalidation uses only the system, the strict predicates, and direct
//! iteration; it never consults the transition graph or decider settings,
//! so a certificate produced under a faulty configuration is judged on its
//! own merits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deciders::{reference_tube, Mode};
use crate::graph::{is_pseudo_orbit, TimedPath};
use crate::metric::Point;
use crate::system::SystemMap;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("certificate does not hold: {0}")]
pub struct Invalid(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, Invalid> {
    Err(Invalid(msg.into()))
}

/// What a decider asserted about one start point or start set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub statement: String,
    /// Whether the decider said the tube condition holds.
    pub holds: bool,
    /// Horizon of the assertion; `None` means forever, or "eventually" for a failure.
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// A strict δ-pseudo-orbit through a point of `start` at time 0 whose
    /// value at the far end lies at distance `>= eps` from `f^t(x)`.
    TubeEscape { x: Point, eps: f64, delta: f64, start: Vec<Point>, path: TimedPath },
    /// No strict δ-pseudo-orbit from `start` leaves the ε-tube around `x`
    /// for `|k| <= horizon`.
    TubeContained { x: Point, eps: f64, delta: f64, start: Vec<Point>, horizon: u64, mode: Mode },
    /// An admissible bijection `h` with `d(h^t(y), f^t(x)) >= eps`.
    BijectionEscape { x: Point, y: Point, eps: f64, delta: f64, h: Vec<Point>, time: i64 },
    /// Every admissible bijection keeps `y` in the tube for `|k| <= horizon`;
    /// `None` checks a full period of the pair dynamics.
    BijectionContained {
        x: Point,
        y: Point,
        eps: f64,
        delta: f64,
        horizon: Option<u64>,
        mode: Mode,
    },
    /// A strict δ-chain from `y` ending outside `B_ε(Orb(x))`.
    WeakEscape { x: Point, y: Point, eps: f64, delta: f64, path: TimedPath },
    /// Every strict δ-chain from `y` stays in `B_ε(Orb(x))`.
    WeakContained { x: Point, y: Point, eps: f64, delta: f64, mode: Mode },
    /// `d(z, Orb(x)) >= eps`.
    OrbitGap { x: Point, z: Point, eps: f64 },
    /// `z ∈ B_δ(f^{n+1}(y))` and `d(f^k(z), f^{n+k+1}(y)) >= 2ε`.
    SeparationTriple { y: Point, n: u64, k: u64, z: Point, eps: f64, delta: f64 },
    /// `d(x, y) < below` and `d(f^n(x), f^n(y)) >= threshold`.
    PairSeparation { x: Point, y: Point, n: u64, below: f64, threshold: f64 },
    /// `x != y` and `d(f^k(x), f^k(y)) < threshold` for all `k <= horizon`.
    PairNonSeparation { x: Point, y: Point, horizon: u64, threshold: f64 },
    /// For every point `x` a listed `(x, n, k, y)` with `n + k <= horizon`,
    /// `y ∈ B_η(f^n(x))` and `d(f^{n+k}(x), f^k(y)) >= bound`.
    EventualSeparation { eta: f64, horizon: u64, bound: f64, triples: Vec<(Point, u64, u64, Point)> },
    /// The strict δ-relation is strongly connected.
    ChainTransitive { delta: f64 },
    /// The decider's claim is contradicted by the evidence.
    DeciderFault { claim: Claim, evidence: Box<Certificate> },
    /// The hypotheses are all genuine and so is the violation.
    Counterexample { hypotheses: Vec<Certificate>, violation: Box<Certificate> },
}

fn iterate(system: &SystemMap, p: Point, k: u64) -> Point {
    (0..k).fold(p, |q, _| system.apply(q))
}

fn inverse(system: &SystemMap) -> Result<Vec<Point>, Invalid> {
    if !system.is_bijective() {
        return fail("negative times need a bijective map");
    }
    let mut inv = vec![0; system.len()];
    for (i, &v) in system.map_table().iter().enumerate() {
        inv[v] = i;
    }
    Ok(inv)
}

fn at_time(system: &SystemMap, x: Point, t: i64) -> Result<Point, Invalid> {
    if t >= 0 {
        return Ok(iterate(system, x, t as u64));
    }
    let inv = inverse(system)?;
    Ok((0..t.unsigned_abs()).fold(x, |q, _| inv[q]))
}

fn check_points(system: &SystemMap, pts: &[Point]) -> Result<(), Invalid> {
    match pts.iter().find(|&&p| p >= system.len()) {
        Some(p) => fail(format!("point {p} outside the space")),
        None => Ok(()),
    }
}

/// Signed time of the far end of a path that passes through time 0.
fn far_end(path: &TimedPath) -> Result<i64, Invalid> {
    if path.points.is_empty() || path.start_time > 0 || path.end_time() < 0 {
        return fail("path does not pass through time 0");
    }
    if path.start_time < 0 && path.end_time() > 0 {
        return fail("path extends to both sides of time 0");
    }
    Ok(if path.start_time < 0 { path.start_time } else { path.end_time() })
}

fn orbit(system: &SystemMap, x: Point) -> Vec<Point> {
    let mut seen = BTreeSet::new();
    let mut p = x;
    while seen.insert(p) {
        p = system.apply(p);
    }
    seen.into_iter().collect()
}

fn dist_to_orbit(system: &SystemMap, p: Point, orb: &[Point]) -> f64 {
    orb.iter().map(|&o| system.space().dist(p, o)).fold(f64::INFINITY, f64::min)
}

/// Admissible bijections by plain backtracking in index order.
fn bijections(system: &SystemMap, delta: f64) -> Vec<Vec<Point>> {
    fn go(system: &SystemMap, delta: f64, i: usize, used: &mut [bool], cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        let n = system.len();
        if i == n {
            out.push(cur.clone());
            return;
        }
        let fi = system.apply(i);
        for v in 0..n {
            if !used[v] && system.space().dist(fi, v) < delta {
                used[v] = true;
                cur.push(v);
                go(system, delta, i + 1, used, cur, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(system, delta, 0, &mut vec![false; system.len()], &mut Vec::new(), &mut out);
    out
}

impl Certificate {
    /// `Some(true)` for evidence that a condition holds, `Some(false)` for
    /// evidence that it fails, `None` for certificates that are not about a
    /// single decider claim.
    pub fn polarity(&self) -> Option<bool> {
        match self {
            Certificate::TubeContained { .. }
            | Certificate::BijectionContained { .. }
            | Certificate::WeakContained { .. } => Some(true),
            Certificate::TubeEscape { .. }
            | Certificate::BijectionEscape { .. }
            | Certificate::WeakEscape { .. } => Some(false),
            _ => None,
        }
    }

    /// Checks the certificate against `system` from scratch.
    pub fn revalidate(&self, system: &SystemMap) -> Result<(), Invalid> {
        let space = system.space();
        let d = |a: Point, b: Point| space.dist(a, b);
        match self {
            Certificate::TubeEscape { x, eps, delta, start, path } => {
                check_points(system, &[*x])?;
                check_points(system, start)?;
                check_points(system, &path.points)?;
                let t = far_end(path)?;
                if !start.contains(&path.at(0).expect("passes time 0")) {
                    return fail("path does not start in the start set");
                }
                if !is_pseudo_orbit(system, &path.points, *delta) {
                    return fail("path is not a strict δ-pseudo-orbit");
                }
                let target = at_time(system, *x, t)?;
                let p = path.at(t).expect("far end");
                if d(p, target) < *eps {
                    return fail(format!("d(path({t}), f^{t}(x)) = {} < ε", d(p, target)));
                }
                Ok(())
            }
            Certificate::TubeContained { x, eps, delta, start, horizon, mode } => {
                check_points(system, &[*x])?;
                check_points(system, start)?;
                if start.is_empty() {
                    return fail("empty start set");
                }
                let escape = reference_tube(system, *x, start, *eps, *delta, *horizon as usize, *mode)
                    .map_err(|e| Invalid(e.to_string()))?;
                match escape {
                    None => Ok(()),
                    Some(p) => fail(format!("escape {:?} from time {}", p.points, p.start_time)),
                }
            }
            Certificate::BijectionEscape { x, y, eps, delta, h, time } => {
                check_points(system, &[*x, *y])?;
                check_points(system, h)?;
                if h.len() != system.len() {
                    return fail("h has the wrong length");
                }
                let mut hit = vec![false; h.len()];
                for &v in h {
                    if std::mem::replace(&mut hit[v], true) {
                        return fail("h is not a bijection");
                    }
                }
                if let Some(i) = (0..h.len()).find(|&i| d(system.apply(i), h[i]) >= *delta) {
                    return fail(format!("h({i}) is not δ-close to f({i})"));
                }
                let hp = if *time >= 0 {
                    (0..*time).fold(*y, |q, _| h[q])
                } else {
                    let mut inv = vec![0; h.len()];
                    for (i, &v) in h.iter().enumerate() {
                        inv[v] = i;
                    }
                    (0..time.unsigned_abs()).fold(*y, |q, _| inv[q])
                };
                let target = at_time(system, *x, *time)?;
                if d(hp, target) < *eps {
                    return fail("h-orbit is inside the tube at the stated time");
                }
                Ok(())
            }
            Certificate::BijectionContained { x, y, eps, delta, horizon, mode } => {
                check_points(system, &[*x, *y])?;
                if *mode == Mode::BiInfinite {
                    inverse(system)?;
                }
                match find_bijection_escape(system, *x, *y, *eps, *delta, *horizon, *mode) {
                    None => Ok(()),
                    Some((h, t)) => fail(format!("bijection {h:?} escapes at time {t}")),
                }
            }
            Certificate::WeakEscape { x, y, eps, delta, path } => {
                check_points(system, &[*x, *y])?;
                check_points(system, &path.points)?;
                let t = far_end(path)?;
                if path.at(0) != Some(*y) {
                    return fail("path does not pass through y at time 0");
                }
                if t < 0 {
                    inverse(system)?;
                }
                if !is_pseudo_orbit(system, &path.points, *delta) {
                    return fail("path is not a strict δ-pseudo-orbit");
                }
                let p = path.at(t).expect("far end");
                if dist_to_orbit(system, p, &orbit(system, *x)) < *eps {
                    return fail("far end lies inside the orbit neighbourhood");
                }
                Ok(())
            }
            Certificate::WeakContained { x, y, eps, delta, mode } => {
                check_points(system, &[*x, *y])?;
                if *mode == Mode::BiInfinite {
                    inverse(system)?;
                }
                match find_weak_escape(system, *x, *y, *eps, *delta, *mode) {
                    None => Ok(()),
                    Some(p) => fail(format!("chain from y reaches {:?}", p.points)),
                }
            }
            Certificate::OrbitGap { x, z, eps } => {
                check_points(system, &[*x, *z])?;
                if dist_to_orbit(system, *z, &orbit(system, *x)) < *eps {
                    return fail("z is within ε of the orbit");
                }
                Ok(())
            }
            Certificate::SeparationTriple { y, n, k, z, eps, delta } => {
                check_points(system, &[*y, *z])?;
                let w = iterate(system, *y, n + 1);
                if d(w, *z) >= *delta {
                    return fail("z is not in B_δ(f^{n+1}(y))");
                }
                let sep = d(iterate(system, *z, *k), iterate(system, w, *k));
                if sep < 2.0 * eps {
                    return fail(format!("separation {sep} < 2ε"));
                }
                Ok(())
            }
            Certificate::PairSeparation { x, y, n, below, threshold } => {
                check_points(system, &[*x, *y])?;
                if d(*x, *y) >= *below {
                    return fail("pair is not close enough");
                }
                if d(iterate(system, *x, *n), iterate(system, *y, *n)) < *threshold {
                    return fail("pair does not separate at the stated time");
                }
                Ok(())
            }
            Certificate::PairNonSeparation { x, y, horizon, threshold } => {
                check_points(system, &[*x, *y])?;
                if x == y {
                    return fail("pair is not distinct");
                }
                if let Some(k) = (0..=*horizon)
                    .find(|&k| d(iterate(system, *x, k), iterate(system, *y, k)) >= *threshold)
                {
                    return fail(format!("pair separates at k = {k}"));
                }
                Ok(())
            }
            Certificate::EventualSeparation { eta, horizon, bound, triples } => {
                let covered: BTreeSet<Point> = triples.iter().map(|t| t.0).collect();
                if covered.len() != system.len() {
                    return fail("not every point has a separating triple");
                }
                for &(x, n, k, y) in triples {
                    check_points(system, &[x, y])?;
                    let fnx = iterate(system, x, n);
                    if n + k > *horizon || d(fnx, y) >= *eta {
                        return fail(format!("triple for {x} is not admissible"));
                    }
                    if d(iterate(system, fnx, k), iterate(system, y, k)) < *bound {
                        return fail(format!("triple for {x} does not separate"));
                    }
                }
                Ok(())
            }
            Certificate::ChainTransitive { delta } => {
                let n = system.len();
                for s in 0..n {
                    let mut reached = BTreeSet::from([s]);
                    let mut stack = vec![s];
                    while let Some(u) = stack.pop() {
                        for v in (0..n).filter(|&v| d(system.apply(u), v) < *delta) {
                            if reached.insert(v) {
                                stack.push(v);
                            }
                        }
                    }
                    if reached.len() != n {
                        return fail(format!("point {s} does not reach every point"));
                    }
                }
                Ok(())
            }
            Certificate::DeciderFault { claim, evidence } => {
                let Some(pol) = evidence.polarity() else {
                    return fail("evidence does not bear on a decider claim");
                };
                if pol == claim.holds {
                    return fail("evidence agrees with the claim");
                }
                let within = match (&**evidence, claim.horizon) {
                    (_, None) => true,
                    (Certificate::TubeEscape { path, .. } | Certificate::WeakEscape { path, .. }, Some(h)) => {
                        far_end(path)?.unsigned_abs() <= h
                    }
                    (Certificate::BijectionEscape { time, .. }, Some(h)) => time.unsigned_abs() <= h,
                    (Certificate::TubeContained { horizon, .. }, Some(h)) => *horizon >= h,
                    (Certificate::BijectionContained { horizon, .. }, Some(h)) => horizon.is_none_or(|c| c >= h),
                    (Certificate::WeakContained { .. }, Some(_)) => true,
                    _ => false,
                };
                if !within {
                    return fail("evidence lies outside the claimed horizon");
                }
                evidence.revalidate(system)
            }
            Certificate::Counterexample { hypotheses, violation } => {
                for h in hypotheses {
                    h.revalidate(system)?;
                }
                violation.revalidate(system)
            }
        }
    }
}

/// A strict δ-chain from `y` (forward, or backward in bi-infinite mode)
/// to a point outside `B_ε(Orb(x))`, by breadth-first search.
pub(crate) fn find_weak_escape(
    system: &SystemMap,
    x: Point,
    y: Point,
    eps: f64,
    delta: f64,
    mode: Mode,
) -> Option<TimedPath> {
    let n = system.len();
    let d = |a: Point, b: Point| system.space().dist(a, b);
    let orb = orbit(system, x);
    let mut directions = vec![false];
    if mode == Mode::BiInfinite {
        directions.push(true);
    }
    let mut best: Option<TimedPath> = None;
    for backward in directions {
        let mut parent = vec![usize::MAX; n];
        parent[y] = y;
        let mut queue = std::collections::VecDeque::from([y]);
        while let Some(u) = queue.pop_front() {
            if dist_to_orbit(system, u, &orb) >= eps {
                let mut pts = vec![u];
                while *pts.last().expect("nonempty") != y {
                    pts.push(parent[*pts.last().expect("nonempty")]);
                }
                let len = pts.len() as i64;
                let path = if backward {
                    TimedPath { start_time: 1 - len, points: pts }
                } else {
                    pts.reverse();
                    TimedPath { start_time: 0, points: pts }
                };
                if best.as_ref().is_none_or(|b| path.points.len() < b.points.len()) {
                    best = Some(path);
                }
                break;
            }
            for v in 0..n {
                let edge = if backward { d(system.apply(v), u) } else { d(system.apply(u), v) };
                if edge < delta && parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
    }
    best
}

/// An admissible bijection and a signed time at which its orbit from `y`
/// leaves the ε-tube around `x`. `None` for `limit` covers the full period
/// of the pair dynamics.
pub(crate) fn find_bijection_escape(
    system: &SystemMap,
    x: Point,
    y: Point,
    eps: f64,
    delta: f64,
    limit: Option<u64>,
    mode: Mode,
) -> Option<(Vec<Point>, i64)> {
    let n = system.len() as i64;
    let limit = limit.map_or(n * n + n, |l| l as i64);
    let mut times: Vec<i64> = (0..=limit).collect();
    if mode == Mode::BiInfinite {
        times.extend((1..=limit).map(|t| -t));
    }
    times.sort_by_key(|t| (t.abs(), *t < 0));
    for h in bijections(system, delta) {
        for &time in &times {
            let cert = Certificate::BijectionEscape { x, y, eps, delta, h: h.clone(), time };
            if cert.revalidate(system).is_ok() {
                return Some((h, time));
            }
        }
    }
    None
}
