//! Self-maps on finite metric spaces, orbit traces, and the example zoo.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{validate_metric, FiniteMetricSpace, MetricError, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("bad parameters for {family}: {reason}")]
    BadParams { family: String, reason: String },
    #[error("map table has {len} entries for a space of {size} points")]
    MapLength { len: usize, size: usize },
    #[error("map sends point {from} to {to}, outside a space of {size} points")]
    MapOutOfRange { from: usize, to: usize, size: usize },
    #[error("negative time {0} requested on a non-invertible system")]
    NegativeTimeOnNonInvertible(i64),
    #[error("unknown zoo family `{0}`")]
    UnknownFamily(String),
}

/// A map `f: X -> X` on a finite metric space.
///
/// On a finite discrete space every map is continuous and every bijection is
/// a homeomorphism, so `bijective` alone selects between positive and
/// bi-infinite modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMap {
    space: FiniteMetricSpace,
    map_table: Vec<Point>,
    bijective: bool,
    name: String,
}

impl SystemMap {
    pub fn new(
        space: FiniteMetricSpace,
        map_table: Vec<Point>,
        name: impl Into<String>,
    ) -> Result<Self, SystemError> {
        let n = space.len();
        if map_table.len() != n {
            return Err(SystemError::MapLength { len: map_table.len(), size: n });
        }
        if let Some((from, &to)) = map_table.iter().enumerate().find(|(_, &t)| t >= n) {
            return Err(SystemError::MapOutOfRange { from, to, size: n });
        }
        let mut hit = vec![false; n];
        for &t in &map_table {
            hit[t] = true;
        }
        let bijective = hit.iter().all(|&h| h);
        Ok(SystemMap { space, map_table, bijective, name: name.into() })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn map_table(&self) -> &[Point] {
        &self.map_table
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        self.map_table[p]
    }

    pub fn is_bijective(&self) -> bool {
        self.bijective
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `f^k(p)` for `k >= 0` by direct iteration.
    pub fn iterate(&self, p: Point, k: usize) -> Point {
        (0..k).fold(p, |q, _| self.map_table[q])
    }

    /// Orbit of `x` with minimal preperiod and period detected.
    ///
    /// `max_len` asks for at least that many materialized points; the trace
    /// always holds at least `p + q + 1` so that one full period is visible.
    pub fn orbit_trace(&self, x: Point, max_len: Option<usize>) -> Result<OrbitTrace, SystemError> {
        self.space.check_point(x)?;
        let n = self.len();
        let mut first_seen = vec![usize::MAX; n];
        let mut sequence = Vec::with_capacity(n + 1);
        let mut cur = x;
        while first_seen[cur] == usize::MAX {
            first_seen[cur] = sequence.len();
            sequence.push(cur);
            cur = self.map_table[cur];
        }
        let preperiod = first_seen[cur];
        let period = sequence.len() - preperiod;
        sequence.push(cur);
        let want = max_len.unwrap_or(0);
        while sequence.len() < want {
            let last = *sequence.last().expect("nonempty");
            sequence.push(self.map_table[last]);
        }
        Ok(OrbitTrace {
            start: x,
            sequence,
            preperiod,
            period,
            invertible: self.bijective,
        })
    }

    /// Forward orbit set `{f^k(x) : k >= 0}`.
    pub fn orbit_points(&self, x: Point) -> Result<Vec<Point>, SystemError> {
        let trace = self.orbit_trace(x, None)?;
        Ok(trace.sequence[..trace.preperiod + trace.period].to_vec())
    }
}

/// Eventually periodic orbit `x, f(x), ...` with minimal `(preperiod, period)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitTrace {
    pub start: Point,
    pub sequence: Vec<Point>,
    pub preperiod: usize,
    pub period: usize,
    /// Whether negative times are meaningful (bijective system).
    pub invertible: bool,
}

impl OrbitTrace {
    /// Index into the first `preperiod + period` entries of `sequence` that
    /// holds `f^k(x)` for `k >= 0`.
    #[inline]
    pub fn phase(&self, k: u64) -> usize {
        let (p, q) = (self.preperiod as u64, self.period as u64);
        if k < p {
            k as usize
        } else {
            (p + (k - p) % q) as usize
        }
    }

    /// Phase index of `f^{-k}(x)` for `k >= 0`; only valid on purely periodic traces.
    #[inline]
    pub fn backward_phase(&self, k: u64) -> usize {
        debug_assert_eq!(self.preperiod, 0);
        let q = self.period as i64;
        (-(k as i64)).rem_euclid(q) as usize
    }

    #[inline]
    pub fn at_phase(&self, phase: usize) -> Point {
        self.sequence[phase]
    }

    /// `f^k(x)` for any signed `k`, folding through `(preperiod, period)`.
    pub fn point_at_time(&self, k: i64) -> Result<Point, SystemError> {
        if k >= 0 {
            return Ok(self.sequence[self.phase(k as u64)]);
        }
        if !self.invertible {
            return Err(SystemError::NegativeTimeOnNonInvertible(k));
        }
        Ok(self.sequence[self.backward_phase(k.unsigned_abs())])
    }
}

/// Named example families.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ZooFamily {
    /// `i -> i + shift mod n` on the `n`-point circle grid.
    Rotation { n: usize, shift: usize },
    /// `i -> 2i mod n` on the `n`-point circle grid.
    Doubling { n: usize },
    Identity { n: usize },
    TwoFixedPoints { gap: f64 },
    SwapPair { gap: f64 },
}

impl ZooFamily {
    pub const NAMES: [&'static str; 5] =
        ["rotation", "doubling", "identity", "two_fixed_points", "swap_pair"];

    pub fn usage(name: &str) -> &'static str {
        match name {
            "rotation" => "rotation:N,R   circle grid of N points, i -> i+R mod N",
            "doubling" => "doubling:N     circle grid of N points, i -> 2i mod N",
            "identity" => "identity:N     circle grid of N points, every point fixed",
            "two_fixed_points" => "two_fixed_points:GAP   two fixed points at distance GAP",
            "swap_pair" => "swap_pair:GAP  two points at distance GAP, swapped",
            _ => "",
        }
    }
}

impl fmt::Display for ZooFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZooFamily::Rotation { n, shift } => write!(f, "rotation:{n},{shift}"),
            ZooFamily::Doubling { n } => write!(f, "doubling:{n}"),
            ZooFamily::Identity { n } => write!(f, "identity:{n}"),
            ZooFamily::TwoFixedPoints { gap } => write!(f, "two_fixed_points:{gap}"),
            ZooFamily::SwapPair { gap } => write!(f, "swap_pair:{gap}"),
        }
    }
}

impl FromStr for ZooFamily {
    type Err = SystemError;

    /// Parses `family:params`, e.g. `rotation:8,1` or `swap_pair:0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        let bad = |reason: &str| SystemError::BadParams {
            family: family.to_string(),
            reason: reason.to_string(),
        };
        let ints = || -> Result<Vec<usize>, SystemError> {
            params
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad("expected integers")))
                .collect()
        };
        let real = || -> Result<f64, SystemError> {
            params.trim().parse::<f64>().map_err(|_| bad("expected a real gap"))
        };
        match family {
            "rotation" => match ints()?.as_slice() {
                [n] => Ok(ZooFamily::Rotation { n: *n, shift: 1 }),
                [n, r] => Ok(ZooFamily::Rotation { n: *n, shift: *r }),
                _ => Err(bad("expected N,R")),
            },
            "doubling" => match ints()?.as_slice() {
                [n] => Ok(ZooFamily::Doubling { n: *n }),
                _ => Err(bad("expected N")),
            },
            "identity" => match ints()?.as_slice() {
                [n] => Ok(ZooFamily::Identity { n: *n }),
                _ => Err(bad("expected N")),
            },
            "two_fixed_points" => Ok(ZooFamily::TwoFixedPoints { gap: real()? }),
            "swap_pair" => Ok(ZooFamily::SwapPair { gap: real()? }),
            other => Err(SystemError::UnknownFamily(other.to_string())),
        }
    }
}

/// Builds a zoo system.
pub fn make_zoo_system(family: &ZooFamily) -> Result<SystemMap, SystemError> {
    let bad = |reason: &str| SystemError::BadParams {
        family: family.to_string(),
        reason: reason.to_string(),
    };
    let name = family.to_string();
    match *family {
        ZooFamily::Rotation { n, shift } => {
            if n < 1 {
                return Err(bad("n must be at least 1"));
            }
            if shift >= n {
                return Err(bad("shift must lie in 0..n"));
            }
            let space = FiniteMetricSpace::circle_grid(n)?;
            SystemMap::new(space, (0..n).map(|i| (i + shift) % n).collect(), name)
        }
        ZooFamily::Doubling { n } => {
            if n < 1 {
                return Err(bad("n must be at least 1"));
            }
            let space = FiniteMetricSpace::circle_grid(n)?;
            SystemMap::new(space, (0..n).map(|i| (2 * i) % n).collect(), name)
        }
        ZooFamily::Identity { n } => {
            if n < 1 {
                return Err(bad("n must be at least 1"));
            }
            let space = FiniteMetricSpace::circle_grid(n)?;
            SystemMap::new(space, (0..n).collect(), name)
        }
        ZooFamily::TwoFixedPoints { gap } | ZooFamily::SwapPair { gap } => {
            if !(gap.is_finite() && gap > 0.0) {
                return Err(bad("gap must be positive"));
            }
            let space = validate_metric(vec![vec![0.0, gap], vec![gap, 0.0]])?
                .with_coords(vec![0.0, gap]);
            let table = if matches!(family, ZooFamily::SwapPair { .. }) {
                vec![1, 0]
            } else {
                vec![0, 1]
            };
            SystemMap::new(space, table, name)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zoo(s: &str) -> SystemMap {
        make_zoo_system(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn rotation_is_single_cycle() {
        let rot = zoo("rotation:8,1");
        assert!(rot.is_bijective());
        assert_eq!(rot.space().min_gap(), 0.125);
        let t = rot.orbit_trace(0, None).unwrap();
        assert_eq!((t.preperiod, t.period), (0, 8));
        assert_eq!(t.sequence, vec![0, 1, 2, 3, 4, 5, 6, 7, 0]);
        assert_eq!(t.point_at_time(-3).unwrap(), 5);
        assert_eq!(t.point_at_time(0).unwrap(), 0);
    }

    #[test]
    fn doubling_collapses_to_zero() {
        let dbl = zoo("doubling:8");
        assert!(!dbl.is_bijective());
        let t = dbl.orbit_trace(1, None).unwrap();
        assert_eq!(t.sequence, vec![1, 2, 4, 0, 0]);
        assert_eq!((t.preperiod, t.period), (3, 1));
        assert_eq!(t.point_at_time(100).unwrap(), 0);
        assert_eq!(
            t.point_at_time(-1).unwrap_err(),
            SystemError::NegativeTimeOnNonInvertible(-1)
        );
        assert!(zoo("doubling:9").is_bijective());
    }

    #[test]
    fn identity_of_one_point() {
        let id = zoo("identity:1");
        let t = id.orbit_trace(0, None).unwrap();
        assert_eq!((t.preperiod, t.period), (0, 1));
    }

    #[test]
    fn bad_params_rejected() {
        for s in ["rotation:0,0", "rotation:4,4", "doubling:0", "swap_pair:0", "two_fixed_points:-1"] {
            let fam: ZooFamily = s.parse().unwrap();
            assert!(matches!(make_zoo_system(&fam), Err(SystemError::BadParams { .. })), "{s}");
        }
        assert!(matches!("lorenz:3".parse::<ZooFamily>(), Err(SystemError::UnknownFamily(_))));
        assert!("rotation:x".parse::<ZooFamily>().is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for s in ["rotation:8,1", "doubling:9", "identity:3", "swap_pair:0.5", "two_fixed_points:1"] {
            let fam: ZooFamily = s.parse().unwrap();
            assert_eq!(fam.to_string().parse::<ZooFamily>().unwrap(), fam);
        }
    }

    #[test]
    fn max_len_extends_sequence() {
        let t = zoo("rotation:3,1").orbit_trace(0, Some(10)).unwrap();
        assert_eq!(t.sequence.len(), 10);
        for w in t.sequence.windows(2) {
            assert_eq!(w[1], (w[0] + 1) % 3);
        }
    }

    proptest! {
        #[test]
        fn negative_round_trip(n in 1usize..12, shift in 0usize..12, x in 0usize..12, k in -24i64..24) {
            let sys = make_zoo_system(&ZooFamily::Rotation { n, shift: shift % n }).unwrap();
            let x = x % n;
            let k = k.clamp(-2 * n as i64, 2 * n as i64);
            let forward = sys.orbit_trace(x, None).unwrap().point_at_time(k).unwrap();
            let back = sys.orbit_trace(forward, None).unwrap().point_at_time(-k).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn trace_is_minimal_and_consistent(n in 1usize..16, x in 0usize..16, which in 0u8..3) {
            let fam = match which {
                0 => ZooFamily::Rotation { n, shift: 1 % n },
                1 => ZooFamily::Doubling { n },
                _ => ZooFamily::Identity { n },
            };
            let sys = make_zoo_system(&fam).unwrap();
            let x = x % n;
            let t = sys.orbit_trace(x, None).unwrap();
            prop_assert!(t.preperiod + t.period <= n);
            for w in t.sequence.windows(2) {
                prop_assert_eq!(sys.apply(w[0]), w[1]);
            }
            prop_assert_eq!(t.sequence[t.preperiod + t.period], t.sequence[t.preperiod]);
            // first p + q entries are pairwise distinct, hence (p, q) minimal
            let head = &t.sequence[..t.preperiod + t.period];
            let mut sorted = head.to_vec();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), head.len());
            // f^q fixes every point of the cycle
            for &c in &t.sequence[t.preperiod..t.preperiod + t.period] {
                prop_assert_eq!(sys.iterate(c, t.period), c);
            }
            for k in 0..(3 * n as u64) {
                prop_assert_eq!(t.point_at_time(k as i64).unwrap(), sys.iterate(x, k as usize));
            }
        }

        #[test]
        fn rotations_are_isometries(n in 1usize..14, shift in 0usize..14) {
            let sys = make_zoo_system(&ZooFamily::Rotation { n, shift: shift % n }).unwrap();
            let d = sys.space();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(d.dist(sys.apply(i), sys.apply(j)), d.dist(i, j));
                }
            }
        }
    }
}
