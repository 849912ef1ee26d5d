//! Resolution-bounded dynamical moduli.
//!
//! On a finite space the continuum definitions collapse below `min_gap`, so
//! each property is measured at a resolution `η` and horizon `N` instead.
//! Separations use `>=`, closeness uses strict `<`.

use serde::{Serialize, Serializer};

use crate::graph::{build_graph, GraphError};
use crate::metric::{MetricError, Point};
use crate::pointset::PointSet;
use crate::system::{SystemError, SystemMap};

/// Serializes a modulus, writing `"inf"` for the unbounded sentinel.
pub fn serialize_modulus<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else {
        s.serialize_str("inf")
    }
}

/// `table[k][x] = f^k(x)` for `k = 0..=horizon`.
fn iterates(system: &SystemMap, horizon: usize) -> Vec<Vec<Point>> {
    let mut table = vec![(0..system.len()).collect::<Vec<_>>()];
    for k in 0..horizon {
        let next = table[k].iter().map(|&p| system.apply(p)).collect();
        table.push(next);
    }
    table
}

/// `min_x max_{y ∈ B_η(x), 1 ≤ k ≤ N} d(f^k(x), f^k(y))`.
///
/// Zero when every `η`-ball is a singleton.
pub fn sensitivity_modulus(system: &SystemMap, eta: f64, horizon: usize) -> f64 {
    let space = system.space();
    let it = iterates(system, horizon);
    space
        .points()
        .map(|x| {
            let ball = space.ball_unchecked(x, eta);
            let mut best = 0.0f64;
            for y in ball.iter() {
                for row in &it[1..] {
                    best = best.max(space.dist(row[x], row[y]));
                }
            }
            best
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min_x max_{n + k ≤ N, y ∈ B_η(f^n(x))} d(f^{n+k}(x), f^k(y))`.
pub fn eventual_sensitivity_modulus(system: &SystemMap, eta: f64, horizon: usize) -> f64 {
    let space = system.space();
    let it = iterates(system, horizon);
    let balls: Vec<PointSet> = space.points().map(|c| space.ball_unchecked(c, eta)).collect();
    space
        .points()
        .map(|x| {
            let mut best = 0.0f64;
            for n in 0..=horizon {
                let fnx = it[n][x];
                for y in balls[fnx].iter() {
                    for k in 0..=horizon - n {
                        best = best.max(space.dist(it[k][fnx], it[k][y]));
                    }
                }
            }
            best
        })
        .fold(f64::INFINITY, f64::min)
}

/// Value reported when no pair separates: `diameter + min_gap`, or `+inf`
/// for a single point.
pub fn unbounded_sentinel(system: &SystemMap) -> f64 {
    let space = system.space();
    if space.len() < 2 {
        f64::INFINITY
    } else {
        space.diameter() + space.min_gap()
    }
}

/// Largest `δ` with `d(x, y) < δ ⟹ d(f^n(x), f^n(y)) < ε` for all
/// `0 ≤ n ≤ N`: the smallest starting distance of a pair that separates.
pub fn equicontinuity_modulus(system: &SystemMap, eps: f64, horizon: usize) -> f64 {
    let space = system.space();
    let it = iterates(system, horizon);
    let n = space.len();
    let mut best = f64::INFINITY;
    for x in 0..n {
        for y in x + 1..n {
            let d = space.dist(x, y);
            if d < best && it.iter().any(|row| space.dist(row[x], row[y]) >= eps) {
                best = d;
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        unbounded_sentinel(system)
    }
}

/// `min_{x ≠ y} max_{0 ≤ k ≤ N} d(f^k(x), f^k(y))`; `+inf` below two points.
pub fn expansivity_constant(system: &SystemMap, horizon: usize) -> f64 {
    let space = system.space();
    let it = iterates(system, horizon);
    let n = space.len();
    let mut best = f64::INFINITY;
    for x in 0..n {
        for y in x + 1..n {
            let sep = it.iter().map(|row| space.dist(row[x], row[y])).fold(0.0, f64::max);
            best = best.min(sep);
        }
    }
    best
}

/// `max_z d(z, Orb(x))`. Zero iff the forward orbit of `x` is all of `X`.
pub fn minimality_defect(system: &SystemMap, x: Point) -> Result<f64, MetricError> {
    let space = system.space();
    space.check_point(x)?;
    let orbit = PointSet::from_points(
        space.len(),
        system.orbit_points(x).map_err(|_| MetricError::InvalidPoint { point: x, size: space.len() })?,
    );
    Ok(space.points().map(|z| space.dist_to_set(z, &orbit)).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquicontinuityEntry {
    pub eps: f64,
    #[serde(serialize_with = "serialize_modulus")]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub system: String,
    pub horizon: usize,
    pub eta: f64,
    pub sensitivity_modulus: f64,
    pub eventual_sensitivity_modulus: f64,
    pub equicontinuity_modulus: Vec<EquicontinuityEntry>,
    #[serde(serialize_with = "serialize_modulus")]
    pub expansivity_constant: f64,
    /// Worst defect over all start points.
    pub minimality_defect: f64,
    pub minimality_defects: Vec<f64>,
    pub minimal: bool,
    /// The tested `δ` values at which the δ-graph is strongly connected.
    pub chain_transitive_at: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum PropertyError {
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub fn property_report(
    system: &SystemMap,
    eta: f64,
    horizon: usize,
    eps_grid: &[f64],
    delta_grid: &[f64],
) -> Result<PropertyReport, PropertyError> {
    for &r in std::iter::once(&eta).chain(eps_grid) {
        if !(r > 0.0 && r.is_finite()) {
            return Err(PropertyError::BadResolution(r));
        }
    }
    if horizon == 0 {
        return Err(PropertyError::ZeroHorizon);
    }
    let defects = system
        .space()
        .points()
        .map(|x| minimality_defect(system, x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut chain_transitive_at = Vec::new();
    for &d in delta_grid {
        if build_graph(system, d)?.is_chain_transitive() {
            chain_transitive_at.push(d);
        }
    }
    Ok(PropertyReport {
        system: system.name().to_string(),
        horizon,
        eta,
        sensitivity_modulus: sensitivity_modulus(system, eta, horizon),
        eventual_sensitivity_modulus: eventual_sensitivity_modulus(system, eta, horizon),
        equicontinuity_modulus: eps_grid
            .iter()
            .map(|&eps| EquicontinuityEntry { eps, delta: equicontinuity_modulus(system, eps, horizon) })
            .collect(),
        expansivity_constant: expansivity_constant(system, horizon),
        minimality_defect: defects.iter().copied().fold(0.0, f64::max),
        minimal: defects.iter().all(|&d| d == 0.0),
        minimality_defects: defects,
        chain_transitive_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;
    use crate::system::make_zoo_system;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn zoo(s: &str) -> SystemMap {
        make_zoo_system(&s.parse().unwrap()).unwrap()
    }

    // Oracles below iterate the map directly instead of through tables.
    fn f_k(sys: &SystemMap, p: Point, k: usize) -> Point {
        (0..k).fold(p, |q, _| sys.apply(q))
    }

    fn oracle_sensitivity(sys: &SystemMap, eta: f64, horizon: usize) -> f64 {
        let d = |a, b| sys.space().dist(a, b);
        let mut out = f64::INFINITY;
        for x in 0..sys.len() {
            let mut m = 0.0f64;
            for y in (0..sys.len()).filter(|&y| d(x, y) < eta) {
                for k in 1..=horizon {
                    m = m.max(d(f_k(sys, x, k), f_k(sys, y, k)));
                }
            }
            out = out.min(m);
        }
        out
    }

    fn oracle_eventual(sys: &SystemMap, eta: f64, horizon: usize) -> f64 {
        let d = |a, b| sys.space().dist(a, b);
        let mut out = f64::INFINITY;
        for x in 0..sys.len() {
            let mut m = 0.0f64;
            for n in 0..=horizon {
                for y in (0..sys.len()).filter(|&y| d(f_k(sys, x, n), y) < eta) {
                    for k in 0..=horizon - n {
                        m = m.max(d(f_k(sys, x, n + k), f_k(sys, y, k)));
                    }
                }
            }
            out = out.min(m);
        }
        out
    }

    #[test]
    fn sensitivity_examples() {
        assert!((sensitivity_modulus(&zoo("doubling:9"), 0.12, 6) - 4.0 / 9.0).abs() < TOL);
        assert!((sensitivity_modulus(&zoo("rotation:9,1"), 0.12, 6) - 1.0 / 9.0).abs() < TOL);
        for s in ["doubling:9", "rotation:8,1", "swap_pair:0.5"] {
            let sys = zoo(s);
            assert_eq!(sensitivity_modulus(&sys, sys.space().min_gap(), 4), 0.0);
        }
    }

    #[test]
    fn eventual_examples() {
        assert!((eventual_sensitivity_modulus(&zoo("doubling:9"), 0.12, 8) - 4.0 / 9.0).abs() < TOL);
        assert!((eventual_sensitivity_modulus(&zoo("rotation:9,1"), 0.12, 8) - 1.0 / 9.0).abs() < TOL);
        assert_eq!(eventual_sensitivity_modulus(&zoo("identity:1"), 3.0, 5), 0.0);
    }

    #[test]
    fn equicontinuity_examples() {
        let rot = zoo("rotation:9,1");
        for n in [1, 4, 9] {
            assert!((equicontinuity_modulus(&rot, 0.3, n) - 3.0 / 9.0).abs() < TOL);
        }
        assert!((equicontinuity_modulus(&zoo("doubling:9"), 0.3, 3) - 1.0 / 9.0).abs() < TOL);
        let id = zoo("identity:8");
        assert!((equicontinuity_modulus(&id, 0.3, 2) - 0.375).abs() < TOL);
        assert!((equicontinuity_modulus(&id, 0.6, 2) - (0.5 + 0.125)).abs() < TOL);
        assert_eq!(equicontinuity_modulus(&zoo("identity:1"), 0.1, 2), f64::INFINITY);
    }

    #[test]
    fn expansivity_examples() {
        for n in [0, 1, 5] {
            assert!((expansivity_constant(&zoo("rotation:8,1"), n) - 0.125).abs() < TOL);
            assert!((expansivity_constant(&zoo("swap_pair:0.5"), n) - 0.5).abs() < TOL);
        }
        // pairs three apart map to pairs three apart, so they never exceed 3/9
        let dbl = zoo("doubling:9");
        let brute = (0..9)
            .flat_map(|x| (x + 1..9).map(move |y| (x, y)))
            .map(|(x, y)| {
                (0..=3).map(|k| dbl.space().dist(f_k(&dbl, x, k), f_k(&dbl, y, k))).fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 3.0 / 9.0).abs() < TOL);
        assert!((expansivity_constant(&dbl, 3) - brute).abs() < TOL);
        assert_eq!(expansivity_constant(&zoo("identity:1"), 3), f64::INFINITY);
    }

    #[test]
    fn minimality_examples() {
        let rot = zoo("rotation:8,1");
        for x in 0..8 {
            assert_eq!(minimality_defect(&rot, x).unwrap(), 0.0);
        }
        assert_eq!(minimality_defect(&zoo("two_fixed_points:1.0"), 0).unwrap(), 1.0);
        assert!((minimality_defect(&zoo("doubling:8"), 1).unwrap() - 0.25).abs() < TOL);
        assert!(minimality_defect(&rot, 8).is_err());
    }

    #[test]
    fn report_fields() {
        let rot = zoo("rotation:8,1");
        let r = property_report(&rot, 0.13, 4, &[0.2, 0.3], &[0.1, 0.13]).unwrap();
        assert!(r.minimal);
        assert_eq!(r.chain_transitive_at, vec![0.1, 0.13]);
        assert_eq!(r.equicontinuity_modulus.len(), 2);
        let json = serde_json::to_string(&property_report(&zoo("identity:1"), 0.1, 1, &[0.1], &[]).unwrap())
            .unwrap();
        assert!(json.contains("\"expansivity_constant\":\"inf\""), "{json}");
        assert!(property_report(&rot, 0.0, 4, &[], &[]).is_err());
        assert!(property_report(&rot, 0.1, 0, &[], &[]).is_err());
    }

    fn small_system() -> impl Strategy<Value = SystemMap> {
        (1usize..=8).prop_flat_map(|n| {
            proptest::collection::vec(0..n, n).prop_map(move |table| {
                SystemMap::new(FiniteMetricSpace::circle_grid(n).unwrap(), table, "random").unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn moduli_match_oracles(sys in small_system(), eta in 0.05f64..0.6, n in 1usize..=6) {
            prop_assert_eq!(sensitivity_modulus(&sys, eta, n), oracle_sensitivity(&sys, eta, n));
            prop_assert_eq!(eventual_sensitivity_modulus(&sys, eta, n), oracle_eventual(&sys, eta, n));
        }

        #[test]
        fn eventual_dominates_plain(sys in small_system(), eta in 0.05f64..0.6, n in 1usize..=6) {
            prop_assert!(eventual_sensitivity_modulus(&sys, eta, n) >= sensitivity_modulus(&sys, eta, n));
        }

        #[test]
        fn moduli_monotone(sys in small_system(), eta in 0.05f64..0.5, n in 1usize..=5, eps in 0.05f64..0.5) {
            let s = |e, m| sensitivity_modulus(&sys, e, m);
            let ev = |e, m| eventual_sensitivity_modulus(&sys, e, m);
            prop_assert!(s(eta, n + 1) >= s(eta, n));
            prop_assert!(s(eta + 0.1, n) >= s(eta, n));
            prop_assert!(ev(eta, n + 1) >= ev(eta, n));
            prop_assert!(ev(eta + 0.1, n) >= ev(eta, n));
            prop_assert!(expansivity_constant(&sys, n + 1) >= expansivity_constant(&sys, n));
            let eq = |e, m| equicontinuity_modulus(&sys, e, m);
            prop_assert!(eq(eps, n + 1) <= eq(eps, n));
            prop_assert!(eq(eps + 0.1, n) >= eq(eps, n));
        }

        #[test]
        fn isometry_sensitivity_bounded(n in 2usize..=10, shift in 0usize..10, eta in 0.05f64..0.6, h in 1usize..=6) {
            let sys = make_zoo_system(&crate::system::ZooFamily::Rotation { n, shift: shift % n }).unwrap();
            let s = sensitivity_modulus(&sys, eta, h);
            prop_assert!(s < eta);
            prop_assert_eq!(s, sensitivity_modulus(&sys, eta, 1));
        }

        #[test]
        fn zero_defect_iff_single_cycle(sys in small_system()) {
            let all_zero = (0..sys.len()).all(|x| minimality_defect(&sys, x).unwrap() == 0.0);
            let trace = sys.orbit_trace(0, None).unwrap();
            let single_cycle = trace.preperiod == 0 && trace.period == sys.len();
            prop_assert_eq!(all_zero, single_cycle);
        }
    }
}
