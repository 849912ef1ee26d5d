//! Finite metric spaces and ball primitives.
//!
//! Every comparison against a radius is strict: `open_ball(c, r)` is
//! `{p : d(c, p) < r}`. On grid spaces a radius equal to a realized distance
//! therefore excludes the points at that distance.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::pointset::PointSet;

pub type Point = usize;

/// Relative slack used only by the triangle-inequality check, so that
/// distances like `1/9 + 1/9` vs `2/9` do not fail on a rounding ulp.
const TRIANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric must have at least one point")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite distance at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("asymmetric metric: d({0},{1}) != d({1},{0})")]
    AsymmetricMetric(usize, usize),
    #[error("nonzero diagonal entry d({0},{0})")]
    NonzeroDiagonal(usize),
    #[error("negative distance at ({0}, {1})")]
    NegativeDistance(usize, usize),
    #[error("zero distance between distinct points {0} and {1}")]
    ZeroOffDiagonal(usize, usize),
    #[error("triangle inequality violated: d({0},{2}) > d({0},{1}) + d({1},{2})")]
    TriangleViolation(usize, usize, usize),
    #[error("invalid point {point} in a space of {size} points")]
    InvalidPoint { point: usize, size: usize },
    #[error("invalid distance {0}: must be finite and nonnegative")]
    InvalidDistance(f64),
}

/// A nonnegative finite distance (or threshold such as ε, δ, η).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    pub fn new(value: f64) -> Result<Self, MetricError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Distance(value))
        } else {
            Err(MetricError::InvalidDistance(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<Distance> for f64 {
    fn from(d: Distance) -> f64 {
        d.0
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// A validated finite metric space on points `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<f64>>,
    labels: Vec<String>,
    /// Optional coordinate annotation, e.g. circle positions in `[0, 1)`.
    coords: Option<Vec<f64>>,
}

/// Checks the metric axioms in a fixed order (symmetry, diagonal,
/// positivity, triangle) and reports the first violation found.
pub fn validate_metric(matrix: Vec<Vec<f64>>) -> Result<FiniteMetricSpace, MetricError> {
    let n = matrix.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(MetricError::NotSquare { row: i, len: row.len(), expected: n });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite(i, j));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if matrix[i][j] != matrix[j][i] {
                return Err(MetricError::AsymmetricMetric(i, j));
            }
        }
    }
    for (i, row) in matrix.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(MetricError::NonzeroDiagonal(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if matrix[i][j] < 0.0 {
                return Err(MetricError::NegativeDistance(i, j));
            }
            if matrix[i][j] == 0.0 {
                return Err(MetricError::ZeroOffDiagonal(i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let via = matrix[i][j] + matrix[j][k];
                if matrix[i][k] > via + TRIANGLE_SLACK * via.max(1.0) {
                    return Err(MetricError::TriangleViolation(i, j, k));
                }
            }
        }
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    Ok(FiniteMetricSpace { dist: matrix, labels, coords: None })
}

impl FiniteMetricSpace {
    /// `n` equally spaced points on the unit circle, `d(i,j) = min(|i-j|, n-|i-j|)/n`.
    pub fn circle_grid(n: usize) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let gap = i.abs_diff(j);
                        gap.min(n - gap) as f64 / n as f64
                    })
                    .collect()
            })
            .collect();
        let mut space = validate_metric(matrix)?;
        space.coords = Some((0..n).map(|i| i as f64 / n as f64).collect());
        Ok(space)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.len(), "label count must match point count");
        self.labels = labels;
        self
    }

    pub fn with_coords(mut self, coords: Vec<f64>) -> Self {
        assert_eq!(coords.len(), self.len(), "coordinate count must match point count");
        self.coords = Some(coords);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    /// Always false for a validated space; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    #[inline]
    pub fn dist(&self, a: Point, b: Point) -> f64 {
        self.dist[a][b]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    pub fn check_point(&self, p: Point) -> Result<(), MetricError> {
        if p < self.len() {
            Ok(())
        } else {
            Err(MetricError::InvalidPoint { point: p, size: self.len() })
        }
    }

    pub fn points(&self) -> std::ops::Range<Point> {
        0..self.len()
    }

    /// `{p : d(center, p) < r}`.
    pub fn open_ball(&self, center: Point, r: f64) -> Result<PointSet, MetricError> {
        self.check_point(center)?;
        Ok(self.ball_unchecked(center, r))
    }

    pub(crate) fn ball_unchecked(&self, center: Point, r: f64) -> PointSet {
        PointSet::from_points(self.len(), self.points().filter(|&p| self.dist[center][p] < r))
    }

    /// ε-neighbourhood of a set: points strictly within `r` of some member.
    pub fn neighbourhood(&self, set: &PointSet, r: f64) -> PointSet {
        PointSet::from_points(
            self.len(),
            self.points().filter(|&p| set.iter().any(|c| self.dist[c][p] < r)),
        )
    }

    /// `min_{q in set} d(p, q)`; `+inf` for an empty set.
    pub fn dist_to_set(&self, p: Point, set: &PointSet) -> f64 {
        set.iter().map(|q| self.dist[p][q]).fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance between distinct points; `+inf` for a 1-point space.
    pub fn min_gap(&self) -> f64 {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.dist[i][j])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }
}
