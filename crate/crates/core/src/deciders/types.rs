use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Comparison, GraphError, TimedPath};
use crate::metric::{Distance, MetricError, Point};
use crate::system::{SystemError, SystemMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecideError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("path enumeration exceeded the budget of {0} paths")]
    BudgetExceeded(u64),
}

/// Time window of an inverse-shadowing query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// `|k| <= N`.
    Finite(u64),
    /// Every `k`.
    Full,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Full => write!(f, "full"),
        }
    }
}

impl FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "inf" => Ok(Horizon::Full),
            t => t
                .parse::<u64>()
                .ok()
                .filter(|&n| n >= 1)
                .map(Horizon::Finite)
                .ok_or_else(|| format!("horizon must be a positive integer or `full`, got `{s}`")),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(n) => s.serialize_u64(*n),
            Horizon::Full => s.serialize_str("full"),
        }
    }
}

/// Positive (`k ∈ ω`) or bi-infinite (`k ∈ ℤ`, bijective systems only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Positive,
    BiInfinite,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" | "pos" => Ok(Mode::Positive),
            "bi" | "bi-infinite" | "bi_infinite" => Ok(Mode::BiInfinite),
            _ => Err(format!("unknown mode `{s}` (expected positive or bi)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Positive => "positive",
            Mode::BiInfinite => "bi",
        })
    }
}

/// Class of admissible δ-methods.
///
/// On a finite discrete space every method is continuous, so the class of
/// continuous methods coincides with `T0`; `tc` parses as `T0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MethodClass {
    T0,
    Th,
}

impl FromStr for MethodClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t0" | "tc" => Ok(MethodClass::T0),
            "th" => Ok(MethodClass::Th),
            _ => Err(format!("unknown class `{s}` (expected t0, tc or th)")),
        }
    }
}

impl fmt::Display for MethodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodClass::T0 => "t0",
            MethodClass::Th => "th",
        })
    }
}

pub const DEFAULT_TH_LIMIT: usize = 1_000_000;

/// Knobs that do not change the mathematical question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeciderConfig {
    /// Stabilization cap for full-horizon scans; `None` means `4·n·q`
    /// with `q` the orbit period of the target point.
    pub cap: Option<u64>,
    /// Maximum number of admissible bijections enumerated for `Th`.
    pub th_limit: usize,
    /// Comparison used for δ-edges and δ-balls.
    pub edges: Comparison,
    /// Comparison used for ε-tube containment.
    pub tube: Comparison,
}

impl Default for DeciderConfig {
    fn default() -> Self {
        DeciderConfig {
            cap: None,
            th_limit: DEFAULT_TH_LIMIT,
            edges: Comparison::Strict,
            tube: Comparison::Strict,
        }
    }
}

/// One `(ε, δ)` inverse-shadowing question about a system.
#[derive(Debug, Clone)]
pub struct ISQuery<'a> {
    pub system: &'a SystemMap,
    pub eps: Distance,
    pub delta: Distance,
    pub horizon: Horizon,
    pub mode: Mode,
    pub class: MethodClass,
    pub config: DeciderConfig,
}

impl<'a> ISQuery<'a> {
    pub fn new(
        system: &'a SystemMap,
        eps: f64,
        delta: f64,
        horizon: Horizon,
        mode: Mode,
        class: MethodClass,
    ) -> Result<Self, DecideError> {
        let eps = Distance::new(eps)?;
        let delta = Distance::new(delta)?;
        if eps.get() <= 0.0 {
            return Err(DecideError::InvalidQuery("eps must be positive".into()));
        }
        if delta.get() <= 0.0 {
            return Err(DecideError::InvalidQuery("delta must be positive".into()));
        }
        if horizon == Horizon::Finite(0) {
            return Err(DecideError::InvalidQuery("horizon must be at least 1".into()));
        }
        if mode == Mode::BiInfinite && !system.is_bijective() {
            return Err(DecideError::InvalidQuery(
                "bi-infinite mode requires a bijective system".into(),
            ));
        }
        Ok(ISQuery {
            system,
            eps,
            delta,
            horizon,
            mode,
            class,
            config: DeciderConfig::default(),
        })
    }

    pub fn with_config(mut self, config: DeciderConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_cap(mut self, cap: Option<u64>) -> Self {
        self.config.cap = cap;
        self
    }

    pub(crate) fn cap_for_period(&self, period: usize) -> u64 {
        self.config
            .cap
            .unwrap_or(4 * self.system.len() as u64 * period as u64)
            .max(1)
    }
}

/// Three-valued decision outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    True,
    False,
    Undetermined,
}

impl Outcome {
    pub fn is_true(self) -> bool {
        self == Outcome::True
    }

    /// Conjunction: any `False` wins, then any `Undetermined`.
    pub fn all<I: IntoIterator<Item = Outcome>>(outcomes: I) -> Outcome {
        let mut acc = Outcome::True;
        for o in outcomes {
            match o {
                Outcome::False => return Outcome::False,
                Outcome::Undetermined => acc = Outcome::Undetermined,
                Outcome::True => {}
            }
        }
        acc
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::True => "true",
            Outcome::False => "false",
            Outcome::Undetermined => "undetermined",
        })
    }
}

/// Largest horizon through which a tube containment holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TubeHorizon {
    /// Holds for `|k| <= n` and fails at `n + 1` (0 when even `k = 0` fails).
    Finite(u64),
    /// Proven for every `k` by a detected repeat.
    Infinite,
    /// Held for every `|k| <= cap` without a detected repeat.
    Undetermined(u64),
}

impl TubeHorizon {
    pub fn covers(self, horizon: Horizon) -> bool {
        match (self, horizon) {
            (TubeHorizon::Infinite, _) => true,
            (TubeHorizon::Finite(n) | TubeHorizon::Undetermined(n), Horizon::Finite(h)) => n >= h,
            (_, Horizon::Full) => false,
        }
    }

    /// Order used to pick the best candidate: finite values, then undetermined, then infinite.
    pub(crate) fn rank(self) -> (u8, u64) {
        match self {
            TubeHorizon::Finite(n) => (0, n),
            TubeHorizon::Undetermined(n) => (1, n),
            TubeHorizon::Infinite => (2, 0),
        }
    }

    /// Combination for two constraints that must both hold.
    pub(crate) fn meet(self, other: TubeHorizon) -> TubeHorizon {
        match (self, other) {
            (TubeHorizon::Finite(a), TubeHorizon::Finite(b)) => TubeHorizon::Finite(a.min(b)),
            (TubeHorizon::Finite(a), _) | (_, TubeHorizon::Finite(a)) => TubeHorizon::Finite(a),
            (TubeHorizon::Undetermined(a), TubeHorizon::Undetermined(b)) => {
                TubeHorizon::Undetermined(a.min(b))
            }
            (TubeHorizon::Undetermined(a), _) | (_, TubeHorizon::Undetermined(a)) => {
                TubeHorizon::Undetermined(a)
            }
            (TubeHorizon::Infinite, TubeHorizon::Infinite) => TubeHorizon::Infinite,
        }
    }
}

impl fmt::Display for TubeHorizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TubeHorizon::Finite(n) => write!(f, "{n}"),
            TubeHorizon::Infinite => write!(f, "inf"),
            TubeHorizon::Undetermined(c) => write!(f, "undetermined({c})"),
        }
    }
}

impl Serialize for TubeHorizon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TubeHorizon::Finite(n) => s.serialize_u64(*n),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TubeCheck {
    pub ok: bool,
    /// Smallest violated `|k|`, signed (negative for backward times).
    pub fail_index: Option<i64>,
}

/// A δ-pseudo-orbit segment that leaves the ε-tube at `fail_index`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    /// The witness candidate the segment refutes.
    pub candidate: Point,
    pub fail_index: i64,
    pub path: TimedPath,
    /// For `Th` decisions, the admissible bijection generating the path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bijection: Option<Vec<Point>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateHorizon {
    pub y: Point,
    pub horizon: TubeHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub x: Point,
    pub outcome: Outcome,
    pub witness: Option<Point>,
    /// `N*(x)`: best horizon over all candidates. Absent for weak decisions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_horizon: Option<TubeHorizon>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateHorizon>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Plain,
    Robust,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ISVerdict {
    pub kind: DecisionKind,
    pub class: MethodClass,
    pub mode: Mode,
    pub eps: Distance,
    pub delta: Distance,
    pub horizon: Horizon,
    pub overall: Outcome,
    pub points: Vec<PointVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl ISVerdict {
    pub fn witness(&self, x: Point) -> Option<Point> {
        self.points.get(x).and_then(|p| p.witness)
    }

    /// `min_x N*(x)` under the candidate ordering (finite < undetermined < inf).
    pub fn min_tube_horizon(&self) -> Option<TubeHorizon> {
        self.points
            .iter()
            .filter_map(|p| p.tube_horizon)
            .min_by_key(|h| h.rank())
    }

    pub fn witness_count(&self) -> usize {
        self.points.iter().filter(|p| p.witness.is_some()).count()
    }
}
