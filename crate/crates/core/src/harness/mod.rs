//! Executable theorem suites.
//!
//! Each suite sweeps a parameter grid and checks a finite quantitative form
//! of one theorem on every cell. Cells end up PASS, FAIL, SKIP (hypothesis
//! unmet) or UNDETERMINED (a stabilization cap or enumeration limit was
//! hit). Every FAIL carries certificates that [`Certificate::revalidate`]
//! can check from the system alone.

mod certificate;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::deciders::{DecideError, DeciderConfig, Horizon, MethodClass, Mode};
use crate::graph::GraphError;
use crate::properties::PropertyError;
use crate::system::{make_zoo_system, SystemMap, ZooFamily};

pub use certificate::{Certificate, Claim, Invalid};
pub use suites::{
    suite_equicontinuity, suite_finite_eq_full, suite_minimal_iff_weak_is,
    suite_not_eventually_sensitive, suite_periodic_expansive_remark, suite_reform,
    suite_reform_ctd, suite_reform_weak,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error("invalid grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TheoremId {
    Reform,
    ReformCtd,
    ReformWeak,
    NotEvSens,
    MinimalIffWis,
    Equicont,
    FiniteEqFull,
    PeriodicExpansiveRemark,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::Reform,
        TheoremId::ReformCtd,
        TheoremId::ReformWeak,
        TheoremId::NotEvSens,
        TheoremId::MinimalIffWis,
        TheoremId::Equicont,
        TheoremId::FiniteEqFull,
        TheoremId::PeriodicExpansiveRemark,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Reform => "REFORM",
            TheoremId::ReformCtd => "REFORM_CTD",
            TheoremId::ReformWeak => "REFORM_WEAK",
            TheoremId::NotEvSens => "NOT_EV_SENS",
            TheoremId::MinimalIffWis => "MINIMAL_IFF_WIS",
            TheoremId::Equicont => "EQUICONT",
            TheoremId::FiniteEqFull => "FINITE_EQ_FULL",
            TheoremId::PeriodicExpansiveRemark => "PERIODIC_EXPANSIVE_REMARK",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.to_ascii_uppercase().replace('-', "_");
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == up)
            .ok_or_else(|| format!("unknown theorem `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CellStatus {
    Pass,
    Fail,
    Skip,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SuiteVerdict {
    Pass,
    Fail,
    Undetermined,
}

impl fmt::Display for SuiteVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteVerdict::Pass => "PASS",
            SuiteVerdict::Fail => "FAIL",
            SuiteVerdict::Undetermined => "UNDETERMINED",
        })
    }
}

/// Parameters of one grid cell; absent fields do not apply to the suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CellParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Horizon>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<MethodClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub system: String,
    #[serde(flatten)]
    pub params: CellParams,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
    pub undetermined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub horizons: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremSuiteResult {
    pub theorem: TheoremId,
    /// The finite form that the suite checks.
    pub form: &'static str,
    pub systems: Vec<String>,
    pub grid: GridSummary,
    pub verdict: SuiteVerdict,
    pub counts: Counts,
    /// Fraction of cells that are not SKIP.
    pub coverage: f64,
    pub cells: Vec<Cell>,
}

impl TheoremSuiteResult {
    pub(crate) fn from_cells(
        theorem: TheoremId,
        form: &'static str,
        systems: Vec<String>,
        grid: GridSummary,
        cells: Vec<Cell>,
    ) -> Self {
        let mut counts = Counts::default();
        for c in &cells {
            match c.status {
                CellStatus::Pass => counts.pass += 1,
                CellStatus::Fail => counts.fail += 1,
                CellStatus::Skip => counts.skip += 1,
                CellStatus::Undetermined => counts.undetermined += 1,
            }
        }
        let verdict = if counts.fail > 0 {
            SuiteVerdict::Fail
        } else if counts.undetermined > 0 {
            SuiteVerdict::Undetermined
        } else {
            SuiteVerdict::Pass
        };
        let coverage = if cells.is_empty() {
            0.0
        } else {
            (cells.len() - counts.skip) as f64 / cells.len() as f64
        };
        TheoremSuiteResult { theorem, form, systems, grid, verdict, counts, coverage, cells }
    }

    /// Revalidates every certificate on every FAIL cell. Returns the
    /// `(cell index, error)` pairs that did not check out.
    pub fn revalidate(&self, systems: &[SystemMap]) -> Vec<(usize, Invalid)> {
        let mut bad = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.status != CellStatus::Fail {
                continue;
            }
            let Some(sys) = systems.iter().find(|s| s.name() == cell.system) else {
                bad.push((i, Invalid(format!("system {} not supplied", cell.system))));
                continue;
            };
            if cell.certificates.is_empty() {
                bad.push((i, Invalid("FAIL cell without a certificate".into())));
            }
            for c in &cell.certificates {
                if let Err(e) = c.revalidate(sys) {
                    bad.push((i, e));
                }
            }
        }
        bad
    }
}

/// Systems and thresholds swept by the suites.
#[derive(Debug, Clone)]
pub struct Grid {
    pub systems: Vec<SystemMap>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub horizons: Vec<u64>,
    /// Sizes `n` of the `rotation(n, 1)` fixtures for the periodic-orbit remark.
    pub rotation_sizes: Vec<usize>,
}

impl Grid {
    pub fn default_systems() -> Vec<SystemMap> {
        [
            ZooFamily::Rotation { n: 8, shift: 1 },
            ZooFamily::Rotation { n: 9, shift: 1 },
            ZooFamily::Doubling { n: 9 },
            ZooFamily::SwapPair { gap: 0.5 },
            ZooFamily::TwoFixedPoints { gap: 1.0 },
            ZooFamily::Identity { n: 1 },
        ]
        .iter()
        .map(|f| make_zoo_system(f).expect("zoo parameters are valid"))
        .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let sorted_positive = |v: &[f64]| {
            !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0) && v.windows(2).all(|w| w[0] < w[1])
        };
        if self.systems.is_empty() {
            return Err(HarnessError::Grid("no systems".into()));
        }
        if !sorted_positive(&self.eps) || !sorted_positive(&self.delta) {
            return Err(HarnessError::Grid("eps and delta grids must be nonempty, positive and increasing".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Grid("horizons must be nonempty, positive and increasing".into()));
        }
        let mut names: Vec<&str> = self.systems.iter().map(|s| s.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Grid("system names must be distinct".into()));
        }
        Ok(())
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary { eps: self.eps.clone(), delta: self.delta.clone(), horizons: self.horizons.clone() }
    }

    pub(crate) fn names(&self) -> Vec<String> {
        self.systems.iter().map(|s| s.name().to_string()).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            systems: Grid::default_systems(),
            eps: vec![0.15, 0.2, 0.3],
            delta: vec![0.1, 0.12, 0.13],
            horizons: (1..=5).collect(),
            rotation_sizes: vec![1, 2, 3, 5, 8, 9],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub grid: Grid,
    /// Passed to every decider call; the oracles and certificate checks ignore it.
    pub config: DeciderConfig,
}

impl SuiteOptions {
    /// Every system a suite result can refer to, for [`TheoremSuiteResult::revalidate`].
    pub fn fixture_systems(&self) -> Vec<SystemMap> {
        let mut all = self.grid.systems.clone();
        for s in suites::rotation_fixtures(&self.grid.rotation_sizes) {
            if all.iter().all(|t| t.name() != s.name()) {
                all.push(s);
            }
        }
        all
    }
}

pub fn run_suite(id: TheoremId, options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    options.grid.validate()?;
    match id {
        TheoremId::Reform => suite_reform(options),
        TheoremId::ReformCtd => suite_reform_ctd(options),
        TheoremId::ReformWeak => suite_reform_weak(options),
        TheoremId::NotEvSens => suite_not_eventually_sensitive(options),
        TheoremId::MinimalIffWis => suite_minimal_iff_weak_is(options),
        TheoremId::Equicont => suite_equicontinuity(options),
        TheoremId::FiniteEqFull => suite_finite_eq_full(options),
        TheoremId::PeriodicExpansiveRemark => suite_periodic_expansive_remark(options),
    }
}

/// All suites, in [`TheoremId::ALL`] order.
pub fn run_all(options: &SuiteOptions) -> Result<Vec<TheoremSuiteResult>, HarnessError> {
    TheoremId::ALL.into_iter().map(|id| run_suite(id, options)).collect()
}
