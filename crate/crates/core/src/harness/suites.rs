//! The eight theorem suites.
//!
//! When a cell's check fails, the harness recomputes the decider claims
//! involved with strict reference code. A claim that does not survive
//! becomes a `DeciderFault` certificate. If every claim survives, the cell
//! gets a `Counterexample` built from the confirmed hypotheses and the
//! observed violation.

use std::collections::BTreeMap;

use crate::deciders::oracle::DEFAULT_PATH_BUDGET;
use crate::deciders::{
    decide, decide_robust_is, decide_t0_is, decide_weak_is, oracle_find_escape, reference_tube,
    tube_ok_from, Horizon, ISQuery, ISVerdict, MethodClass, Mode, Outcome, PointVerdict, TubeHorizon,
};
use crate::graph::{build_graph, build_graph_with, TimedPath};
use crate::metric::Point;
use crate::pointset::PointSet;
use crate::properties::{
    equicontinuity_modulus, eventual_sensitivity_modulus, expansivity_constant, minimality_defect,
};
use crate::system::{make_zoo_system, SystemMap, ZooFamily};

use super::certificate::{find_bijection_escape, find_weak_escape, Certificate, Claim};
use super::{Cell, CellParams, CellStatus, HarnessError, SuiteOptions, TheoremId, TheoremSuiteResult};

const MAX_CERTIFICATES: usize = 4;
const MAX_NOTES: usize = 4;

struct CellBuilder {
    system: String,
    params: CellParams,
    certificates: Vec<Certificate>,
    notes: Vec<String>,
    failures: usize,
    undetermined: bool,
    skip: bool,
}

impl CellBuilder {
    fn new(system: &SystemMap, params: CellParams) -> Self {
        CellBuilder {
            system: system.name().to_string(),
            params,
            certificates: Vec::new(),
            notes: Vec::new(),
            failures: 0,
            undetermined: false,
            skip: false,
        }
    }

    fn note(&mut self, note: impl Into<String>) {
        if self.notes.len() < MAX_NOTES {
            self.notes.push(note.into());
        }
    }

    fn fail(&mut self, note: impl Into<String>, certificate: Certificate) {
        if self.failures < MAX_CERTIFICATES {
            self.note(note);
            self.certificates.push(certificate);
        }
        self.failures += 1;
    }

    fn undetermined(&mut self, note: impl Into<String>) {
        self.undetermined = true;
        self.note(note);
    }

    fn skip(&mut self, note: impl Into<String>) {
        self.skip = true;
        self.note(note);
    }

    fn finish(mut self) -> Cell {
        let status = if self.failures > 0 {
            CellStatus::Fail
        } else if self.undetermined {
            CellStatus::Undetermined
        } else if self.skip {
            CellStatus::Skip
        } else {
            CellStatus::Pass
        };
        if self.failures > MAX_CERTIFICATES {
            self.notes.push(format!("{} failures in total", self.failures));
        }
        Cell {
            system: self.system,
            params: self.params,
            status,
            detail: self.notes.join("; "),
            certificates: self.certificates,
        }
    }
}

fn params(eps: f64, delta: f64, horizon: Option<Horizon>, mode: Option<Mode>, class: Option<MethodClass>) -> CellParams {
    CellParams { eps: Some(eps), delta: Some(delta), horizon, mode, class }
}

fn modes(system: &SystemMap) -> Vec<Mode> {
    if system.is_bijective() {
        vec![Mode::Positive, Mode::BiInfinite]
    } else {
        vec![Mode::Positive]
    }
}

fn query<'a>(
    options: &SuiteOptions,
    system: &'a SystemMap,
    eps: f64,
    delta: f64,
    horizon: Horizon,
    mode: Mode,
    class: MethodClass,
) -> Result<ISQuery<'a>, HarnessError> {
    Ok(ISQuery::new(system, eps, delta, horizon, mode, class)?.with_config(options.config))
}

fn iterate(system: &SystemMap, p: Point, k: u64) -> Point {
    (0..k).fold(p, |q, _| system.apply(q))
}

fn strict_ball(system: &SystemMap, c: Point, r: f64) -> Vec<Point> {
    system.space().points().filter(|&p| system.space().dist(c, p) < r).collect()
}

fn start_for(system: &SystemMap, y: Point, delta: f64, robust: bool) -> Vec<Point> {
    if robust {
        strict_ball(system, y, delta)
    } else {
        vec![y]
    }
}

/// Horizon up to which "holds forever" claims are rechecked.
fn full_bound(system: &SystemMap) -> u64 {
    let n = system.len() as u64;
    4 * n * n
}

fn bound_of(horizon: Horizon, system: &SystemMap) -> u64 {
    match horizon {
        Horizon::Finite(n) => n,
        Horizon::Full => full_bound(system),
    }
}

fn claim_horizon(horizon: Horizon) -> Option<u64> {
    match horizon {
        Horizon::Finite(n) => Some(n),
        Horizon::Full => None,
    }
}

fn fault(statement: String, holds: bool, horizon: Option<u64>, evidence: Certificate) -> Certificate {
    Certificate::DeciderFault { claim: Claim { statement, holds, horizon }, evidence: Box::new(evidence) }
}

/// The parameters a per-point claim refers to.
#[derive(Clone, Copy)]
struct Setting<'a> {
    system: &'a SystemMap,
    eps: f64,
    delta: f64,
    mode: Mode,
}

impl<'a> Setting<'a> {
    fn of(system: &'a SystemMap, v: &ISVerdict) -> Self {
        Setting { system, eps: v.eps.get(), delta: v.delta.get(), mode: v.mode }
    }

    /// Strict evidence against "`start` keeps `x` in the tube through `horizon`".
    fn refute_holds(&self, x: Point, start: &[Point], horizon: Horizon) -> Result<Option<Certificate>, HarnessError> {
        let bound = bound_of(horizon, self.system);
        let escape = reference_tube(self.system, x, start, self.eps, self.delta, bound as usize, self.mode)?;
        Ok(escape.map(|path| {
            fault(
                format!("start {start:?} keeps {x} in the tube through {horizon}"),
                true,
                claim_horizon(horizon),
                Certificate::TubeEscape { x, eps: self.eps, delta: self.delta, start: start.to_vec(), path },
            )
        }))
    }

    /// Strict evidence against "`start` leaves the tube around `x` by `|k| = at`".
    fn refute_fails(&self, x: Point, start: &[Point], at: u64) -> Result<Option<Certificate>, HarnessError> {
        let escape = reference_tube(self.system, x, start, self.eps, self.delta, at as usize, self.mode)?;
        Ok(escape.is_none().then(|| {
            fault(
                format!("start {start:?} leaves the tube around {x} by |k| = {at}"),
                false,
                Some(at),
                Certificate::TubeContained {
                    x,
                    eps: self.eps,
                    delta: self.delta,
                    start: start.to_vec(),
                    horizon: at,
                    mode: self.mode,
                },
            )
        }))
    }

    fn refute_th_holds(&self, x: Point, y: Point, horizon: Horizon) -> Option<Certificate> {
        find_bijection_escape(self.system, x, y, self.eps, self.delta, claim_horizon(horizon), self.mode).map(
            |(h, time)| {
                fault(
                    format!("every admissible bijection keeps {y} near the orbit of {x} through {horizon}"),
                    true,
                    claim_horizon(horizon),
                    Certificate::BijectionEscape { x, y, eps: self.eps, delta: self.delta, h, time },
                )
            },
        )
    }

    fn refute_th_fails(&self, x: Point, y: Point, at: u64) -> Option<Certificate> {
        find_bijection_escape(self.system, x, y, self.eps, self.delta, Some(at), self.mode)
            .is_none()
            .then(|| {
                fault(
                    format!("some admissible bijection moves {y} out of the tube around {x} by |k| = {at}"),
                    false,
                    Some(at),
                    Certificate::BijectionContained {
                        x,
                        y,
                        eps: self.eps,
                        delta: self.delta,
                        horizon: Some(at),
                        mode: self.mode,
                    },
                )
            })
    }

    fn refute_class_holds(&self, class: MethodClass, x: Point, start: &[Point], horizon: Horizon) -> Result<Option<Certificate>, HarnessError> {
        match class {
            MethodClass::T0 => self.refute_holds(x, start, horizon),
            MethodClass::Th => Ok(self.refute_th_holds(x, start[0], horizon)),
        }
    }

    fn refute_class_fails(&self, class: MethodClass, x: Point, start: &[Point], at: u64) -> Result<Option<Certificate>, HarnessError> {
        match class {
            MethodClass::T0 => self.refute_fails(x, start, at),
            MethodClass::Th => Ok(self.refute_th_fails(x, start[0], at)),
        }
    }
}

/// Rechecks one point verdict: the witness if there is one, otherwise every
/// candidate's claimed failure.
fn audit_point(
    setting: Setting<'_>,
    v: &ISVerdict,
    p: &PointVerdict,
    robust: bool,
) -> Result<Option<Certificate>, HarnessError> {
    let sys = setting.system;
    match (p.outcome, p.witness) {
        (Outcome::True, Some(y)) => {
            setting.refute_class_holds(v.class, p.x, &start_for(sys, y, setting.delta, robust), v.horizon)
        }
        (Outcome::False, _) => {
            for c in &p.candidates {
                if let TubeHorizon::Finite(m) = c.horizon {
                    let start = start_for(sys, c.y, setting.delta, robust);
                    if let Some(cert) = setting.refute_class_fails(v.class, p.x, &start, m + 1)? {
                        return Ok(Some(cert));
                    }
                }
            }
            Ok(None)
        }
        _ => Ok(None),
    }
}

fn audit_verdict(system: &SystemMap, v: &ISVerdict, robust: bool) -> Result<Option<Certificate>, HarnessError> {
    let setting = Setting::of(system, v);
    for p in &v.points {
        if let Some(c) = audit_point(setting, v, p, robust)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Witness containment for `x`, rechecked to `horizon`, as a hypothesis.
fn contained(setting: Setting<'_>, x: Point, y: Point, horizon: u64) -> Certificate {
    Certificate::TubeContained {
        x,
        eps: setting.eps,
        delta: setting.delta,
        start: vec![y],
        horizon,
        mode: setting.mode,
    }
}

fn finish(
    theorem: TheoremId,
    form: &'static str,
    options: &SuiteOptions,
    systems: Vec<String>,
    builders: Vec<CellBuilder>,
) -> TheoremSuiteResult {
    let cells = builders.into_iter().map(CellBuilder::finish).collect();
    TheoremSuiteResult::from_cells(theorem, form, systems, options.grid.summary(), cells)
}

const FORM_REFORM: &str = "for every (x, y) and |k| <= N, level-set tube containment agrees with exhaustive \
enumeration of strict δ-pseudo-orbit segments; the decided verdict per x agrees with the enumeration; \
verdicts are monotone in ε and δ";
const FORM_REFORM_CTD: &str = "containment from the ball B_δ(y) agrees with enumeration from every start in \
the ball; the ball-witness verdict per x agrees with the enumeration; ball witnesses are point witnesses";

pub fn suite_reform(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    reform_like(options, false)
}

pub fn suite_reform_ctd(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    reform_like(options, true)
}

/// (system, mode, horizon, ε index, δ index)
type VerdictKey = (usize, usize, u64, usize, usize);
/// Cell index and per-point (outcome, witness).
type CellOutcomes = (usize, Vec<(Outcome, Option<Point>)>);

fn reform_like(options: &SuiteOptions, robust: bool) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mut builders = Vec::new();
    let mut table: BTreeMap<VerdictKey, CellOutcomes> = BTreeMap::new();

    for (si, sys) in grid.systems.iter().enumerate() {
        let n = sys.len();
        for (mi, &mode) in modes(sys).iter().enumerate() {
            for &hn in &grid.horizons {
                for (ei, &eps) in grid.eps.iter().enumerate() {
                    for (di, &delta) in grid.delta.iter().enumerate() {
                        let horizon = Horizon::Finite(hn);
                        let mut cell = CellBuilder::new(sys, params(eps, delta, Some(horizon), Some(mode), None));
                        let setting = Setting { system: sys, eps, delta, mode };
                        let graph = build_graph_with(sys, delta, options.config.edges)?;

                        let mut escapes: Vec<Vec<Option<TimedPath>>> = vec![vec![None; n]; n];
                        let mut ok = vec![vec![false; n]; n];
                        for x in 0..n {
                            for y in 0..n {
                                let start = start_for(sys, y, delta, robust);
                                let esc = oracle_find_escape(sys, x, &start, eps, delta, hn as usize, mode, DEFAULT_PATH_BUDGET)?;
                                ok[x][y] = esc.is_none();
                                let set = PointSet::from_points(n, start.iter().copied());
                                let tube = tube_ok_from(&graph, x, &set, eps, hn, mode)?;
                                if tube.ok != ok[x][y] {
                                    let statement = format!("tube check from {start:?} for {x} through {hn}");
                                    let cert = match &esc {
                                        Some(path) => fault(
                                            statement,
                                            true,
                                            Some(hn),
                                            Certificate::TubeEscape { x, eps, delta, start: start.clone(), path: path.clone() },
                                        ),
                                        None => fault(
                                            statement,
                                            false,
                                            tube.fail_index.map(i64::unsigned_abs),
                                            contained_from(setting, x, &start, hn),
                                        ),
                                    };
                                    cell.fail(format!("tube check and enumeration disagree at x={x}, y={y}"), cert);
                                }
                                escapes[x][y] = esc;
                            }
                        }

                        let q = query(options, sys, eps, delta, horizon, mode, MethodClass::T0)?;
                        let v = if robust { decide_robust_is(&q)? } else { decide_t0_is(&q)? };
                        for p in &v.points {
                            let x = p.x;
                            match (p.outcome, p.witness) {
                                (Outcome::True, Some(y)) if !ok[x][y] => {
                                    let start = start_for(sys, y, delta, robust);
                                    let path = escapes[x][y].clone().expect("enumeration found an escape");
                                    cell.fail(
                                        format!("decider reports witness {y} for {x}, enumeration refutes it"),
                                        fault(
                                            format!("{y} witnesses {x} through {hn}"),
                                            true,
                                            Some(hn),
                                            Certificate::TubeEscape { x, eps, delta, start, path },
                                        ),
                                    );
                                }
                                (Outcome::False, _) => {
                                    if let Some(y) = (0..n).find(|&y| ok[x][y]) {
                                        let start = start_for(sys, y, delta, robust);
                                        cell.fail(
                                            format!("decider finds no witness for {x}, enumeration accepts {y}"),
                                            fault(
                                                format!("no witness for {x} through {hn}"),
                                                false,
                                                Some(hn),
                                                contained_from(setting, x, &start, hn),
                                            ),
                                        );
                                    }
                                }
                                (Outcome::Undetermined, _) => cell.undetermined(format!("x={x} undetermined")),
                                _ => {}
                            }
                        }

                        if robust {
                            let plain = decide_t0_is(&query(options, sys, eps, delta, horizon, mode, MethodClass::T0)?)?;
                            for (rp, pp) in v.points.iter().zip(&plain.points) {
                                if let (Outcome::True, Some(y), Outcome::False) = (rp.outcome, rp.witness, pp.outcome) {
                                    let x = rp.x;
                                    let cert = match setting.refute_holds(x, &start_for(sys, y, delta, true), horizon)? {
                                        Some(c) => c,
                                        None => fault(
                                            format!("no point witness for {x} through {hn}"),
                                            false,
                                            Some(hn),
                                            contained(setting, x, y, hn),
                                        ),
                                    };
                                    cell.fail(format!("ball witness {y} for {x} is not a point witness"), cert);
                                }
                            }
                        }

                        let outs = v.points.iter().map(|p| (p.outcome, p.witness)).collect();
                        table.insert((si, mi, hn, ei, di), (builders.len(), outs));
                        builders.push(cell);
                    }
                }
            }
        }
    }

    // true at ε stays true at larger ε; true at δ stays true at smaller δ
    for (&(si, mi, hn, ei, di), (ci, outs)) in &table {
        let sys = &grid.systems[si];
        let mode = modes(sys)[mi];
        let (eps, delta) = (grid.eps[ei], grid.delta[di]);
        let neighbours = [((si, mi, hn, ei + 1, di), grid.eps.get(ei + 1).map(|&e| (e, delta))), (
            (si, mi, hn, ei, di.wrapping_sub(1)),
            di.checked_sub(1).map(|d| (eps, grid.delta[d])),
        )];
        for (key, target) in neighbours {
            let (Some((cj, other)), Some((eps2, delta2))) = (table.get(&key), target) else {
                continue;
            };
            for (x, (&(out, wit), &(out2, _))) in outs.iter().zip(other).enumerate() {
                let (Outcome::True, Some(y), Outcome::False) = (out, wit, out2) else {
                    continue;
                };
                let there = Setting { system: sys, eps: eps2, delta: delta2, mode };
                let start2 = start_for(sys, y, delta2, robust);
                if let Some(c) = there.refute_fails(x, &start2, hn)? {
                    builders[*cj].fail(
                        format!("{x} has witness {y} at (ε={eps}, δ={delta}) but none here"),
                        recheck_claim(c, format!("no witness for {x} through {hn}")),
                    );
                } else {
                    let here = Setting { system: sys, eps, delta, mode };
                    let c = here
                        .refute_holds(x, &start_for(sys, y, delta, robust), Horizon::Finite(hn))?
                        .expect("a contained start at the neighbouring cell would have been found");
                    builders[*ci].fail(format!("witness {y} for {x} does not carry over to (ε={eps2}, δ={delta2})"), c);
                }
            }
        }
    }

    let (theorem, form) = if robust {
        (TheoremId::ReformCtd, FORM_REFORM_CTD)
    } else {
        (TheoremId::Reform, FORM_REFORM)
    };
    Ok(finish(theorem, form, options, grid.names(), builders))
}

fn contained_from(setting: Setting<'_>, x: Point, start: &[Point], horizon: u64) -> Certificate {
    Certificate::TubeContained {
        x,
        eps: setting.eps,
        delta: setting.delta,
        start: start.to_vec(),
        horizon,
        mode: setting.mode,
    }
}

fn recheck_claim(c: Certificate, statement: String) -> Certificate {
    match c {
        Certificate::DeciderFault { mut claim, evidence } => {
            claim.statement = statement;
            Certificate::DeciderFault { claim, evidence }
        }
        other => other,
    }
}

const FORM_REFORM_WEAK: &str = "the weak verdict per x agrees with an independent search for y whose strict \
δ-chain cone stays in B_ε(Orb(x)); every full-horizon T0 witness is a weak witness";

pub fn suite_reform_weak(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mut builders = Vec::new();
    for sys in &grid.systems {
        let n = sys.len();
        for mode in modes(sys) {
            for &eps in &grid.eps {
                for &delta in &grid.delta {
                    let mut cell = CellBuilder::new(sys, params(eps, delta, None, Some(mode), None));
                    let weak = decide_weak_is(&query(options, sys, eps, delta, Horizon::Full, mode, MethodClass::T0)?)?;
                    let strong = decide_t0_is(&query(options, sys, eps, delta, Horizon::Full, mode, MethodClass::T0)?)?;
                    for (wp, sp) in weak.points.iter().zip(&strong.points) {
                        let x = wp.x;
                        match (wp.outcome, wp.witness) {
                            (Outcome::True, Some(y)) => {
                                if let Some(path) = find_weak_escape(sys, x, y, eps, delta, mode) {
                                    cell.fail(
                                        format!("weak witness {y} for {x} is refuted"),
                                        fault(
                                            format!("{y} is a weak witness for {x}"),
                                            true,
                                            None,
                                            Certificate::WeakEscape { x, y, eps, delta, path },
                                        ),
                                    );
                                }
                            }
                            (Outcome::False, _) => {
                                if let Some(y) = (0..n).find(|&y| find_weak_escape(sys, x, y, eps, delta, mode).is_none()) {
                                    cell.fail(
                                        format!("no weak witness reported for {x}, but {y} is one"),
                                        fault(
                                            format!("no weak witness for {x}"),
                                            false,
                                            None,
                                            Certificate::WeakContained { x, y, eps, delta, mode },
                                        ),
                                    );
                                }
                            }
                            _ => cell.undetermined(format!("weak verdict for {x} undetermined")),
                        }
                        if let (Outcome::True, Some(y0), Outcome::False) = (sp.outcome, sp.witness, wp.outcome) {
                            let cert = match find_weak_escape(sys, x, y0, eps, delta, mode) {
                                None => fault(
                                    format!("no weak witness for {x}"),
                                    false,
                                    None,
                                    Certificate::WeakContained { x, y: y0, eps, delta, mode },
                                ),
                                Some(path) => fault(
                                    format!("{y0} witnesses {x} for all times"),
                                    true,
                                    None,
                                    Certificate::TubeEscape { x, eps, delta, start: vec![y0], path },
                                ),
                            };
                            cell.fail(format!("full witness {y0} for {x} is not a weak witness"), cert);
                        }
                        if sp.outcome == Outcome::Undetermined {
                            cell.note(format!("full-horizon verdict for {x} undetermined; inclusion check skipped"));
                        }
                    }
                    builders.push(cell);
                }
            }
        }
    }
    Ok(finish(TheoremId::ReformWeak, FORM_REFORM_WEAK, options, grid.names(), builders))
}

const FORM_NOT_EV_SENS: &str = "for every witness y verified through horizon M and all n, k with \
n + k + 1 <= M, every z ∈ B_δ(f^{n+1}(y)) has d(f^k(z), f^{n+k+1}(y)) < 2ε (for the full horizon, all n \
and k up to the pair period); if eventual_sensitivity_modulus(δ, N) >= 2ε then the verdict is false at \
horizons N and N+1, and at the full horizon for the largest grid N";

/// A triple violating the 2ε bound for witness `y`, over `n + k + 1 <= total`
/// (or exhaustively when `total` is `None`).
fn separation_triple(system: &SystemMap, y: Point, eps: f64, delta: f64, total: Option<u64>) -> Option<(u64, u64, Point)> {
    let npts = system.len() as u64;
    let d = |a, b| system.space().dist(a, b);
    let n_range = match total {
        Some(t) => 0..t,
        None => 0..npts,
    };
    for n in n_range {
        let w = iterate(system, y, n + 1);
        let k_max = match total {
            Some(t) => t - n - 1,
            None => npts * npts,
        };
        for z in strict_ball(system, w, delta) {
            let (mut a, mut b) = (z, w);
            for k in 0..=k_max {
                if d(a, b) >= 2.0 * eps {
                    return Some((n, k, z));
                }
                a = system.apply(a);
                b = system.apply(b);
            }
        }
    }
    None
}

/// For every point a triple realizing eventual separation `>= bound` at resolution `eta`.
fn eventual_triples(system: &SystemMap, eta: f64, horizon: u64, bound: f64) -> Option<Vec<(Point, u64, u64, Point)>> {
    let d = |a, b| system.space().dist(a, b);
    system
        .space()
        .points()
        .map(|x| {
            (0..=horizon).find_map(|n| {
                let fnx = iterate(system, x, n);
                strict_ball(system, fnx, eta).into_iter().find_map(|y| {
                    (0..=horizon - n)
                        .find(|&k| d(iterate(system, fnx, k), iterate(system, y, k)) >= bound)
                        .map(|k| (x, n, k, y))
                })
            })
        })
        .collect()
}

pub fn suite_not_eventually_sensitive(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mode = Mode::Positive;
    let max_n = *grid.horizons.last().expect("validated");
    let mut builders = Vec::new();
    for sys in &grid.systems {
        for &eps in &grid.eps {
            for &delta in &grid.delta {
                let setting = Setting { system: sys, eps, delta, mode };
                let horizons = grid.horizons.iter().map(|&h| Horizon::Finite(h)).chain([Horizon::Full]);
                for horizon in horizons {
                    let mut cell = CellBuilder::new(sys, params(eps, delta, Some(horizon), Some(mode), Some(MethodClass::T0)));
                    let v = decide_t0_is(&query(options, sys, eps, delta, horizon, mode, MethodClass::T0)?)?;
                    let modulus_at = match horizon {
                        Horizon::Finite(h) => h,
                        Horizon::Full => max_n,
                    };
                    let modulus = eventual_sensitivity_modulus(sys, delta, modulus_at as usize);
                    let sensitive = modulus >= 2.0 * eps;
                    if v.overall == Outcome::Undetermined {
                        cell.undetermined("full-horizon verdict undetermined");
                    } else if v.overall != Outcome::True && !sensitive {
                        cell.skip("no witnesses and eventual modulus below 2ε");
                    }

                    // 2ε bound on every witness
                    let total = claim_horizon(horizon);
                    for p in &v.points {
                        for c in p.candidates.iter().filter(|c| c.horizon.covers(horizon)) {
                            let y = c.y;
                            if let Some((n, k, z)) = separation_triple(sys, y, eps, delta, total) {
                                let triple = Certificate::SeparationTriple { y, n, k, z, eps, delta };
                                let span = n + k + 1;
                                let cert = match setting.refute_holds(p.x, &[y], horizon)? {
                                    Some(f) => f,
                                    None => Certificate::Counterexample {
                                        hypotheses: vec![contained(setting, p.x, y, span)],
                                        violation: Box::new(triple),
                                    },
                                };
                                cell.fail(format!("witness {y} for {} separates beyond 2ε", p.x), cert);
                            }
                        }
                    }

                    // contrapositive
                    if sensitive && v.overall != Outcome::Undetermined {
                        let triples = eventual_triples(sys, delta, modulus_at, 2.0 * eps)
                            .expect("modulus >= bound gives a triple for every point");
                        let separation = Certificate::EventualSeparation {
                            eta: delta,
                            horizon: modulus_at,
                            bound: 2.0 * eps,
                            triples,
                        };
                        let mut checks = vec![(horizon, v.clone())];
                        if let Horizon::Finite(h) = horizon {
                            let next = Horizon::Finite(h + 1);
                            checks.push((next, decide_t0_is(&query(options, sys, eps, delta, next, mode, MethodClass::T0)?)?));
                        }
                        for (h, verdict) in checks {
                            match verdict.overall {
                                Outcome::True => {
                                    let x = 0;
                                    let y = verdict.witness(x).expect("true verdict has witnesses");
                                    let cert = match setting.refute_holds(x, &[y], h)? {
                                        Some(f) => f,
                                        None => Certificate::Counterexample {
                                            hypotheses: vec![contained(setting, x, y, bound_of(h, sys))],
                                            violation: Box::new(separation.clone()),
                                        },
                                    };
                                    cell.fail(
                                        format!("eventual modulus {modulus:.6} >= 2ε yet the verdict at {h} is true"),
                                        cert,
                                    );
                                }
                                Outcome::Undetermined => cell.undetermined(format!("verdict at {h} undetermined")),
                                Outcome::False => {}
                            }
                        }
                    }
                    builders.push(cell);
                }
            }
        }
    }
    Ok(finish(TheoremId::NotEvSens, FORM_NOT_EV_SENS, options, grid.names(), builders))
}

const FORM_MINIMAL_IFF_WIS: &str = "on cells where the strict δ-graph is strongly connected, a weak witness for \
x forces minimality_defect(x) < ε; if every orbit is dense, every x has a weak witness; other cells are SKIP";

pub fn suite_minimal_iff_weak_is(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mut builders = Vec::new();
    for sys in &grid.systems {
        let defects = sys
            .space()
            .points()
            .map(|x| minimality_defect(sys, x))
            .collect::<Result<Vec<_>, _>>()
            .map_err(crate::properties::PropertyError::from)?;
        let minimal = defects.iter().all(|&d| d == 0.0);
        for mode in modes(sys) {
            for &eps in &grid.eps {
                for &delta in &grid.delta {
                    let mut cell = CellBuilder::new(sys, params(eps, delta, None, Some(mode), None));
                    let transitive = build_graph(sys, delta)?.is_chain_transitive();
                    if !transitive && !minimal {
                        cell.skip("δ-graph not strongly connected");
                        builders.push(cell);
                        continue;
                    }
                    let weak = decide_weak_is(&query(options, sys, eps, delta, Horizon::Full, mode, MethodClass::T0)?)?;
                    for p in &weak.points {
                        let x = p.x;
                        if let (true, Outcome::True, Some(y)) = (transitive, p.outcome, p.witness) {
                            if defects[x] >= eps {
                                let z = sys
                                    .space()
                                    .points()
                                    .find(|&z| {
                                        Certificate::OrbitGap { x, z, eps }.revalidate(sys).is_ok()
                                    })
                                    .expect("defect >= ε has a far point");
                                let cert = match find_weak_escape(sys, x, y, eps, delta, mode) {
                                    Some(path) => fault(
                                        format!("{y} is a weak witness for {x}"),
                                        true,
                                        None,
                                        Certificate::WeakEscape { x, y, eps, delta, path },
                                    ),
                                    None => Certificate::Counterexample {
                                        hypotheses: vec![
                                            Certificate::ChainTransitive { delta },
                                            Certificate::WeakContained { x, y, eps, delta, mode },
                                        ],
                                        violation: Box::new(Certificate::OrbitGap { x, z, eps }),
                                    },
                                };
                                cell.fail(format!("weak witness for {x} but its orbit misses {z} by ε"), cert);
                            }
                        }
                        if minimal && p.outcome != Outcome::True {
                            cell.fail(
                                format!("minimal system but no weak witness for {x}"),
                                fault(
                                    format!("no weak witness for {x}"),
                                    false,
                                    None,
                                    Certificate::WeakContained { x, y: x, eps, delta, mode },
                                ),
                            );
                        }
                    }
                    builders.push(cell);
                }
            }
        }
    }
    Ok(finish(TheoremId::MinimalIffWis, FORM_MINIMAL_IFF_WIS, options, grid.names(), builders))
}

const FORM_EQUICONT: &str = "strongly connected strict δ-graph and a true full-horizon T0 verdict imply \
equicontinuity_modulus(2ε, N) >= δ for every grid horizon N (2ε constant derived from the ball-witness \
form); other cells are SKIP";

pub fn suite_equicontinuity(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mode = Mode::Positive;
    let mut builders = Vec::new();
    for sys in &grid.systems {
        for &eps in &grid.eps {
            for &delta in &grid.delta {
                let mut cell = CellBuilder::new(sys, params(eps, delta, Some(Horizon::Full), Some(mode), Some(MethodClass::T0)));
                let setting = Setting { system: sys, eps, delta, mode };
                if !build_graph(sys, delta)?.is_chain_transitive() {
                    cell.skip("δ-graph not strongly connected");
                    builders.push(cell);
                    continue;
                }
                let v = decide_t0_is(&query(options, sys, eps, delta, Horizon::Full, mode, MethodClass::T0)?)?;
                match v.overall {
                    Outcome::Undetermined => cell.undetermined("full-horizon verdict undetermined"),
                    Outcome::False => cell.skip("no full-horizon inverse shadowing"),
                    Outcome::True => {
                        for &h in &grid.horizons {
                            let modulus = equicontinuity_modulus(sys, 2.0 * eps, h as usize);
                            if modulus >= delta {
                                continue;
                            }
                            let (x, y, n) = separating_pair(sys, delta, 2.0 * eps, h).expect("modulus < δ has a pair");
                            let violation = Certificate::PairSeparation { x, y, n, below: delta, threshold: 2.0 * eps };
                            let cert = match audit_verdict(sys, &v, false)? {
                                Some(f) => f,
                                None => {
                                    let bound = full_bound(sys);
                                    let wx = v.witness(x).expect("true verdict");
                                    let wy = v.witness(y).expect("true verdict");
                                    Certificate::Counterexample {
                                        hypotheses: vec![
                                            Certificate::ChainTransitive { delta },
                                            contained(setting, x, wx, bound),
                                            contained(setting, y, wy, bound),
                                        ],
                                        violation: Box::new(violation),
                                    }
                                }
                            };
                            cell.fail(format!("equicontinuity modulus {modulus:.6} < δ at N = {h}"), cert);
                            break;
                        }
                    }
                }
                builders.push(cell);
            }
        }
    }
    Ok(finish(TheoremId::Equicont, FORM_EQUICONT, options, grid.names(), builders))
}

fn separating_pair(system: &SystemMap, below: f64, threshold: f64, horizon: u64) -> Option<(Point, Point, u64)> {
    let n = system.len();
    let d = |a, b| system.space().dist(a, b);
    (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|&(x, y)| d(x, y) < below)
        .find_map(|(x, y)| {
            (0..=horizon)
                .find(|&k| d(iterate(system, x, k), iterate(system, y, k)) >= threshold)
                .map(|k| (x, y, k))
        })
}

const FORM_FINITE_EQ_FULL: &str = "per point, the full-horizon verdict is true iff the finite-horizon verdict \
is true for every N up to the stabilization cap, for classes T0 and Th in both modes; on Th cells every \
T0 witness is also a Th witness at the full horizon and at every grid horizon";

pub fn suite_finite_eq_full(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let mut builders = Vec::new();
    for sys in &grid.systems {
        let n = sys.len() as u64;
        let max_period = sys
            .space()
            .points()
            .map(|x| sys.orbit_trace(x, None).map(|t| t.period as u64))
            .collect::<Result<Vec<_>, _>>()
            .map_err(crate::deciders::DecideError::from)?
            .into_iter()
            .max()
            .unwrap_or(1);
        let cap = options.config.cap.unwrap_or(4 * n * max_period).max(1);
        for mode in modes(sys) {
            for class in [MethodClass::T0, MethodClass::Th] {
                for &eps in &grid.eps {
                    for &delta in &grid.delta {
                        let mut cell = CellBuilder::new(sys, params(eps, delta, Some(Horizon::Full), Some(mode), Some(class)));
                        let setting = Setting { system: sys, eps, delta, mode };
                        let full = decide(&query(options, sys, eps, delta, Horizon::Full, mode, class)?)?;
                        let finite: Vec<ISVerdict> = (1..=cap)
                            .map(|h| decide(&query(options, sys, eps, delta, Horizon::Finite(h), mode, class)?).map_err(HarnessError::from))
                            .collect::<Result<_, _>>()?;
                        for (i, fp) in full.points.iter().enumerate() {
                            let x = fp.x;
                            let first_false = finite.iter().position(|v| v.points[i].outcome == Outcome::False);
                            let any_undetermined = finite.iter().any(|v| v.points[i].outcome == Outcome::Undetermined);
                            match (fp.outcome, fp.witness, first_false) {
                                (Outcome::Undetermined, _, _) => cell.undetermined(format!("full verdict for {x} undetermined")),
                                (Outcome::True, Some(y), Some(j)) => {
                                    let h = j as u64 + 1;
                                    let cert = match setting.refute_class_holds(class, x, &[y], Horizon::Finite(h))? {
                                        Some(c) => recheck_claim(c, format!("{y} witnesses {x} for all times")),
                                        None => match setting.refute_class_fails(class, x, &[y], h)? {
                                            Some(c) => recheck_claim(c, format!("no witness for {x} through {h}")),
                                            None => unreachable!("containment through {h} both holds and fails"),
                                        },
                                    };
                                    let cert = match cert {
                                        Certificate::DeciderFault { claim, evidence } if claim.holds => {
                                            Certificate::DeciderFault { claim: Claim { horizon: None, ..claim }, evidence }
                                        }
                                        other => other,
                                    };
                                    cell.fail(format!("full witness {y} for {x} but finite verdict false at N = {h}"), cert);
                                }
                                (Outcome::False, _, None) if !any_undetermined => {
                                    let last = &finite[cap as usize - 1].points[i];
                                    let y = last.witness.expect("true verdict");
                                    let claimed = fp.candidates.iter().find(|c| c.y == y).map(|c| c.horizon);
                                    let cert = match claimed {
                                        Some(TubeHorizon::Finite(m)) => {
                                            match setting.refute_class_fails(class, x, &[y], m + 1)? {
                                                Some(c) => Some(c),
                                                None => setting.refute_class_holds(class, x, &[y], Horizon::Finite(cap))?,
                                            }
                                        }
                                        _ => setting.refute_class_holds(class, x, &[y], Horizon::Finite(cap))?,
                                    };
                                    match cert {
                                        Some(c) => cell.fail(
                                            format!("finite witnesses for {x} through N = {cap} but full verdict false"),
                                            c,
                                        ),
                                        None => cell.undetermined(format!("no contradiction found for {x} within the cap")),
                                    }
                                }
                                _ => {}
                            }
                            if any_undetermined {
                                cell.undetermined(format!("a finite verdict for {x} is undetermined"));
                            }
                        }

                        if class == MethodClass::Th {
                            let horizons = grid.horizons.iter().map(|&h| Horizon::Finite(h)).chain([Horizon::Full]);
                            for h in horizons {
                                let th = if h == Horizon::Full { full.clone() } else {
                                    finite.get(bound_of(h, sys) as usize - 1).cloned().map_or_else(
                                        || decide(&query(options, sys, eps, delta, h, mode, class)?).map_err(HarnessError::from),
                                        Ok,
                                    )?
                                };
                                let t0 = decide_t0_is(&query(options, sys, eps, delta, h, mode, MethodClass::T0)?)?;
                                for (tp, hp) in t0.points.iter().zip(&th.points) {
                                    let (Outcome::True, Some(y), Outcome::False) = (tp.outcome, tp.witness, hp.outcome) else {
                                        continue;
                                    };
                                    let x = tp.x;
                                    let at = bound_of(h, sys);
                                    let cert = match setting.refute_th_fails(x, y, at) {
                                        Some(c) => c,
                                        None => {
                                            let (perm, time) = find_bijection_escape(sys, x, y, eps, delta, Some(at), mode)
                                                .expect("containment refuted");
                                            fault(
                                                format!("{y} witnesses {x} through {h}"),
                                                true,
                                                claim_horizon(h),
                                                Certificate::TubeEscape { x, eps, delta, start: vec![y], path: h_orbit(&perm, y, time) },
                                            )
                                        }
                                    };
                                    cell.fail(format!("T0 witness {y} for {x} is not a Th witness at {h}"), cert);
                                }
                            }
                        }
                        builders.push(cell);
                    }
                }
            }
        }
    }
    Ok(finish(TheoremId::FiniteEqFull, FORM_FINITE_EQ_FULL, options, grid.names(), builders))
}

/// Orbit segment of the bijection `h` from `y` to signed time `time`, in time order.
fn h_orbit(h: &[Point], y: Point, time: i64) -> TimedPath {
    let step: Vec<Point> = if time >= 0 {
        h.to_vec()
    } else {
        let mut inv = vec![0; h.len()];
        for (i, &v) in h.iter().enumerate() {
            inv[v] = i;
        }
        inv
    };
    let mut pts = vec![y];
    for _ in 0..time.unsigned_abs() {
        pts.push(step[*pts.last().expect("nonempty")]);
    }
    if time < 0 {
        pts.reverse();
        TimedPath { start_time: time, points: pts }
    } else {
        TimedPath { start_time: 0, points: pts }
    }
}

const FORM_PERIODIC_EXPANSIVE: &str = "rotation(n, 1) has a true full-horizon T0 verdict at δ = 0.99·min_gap \
(δ = 1 for n = 1) for every grid ε, and expansivity_constant(N) >= min_gap for every grid N";

/// The `rotation(n, 1)` fixtures swept by the periodic-orbit suite.
pub(crate) fn rotation_fixtures(sizes: &[usize]) -> Vec<SystemMap> {
    sizes
        .iter()
        .map(|&n| make_zoo_system(&ZooFamily::Rotation { n, shift: 1 % n.max(1) }).expect("n >= 1"))
        .collect()
}

pub fn suite_periodic_expansive_remark(options: &SuiteOptions) -> Result<TheoremSuiteResult, HarnessError> {
    let grid = &options.grid;
    let fixtures = rotation_fixtures(&grid.rotation_sizes);
    let mode = Mode::Positive;
    let mut builders = Vec::new();
    for sys in &fixtures {
        let gap = sys.space().min_gap();
        let delta = if gap.is_finite() { 0.99 * gap } else { 1.0 };
        for &eps in &grid.eps {
            let mut cell = CellBuilder::new(sys, params(eps, delta, Some(Horizon::Full), Some(mode), Some(MethodClass::T0)));
            let v = decide_t0_is(&query(options, sys, eps, delta, Horizon::Full, mode, MethodClass::T0)?)?;
            match v.overall {
                Outcome::True => {}
                Outcome::Undetermined => cell.undetermined("full-horizon verdict undetermined"),
                Outcome::False => {
                    let cert = match audit_verdict(sys, &v, false)? {
                        Some(c) => c,
                        None => {
                            let x = v.points.iter().find(|p| p.outcome == Outcome::False).expect("false").x;
                            let path = reference_tube(sys, x, &[x], eps, delta, full_bound(sys) as usize, mode)?
                                .expect("claims confirmed, so x escapes");
                            Certificate::TubeEscape { x, eps, delta, start: vec![x], path }
                        }
                    };
                    cell.fail("single periodic orbit without full-horizon inverse shadowing", cert);
                }
            }
            builders.push(cell);
        }
        for &h in &grid.horizons {
            let mut cell = CellBuilder::new(
                sys,
                CellParams { horizon: Some(Horizon::Finite(h)), ..CellParams::default() },
            );
            let e = expansivity_constant(sys, h as usize);
            if e < gap {
                let n = sys.len();
                let (x, y) = (0..n)
                    .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
                    .find(|&(x, y)| {
                        Certificate::PairNonSeparation { x, y, horizon: h, threshold: gap }.revalidate(sys).is_ok()
                    })
                    .expect("constant below min_gap has a pair");
                cell.fail(
                    format!("expansivity constant {e:.6} < min_gap"),
                    Certificate::PairNonSeparation { x, y, horizon: h, threshold: gap },
                );
            }
            builders.push(cell);
        }
    }
    let names = fixtures.iter().map(|s| s.name().to_string()).collect();
    Ok(finish(TheoremId::PeriodicExpansiveRemark, FORM_PERIODIC_EXPANSIVE, options, names, builders))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Grid, SuiteVerdict};

    fn zoo(s: &str) -> SystemMap {
        make_zoo_system(&s.parse().unwrap()).unwrap()
    }

    fn options(systems: &[&str], eps: &[f64], delta: &[f64], horizons: &[u64]) -> SuiteOptions {
        SuiteOptions {
            grid: Grid {
                systems: systems.iter().map(|s| zoo(s)).collect(),
                eps: eps.to_vec(),
                delta: delta.to_vec(),
                horizons: horizons.to_vec(),
                rotation_sizes: vec![1, 2, 8],
            },
            ..SuiteOptions::default()
        }
    }

    fn only_cell(r: &TheoremSuiteResult, pred: impl Fn(&Cell) -> bool) -> &Cell {
        let mut it = r.cells.iter().filter(|c| pred(c));
        let cell = it.next().expect("a matching cell");
        assert!(it.next().is_none());
        cell
    }

    #[test]
    fn reform_on_small_grid() {
        let o = options(&["rotation:8,1", "doubling:9", "swap_pair:0.5", "identity:1"], &[0.15, 0.2, 0.3], &[0.1, 0.12, 0.13], &[1, 2, 3]);
        for r in [suite_reform(&o).unwrap(), suite_reform_ctd(&o).unwrap()] {
            assert_eq!(r.verdict, SuiteVerdict::Pass);
            assert_eq!(r.counts.skip, 0);
        }
    }

    #[test]
    fn doubling_contrapositive_cell() {
        let o = options(&["doubling:9"], &[0.15], &[0.12], &[6]);
        let sys = &o.grid.systems[0];
        assert!(eventual_sensitivity_modulus(sys, 0.12, 6) >= 0.3);
        let r = suite_not_eventually_sensitive(&o).unwrap();
        assert_eq!(r.verdict, SuiteVerdict::Pass);
        let cell = only_cell(&r, |c| c.params.horizon == Some(Horizon::Finite(6)));
        assert_eq!(cell.status, CellStatus::Pass);
    }

    #[test]
    fn rotation_witnesses_respect_two_eps_bound() {
        let o = options(&["rotation:8,1"], &[0.05], &[0.12], &[1, 2]);
        let r = suite_not_eventually_sensitive(&o).unwrap();
        assert_eq!(r.counts.pass, 3);
    }

    #[test]
    fn minimality_skips_without_chain_transitivity() {
        let o = options(&["two_fixed_points:1", "rotation:8,1"], &[0.2], &[0.05, 0.13], &[1]);
        let r = suite_minimal_iff_weak_is(&o).unwrap();
        assert_eq!(r.verdict, SuiteVerdict::Pass);
        for c in &r.cells {
            let expected = if c.system.starts_with("two") { CellStatus::Skip } else { CellStatus::Pass };
            assert_eq!(c.status, expected, "{c:?}");
        }
    }

    #[test]
    fn equicontinuity_cells() {
        let o = options(&["rotation:8,1", "doubling:9", "identity:1"], &[0.1], &[0.12], &[1, 2, 3]);
        let r = suite_equicontinuity(&o).unwrap();
        let status = |name: &str| only_cell(&r, |c| c.system == name).status;
        assert_eq!(status("rotation:8,1"), CellStatus::Pass);
        assert_eq!(status("doubling:9"), CellStatus::Skip);
        assert_eq!(status("identity:1"), CellStatus::Pass);
        assert!(equicontinuity_modulus(&o.grid.systems[0], 0.2, 3) == 0.25);
    }

    #[test]
    fn finite_eq_full_examples() {
        let o = options(&["rotation:8,1", "identity:1"], &[0.2], &[0.12, 0.13], &[1, 2]);
        let r = suite_finite_eq_full(&o).unwrap();
        assert_eq!(r.verdict, SuiteVerdict::Pass);
        assert_eq!(r.counts.undetermined, 0);
    }

    #[test]
    fn periodic_fixtures() {
        let o = options(&["identity:1"], &[0.15, 0.3], &[0.1], &[1, 3]);
        let r = suite_periodic_expansive_remark(&o).unwrap();
        assert_eq!(r.verdict, SuiteVerdict::Pass);
        assert_eq!(r.systems, ["rotation:1,0", "rotation:2,1", "rotation:8,1"]);
        assert_eq!(r.cells.len(), 3 * (2 + 2));
    }

    #[test]
    fn undetermined_cap_is_never_pass() {
        let mut o = options(&["rotation:8,1"], &[0.2], &[0.12], &[1]);
        o.config.cap = Some(1);
        let r = suite_finite_eq_full(&o).unwrap();
        assert_eq!(r.verdict, SuiteVerdict::Undetermined);
        assert_eq!(r.counts.pass, 0);
    }

    #[test]
    fn helpers_match_brute_force() {
        let sys = zoo("doubling:9");
        let t = separation_triple(&sys, 0, 0.15, 0.12, None).expect("doubling separates");
        let (n, k, z) = t;
        let w = iterate(&sys, 0, n + 1);
        assert!(sys.space().dist(z, w) < 0.12);
        assert!(sys.space().dist(iterate(&sys, z, k), iterate(&sys, w, k)) >= 0.3);
        let h = h_orbit(&[1, 0], 0, -3);
        assert_eq!((h.start_time, h.points), (-3, vec![1, 0, 1, 0]));
    }
}
