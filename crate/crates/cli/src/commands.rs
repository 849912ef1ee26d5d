use std::collections::BTreeMap;
use std::error::Error;

use invshadow_core::deciders::{decide, decide_robust_is, decide_weak_is, DeciderConfig, DecisionKind};
use invshadow_core::harness::{run_suite, Certificate, SuiteOptions, SuiteVerdict, TheoremId, TheoremSuiteResult};
use invshadow_core::properties::property_report;
use invshadow_core::{
    build_graph, Horizon, ISQuery, ISVerdict, MethodClass, Outcome, SystemMap, ZooFamily,
};
use serde_json::{json, Value};

use crate::config::load_system;
use crate::output::{Attested, Envelope, SystemInfo};
use crate::sweep::{run_phase_sweep, SweepConfig, SweepError};
use crate::{
    Command, DecideArgs, GraphArgs, PhaseArgs, PropsArgs, SuiteArgs, WeakArgs, ZooAction, EXIT_FALSE,
    EXIT_TRUE, EXIT_UNDETERMINED,
};

type Fallible<T> = Result<T, Box<dyn Error>>;

pub(crate) fn execute(command: &Command) -> Fallible<(Envelope, i32)> {
    match command {
        Command::Zoo { action: ZooAction::List } => Ok(zoo_list()),
        Command::Graph(a) => graph(a),
        Command::Decide(a) => decide_cmd(a),
        Command::Weak(a) => weak(a),
        Command::Phase(a) => phase(a),
        Command::Props(a) => props(a),
        Command::Verify(a) => match &a.input {
            Some(path) => verify_input(path),
            None => suites(&a.suites, "verify", false),
        },
        Command::Report(a) => suites(a, "report", true),
    }
}

fn outcome_code(o: Outcome) -> i32 {
    match o {
        Outcome::True => EXIT_TRUE,
        Outcome::False => EXIT_FALSE,
        Outcome::Undetermined => EXIT_UNDETERMINED,
    }
}

fn zoo_list() -> (Envelope, i32) {
    let mut env = Envelope::new("zoo list", None, Value::Null);
    for name in ZooFamily::NAMES {
        env.line(ZooFamily::usage(name));
    }
    env.verdict = "ok".into();
    env.result = json!(ZooFamily::NAMES
        .iter()
        .map(|n| json!({ "family": n, "usage": ZooFamily::usage(n) }))
        .collect::<Vec<_>>());
    (env, EXIT_TRUE)
}

fn graph(a: &GraphArgs) -> Fallible<(Envelope, i32)> {
    let sys = load_system(&a.system.system)?;
    let g = build_graph(&sys, a.delta)?;
    let mut env = Envelope::new("graph", Some(SystemInfo::new(&sys, &a.system.system)), json!({ "delta": a.delta }));
    let succ: Vec<Vec<usize>> = sys.space().points().map(|u| g.succ(u).iter().collect()).collect();
    for (u, s) in succ.iter().enumerate() {
        env.line(format!("{u} -> {s:?}"));
    }
    let transitive = g.is_chain_transitive();
    env.line(format!("chain transitive: {transitive}"));
    env.verdict = "ok".into();
    env.result = json!({
        "successors": succ,
        "edges": succ.iter().map(Vec::len).sum::<usize>(),
        "chain_transitive": transitive,
    });
    Ok((env, EXIT_TRUE))
}

/// Horizon through which a "holds forever" claim is certified.
fn certified_horizon(horizon: Horizon, system: &SystemMap) -> u64 {
    match horizon {
        Horizon::Finite(n) => n,
        Horizon::Full => 4 * (system.len() as u64).pow(2),
    }
}

fn ball(system: &SystemMap, y: usize, delta: f64) -> Vec<usize> {
    system.space().points().filter(|&p| system.space().dist(y, p) < delta).collect()
}

/// One certificate per point: containment for the witness, or the recorded refuting path.
fn verdict_certificates(system: &SystemMap, v: &ISVerdict) -> Vec<Certificate> {
    let (eps, delta, mode) = (v.eps.get(), v.delta.get(), v.mode);
    let robust = v.kind == DecisionKind::Robust;
    let start = |y| if robust { ball(system, y, delta) } else { vec![y] };
    let mut out = Vec::new();
    for p in &v.points {
        let x = p.x;
        match (p.outcome, p.witness, &p.counterexample) {
            (Outcome::True, Some(y), _) => out.push(match (v.kind, v.class) {
                (DecisionKind::Weak, _) => Certificate::WeakContained { x, y, eps, delta, mode },
                (_, MethodClass::Th) => Certificate::BijectionContained {
                    x,
                    y,
                    eps,
                    delta,
                    horizon: match v.horizon {
                        Horizon::Finite(n) => Some(n),
                        Horizon::Full => None,
                    },
                    mode,
                },
                _ => Certificate::TubeContained {
                    x,
                    eps,
                    delta,
                    start: start(y),
                    horizon: certified_horizon(v.horizon, system),
                    mode,
                },
            }),
            (Outcome::False, _, Some(c)) => out.push(match (v.kind, &c.bijection) {
                (DecisionKind::Weak, _) => Certificate::WeakEscape { x, y: c.candidate, eps, delta, path: c.path.clone() },
                (_, Some(h)) => Certificate::BijectionEscape {
                    x,
                    y: c.candidate,
                    eps,
                    delta,
                    h: h.clone(),
                    time: c.fail_index,
                },
                _ => Certificate::TubeEscape { x, eps, delta, start: start(c.candidate), path: c.path.clone() },
            }),
            _ => {}
        }
    }
    out
}

fn point_lines(env: &mut Envelope, v: &ISVerdict) {
    for p in &v.points {
        let mut line = format!("x={} {}", p.x, p.outcome);
        if let Some(y) = p.witness {
            line += &format!(" witness={y}");
        }
        if let Some(h) = p.tube_horizon {
            line += &format!(" N*={h}");
        }
        if let Some(c) = &p.counterexample {
            line += &format!(" candidate={} fails at k={} path={:?}", c.candidate, c.fail_index, c.path.points);
            if c.path.start_time != 0 {
                line += &format!(" from t={}", c.path.start_time);
            }
        }
        env.line(line);
    }
    env.line(format!("witnesses: {}/{}", v.witness_count(), v.points.len()));
}

fn finish_verdict(env: &mut Envelope, system: &SystemMap, source: &str, v: &ISVerdict) -> i32 {
    point_lines(env, v);
    env.verdict = v.overall.to_string();
    env.certificates = verdict_certificates(system, v)
        .into_iter()
        .map(|certificate| Attested { system: source.to_string(), certificate })
        .collect();
    env.diagnostics = v.diagnostics.clone();
    env.result = serde_json::to_value(v).expect("verdict serializes");
    outcome_code(v.overall)
}

fn decide_cmd(a: &DecideArgs) -> Fallible<(Envelope, i32)> {
    let source = &a.system.system;
    let sys = load_system(source)?;
    let query = ISQuery::new(&sys, a.eps, a.delta, a.horizon, a.mode, a.class)?.with_cap(a.cap);
    let v = if a.robust { decide_robust_is(&query)? } else { decide(&query)? };
    let mut env = Envelope::new(
        "decide",
        Some(SystemInfo::new(&sys, source)),
        json!({
            "eps": a.eps, "delta": a.delta, "horizon": a.horizon, "mode": a.mode,
            "class": a.class, "robust": a.robust, "cap": a.cap,
        }),
    );
    let code = finish_verdict(&mut env, &sys, source, &v);
    Ok((env, code))
}

fn weak(a: &WeakArgs) -> Fallible<(Envelope, i32)> {
    let source = &a.system.system;
    let sys = load_system(source)?;
    let query = ISQuery::new(&sys, a.eps, a.delta, Horizon::Full, a.mode, MethodClass::T0)?.with_cap(a.cap);
    let v = decide_weak_is(&query)?;
    let mut env = Envelope::new(
        "weak",
        Some(SystemInfo::new(&sys, source)),
        json!({ "eps": a.eps, "delta": a.delta, "mode": a.mode, "cap": a.cap }),
    );
    let code = finish_verdict(&mut env, &sys, source, &v);
    Ok((env, code))
}

fn phase(a: &PhaseArgs) -> Fallible<(Envelope, i32)> {
    let source = &a.system.system;
    let sys = load_system(source)?;
    let config = SweepConfig {
        eps: a.eps.clone(),
        delta: a.delta.clone(),
        horizon: a.horizon,
        mode: a.mode,
        class: a.class,
        decider: DeciderConfig { cap: a.cap, ..DeciderConfig::default() },
    };
    let mut env = Envelope::new(
        "phase",
        Some(SystemInfo::new(&sys, source)),
        json!({
            "eps": a.eps, "delta": a.delta, "horizon": a.horizon, "mode": a.mode,
            "class": a.class, "cap": a.cap,
        }),
    );
    let diagram = match run_phase_sweep(&sys, &config) {
        Ok(d) => d,
        Err(SweepError::NotMonotone(msg)) => {
            env.verdict = "FAIL".into();
            env.diagnostics.push(format!("verdicts not monotone: {msg}"));
            return Ok((env, EXIT_FALSE));
        }
        Err(e) => return Err(e.into()),
    };
    env.line(format!(
        "eps \\ delta  {}",
        diagram.delta_grid.iter().map(|d| format!("{d:>12}")).collect::<String>()
    ));
    for (i, eps) in diagram.eps_grid.iter().enumerate() {
        let row: String = (0..diagram.delta_grid.len())
            .map(|j| {
                let c = diagram.cell(i, j);
                let h = c.min_tube_horizon.map_or("-".to_string(), |h| h.to_string());
                format!("{:>12}", format!("{}/{}", c.verdict, h))
            })
            .collect();
        env.line(format!("{eps:>11}  {row}"));
    }
    for t in &diagram.largest_delta {
        env.line(match t.delta {
            Some(d) => format!("largest δ at ε={}: {d}", t.eps),
            None => format!("largest δ at ε={}: none", t.eps),
        });
    }
    let code = if diagram.undetermined > 0 { EXIT_UNDETERMINED } else { EXIT_TRUE };
    env.verdict = if code == EXIT_TRUE { "ok".into() } else { "undetermined".into() };
    env.result = serde_json::to_value(&diagram)?;
    Ok((env, code))
}

fn props(a: &PropsArgs) -> Fallible<(Envelope, i32)> {
    let source = &a.system.system;
    let sys = load_system(source)?;
    let report = property_report(&sys, a.eta, a.horizon, &a.eps, &a.delta)?;
    let mut env = Envelope::new(
        "props",
        Some(SystemInfo::new(&sys, source)),
        json!({ "eta": a.eta, "horizon": a.horizon, "eps": a.eps, "delta": a.delta }),
    );
    env.line(format!("sensitivity modulus: {}", report.sensitivity_modulus));
    env.line(format!("eventual sensitivity modulus: {}", report.eventual_sensitivity_modulus));
    for e in &report.equicontinuity_modulus {
        env.line(format!("equicontinuity modulus at ε={}: {}", e.eps, e.delta));
    }
    env.line(format!("expansivity constant: {}", report.expansivity_constant));
    env.line(format!("minimality defect: {} (minimal: {})", report.minimality_defect, report.minimal));
    env.line(format!("chain transitive at δ: {:?}", report.chain_transitive_at));
    env.verdict = "ok".into();
    env.result = serde_json::to_value(&report)?;
    Ok((env, EXIT_TRUE))
}

fn suite_verdict(results: &[TheoremSuiteResult]) -> SuiteVerdict {
    if results.iter().any(|r| r.verdict == SuiteVerdict::Fail) {
        SuiteVerdict::Fail
    } else if results.iter().any(|r| r.verdict == SuiteVerdict::Undetermined) {
        SuiteVerdict::Undetermined
    } else {
        SuiteVerdict::Pass
    }
}

fn suites(a: &SuiteArgs, command: &str, full: bool) -> Fallible<(Envelope, i32)> {
    let ids: Vec<TheoremId> = if a.theorems.is_empty() { TheoremId::ALL.to_vec() } else { a.theorems.clone() };
    let options = SuiteOptions { config: DeciderConfig { cap: a.cap, ..DeciderConfig::default() }, ..SuiteOptions::default() };
    let systems = options.fixture_systems();
    let mut env = Envelope::new(
        command,
        None,
        json!({
            "theorems": ids.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
            "grid": options.grid.summary(),
            "cap": a.cap,
        }),
    );
    let mut results = Vec::new();
    let mut invalid = 0;
    for id in ids {
        let r = run_suite(id, &options)?;
        env.line(format!(
            "{:<26} {:<12} pass={} fail={} skip={} undetermined={} coverage={:.3}",
            r.theorem.as_str(),
            r.verdict.to_string(),
            r.counts.pass,
            r.counts.fail,
            r.counts.skip,
            r.counts.undetermined,
            r.coverage
        ));
        for (i, e) in r.revalidate(&systems) {
            invalid += 1;
            env.diagnostics.push(format!("{} cell {i}: certificate did not revalidate: {e}", r.theorem));
        }
        for cell in r.cells.iter().filter(|c| !c.certificates.is_empty()) {
            for c in &cell.certificates {
                env.certificates.push(Attested { system: cell.system.clone(), certificate: c.clone() });
            }
        }
        results.push(r);
    }
    let verdict = if invalid > 0 { SuiteVerdict::Fail } else { suite_verdict(&results) };
    env.verdict = verdict.to_string();
    env.result = if full {
        serde_json::to_value(&results)?
    } else {
        json!(results
            .iter()
            .map(|r| json!({
                "theorem": r.theorem,
                "form": r.form,
                "systems": r.systems,
                "verdict": r.verdict,
                "counts": r.counts,
                "coverage": r.coverage,
            }))
            .collect::<Vec<_>>())
    };
    let code = match verdict {
        SuiteVerdict::Pass => EXIT_TRUE,
        SuiteVerdict::Fail => EXIT_FALSE,
        SuiteVerdict::Undetermined => EXIT_UNDETERMINED,
    };
    Ok((env, code))
}

fn verify_input(path: &std::path::Path) -> Fallible<(Envelope, i32)> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let saved: Envelope = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut env = Envelope::new("verify", None, json!({ "input": path.display().to_string() }));
    let mut cache: BTreeMap<String, SystemMap> = BTreeMap::new();
    let mut bad = 0;
    for (i, a) in saved.certificates.iter().enumerate() {
        if !cache.contains_key(&a.system) {
            cache.insert(a.system.clone(), load_system(&a.system)?);
        }
        let kind = serde_json::to_value(&a.certificate)?["kind"].as_str().unwrap_or("?").to_string();
        match a.certificate.revalidate(&cache[&a.system]) {
            Ok(()) => env.line(format!("certificate {i} [{}] {kind}: valid", a.system)),
            Err(e) => {
                bad += 1;
                env.line(format!("certificate {i} [{}] {kind}: INVALID: {}", a.system, e.0));
            }
        }
    }
    if saved.certificates.is_empty() {
        env.diagnostics.push("document carries no certificates".into());
    }
    env.verdict = if bad == 0 { "PASS".into() } else { "FAIL".into() };
    env.result = json!({ "checked": saved.certificates.len(), "invalid": bad });
    Ok((env, if bad == 0 { EXIT_TRUE } else { EXIT_FALSE }))
}
