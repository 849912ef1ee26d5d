//! Acceptance criteria 1-8. Runs without the libtest harness so that the
//! per-criterion lines always appear in the output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use invshadow_core::deciders::{
    decide_th_is, enumerate_delta_bijections, max_tube_horizon, oracle_find_escape, oracle_path_enum,
    tube_ok, DeciderConfig, DEFAULT_TH_LIMIT,
};
use invshadow_core::deciders::oracle::DEFAULT_PATH_BUDGET;
use invshadow_core::harness::{run_suite, CellStatus, Grid, SuiteOptions, SuiteVerdict, TheoremId, TheoremSuiteResult};
use invshadow_core::properties::{eventual_sensitivity_modulus, minimality_defect, sensitivity_modulus};
use invshadow_core::{
    build_graph, decide, decide_t0_is, make_zoo_system, Comparison, Horizon, ISQuery, MethodClass, Mode, Outcome,
    SystemMap, TubeHorizon, ZooFamily,
};

/// Criterion 1 runtime budget.
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
/// Criterion 7 tolerance for modulus values.
const MODULUS_TOL: f64 = 1e-12;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn zoo(family: ZooFamily) -> SystemMap {
    make_zoo_system(&family).expect("valid zoo parameters")
}

fn modes(sys: &SystemMap) -> Vec<Mode> {
    if sys.is_bijective() {
        vec![Mode::Positive, Mode::BiInfinite]
    } else {
        vec![Mode::Positive]
    }
}

fn suite(id: TheoremId, options: &SuiteOptions) -> Result<TheoremSuiteResult, String> {
    run_suite(id, options).map_err(|e| format!("{id}: {e}"))
}

fn clean_pass(r: &TheoremSuiteResult) -> Result<(), String> {
    ensure!(
        r.verdict == SuiteVerdict::Pass && r.counts.fail == 0 && r.counts.undetermined == 0,
        "{} verdict {} with counts {:?}",
        r.theorem,
        r.verdict,
        r.counts
    );
    Ok(())
}

fn oracle_equivalence() -> Result<String, String> {
    let grid = Grid::default();
    let start = Instant::now();
    let mut pairs = 0usize;
    for sys in &grid.systems {
        for &delta in &grid.delta {
            let graph = build_graph(sys, delta).map_err(|e| e.to_string())?;
            for mode in modes(sys) {
                for &eps in &grid.eps {
                    for &n in &grid.horizons {
                        for x in sys.space().points() {
                            for y in sys.space().points() {
                                let fast = tube_ok(&graph, x, y, eps, n, mode).map_err(|e| e.to_string())?.ok;
                                let slow =
                                    oracle_path_enum(&graph, x, y, eps, n as usize, mode).map_err(|e| e.to_string())?;
                                ensure!(
                                    fast == slow,
                                    "{} mode={mode} ε={eps} δ={delta} N={n} x={x} y={y}: tube_ok={fast}, oracle={slow}",
                                    sys.name()
                                );
                                pairs += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < ORACLE_BUDGET, "took {elapsed:?}, budget {ORACLE_BUDGET:?}");
    Ok(format!("{pairs} (x, y) pairs agree in {:.2}s", elapsed.as_secs_f64()))
}

fn reformulation_fixture() -> Result<String, String> {
    let sys = zoo(ZooFamily::Rotation { n: 8, shift: 1 });
    let eps_grid = [0.15, 0.2, 0.3];
    let delta_grid = [0.05, 0.1, 0.12, 0.124, 0.125, 0.126, 0.13, 0.2];
    for &eps in &eps_grid {
        for &delta in &delta_grid {
            let q = ISQuery::new(&sys, eps, delta, Horizon::Full, Mode::Positive, MethodClass::T0)
                .map_err(|e| e.to_string())?;
            let v = decide_t0_is(&q).map_err(|e| e.to_string())?;
            // strict edges: at the tie δ = min_gap = 0.125 no neighbour is reachable either
            let expected = if delta <= 0.125 { Outcome::True } else { Outcome::False };
            ensure!(v.overall == expected, "ε={eps} δ={delta}: got {}", v.overall);
            if expected == Outcome::True {
                ensure!(
                    v.points.iter().all(|p| p.tube_horizon == Some(TubeHorizon::Infinite)),
                    "ε={eps} δ={delta}: true verdict without stabilization-proven INF horizons"
                );
            }
        }
    }
    let r = suite(TheoremId::FiniteEqFull, &SuiteOptions::default())?;
    clean_pass(&r)?;
    Ok(format!(
        "true iff δ <= min_gap = 0.125 on {} cells; FULL ⟺ all N on {} cells, 0 undetermined",
        eps_grid.len() * delta_grid.len(),
        r.counts.pass
    ))
}

/// `max k` with `r_k <= radius`, for `r_0 = 0` and the given recurrence.
fn recurrence_horizon(radius: u64, step: fn(u64) -> u64) -> u64 {
    let (mut k, mut r) = (0, 0);
    while step(r) <= radius {
        r = step(r);
        k += 1;
    }
    k
}

fn horizon_scaling() -> Result<String, String> {
    let delta = 0.12;
    let rotation = zoo(ZooFamily::Rotation { n: 9, shift: 1 });
    let doubling = zoo(ZooFamily::Doubling { n: 9 });
    let cases: [(&SystemMap, fn(u64) -> u64); 2] = [(&rotation, |r| r + 1), (&doubling, |r| 2 * r + 1)];
    let mut summary = Vec::new();
    for (sys, step) in cases {
        let graph = build_graph(sys, delta).map_err(|e| e.to_string())?;
        let mut row = Vec::new();
        for eps in [0.2, 0.3, 0.4] {
            // largest index offset j with j/9 < ε
            let radius = (0..9u64).filter(|&j| (j as f64) / 9.0 < eps).max().unwrap_or(0);
            let expected = recurrence_horizon(radius, step);
            for x in sys.space().points() {
                let table = max_tube_horizon(&graph, x, eps, Mode::Positive, None).map_err(|e| e.to_string())?;
                let own = table.candidates.iter().find(|(y, _)| *y == x).map(|(_, h)| *h);
                ensure!(
                    own == Some(TubeHorizon::Finite(expected)),
                    "{} ε={eps} x={x}: N* = {own:?}, recurrence gives {expected}",
                    sys.name()
                );
                let holds = |n: u64| -> Result<bool, String> {
                    oracle_find_escape(sys, x, &[x], eps, delta, n as usize, Mode::Positive, DEFAULT_PATH_BUDGET)
                        .map(|e| e.is_none())
                        .map_err(|e| e.to_string())
                };
                ensure!(
                    holds(expected)? && !holds(expected + 1)?,
                    "{} ε={eps} x={x}: oracle disagrees with N* = {expected}",
                    sys.name()
                );
            }
            row.push(expected);
        }
        summary.push(format!("{} N*={row:?}", sys.name()));
    }
    let at = |sys: &SystemMap| -> Result<TubeHorizon, String> {
        let graph = build_graph(sys, delta).map_err(|e| e.to_string())?;
        let table = max_tube_horizon(&graph, 0, 0.3, Mode::Positive, None).map_err(|e| e.to_string())?;
        Ok(table.candidates.iter().find(|(y, _)| *y == 0).expect("x is its own candidate").1)
    };
    ensure!(at(&rotation)? == TubeHorizon::Finite(2), "rotation(9,1) at ε=0.3: N* != 2");
    ensure!(at(&doubling)? == TubeHorizon::Finite(1), "doubling(9) at ε=0.3: N* != 1");
    Ok(format!("{} at ε ∈ {{0.2, 0.3, 0.4}}", summary.join(", ")))
}

fn not_eventually_sensitive() -> Result<String, String> {
    let r = suite(TheoremId::NotEvSens, &SuiteOptions::default())?;
    clean_pass(&r)?;
    Ok(format!("{} cells checked, {} skipped, 0 exceptions", r.counts.pass, r.counts.skip))
}

fn minimality_equivalence() -> Result<String, String> {
    let options = SuiteOptions::default();
    let r = suite(TheoremId::MinimalIffWis, &options)?;
    clean_pass(&r)?;
    ensure!(r.coverage >= 0.5, "coverage {:.3} < 0.5", r.coverage);
    for cell in &r.cells {
        let sys = options.grid.systems.iter().find(|s| s.name() == cell.system).expect("grid system");
        let delta = cell.params.delta.expect("cells carry δ");
        let transitive = build_graph(sys, delta).map_err(|e| e.to_string())?.is_chain_transitive();
        ensure!(
            (cell.status == CellStatus::Skip) == !transitive,
            "{} δ={delta}: status {:?} but chain transitive = {transitive}",
            cell.system,
            cell.status
        );
        if cell.system.starts_with("rotation") {
            ensure!(cell.status == CellStatus::Pass, "{} cell not PASS", cell.system);
        }
    }
    for sys in options.grid.systems.iter().filter(|s| s.name().starts_with("rotation")) {
        for x in sys.space().points() {
            let d = minimality_defect(sys, x).map_err(|e| e.to_string())?;
            ensure!(d == 0.0, "{} defect at {x} is {d}", sys.name());
        }
    }
    Ok(format!("{} PASS, {} SKIP, coverage {:.3}", r.counts.pass, r.counts.skip, r.coverage))
}

fn th_class() -> Result<String, String> {
    let swap = zoo(ZooFamily::SwapPair { gap: 0.5 });
    let count = |d| enumerate_delta_bijections(&swap, d, DEFAULT_TH_LIMIT).map(|v| v.len()).map_err(|e| e.to_string());
    ensure!(count(0.6)? == 2, "δ=0.6: {} bijections", count(0.6)?);
    ensure!(count(0.4)? == 1, "δ=0.4: {} bijections", count(0.4)?);
    for (delta, expected) in [(0.6, Outcome::False), (0.4, Outcome::True)] {
        for mode in modes(&swap) {
            let q = ISQuery::new(&swap, 0.3, delta, Horizon::Full, mode, MethodClass::Th).map_err(|e| e.to_string())?;
            let got = decide_th_is(&q).map_err(|e| e.to_string())?.overall;
            ensure!(got == expected, "Th at ε=0.3 δ={delta} mode={mode}: {got}");
        }
    }

    let grid = Grid::default();
    let mut checked = 0;
    for sys in &grid.systems {
        for mode in modes(sys) {
            for &eps in &grid.eps {
                for &delta in &grid.delta {
                    let horizons = grid.horizons.iter().map(|&n| Horizon::Finite(n)).chain([Horizon::Full]);
                    for h in horizons {
                        let t0 = decide(&ISQuery::new(sys, eps, delta, h, mode, MethodClass::T0).map_err(|e| e.to_string())?)
                            .map_err(|e| e.to_string())?;
                        let th = decide(&ISQuery::new(sys, eps, delta, h, mode, MethodClass::Th).map_err(|e| e.to_string())?)
                            .map_err(|e| e.to_string())?;
                        for (a, b) in t0.points.iter().zip(&th.points) {
                            ensure!(
                                a.outcome != Outcome::True || b.outcome == Outcome::True,
                                "{} ε={eps} δ={delta} {h} {mode} x={}: T0 true, Th {}",
                                sys.name(),
                                a.x,
                                b.outcome
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    let r = suite(TheoremId::FiniteEqFull, &SuiteOptions::default())?;
    clean_pass(&r)?;
    Ok(format!("bijection counts 2/1, verdicts false/true, T0 ⟹ Th on {checked} point cells"))
}

fn property_moduli() -> Result<String, String> {
    let doubling = zoo(ZooFamily::Doubling { n: 9 });
    let rotation = zoo(ZooFamily::Rotation { n: 9, shift: 1 });
    let s_doubling = sensitivity_modulus(&doubling, 0.12, 6);
    let s_rotation = sensitivity_modulus(&rotation, 0.12, 6);
    ensure!((s_doubling - 4.0 / 9.0).abs() <= MODULUS_TOL, "doubling(9): {s_doubling}");
    ensure!((s_rotation - 1.0 / 9.0).abs() <= MODULUS_TOL, "rotation(9,1): {s_rotation}");

    let grid = Grid::default();
    let mut systems = grid.systems.clone();
    systems.extend([2usize, 3, 5].map(|n| zoo(ZooFamily::Rotation { n, shift: 1 })));
    systems.push(zoo(ZooFamily::Identity { n: 5 }));
    let mut checked = 0;
    for sys in &systems {
        for eta in [0.05, 0.1, 0.12, 0.13, 0.3, 0.6] {
            for horizon in 1..=8 {
                let plain = sensitivity_modulus(sys, eta, horizon);
                let eventual = eventual_sensitivity_modulus(sys, eta, horizon);
                ensure!(
                    eventual + MODULUS_TOL >= plain,
                    "{} η={eta} N={horizon}: eventual {eventual} < plain {plain}",
                    sys.name()
                );
                checked += 1;
            }
        }
    }
    Ok(format!("4/9 and 1/9 within {MODULUS_TOL:e}; eventual ≥ plain on {checked} cases"))
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = invshadow_cli::run(std::iter::once("invshadow").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

fn determinism_and_certificates() -> Result<String, String> {
    let (code, first) = cli(&["verify", "--all", "--format", "json"]);
    ensure!(code == 0, "verify --all exited {code}");
    let (code2, second) = cli(&["verify", "--all", "--format", "json"]);
    ensure!(code2 == 0 && first == second, "rerun of verify --all is not byte-identical");

    let (_, d1) = cli(&["decide", "--system", "rotation:8,1", "--eps", "0.2", "--delta", "0.13", "--format", "json"]);
    let (_, d2) = cli(&["decide", "--system", "rotation:8,1", "--eps", "0.2", "--delta", "0.13", "--format", "json"]);
    ensure!(d1 == d2, "rerun of decide is not byte-identical");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("decide.json");
    std::fs::write(&path, &d1).map_err(|e| e.to_string())?;
    let (code, _) = cli(&["verify", "--input", path.to_str().expect("utf-8 path")]);
    ensure!(code == 0, "decide certificates did not revalidate (exit {code})");

    // tie grid: at δ = 0.125 the neighbours x ± 1 of f(x) sit exactly at δ; at
    // δ = 0.13 the level sets reach points exactly ε = 0.25 from the orbit
    let tie = Grid {
        systems: vec![zoo(ZooFamily::Rotation { n: 8, shift: 1 })],
        eps: vec![0.25],
        delta: vec![0.125, 0.13],
        horizons: vec![1, 2, 3],
        rotation_sizes: vec![8],
    };
    let clean = SuiteOptions { grid: tie.clone(), config: DeciderConfig::default() };
    for id in TheoremId::ALL {
        let r = suite(id, &clean)?;
        ensure!(r.counts.fail == 0, "{id} fails on the tie grid without mutation");
    }
    let mutations = [
        ("non-strict δ-edges", DeciderConfig { edges: Comparison::NonStrict, ..DeciderConfig::default() }),
        ("non-strict ε-tube", DeciderConfig { tube: Comparison::NonStrict, ..DeciderConfig::default() }),
    ];
    let mut report = Vec::new();
    for (name, config) in mutations {
        let options = SuiteOptions { grid: tie.clone(), config };
        let systems = options.fixture_systems();
        let (mut fails, mut certificates) = (0, 0);
        for id in TheoremId::ALL {
            let r = suite(id, &options)?;
            let invalid = r.revalidate(&systems);
            ensure!(invalid.is_empty(), "{name}, {id}: certificate rejected: {}", invalid[0].1);
            fails += r.counts.fail;
            certificates += r.cells.iter().filter(|c| c.status == CellStatus::Fail).map(|c| c.certificates.len()).sum::<usize>();
        }
        ensure!(fails > 0, "mutation `{name}` was not detected");
        report.push(format!("{name}: {fails} FAIL cells, {certificates} certificates valid"));
    }
    Ok(format!("verify --all exit 0, reruns identical; {}", report.join("; ")))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("reformulation fixture", reformulation_fixture),
        ("horizon scaling contrast", horizon_scaling),
        ("not eventually sensitive suite", not_eventually_sensitive),
        ("minimality iff weak inverse shadowing suite", minimality_equivalence),
        ("Th class", th_class),
        ("property moduli", property_moduli),
        ("determinism and certificates", determinism_and_certificates),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({reason}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
