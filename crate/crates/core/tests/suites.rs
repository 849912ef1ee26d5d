use invshadow_core::harness::{run_all, run_suite, Certificate, CellStatus, Grid, SuiteOptions, SuiteVerdict, TheoremId};
use invshadow_core::{make_zoo_system, ZooFamily};

#[test]
fn default_grid_passes_every_suite() {
    let options = SuiteOptions::default();
    let systems = options.fixture_systems();
    for result in run_all(&options).unwrap() {
        let bad: Vec<_> = result
            .cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Fail | CellStatus::Undetermined))
            .collect();
        assert!(bad.is_empty(), "{}: {:#?}", result.theorem, bad);
        assert_eq!(result.verdict, SuiteVerdict::Pass, "{}", result.theorem);
        assert!(result.counts.pass > 0, "{} has no passing cells", result.theorem);
        assert!(result.revalidate(&systems).is_empty());
    }
}

#[test]
fn chain_transitive_coverage_in_minimality_suite() {
    let result = run_suite(TheoremId::MinimalIffWis, &SuiteOptions::default()).unwrap();
    let ran = result.cells.iter().filter(|c| c.status != CellStatus::Skip).count();
    assert!(ran > 0);
    assert!(result.coverage > 0.0 && result.coverage <= 1.0);
}

#[test]
fn non_strict_edges_are_caught_on_the_tie_grid() {
    let mut options = SuiteOptions {
        grid: Grid {
            systems: vec![make_zoo_system(&ZooFamily::Rotation { n: 8, shift: 1 }).unwrap()],
            eps: vec![0.25],
            delta: vec![0.125],
            horizons: vec![1, 2, 3],
            rotation_sizes: vec![8],
        },
        ..SuiteOptions::default()
    };
    let clean = run_suite(TheoremId::Reform, &options).unwrap();
    assert_eq!(clean.verdict, SuiteVerdict::Pass);

    options.config.edges = invshadow_core::graph::Comparison::NonStrict;
    let mutated = run_suite(TheoremId::Reform, &options).unwrap();
    assert_eq!(mutated.verdict, SuiteVerdict::Fail);
    let systems = options.fixture_systems();
    assert!(mutated.revalidate(&systems).is_empty());
    assert!(mutated
        .cells
        .iter()
        .flat_map(|c| &c.certificates)
        .any(|c| matches!(c, Certificate::DeciderFault { .. })));
}

#[test]
fn invalid_grid_is_rejected() {
    let mut options = SuiteOptions::default();
    options.grid.eps = vec![0.3, 0.2];
    assert!(run_suite(TheoremId::Reform, &options).is_err());
    options.grid.eps = vec![0.2];
    options.grid.horizons = vec![0];
    assert!(run_suite(TheoremId::Reform, &options).is_err());
}

#[test]
fn results_serialize_deterministically() {
    let options = SuiteOptions::default();
    let a = serde_json::to_string(&run_suite(TheoremId::ReformWeak, &options).unwrap()).unwrap();
    let b = serde_json::to_string(&run_suite(TheoremId::ReformWeak, &options).unwrap()).unwrap();
    assert_eq!(a, b);
}
