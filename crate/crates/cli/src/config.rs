//! System config files.
//!
//! ```toml
//! name = "three_cycle"
//! points = ["a", "b", "c"]
//! map = ["b", "c", "a"]        # image of each point, by label or index
//!
//! [metric]
//! lower = [[0.5], [0.5, 0.5]]  # row i holds d(i, 0), ..., d(i, i - 1)
//! # or: circle_grid = 3
//! ```
//!
//! `points` may be omitted, in which case the labels are `"0"`, `"1"`, and
//! so on. Distances are taken as written. Thresholds that tie a distance
//! exactly behave according to the strict comparisons of the deciders, so
//! hand-written matrices with rounded decimals may sit on either side of a
//! threshold.

use std::path::Path;

use invshadow_core::metric::{validate_metric, FiniteMetricSpace, MetricError};
use invshadow_core::system::{make_zoo_system, SystemError, SystemMap, ZooFamily};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    points: Option<Vec<String>>,
    metric: Spanned<RawMetric>,
    map: Spanned<Vec<Spanned<MapEntry>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    circle_grid: Option<usize>,
    lower: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MapEntry {
    Index(usize),
    Label(String),
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_system_config(text: &str) -> Result<SystemMap, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        reason: e.message().to_string(),
    })?;
    let at = |span: std::ops::Range<usize>, reason: String| ConfigError::Parse { line: line_of(text, span.start), reason };

    let metric_span = raw.metric.span();
    let metric = raw.metric.into_inner();
    let space = match (metric.circle_grid, metric.lower) {
        (Some(n), None) => FiniteMetricSpace::circle_grid(n)?,
        (None, Some(rows)) => {
            let n = rows.len() + 1;
            for (i, row) in rows.iter().enumerate() {
                if row.len() != i + 1 {
                    return Err(at(
                        metric_span,
                        format!("metric.lower row {i} has {} entries, expected {}", row.len(), i + 1),
                    ));
                }
            }
            let mut matrix = vec![vec![0.0; n]; n];
            for (i, row) in rows.iter().enumerate() {
                for (j, &d) in row.iter().enumerate() {
                    matrix[i + 1][j] = d;
                    matrix[j][i + 1] = d;
                }
            }
            validate_metric(matrix)?
        }
        _ => return Err(at(metric_span, "metric needs exactly one of `circle_grid` or `lower`".into())),
    };
    let n = space.len();

    let labels = match raw.points {
        Some(labels) => {
            if labels.len() != n {
                return Err(at(metric_span, format!("{} point labels for a metric on {n} points", labels.len())));
            }
            let mut sorted = labels.clone();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(ConfigError::Parse { line: 1, reason: format!("duplicate point label `{}`", w[0]) });
            }
            labels
        }
        None => space.labels().to_vec(),
    };

    let map_span = raw.map.span();
    let entries = raw.map.into_inner();
    if entries.len() != n {
        return Err(at(map_span, format!("map has {} entries for {n} points", entries.len())));
    }
    let mut table = Vec::with_capacity(n);
    for entry in entries {
        let span = entry.span();
        let target = match entry.into_inner() {
            MapEntry::Index(i) if i < n => i,
            MapEntry::Index(i) => return Err(at(span, format!("map index {i} out of range for {n} points"))),
            MapEntry::Label(l) => labels
                .iter()
                .position(|p| *p == l)
                .ok_or_else(|| at(span.clone(), format!("map refers to unknown label `{l}`")))?,
        };
        table.push(target);
    }

    let name = raw.name.unwrap_or_else(|| "custom".to_string());
    Ok(SystemMap::new(space.with_labels(labels), table, name)?)
}

/// Resolves `--system`: a zoo family such as `rotation:8,1`, or a config file path.
pub fn load_system(spec: &str) -> Result<SystemMap, ConfigError> {
    let family = spec.split_once(':').map_or(spec, |(f, _)| f);
    if ZooFamily::NAMES.contains(&family) {
        return Ok(make_zoo_system(&spec.parse::<ZooFamily>()?)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(SystemError::UnknownFamily(spec.to_string()).into());
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: spec.to_string(), reason: e.to_string() })?;
    parse_system_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_grid_matches_rotation() {
        let text = "name = \"rotation:8,1\"\nmap = [1, 2, 3, 4, 5, 6, 7, 0]\n[metric]\ncircle_grid = 8\n";
        let parsed = parse_system_config(text).unwrap();
        let zoo = make_zoo_system(&ZooFamily::Rotation { n: 8, shift: 1 }).unwrap();
        assert_eq!(parsed, zoo);
    }

    #[test]
    fn explicit_swap_pair() {
        let text = r#"
name = "swap_pair:0.5"
points = ["a", "b"]
map = ["b", "a"]

[metric]
lower = [[0.5]]
"#;
        let parsed = parse_system_config(text).unwrap();
        let zoo = make_zoo_system(&ZooFamily::SwapPair { gap: 0.5 }).unwrap();
        assert_eq!(parsed.space().matrix(), zoo.space().matrix());
        assert_eq!(parsed.map_table(), zoo.map_table());
        assert!(parsed.is_bijective());
        assert_eq!(parsed.space().labels(), ["a", "b"]);
    }

    #[test]
    fn unknown_label_reports_its_line() {
        let text = "points = [\"a\", \"b\"]\nmap = [\"b\",\n  \"c\"]\n[metric]\nlower = [[0.5]]\n";
        match parse_system_config(text) {
            Err(ConfigError::Parse { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("`c`"));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_input() {
        let cases = [
            "map = [0]\n[metric]\n",
            "map = [0, 1]\n[metric]\ncircle_grid = 2\nlower = [[0.5]]\n",
            "map = [0]\n[metric]\nlower = [[0.5]]\n",
            "map = [0, 5]\n[metric]\nlower = [[0.5]]\n",
            "map = [0, 1]\n[metric]\nlower = [[0.5, 0.1]]\n",
            "map = [0, 1]\nextra = 1\n[metric]\nlower = [[0.5]]\n",
            "points = [\"a\", \"a\"]\nmap = [0, 1]\n[metric]\nlower = [[0.5]]\n",
            "map = [0, 1\n",
        ];
        for text in cases {
            assert!(matches!(parse_system_config(text), Err(ConfigError::Parse { .. })), "{text}");
        }
    }

    #[test]
    fn metric_errors_propagate() {
        let text = "map = [0, 1, 2]\n[metric]\nlower = [[0.1], [0.1, 0.5]]\n";
        assert!(matches!(
            parse_system_config(text),
            Err(ConfigError::Metric(MetricError::TriangleViolation(..)))
        ));
        let text = "map = [0, 1]\n[metric]\nlower = [[0.0]]\n";
        assert!(matches!(parse_system_config(text), Err(ConfigError::Metric(_))));
    }

    #[test]
    fn load_system_resolves_zoo_and_files() {
        assert_eq!(load_system("doubling:9").unwrap().name(), "doubling:9");
        assert!(matches!(load_system("rotation:x"), Err(ConfigError::System(_))));
        assert!(load_system("no/such/file.toml").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.toml");
        std::fs::write(&path, "name = \"pair\"\nmap = [1, 0]\n[metric]\nlower = [[0.5]]\n").unwrap();
        assert_eq!(load_system(path.to_str().unwrap()).unwrap().name(), "pair");
    }
}
