use invshadow_core::harness::Certificate;
use invshadow_core::SystemMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInfo {
    pub name: String,
    /// The `--system` argument; `verify --input` reloads the system from it.
    pub source: String,
    pub points: usize,
    pub bijective: bool,
}

impl SystemInfo {
    pub fn new(system: &SystemMap, source: &str) -> Self {
        SystemInfo {
            name: system.name().to_string(),
            source: source.to_string(),
            points: system.len(),
            bijective: system.is_bijective(),
        }
    }
}

/// A certificate together with the system it refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attested {
    pub system: String,
    pub certificate: Certificate,
}

/// The output document shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub system: Option<SystemInfo>,
    pub query: Value,
    pub verdict: String,
    pub certificates: Vec<Attested>,
    pub diagnostics: Vec<String>,
    pub result: Value,
    /// Human-readable body for `--format text`.
    #[serde(skip)]
    pub lines: Vec<String>,
}

impl Envelope {
    pub fn new(command: &str, system: Option<SystemInfo>, query: Value) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            system,
            query,
            verdict: String::new(),
            certificates: Vec::new(),
            diagnostics: Vec::new(),
            result: Value::Null,
            lines: Vec::new(),
        }
    }

    pub fn line(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(sys) = &self.system {
            s += &format!("system: {} ({} points, bijective: {})\n", sys.name, sys.points, sys.bijective);
        }
        for l in &self.lines {
            s += l;
            s.push('\n');
        }
        s += &format!("verdict: {}\n", self.verdict);
        for c in &self.certificates {
            s += &format!(
                "certificate [{}]: {}\n",
                c.system,
                serde_json::to_string(&c.certificate).expect("certificate serializes")
            );
        }
        for d in &self.diagnostics {
            s += &format!("note: {d}\n");
        }
        s
    }
}
