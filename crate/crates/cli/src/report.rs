use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "folitor.report/v1";

/// A command's report. `config` and `results` are deterministic; `timing` is not.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub results: Map<String, Value>,
    pub warnings: Vec<String>,
    pub status: Status,
    pub timing: Value,
}

#[derive(Debug, Serialize)]
pub struct Status {
    pub ok: bool,
    pub exit_code: i32,
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self {
            schema: SCHEMA,
            command,
            config,
            results: Map::new(),
            warnings: Vec::new(),
            status: Status {
                ok: true,
                exit_code: 0,
                error: None,
            },
            timing: json!({}),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values are representable in JSON");
        self.results.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn fail(&mut self, code: i32, message: String) {
        self.status = Status {
            ok: false,
            exit_code: code,
            error: Some(message),
        };
    }

    pub fn write(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serialization") + "\n";
        match out {
            Some(p) => std::fs::write(p, text),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(text.as_bytes())
            }
        }
    }
}
