//! The versioned report envelope shared by every command.

use serde::Serialize;
use serde_json::Value;

use crate::error::Error;
use crate::scenario::{Assumptions, Model};
use crate::solvers::SolverConfig;

pub const REPORT_SCHEMA: &str = "eqbundle.report/1";

/// Serialization of a [`Report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Pretty-printed JSON with sorted object keys.
    JsonLike,
    /// A short human-readable summary.
    Text,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorInfo {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            kind: e.kind().to_string(),
            stage: e.stage().map(str::to_string),
            message: e.to_string(),
            point: e.witness_point().map(<[f64]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnsatzInfo {
    pub scalar: String,
    pub oneform: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<Assumptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzInfo>,
    /// `pass`, `fail`, `error` or a verdict.
    pub outcome: String,
    pub exit_code: i32,
    pub summary: String,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command: command.to_string(),
            scenario: None,
            assumptions: None,
            config: None,
            ansatz: None,
            outcome: "pass".into(),
            exit_code: 0,
            summary: String::new(),
            result: Value::Null,
            error: None,
        }
    }

    /// Echoes the scenario name, assumptions, resolved config and ansatz.
    pub fn with_model(mut self, model: &Model, config: &SolverConfig) -> Self {
        self.scenario = Some(model.name().to_string());
        self.assumptions = Some(model.file.assumptions.clone());
        self.config = Some(config.clone());
        self.ansatz = Some(match &model.local {
            Some(l) => AnsatzInfo {
                scalar: format!(
                    "{} local densities{}",
                    l.model.density_ansatz.len(),
                    if l.model.default_density_ansatz { " (generated)" } else { "" }
                ),
                oneform: format!(
                    "{} local one-forms{}",
                    l.model.oneform_ansatz.len(),
                    if l.model.default_oneform_ansatz { " (generated)" } else { "" }
                ),
            },
            None => AnsatzInfo {
                scalar: model.scalar_ansatz().description,
                oneform: model.form_ansatz().description,
            },
        });
        self
    }

    pub fn fail(mut self, outcome: &str, exit_code: i32, summary: impl Into<String>) -> Self {
        self.outcome = outcome.to_string();
        self.exit_code = exit_code;
        self.summary = summary.into();
        self
    }

    pub fn errored(mut self, e: &Error) -> Self {
        self.outcome = "error".into();
        self.exit_code = 1;
        self.summary = e.to_string();
        self.error = Some(ErrorInfo::from(e));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::JsonLike => {
                let v = serde_json::to_value(self).expect("reports serialize");
                let mut s = serde_json::to_string_pretty(&v).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Text => self.text(),
        }
    }

    fn text(&self) -> String {
        let mut s = format!("eqbundle {}", self.command);
        if let Some(n) = &self.scenario {
            s.push_str(&format!(" [{n}]"));
        }
        s.push_str(&format!("\noutcome: {} (exit {})\n", self.outcome, self.exit_code));
        if !self.summary.is_empty() {
            s.push_str(&self.summary);
            s.push('\n');
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("error kind: {}", e.kind));
            if let Some(st) = &e.stage {
                s.push_str(&format!(", stage: {st}"));
            }
            if let Some(p) = &e.point {
                s.push_str(&format!(", point: {p:?}"));
            }
            s.push('\n');
        }
        s
    }
}
