use std::time::Instant;

use serde::{Serialize, Serializer};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

/// Non-finite values (common for logs of zero residuals) are written as strings.
fn number<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(serialize_with = "number")]
    pub measured: f64,
    #[serde(serialize_with = "number")]
    pub bound: f64,
    /// `bound - measured`.
    #[serde(serialize_with = "number")]
    pub margin: f64,
    pub anchor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff `measured ≤ bound`.
    pub fn le(name: impl Into<String>, measured: f64, bound: f64, anchor: &str) -> Self {
        let status = if measured <= bound { Status::Pass } else { Status::Fail };
        let margin = if measured == bound { 0.0 } else { bound - measured };
        Check { name: name.into(), status, measured, bound, margin, anchor: anchor.into(), note: None }
    }

    /// A violated precondition, counted as one violation against a bound of zero.
    pub fn violated(name: impl Into<String>, anchor: &str, note: impl Into<String>) -> Self {
        Check::le(name, 1.0, 0.0, anchor).with_note(note)
    }

    pub fn skip(name: impl Into<String>, anchor: &str, note: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skip,
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            anchor: anchor.into(),
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Value,
    pub status: Status,
    pub checks: Vec<Check>,
    pub results: Value,
    /// Seconds.
    pub wall_time: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn new(command: &str, parameters: Value) -> Self {
        RunReport {
            command: command.into(),
            parameters,
            status: Status::Pass,
            checks: Vec::new(),
            results: Value::Object(Default::default()),
            wall_time: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results[key] = serde_json::to_value(value).unwrap_or(Value::Null);
    }

    pub fn finish(mut self) -> Self {
        self.status = if self.checks.iter().any(|c| c.status == Status::Fail) { Status::Fail } else { Status::Pass };
        if let Some(t) = self.started.take() {
            self.wall_time = t.elapsed().as_secs_f64();
        }
        self
    }

    pub fn exit_code(&self) -> u8 {
        u8::from(self.status == Status::Fail)
    }
}
