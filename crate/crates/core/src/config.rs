use serde::{Deserialize, Serialize};

use crate::cuts::CutOptions;

/// How much self-checking the solver does while it runs.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckLevel {
    /// Only the final completeness and EFX check.
    Final,
    /// Property checks at every phase boundary.
    #[default]
    Boundaries,
    /// Additionally, invariants after every augmentation and every repair step.
    Every,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveConfig {
    pub checks: CheckLevel,
    /// Value bound used for the local-search move cap of each cut.
    pub v_max: Option<u64>,
    /// Explicit move cap per cut.
    pub cut_move_cap: Option<u64>,
}

impl SolveConfig {
    pub fn with_checks(checks: CheckLevel) -> Self {
        SolveConfig {
            checks,
            ..Default::default()
        }
    }

    pub fn cut_options(&self) -> CutOptions {
        CutOptions {
            v_max: self.v_max,
            move_cap: self.cut_move_cap,
        }
    }

    pub(crate) fn at_least(&self, level: CheckLevel) -> bool {
        let rank = |l: CheckLevel| match l {
            CheckLevel::Final => 0,
            CheckLevel::Boundaries => 1,
            CheckLevel::Every => 2,
        };
        rank(self.checks) >= rank(level)
    }
}

/// One line of a solver trace: `{"phase": p, "event": e, ...data}`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceRecord {
    pub phase: u8,
    pub event: String,
    #[serde(flatten)]
    pub data: serde_json::Map<String, serde_json::Value>,
}

pub trait TraceSink {
    fn emit(&mut self, record: TraceRecord);
}

/// Discards every record.
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn emit(&mut self, _: TraceRecord) {}
}

impl TraceSink for Vec<TraceRecord> {
    fn emit(&mut self, record: TraceRecord) {
        self.push(record);
    }
}

impl<F: FnMut(TraceRecord)> TraceSink for F {
    fn emit(&mut self, record: TraceRecord) {
        self(record)
    }
}

pub(crate) fn record(phase: u8, event: &str, data: serde_json::Value) -> TraceRecord {
    let data = match data {
        serde_json::Value::Object(map) => map,
        serde_json::Value::Null => Default::default(),
        other => {
            let mut map = serde_json::Map::new();
            map.insert("data".into(), other);
            map
        }
    };
    TraceRecord {
        phase,
        event: event.to_string(),
        data,
    }
}
