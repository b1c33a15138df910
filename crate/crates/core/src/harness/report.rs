use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{experiments, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub tolerances: BTreeMap<String, f64>,
}

/// A self-contained experiment record. Contains no timestamps or host data,
/// so identical seeds and parameters give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub params: Value,
    pub trials: Vec<Value>,
    pub summary: Value,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub(crate) fn new(
        experiment: &str,
        seed: u64,
        params: Value,
        trials: Vec<Value>,
        summary: Value,
        tolerances: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut report = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            seed,
            params,
            trials,
            summary,
            verdict: Verdict {
                pass: false,
                tolerances,
            },
        };
        report.verdict.pass = report.recompute_verdict()?;
        Ok(report)
    }

    /// Re-derives the pass/fail verdict from `params`, `trials` and the
    /// stored tolerances alone.
    pub fn recompute_verdict(&self) -> Result<bool> {
        experiments::verdict_from_records(
            &self.experiment,
            &self.params,
            &self.trials,
            &self.verdict.tolerances,
        )
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let report: ExperimentReport =
            serde_json::from_str(text).map_err(|e| Error::parse("report JSON", e))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Field accessors used by the verdict functions.
pub(crate) fn field_f64(v: &Value, key: &str) -> Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::invalid(format!("record lacks numeric field `{key}`")))
}

pub(crate) fn field_bool(v: &Value, key: &str) -> Result<bool> {
    v.get(key)
        .and_then(Value::as_bool)
        .ok_or_else(|| Error::invalid(format!("record lacks boolean field `{key}`")))
}

pub(crate) fn field_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::invalid(format!("record lacks string field `{key}`")))
}

pub(crate) fn tolerance(tolerances: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    tolerances
        .get(key)
        .copied()
        .ok_or_else(|| Error::invalid(format!("report lacks tolerance `{key}`")))
}
