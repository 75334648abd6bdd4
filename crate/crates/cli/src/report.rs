//! Aggregate tables, threshold evaluation and the persisted report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Threshold, ThresholdOp};

pub const REPORT_SCHEMA: &str = "report-v1";

/// A column-oriented table whose cells are JSON numbers or strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    /// Columns identifying a row across runs.
    pub key: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str], key: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            key: key.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn number(&self, row: usize, column: &str) -> Option<f64> {
        self.column_index(column).and_then(|j| self.rows[row][j].as_f64())
    }

    /// Values of `column` on rows matching `filter`, in row order.
    pub fn select(&self, column: &str, filter: &BTreeMap<String, f64>) -> Option<Vec<f64>> {
        let j = self.column_index(column)?;
        let mut out = Vec::new();
        'rows: for row in &self.rows {
            for (k, v) in filter {
                let i = self.column_index(k)?;
                if row[i].as_f64() != Some(*v) {
                    continue 'rows;
                }
            }
            out.push(row[j].as_f64().unwrap_or(f64::NAN));
        }
        Some(out)
    }

    /// Comma separated, header row, `\n` line endings. Floats use the
    /// shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render_cell).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Key tuple of a row as text.
    pub fn row_key(&self, row: usize) -> String {
        let parts: Vec<String> = self
            .key
            .iter()
            .filter_map(|k| self.column_index(k))
            .map(|j| format!("{}={}", self.columns[j], render_cell(&self.rows[row][j])))
            .collect();
        if parts.is_empty() {
            format!("#{row}")
        } else {
            parts.join(",")
        }
    }
}

fn render_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.to_string()
            } else if let Some(u) = n.as_u64() {
                u.to_string()
            } else {
                format!("{}", n.as_f64().unwrap_or(f64::NAN))
            }
        }
        other => other.to_string(),
    }
}

/// JSON number for a float, `null` when it is not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub threshold: Threshold,
    pub observed: Vec<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NoThresholds,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub kind: String,
    pub config: ExperimentConfig,
    pub trials_completed: usize,
    pub tables: BTreeMap<String, Table>,
    pub thresholds: Vec<ThresholdOutcome>,
    pub status: Status,
    #[serde(default)]
    pub errors: Vec<String>,
    pub wall_clock_s: f64,
    /// SHA-256 over the aggregate CSVs.
    pub content_hash: String,
    #[serde(default)]
    pub resumed_trials: usize,
}

pub fn evaluate_threshold(tables: &BTreeMap<String, Table>, t: &Threshold) -> ThresholdOutcome {
    let fail = |note: String| ThresholdOutcome {
        threshold: t.clone(),
        observed: vec![],
        pass: false,
        note: Some(note),
    };
    let Some(table) = tables.get(&t.table) else {
        return fail(format!("no table {:?}", t.table));
    };
    let Some(obs) = table.select(&t.column, &t.row) else {
        return fail(format!("no column {:?} (or row key) in table {:?}", t.column, t.table));
    };
    if obs.is_empty() {
        return fail("no rows matched".into());
    }
    let v = t.value.unwrap_or(f64::NAN);
    let pass = match t.op {
        ThresholdOp::Ge => obs.iter().all(|x| *x >= v),
        ThresholdOp::Le => obs.iter().all(|x| *x <= v),
        ThresholdOp::Gt => obs.iter().all(|x| *x > v),
        ThresholdOp::Lt => obs.iter().all(|x| *x < v),
        ThresholdOp::Eq => obs.iter().all(|x| *x == v),
        ThresholdOp::Decreasing => obs.windows(2).all(|w| w[1] < w[0]),
        ThresholdOp::Increasing => obs.windows(2).all(|w| w[1] > w[0]),
    };
    ThresholdOutcome {
        threshold: t.clone(),
        observed: obs,
        pass,
        note: None,
    }
}

pub fn content_hash(tables: &BTreeMap<String, Table>) -> String {
    let mut h = Sha256::new();
    for (name, t) in tables {
        h.update(name.as_bytes());
        h.update(b"\n");
        h.update(t.to_csv().as_bytes());
    }
    format!("{:x}", h.finalize())
}

pub fn overall_status(outcomes: &[ThresholdOutcome]) -> Status {
    let binding: Vec<&ThresholdOutcome> = outcomes.iter().filter(|o| !o.threshold.advisory).collect();
    if outcomes.is_empty() {
        Status::NoThresholds
    } else if binding.iter().all(|o| o.pass) {
        Status::Pass
    } else {
        Status::Fail
    }
}

impl Report {
    /// Writes `report.json` and `tables/<name>.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let tables = dir.join("tables");
        std::fs::create_dir_all(&tables)?;
        for (name, t) in &self.tables {
            std::fs::write(tables.join(format!("{name}.csv")), t.to_csv())?;
        }
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    /// Loads a report from `report.json` or from a run directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let p = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> BTreeMap<String, Table> {
        let mut t = Table::new(&["n", "x", "x_se"], &["n"]);
        t.push(vec![10.into(), num(0.5), num(0.01)]);
        t.push(vec![20.into(), num(0.25), num(0.01)]);
        BTreeMap::from([("summary".to_string(), t)])
    }

    fn th(op: ThresholdOp, value: Option<f64>, row: &[(&str, f64)]) -> Threshold {
        Threshold {
            name: None,
            table: "summary".into(),
            column: "x".into(),
            row: row.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            op,
            value,
            advisory: false,
        }
    }

    #[test]
    fn csv_layout() {
        assert_eq!(table()["summary"].to_csv(), "n,x,x_se\n10,0.5,0.01\n20,0.25,0.01\n");
    }

    #[test]
    fn thresholds() {
        let t = table();
        assert!(evaluate_threshold(&t, &th(ThresholdOp::Decreasing, None, &[])).pass);
        assert!(!evaluate_threshold(&t, &th(ThresholdOp::Increasing, None, &[])).pass);
        assert!(evaluate_threshold(&t, &th(ThresholdOp::Le, Some(0.3), &[("n", 20.0)])).pass);
        assert!(!evaluate_threshold(&t, &th(ThresholdOp::Le, Some(0.3), &[])).pass);
        let missing = evaluate_threshold(&t, &th(ThresholdOp::Le, Some(0.3), &[("n", 30.0)]));
        assert!(!missing.pass && missing.note.is_some());
    }

    #[test]
    fn hash_depends_on_content() {
        let a = table();
        let mut b = table();
        assert_eq!(content_hash(&a), content_hash(&b));
        b.get_mut("summary").unwrap().rows[0][1] = num(0.6);
        assert_ne!(content_hash(&a), content_hash(&b));
    }
}
