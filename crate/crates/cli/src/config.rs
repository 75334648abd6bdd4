//! Experiment configuration: one JSON document per run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use randpoly_core::chebyshev::ScanRoute;
use randpoly_core::ensemble::CoefficientLaw;
use randpoly_core::extremal::GridSpec;
use randpoly_core::geometry::WeightedSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "RANDPOLY_OUTPUT_ROOT";

pub const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ZeroMeasure,
    PotentialL1,
    JnGrowth,
    BmConstant,
    ChebScan,
    TailBoundary,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ZeroMeasure,
        ExperimentKind::PotentialL1,
        ExperimentKind::JnGrowth,
        ExperimentKind::BmConstant,
        ExperimentKind::ChebScan,
        ExperimentKind::TailBoundary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ZeroMeasure => "zero-measure",
            ExperimentKind::PotentialL1 => "potential-l1",
            ExperimentKind::JnGrowth => "jn-growth",
            ExperimentKind::BmConstant => "bm-constant",
            ExperimentKind::ChebScan => "cheb-scan",
            ExperimentKind::TailBoundary => "tail-boundary",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds that draw random polynomials and so need a coefficient law.
    pub fn needs_law(self) -> bool {
        matches!(
            self,
            ExperimentKind::ZeroMeasure | ExperimentKind::PotentialL1 | ExperimentKind::TailBoundary
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdOp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
    /// Strictly decreasing down the selected rows.
    #[serde(rename = "decreasing")]
    Decreasing,
    #[serde(rename = "increasing")]
    Increasing,
}

impl ThresholdOp {
    pub fn needs_value(self) -> bool {
        !matches!(self, ThresholdOp::Decreasing | ThresholdOp::Increasing)
    }
}

/// Acceptance check on one column of an aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub table: String,
    pub column: String,
    /// Restricts the check to rows whose key columns take these values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub row: BTreeMap<String, f64>,
    pub op: ThresholdOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Reported but never affects the exit status.
    #[serde(default)]
    pub advisory: bool,
}

/// Kind-specific knobs; every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// zero-measure: annulus `[r0, r1]` for the concentration fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annulus: Option<[f64; 2]>,
    /// zero-measure: radius for the "inside" fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_bins: Option<usize>,
    /// potential-l1 / tail-boundary: L¹ level counted as an exceedance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceed: Option<f64>,
    /// Write the first trial's field for every degree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_fields: Option<bool>,
    /// jn-growth: evaluation points, each a list of `[re, im]` coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// jn-growth: number of random points for the K_n check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_points: Option<usize>,
    /// jn-growth: K_n counts above `V_ref + k_margin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_margin: Option<f64>,
    /// bm-constant: samples per direction for the sup over K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_count: Option<usize>,
    /// cheb-scan: target direction on the simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<ScanRoute>,
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub geometry: WeightedSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<CoefficientLaw>,
    pub n_schedule: Vec<u32>,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub seed: u64,
    pub output_dir: String,
    pub precision_bits: u32,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a config, one per offending field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid experiment config:")?;
        for e in &self.0 {
            writeln!(f, "  {}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn fields(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.field.as_str()).collect()
    }
}

const KNOWN: [&str; 11] = [
    "kind",
    "geometry",
    "law",
    "n_schedule",
    "trials",
    "grid",
    "seed",
    "output_dir",
    "precision_bits",
    "params",
    "thresholds",
];

struct Collector(Vec<FieldError>);

impl Collector {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn take<T: serde::de::DeserializeOwned>(&mut self, obj: &serde_json::Map<String, Value>, field: &str) -> Option<T> {
        let v = obj.get(field)?;
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.push(field, e.to_string());
                None
            }
        }
    }

    fn require<T: serde::de::DeserializeOwned>(&mut self, obj: &serde_json::Map<String, Value>, field: &str) -> Option<T> {
        if !obj.contains_key(field) {
            self.push(field, "missing required field");
            return None;
        }
        self.take(obj, field)
    }
}

/// Parses and validates a config. `base_dir` resolves geometry file paths.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig, ConfigErrors> {
    let mut c = Collector(Vec::new());
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            c.push("$", format!("not valid JSON: {e}"));
            return Err(ConfigErrors(c.0));
        }
    };
    let Some(obj) = root.as_object() else {
        c.push("$", "config must be a JSON object");
        return Err(ConfigErrors(c.0));
    };
    for key in obj.keys() {
        if !KNOWN.contains(&key.as_str()) {
            c.push(key, "unknown field");
        }
    }

    let kind = match obj.get("kind") {
        None => {
            c.push("kind", "missing required field");
            None
        }
        Some(Value::String(s)) => {
            let k = ExperimentKind::parse(s);
            if k.is_none() {
                let all: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
                c.push("kind", format!("unknown kind {s:?}; expected one of {}", all.join(", ")));
            }
            k
        }
        Some(_) => {
            c.push("kind", "must be a string");
            None
        }
    };

    let geometry = match obj.get("geometry") {
        None => {
            c.push("geometry", "missing required field");
            None
        }
        Some(Value::String(p)) => {
            let path = base_dir.map(|b| b.join(p)).unwrap_or_else(|| PathBuf::from(p));
            match WeightedSet::load(&path) {
                Ok(s) => Some(s),
                Err(e) => {
                    c.push("geometry", format!("{}: {e}", path.display()));
                    None
                }
            }
        }
        Some(v) => match serde_json::from_value::<WeightedSet>(v.clone()) {
            Ok(s) => match s.validate() {
                Ok(()) => Some(s),
                Err(e) => {
                    c.push("geometry", e.to_string());
                    None
                }
            },
            Err(e) => {
                c.push("geometry", e.to_string());
                None
            }
        },
    };

    let law: Option<CoefficientLaw> = c.take(obj, "law");
    if let Some(l) = &law {
        if let Err(e) = l.validate() {
            c.push("law", e.to_string());
        }
    }
    if let Some(k) = kind {
        if k.needs_law() && !obj.contains_key("law") {
            c.push("law", format!("required for kind {k}"));
        }
    }

    let n_schedule: Option<Vec<u32>> = c.require(obj, "n_schedule");
    if let Some(ns) = &n_schedule {
        if ns.is_empty() {
            c.push("n_schedule", "must not be empty");
        } else if ns.contains(&0) {
            c.push("n_schedule", "degrees must be positive");
        } else if let Some(w) = ns.windows(2).find(|w| w[0] >= w[1]) {
            c.push("n_schedule", format!("must be strictly increasing, found {} then {}", w[0], w[1]));
        }
    }

    let trials: Option<u64> = c.require(obj, "trials");
    if trials == Some(0) {
        c.push("trials", "must be at least 1");
    }

    let grid: Option<GridSpec> = c.take(obj, "grid");
    if let Some(g) = &grid {
        if let Err(e) = g.validate() {
            c.push("grid", e.to_string());
        }
        if let Some(s) = &geometry {
            if g.dim() != s.dim() {
                c.push("grid", format!("grid points live in C^{} but the geometry in C^{}", g.dim(), s.dim()));
            }
        }
    }

    let seed: Option<u64> = c.require(obj, "seed");
    let output_dir: Option<String> = c.require(obj, "output_dir");
    if output_dir.as_deref() == Some("") {
        c.push("output_dir", "must not be empty");
    }
    let precision_bits: u32 = c.take(obj, "precision_bits").unwrap_or(DEFAULT_PRECISION_BITS);
    if precision_bits < 53 {
        c.push("precision_bits", format!("must be at least 53, got {precision_bits}"));
    }
    let params: Params = c.take(obj, "params").unwrap_or_default();
    let thresholds: Vec<Threshold> = c.take(obj, "thresholds").unwrap_or_default();
    for (i, t) in thresholds.iter().enumerate() {
        if t.op.needs_value() && t.value.is_none() {
            c.push(&format!("thresholds[{i}].value"), "required for comparison operators");
        }
    }

    if let (Some(k), Some(s)) = (kind, &geometry) {
        check_kind(&mut c, k, s, &params, law.as_ref(), grid.as_ref());
    }

    if !c.0.is_empty() {
        return Err(ConfigErrors(c.0));
    }
    Ok(ExperimentConfig {
        kind: kind.expect("checked"),
        geometry: geometry.expect("checked"),
        law,
        n_schedule: n_schedule.expect("checked"),
        trials: trials.expect("checked"),
        grid,
        seed: seed.expect("checked"),
        output_dir: output_dir.expect("checked"),
        precision_bits,
        params,
        thresholds,
    })
}

fn check_kind(
    c: &mut Collector,
    kind: ExperimentKind,
    set: &WeightedSet,
    p: &Params,
    law: Option<&CoefficientLaw>,
    grid: Option<&GridSpec>,
) {
    let d = set.dim();
    match kind {
        ExperimentKind::ZeroMeasure => {
            if d != 1 {
                c.push("geometry", "zero-measure runs need a set in C^1");
            }
            if let Some([a, b]) = p.annulus {
                if !(0.0 <= a && a < b) {
                    c.push("params.annulus", "need 0 <= r0 < r1");
                }
            }
            if let Some(e) = &p.radial_edges {
                if e.len() < 2 || e.windows(2).any(|w| w[1] <= w[0]) {
                    c.push("params.radial_edges", "need at least two increasing edges");
                }
            }
            if p.angular_bins == Some(0) {
                c.push("params.angular_bins", "must be positive");
            }
        }
        ExperimentKind::PotentialL1 | ExperimentKind::TailBoundary => {
            if d == 2 && grid.is_none_or(|g| g.slice.is_none()) {
                c.push("grid", "sets in C^2 need a grid with a slice");
            }
            if randpoly_core::extremal::ReferenceExtremal::for_set(set).is_none() {
                c.push("geometry", "no closed-form extremal function for this set");
            }
            if kind == ExperimentKind::TailBoundary {
                if let Some(l) = law {
                    if l.log_tail(1.0).is_none() {
                        c.push("law", "tail-boundary runs need a law with an unbounded tail");
                    }
                }
            }
        }
        ExperimentKind::JnGrowth => {
            if randpoly_core::extremal::ReferenceExtremal::for_set(set).is_none() {
                c.push("geometry", "no closed-form extremal function for this set");
            }
            if let Some(pts) = &p.points {
                if pts.iter().any(|x| x.len() != d) {
                    c.push("params.points", format!("every point needs {d} coordinates"));
                }
            }
            if p.eps.is_some_and(|e| !(e > 0.0)) {
                c.push("params.eps", "must be positive");
            }
        }
        ExperimentKind::BmConstant => {}
        ExperimentKind::ChebScan => match &p.theta {
            None => c.push("params.theta", "required for cheb-scan"),
            Some(t) => {
                let route = p.route.unwrap_or(default_route(set));
                let want = match route {
                    ScanRoute::L2 => d + 1,
                    ScanRoute::Sup => 2,
                };
                if t.len() != want {
                    c.push("params.theta", format!("needs {want} simplex coordinates"));
                } else if t.iter().any(|x| *x < 0.0) || (t.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    c.push("params.theta", "must lie on the simplex");
                }
                if route == ScanRoute::Sup && !(d == 2 && set.weight_expr.is_constant()) {
                    c.push("params.route", "sup scans need an unweighted set in C^2");
                }
            }
        },
    }
}

/// Sup scans for unweighted sets in `C^2`, L² scans otherwise.
pub fn default_route(set: &WeightedSet) -> ScanRoute {
    if set.dim() == 2 && set.weight_expr.is_constant() {
        ScanRoute::Sup
    } else {
        ScanRoute::L2
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![FieldError {
            field: "$".into(),
            message: format!("{}: {e}", path.display()),
        }])
    })?;
    parse_config(&text, path.parent())
}

impl ExperimentConfig {
    /// Output directory after applying the output-root override to relative
    /// paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        let p = PathBuf::from(&self.output_dir);
        if p.is_absolute() {
            return p;
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(p),
            _ => p,
        }
    }

    pub fn grid_or_default(&self) -> GridSpec {
        self.grid.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::json!({
            "kind": "zero-measure",
            "geometry": WeightedSet::unit_circle(),
            "law": {"kind": "complex-gaussian", "params": {"sigma": 1.0}},
            "n_schedule": [50, 100, 200],
            "trials": 50,
            "seed": 7,
            "output_dir": "out"
        })
    }

    fn errors(v: &Value) -> Vec<String> {
        match parse_config(&v.to_string(), None) {
            Ok(_) => vec![],
            Err(e) => e.0.into_iter().map(|e| e.field).collect(),
        }
    }

    #[test]
    fn accepts_a_minimal_config() {
        let cfg = parse_config(&base().to_string(), None).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::ZeroMeasure);
        assert_eq!(cfg.precision_bits, DEFAULT_PRECISION_BITS);
    }

    #[test]
    fn reports_each_offending_field() {
        let mut v = base();
        v["kind"] = "nonsense".into();
        assert_eq!(errors(&v), vec!["kind"]);

        let mut v = base();
        v["n_schedule"] = serde_json::json!([40, 20]);
        v["trials"] = 0.into();
        v["color"] = "blue".into();
        let mut e = errors(&v);
        e.sort();
        assert_eq!(e, vec!["color", "n_schedule", "trials"]);

        let mut v = base();
        v["n_schedule"] = serde_json::json!([]);
        assert_eq!(errors(&v), vec!["n_schedule"]);

        let mut v = base();
        v.as_object_mut().unwrap().remove("law");
        assert_eq!(errors(&v), vec!["law"]);
    }

    #[test]
    fn threshold_values_are_required_for_comparisons() {
        let mut v = base();
        v["thresholds"] = serde_json::json!([
            {"table": "summary", "column": "annulus_mean", "op": ">="},
            {"table": "summary", "column": "annulus_mean", "op": "increasing"}
        ]);
        assert_eq!(errors(&v), vec!["thresholds[0].value"]);
    }

    #[test]
    fn output_root_override_applies_to_relative_paths() {
        let cfg = parse_config(&base().to_string(), None).unwrap();
        // the override is read at call time; only check the absolute case here
        let mut abs = cfg.clone();
        abs.output_dir = "/tmp/x".into();
        assert_eq!(abs.resolved_output_dir(), PathBuf::from("/tmp/x"));
    }
}
