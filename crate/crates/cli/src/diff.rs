//! Field-wise comparison of two reports' aggregate tables.

use serde::Serialize;
use serde_json::Value;

use crate::report::{Report, Table};

/// Columns that describe how a run went rather than what it measured.
const DIAGNOSTIC_COLUMNS: [&str; 1] = ["fallback_trials"];

/// Width of the Monte Carlo band in combined standard errors.
pub const BAND_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDiff {
    pub table: String,
    pub row: String,
    pub column: String,
    pub a: Value,
    pub b: Value,
    /// Allowed absolute difference; `None` means exact comparison.
    pub band: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportDiff {
    pub kind: String,
    /// Differences outside their tolerance.
    pub differences: Vec<CellDiff>,
    /// Differences covered by a Monte Carlo band.
    pub within_band: Vec<CellDiff>,
    pub diagnostics: Vec<CellDiff>,
    /// Missing tables, columns or rows.
    pub structural: Vec<String>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.differences.is_empty() && self.within_band.is_empty() && self.diagnostics.is_empty() && self.structural.is_empty()
    }

    /// Nothing differs beyond its tolerance.
    pub fn within_tolerance(&self) -> bool {
        self.differences.is_empty() && self.structural.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("reports are for different experiment kinds: {a} vs {b}")]
pub struct KindMismatch {
    pub a: String,
    pub b: String,
}

/// Compares aggregate tables. Version, timing and trial bookkeeping are
/// ignored; a value column with a standard error column (`x_se`, or
/// `stem_se` for `stem_mean`) is compared within `3 sqrt(se_a² + se_b²)`,
/// everything else exactly.
pub fn report_diff(a: &Report, b: &Report) -> Result<ReportDiff, KindMismatch> {
    if a.kind != b.kind {
        return Err(KindMismatch {
            a: a.kind.clone(),
            b: b.kind.clone(),
        });
    }
    let mut out = ReportDiff {
        kind: a.kind.clone(),
        ..Default::default()
    };
    for (name, ta) in &a.tables {
        match b.tables.get(name) {
            Some(tb) => diff_table(name, ta, tb, &mut out),
            None => out.structural.push(format!("table {name} missing from b")),
        }
    }
    for name in b.tables.keys().filter(|k| !a.tables.contains_key(*k)) {
        out.structural.push(format!("table {name} missing from a"));
    }
    Ok(out)
}

/// `x_se`, or `stem_se` for a column named `stem_mean`.
fn se_column(t: &Table, col: &str) -> Option<usize> {
    t.column_index(&format!("{col}_se"))
        .or_else(|| col.strip_suffix("_mean").and_then(|stem| t.column_index(&format!("{stem}_se"))))
}

fn diff_table(name: &str, a: &Table, b: &Table, out: &mut ReportDiff) {
    if a.columns != b.columns {
        out.structural.push(format!("table {name}: columns differ"));
        return;
    }
    let keys_b: Vec<String> = (0..b.rows.len()).map(|i| b.row_key(i)).collect();
    let mut seen = vec![false; b.rows.len()];
    for i in 0..a.rows.len() {
        let key = a.row_key(i);
        let Some(j) = keys_b.iter().position(|k| *k == key) else {
            out.structural.push(format!("table {name}: row {key} missing from b"));
            continue;
        };
        seen[j] = true;
        for (c, col) in a.columns.iter().enumerate() {
            let (va, vb) = (&a.rows[i][c], &b.rows[j][c]);
            if va == vb {
                continue;
            }
            let band = se_column(a, col).and_then(|s| {
                let sa = a.rows[i][s].as_f64()?;
                let sb = b.rows[j][s].as_f64()?;
                Some(BAND_SIGMAS * (sa * sa + sb * sb).sqrt())
            });
            let cell = CellDiff {
                table: name.into(),
                row: key.clone(),
                column: col.clone(),
                a: va.clone(),
                b: vb.clone(),
                band,
            };
            let within = match (band, va.as_f64(), vb.as_f64()) {
                (Some(w), Some(x), Some(y)) => (x - y).abs() <= w,
                _ => false,
            };
            if DIAGNOSTIC_COLUMNS.contains(&col.as_str()) || col.ends_with("_se") {
                out.diagnostics.push(cell);
            } else if within {
                out.within_band.push(cell);
            } else {
                out.differences.push(cell);
            }
        }
    }
    for (j, s) in seen.iter().enumerate() {
        if !s {
            out.structural.push(format!("table {name}: row {} missing from a", keys_b[j]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::num;

    fn table(x: f64, se: f64) -> Table {
        let mut t = Table::new(&["n", "x", "x_se", "y"], &["n"]);
        t.push(vec![10.into(), num(x), num(se), num(1.0)]);
        t
    }

    fn diff(ta: Table, tb: Table) -> ReportDiff {
        let mut out = ReportDiff::default();
        diff_table("t", &ta, &tb, &mut out);
        out
    }

    #[test]
    fn identical_tables_have_no_diff() {
        assert!(diff(table(0.5, 0.01), table(0.5, 0.01)).is_empty());
    }

    #[test]
    fn band_uses_both_standard_errors() {
        let d = diff(table(0.5, 0.01), table(0.54, 0.01));
        assert!(d.within_tolerance());
        assert_eq!(d.within_band.len(), 1);
        assert_eq!(d.diagnostics.len(), 0);
        let d = diff(table(0.5, 0.01), table(0.6, 0.01));
        assert!(!d.within_tolerance());
    }

    #[test]
    fn columns_without_errors_compare_exactly() {
        let mut b = table(0.5, 0.01);
        b.rows[0][3] = num(1.0 + 1e-15);
        let d = diff(table(0.5, 0.01), b);
        assert_eq!(d.differences.len(), 1);
        assert_eq!(d.differences[0].band, None);
    }

    #[test]
    fn missing_rows_are_structural() {
        let mut b = table(0.5, 0.01);
        b.rows[0][0] = 20.into();
        let d = diff(table(0.5, 0.01), b);
        assert_eq!(d.structural.len(), 2);
    }
}
