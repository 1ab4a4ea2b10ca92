//! Tabular output for metric runs: one record per image (or image pair),
//! written as CSV with a sorted column union or as JSON lines.

use super::MetricError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;

/// One row of metric results. `pair_id` names the reference image for
/// full-reference runs and stays empty for no-reference runs.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct MetricReport {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub values: BTreeMap<String, f64>,
}

impl MetricReport {
    /// Starts an empty no-reference record.
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            pair_id: None,
            values: BTreeMap::new(),
        }
    }

    /// Starts an empty full-reference record tied to a reference id.
    pub fn for_pair(id: impl Into<String>, pair_id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            pair_id: Some(pair_id.into()),
            values: BTreeMap::new(),
        }
    }

    /// Adds one metric value; non-finite values and repeated names are
    /// errors so emitted tables never contain NaN or ambiguous columns.
    pub fn insert(&mut self, metric: &'static str, value: f64) -> Result<(), MetricError> {
        if !value.is_finite() {
            return Err(MetricError::NotFinite { metric });
        }
        if self.values.insert(metric.to_owned(), value).is_some() {
            return Err(MetricError::DuplicateColumn(metric.to_owned()));
        }
        Ok(())
    }

    /// Bulk [`insert`](Self::insert) of `(name, value)` pairs.
    pub fn insert_all(
        &mut self,
        columns: impl IntoIterator<Item = (&'static str, f64)>,
    ) -> Result<(), MetricError> {
        for (name, value) in columns {
            self.insert(name, value)?;
        }
        Ok(())
    }
}

/// Formats a value with six significant digits: fixed notation for decimal
/// exponents in [-4, 8], scientific notation outside that range.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value:.5}");
    }
    let exponent = value.abs().log10().floor() as i32;
    if (-4..=8).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.5e}")
    }
}

/// Writes reports as CSV: `id`, `pair_id` (only when some record has one),
/// then the sorted union of metric names. Records missing a column leave
/// the cell empty.
pub fn write_csv(reports: &[MetricReport], mut out: impl Write) -> Result<(), MetricError> {
    let columns: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| r.values.keys().map(String::as_str))
        .collect();
    let with_pairs = reports.iter().any(|r| r.pair_id.is_some());
    let mut header = vec!["id"];
    if with_pairs {
        header.push("pair_id");
    }
    header.extend(columns.iter().copied());
    writeln!(out, "{}", header.join(","))?;
    for report in reports {
        let mut row = vec![report.id.clone()];
        if with_pairs {
            row.push(report.pair_id.clone().unwrap_or_default());
        }
        for &column in &columns {
            row.push(
                report
                    .values
                    .get(column)
                    .map(|&v| format_sig6(v))
                    .unwrap_or_default(),
            );
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes reports as JSON lines, one object per record, full precision.
pub fn write_jsonl(reports: &[MetricReport], mut out: impl Write) -> Result<(), MetricError> {
    for report in reports {
        let line = serde_json::to_string(report).expect("report serialization cannot fail");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
