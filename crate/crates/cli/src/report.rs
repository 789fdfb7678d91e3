//! Row types for the CSV reports and their writers.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub metric: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub eta: f64,
    /// Display units.
    pub delta_s: f64,
}

/// Welfare per mechanism in display units.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityRow {
    pub factor: f64,
    pub social_optimum: f64,
    pub proposed: f64,
    pub t1: f64,
    pub t2: f64,
    pub traditional: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyRow {
    pub case: String,
    pub property: String,
    pub passed: bool,
    pub tolerance: f64,
    pub worst: f64,
    pub witnesses: usize,
}

pub fn csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    text
}
