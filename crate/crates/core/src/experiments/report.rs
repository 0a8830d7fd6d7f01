use std::fmt::Write as _;
use std::time::Duration;

use serde::ser::Serializer;
use serde::Serialize;

/// One table cell. Floats render with 17 significant digits in CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(k) => Some(*k as f64),
            _ => None,
        }
    }

    /// Text used in CSV output.
    pub fn csv(&self) -> String {
        match self {
            Cell::Int(k) => k.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(k) => s.serialize_u64(*k),
            Cell::Float(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Float(x) => s.serialize_str(&x.to_string()),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as u64)
    }
}

impl From<u64> for Cell {
    fn from(k: u64) -> Self {
        Cell::Int(k)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// A named pass/fail outcome with the measured value and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Cell,
    pub threshold: Cell,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: impl Into<Cell>, threshold: impl Into<Cell>, pass: bool) -> Self {
        Check {
            name: name.into(),
            value: value.into(),
            threshold: threshold.into(),
            pass,
        }
    }
}

/// Pooled roots of one `(n, τ, β)` cell, kept for histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSample {
    pub n: usize,
    pub tau: f64,
    pub beta: String,
    pub roots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub metric: String,
    pub config: serde_json::Value,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Support bound `A` of the initial law (histogram range).
    pub support_bound: f64,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub samples: Vec<RootSample>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &impl Serialize, support_bound: f64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            metric: "W1".to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            tables: Vec::new(),
            checks: Vec::new(),
            pass: true,
            support_bound,
            wall_time: Duration::ZERO,
            samples: Vec::new(),
        }
    }

    pub fn add_check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering() {
        let mut t = Table::new("x", &["n", "beta", "value", "ok"]);
        t.push(vec![3usize.into(), "inf".into(), 0.1f64.into(), true.into()]);
        t.push(vec![4usize.into(), "2".into(), 1.0f64.into(), false.into()]);
        assert_eq!(
            t.to_csv(),
            "n,beta,value,ok\n3,inf,1.0000000000000001e-1,true\n4,2,1.0000000000000000e0,false\n"
        );
        assert_eq!(t.column("value"), Some(2));
    }

    #[test]
    fn csv_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567, f64::MIN_POSITIVE] {
            let s = Cell::Float(x).csv();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn checks_fold_into_pass() {
        let mut r = ExperimentReport::new("demo", &serde_json::json!({"a": 1}), 1.0);
        r.add_check(Check::new("first", 0.1, 0.2, true));
        assert!(r.pass);
        r.add_check(Check::new("second", 0.3, 0.2, false));
        assert!(!r.pass);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"][1]["pass"], false);
        assert!(v.get("wall_time").is_none());
    }
}
