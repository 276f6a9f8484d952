//! Check results, tables and their JSON and text renderings.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so that two
//! runs with the same configuration and seed produce identical bytes.

use serde_json::{Map, Value};

pub const TOOL: &str = "gaugeforge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A number in fixed 17-significant-digit notation, or `null` when not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&format!("{x:.16e}")).expect("formatted float is valid JSON")
    } else {
        Value::Null
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
        }
    }

    /// A yes/no condition, recorded as value 1 (true) or 0 (false).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: ok,
        }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), Value::String(self.name.clone()));
        m.insert("value".into(), num(self.value));
        m.insert("threshold".into(), num(self.threshold));
        m.insert("pass".into(), Value::Bool(self.pass));
        Value::Object(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }

    fn to_text(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.6e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Data files written next to the report, relative to the output directory.
    pub files: Vec<String>,
    /// Free-form structured results, e.g. one object per cutoff sweep.
    pub records: Vec<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn absorb(&mut self, other: Report) {
        let prefix = other.command.clone();
        self.checks.extend(other.checks.into_iter().map(|c| Check {
            name: format!("{prefix}/{}", c.name),
            ..c
        }));
        self.tables.extend(other.tables.into_iter().map(|t| Table {
            name: format!("{prefix}/{}", t.name),
            ..t
        }));
        self.files.extend(other.files);
        self.records.extend(other.records);
    }

    pub fn to_json(&self, config_hash: &str, seed: u64) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), Value::String(TOOL.into()));
        m.insert("version".into(), Value::String(VERSION.into()));
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("config_hash".into(), Value::String(config_hash.into()));
        m.insert("seed".into(), Value::from(seed));
        m.insert("pass".into(), Value::Bool(self.pass()));
        m.insert("checks".into(), Value::Array(self.checks.iter().map(Check::to_json).collect()));
        let mut tables = Map::new();
        for t in &self.tables {
            let mut tm = Map::new();
            tm.insert(
                "columns".into(),
                Value::Array(t.columns.iter().map(|c| Value::String(c.clone())).collect()),
            );
            tm.insert(
                "rows".into(),
                Value::Array(
                    t.rows
                        .iter()
                        .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                        .collect(),
                ),
            );
            tables.insert(t.name.clone(), Value::Object(tm));
        }
        m.insert("tables".into(), Value::Object(tables));
        m.insert("records".into(), Value::Array(self.records.clone()));
        m.insert(
            "files".into(),
            Value::Array(self.files.iter().map(|f| Value::String(f.clone())).collect()),
        );
        Value::Object(m)
    }

    pub fn to_json_string(&self, config_hash: &str, seed: u64) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json(config_hash, seed)).expect("serializable report");
        s.push('\n');
        s
    }

    pub fn to_text(&self, config_hash: &str) -> String {
        let mut out = format!("{TOOL} {VERSION} {} (config {})\n", self.command, &config_hash[..12]);
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {}: {:.3e} (threshold {:.1e})\n",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            ));
        }
        for t in &self.tables {
            out.push_str(&format!("  table {}\n    {}\n", t.name, t.columns.join("  ")));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(Cell::to_text).collect();
                out.push_str(&format!("    {}\n", cells.join("  ")));
            }
        }
        out.push_str(if self.pass() { "result: pass\n" } else { "result: FAIL\n" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-2.5e-300).to_string(), "-2.5000000000000000e-300");
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn pass_is_the_conjunction_of_checks() {
        let mut r = Report::new("x");
        r.checks.push(Check::below("a", 1e-12, 1e-10));
        assert!(r.pass());
        r.checks.push(Check::below("b", 1e-3, 1e-10));
        assert!(!r.pass());
        assert_eq!(r.failures().count(), 1);
        let mut all = Report::new("all");
        all.absorb(r);
        assert_eq!(all.checks[1].name, "x/b");
        assert!(!all.pass());
    }

    #[test]
    fn json_is_deterministic() {
        let mut r = Report::new("x");
        r.checks.push(Check::below("a", 1.0 / 3.0, 1.0));
        let mut t = Table::new("t", &["gauge", "value"]);
        t.push(vec![Cell::Text("coulomb".into()), Cell::Num(2.0 / 3.0)]);
        r.tables.push(t);
        let a = r.to_json_string("abc", 7);
        assert_eq!(a, r.clone().to_json_string("abc", 7));
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["checks"][0]["value"].to_string(), "3.3333333333333331e-1");
        assert_eq!(v["tables"]["t"]["rows"][0][0], "coulomb");
    }
}
