//! Reports: gated checks plus an optional table or JSON body, rendered as
//! CSV (gates as `#` header lines) or JSON.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "==")]
    Equals,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::Equals => "==",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Below => value < threshold,
            Relation::Above => value > threshold,
            Relation::Equals => value == threshold,
        };
        Self {
            name: name.to_string(),
            value,
            relation,
            threshold,
            pass,
        }
    }

    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Below, threshold)
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Above, threshold)
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Equals, 1.0)
    }

    pub fn gate(&self) -> String {
        format!("{} {} {}", self.name, self.relation, num(self.threshold))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub suite: &'static str,
    pub parameters: Vec<(&'static str, Value)>,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
    /// Extra top-level JSON fields.
    pub body: Map<String, Value>,
}

impl Report {
    pub fn new(suite: &'static str) -> Self {
        Self {
            suite,
            parameters: Vec::new(),
            checks: Vec::new(),
            table: None,
            body: Map::new(),
        }
    }

    pub fn param(&mut self, name: &'static str, value: impl Into<Value>) {
        self.parameters.push((name, value.into()));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut out = String::new();
        out.push_str(&format!("# katok {}\n", self.suite));
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("# parameters: {}\n", params.join(" ")));
        for c in &self.checks {
            out.push_str(&format!("# gate: {}\n", c.gate()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.table {
            Some(t) => {
                for c in &self.checks {
                    out.push_str(&format!(
                        "# result: {} = {} {}\n",
                        c.name,
                        num(c.value),
                        if c.pass { "PASS" } else { "FAIL" }
                    ));
                }
                w.write_record(&t.columns)?;
                for r in &t.rows {
                    w.write_record(r)?;
                }
            }
            None => {
                w.write_record(["check", "value", "relation", "threshold", "pass"])?;
                for c in &self.checks {
                    w.write_record([
                        c.name.clone(),
                        num(c.value),
                        c.relation.to_string(),
                        num(c.threshold),
                        c.pass.to_string(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("suite".into(), json!(self.suite));
        let params: Map<String, Value> = self.parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        m.insert("parameters".into(), Value::Object(params));
        m.insert("gates".into(), json!(self.checks.iter().map(Check::gate).collect::<Vec<_>>()));
        m.insert("checks".into(), json!(self.checks));
        m.insert("pass".into(), json!(self.pass()));
        if let Some(t) = &self.table {
            m.insert("columns".into(), json!(t.columns));
            m.insert("rows".into(), json!(t.rows));
        }
        for (k, v) in &self.body {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    /// One line per check for the terminal.
    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {} ({})\n", if c.pass { "PASS" } else { "FAIL" }, c.name, num(c.value), c.gate()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_lists_gates_first() {
        let mut r = Report::new("demo");
        r.param("s", 1.0);
        r.check(Check::below("defect", 1e-12, 1e-10));
        r.check(Check::above("margin", -1.0, 0.0));
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# katok demo");
        assert_eq!(lines[2], "# gate: defect < 1e-10");
        assert_eq!(num(0.125), "0.125");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(lines[4], "check,value,relation,threshold,pass");
        assert!(lines[6].ends_with("false"));
        assert!(!r.pass());
        assert_eq!(r.to_json()["gates"][1], "margin > 0");
    }
}
