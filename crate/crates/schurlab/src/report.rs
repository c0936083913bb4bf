//! Experiment reports with byte-deterministic JSON/CSV emission.
//!
//! Identical (config, seed, version) must produce identical bytes, so the
//! writer is hand-rolled: object keys keep insertion order chosen by the
//! runner, floats print at 17 significant digits, and no map with
//! nondeterministic iteration order is ever serialized directly.

use std::path::Path;

use crate::error::Result;

/// JSON value with deterministic serialization.
#[derive(Clone, Debug)]
pub enum JsonVal {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<JsonVal>),
    Obj(Vec<(String, JsonVal)>),
}

impl JsonVal {
    pub fn from_serde(v: &serde_json::Value) -> JsonVal {
        match v {
            serde_json::Value::Null => JsonVal::Null,
            serde_json::Value::Bool(b) => JsonVal::Bool(*b),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    JsonVal::Int(i)
                } else {
                    JsonVal::Num(n.as_f64().unwrap_or(f64::NAN))
                }
            }
            serde_json::Value::String(s) => JsonVal::Str(s.clone()),
            serde_json::Value::Array(a) => {
                JsonVal::Arr(a.iter().map(JsonVal::from_serde).collect())
            }
            serde_json::Value::Object(o) => {
                // sorted keys for determinism
                let mut keys: Vec<&String> = o.keys().collect();
                keys.sort();
                JsonVal::Obj(
                    keys.into_iter()
                        .map(|k| (k.clone(), JsonVal::from_serde(&o[k])))
                        .collect(),
                )
            }
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            JsonVal::Null => out.push_str("null"),
            JsonVal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JsonVal::Int(i) => out.push_str(&i.to_string()),
            JsonVal::Num(x) => out.push_str(&format_float(*x)),
            JsonVal::Str(s) => write_json_string(s, out),
            JsonVal::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            JsonVal::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_json_string(k, out);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_string_deterministic(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }
}

/// Floats at 17 significant digits, stable across runs.
pub fn format_float(x: f64) -> String {
    if x.is_nan() || x.is_infinite() {
        return "null".to_string();
    }
    format!("{x:.16e}")
}

fn write_json_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Version / convention block included in every report.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub version: String,
    pub fourier_convention: String,
    pub truncation_notes: Vec<String>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            fourier_convention: "ghat(xi) = integral g(t) exp(-2 pi i t xi) dt".to_string(),
            truncation_notes: Vec::new(),
        }
    }
}

/// One asserted inequality: lhs, rhs, slack = rhs - lhs.
#[derive(Clone, Debug)]
pub struct CaseRecord {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub detail: Vec<(String, f64)>,
}

impl CaseRecord {
    /// An inequality `lhs <= rhs + tol`.
    pub fn inequality(id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        CaseRecord {
            id: id.into(),
            lhs,
            rhs,
            slack: rhs + tol - lhs,
            pass: lhs <= rhs + tol,
            detail: Vec::new(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.detail.push((key.into(), value));
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub cases: usize,
    pub failures: usize,
    pub max_violation: f64,
    pub metrics: Vec<(String, f64)>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub schema_version: u32,
    pub name: String,
    pub kind: String,
    pub config_echo: JsonVal,
    pub provenance: Provenance,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
    /// Optional CSV payload: header and numeric rows.
    pub csv: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

impl Report {
    pub fn new(name: &str, kind: &str, config_echo: JsonVal) -> Self {
        Report {
            schema_version: 1,
            name: name.to_string(),
            kind: kind.to_string(),
            config_echo,
            provenance: Provenance::default(),
            cases: Vec::new(),
            summary: Summary::default(),
            csv: None,
        }
    }

    /// Fills the summary from the recorded cases, keeping named metrics.
    pub fn finalize(&mut self, metrics: Vec<(String, f64)>) {
        let failures = self.cases.iter().filter(|c| !c.pass).count();
        let max_violation = self
            .cases
            .iter()
            .map(|c| -c.slack)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        self.summary = Summary {
            cases: self.cases.len(),
            failures,
            max_violation,
            metrics,
            pass: failures == 0,
        };
    }

    pub fn to_json_value(&self) -> JsonVal {
        let cases: Vec<JsonVal> = self
            .cases
            .iter()
            .map(|c| {
                let mut fields = vec![
                    ("id".to_string(), JsonVal::Str(c.id.clone())),
                    ("lhs".to_string(), JsonVal::Num(c.lhs)),
                    ("rhs".to_string(), JsonVal::Num(c.rhs)),
                    ("slack".to_string(), JsonVal::Num(c.slack)),
                    ("pass".to_string(), JsonVal::Bool(c.pass)),
                ];
                if !c.detail.is_empty() {
                    fields.push((
                        "detail".to_string(),
                        JsonVal::Obj(
                            c.detail
                                .iter()
                                .map(|(k, v)| (k.clone(), JsonVal::Num(*v)))
                                .collect(),
                        ),
                    ));
                }
                JsonVal::Obj(fields)
            })
            .collect();
        JsonVal::Obj(vec![
            (
                "schema_version".to_string(),
                JsonVal::Int(self.schema_version as i64),
            ),
            ("name".to_string(), JsonVal::Str(self.name.clone())),
            ("kind".to_string(), JsonVal::Str(self.kind.clone())),
            ("config".to_string(), self.config_echo.clone()),
            (
                "provenance".to_string(),
                JsonVal::Obj(vec![
                    (
                        "version".to_string(),
                        JsonVal::Str(self.provenance.version.clone()),
                    ),
                    (
                        "fourier_convention".to_string(),
                        JsonVal::Str(self.provenance.fourier_convention.clone()),
                    ),
                    (
                        "truncation_notes".to_string(),
                        JsonVal::Arr(
                            self.provenance
                                .truncation_notes
                                .iter()
                                .map(|s| JsonVal::Str(s.clone()))
                                .collect(),
                        ),
                    ),
                ]),
            ),
            ("cases".to_string(), JsonVal::Arr(cases)),
            (
                "summary".to_string(),
                JsonVal::Obj(vec![
                    ("cases".to_string(), JsonVal::Int(self.summary.cases as i64)),
                    (
                        "failures".to_string(),
                        JsonVal::Int(self.summary.failures as i64),
                    ),
                    (
                        "max_violation".to_string(),
                        JsonVal::Num(self.summary.max_violation),
                    ),
                    (
                        "metrics".to_string(),
                        JsonVal::Obj(
                            self.summary
                                .metrics
                                .iter()
                                .map(|(k, v)| (k.clone(), JsonVal::Num(*v)))
                                .collect(),
                        ),
                    ),
                    ("pass".to_string(), JsonVal::Bool(self.summary.pass)),
                ]),
            ),
        ])
    }

    pub fn to_json(&self) -> String {
        let mut s = self.to_json_value().to_string_deterministic();
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Option<String> {
        let (header, rows) = self.csv.as_ref()?;
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
}

/// Writes the report in the requested format; stable bytes for identical
/// (config, seed, version).
pub fn emit(report: &Report, format: EmitFormat, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    match format {
        EmitFormat::Json => std::fs::write(path, report.to_json())?,
        EmitFormat::Csv => {
            let body = report.to_csv().unwrap_or_else(|| "".to_string());
            std::fs::write(path, body)?;
        }
    }
    Ok(())
}
