use dpleak_core::exact::{self, Rational};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

enum Field {
    Exact(Rational),
    Bits(f64),
    Real(f64),
    Text(String),
    Json(Value),
}

/// Ordered key/value report rendered as text lines or a JSON object.
#[derive(Default)]
pub struct Report {
    fields: Vec<(String, Field)>,
}

fn bits_value(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    }
}

impl Report {
    pub fn exact(&mut self, key: &str, q: &Rational) -> &mut Self {
        self.fields.push((key.into(), Field::Exact(q.clone())));
        self
    }

    pub fn bits(&mut self, key: &str, x: f64) -> &mut Self {
        self.fields.push((key.into(), Field::Bits(x)));
        self
    }

    pub fn real(&mut self, key: &str, x: f64) -> &mut Self {
        self.fields.push((key.into(), Field::Real(x)));
        self
    }

    pub fn text(&mut self, key: &str, s: impl Into<String>) -> &mut Self {
        self.fields.push((key.into(), Field::Text(s.into())));
        self
    }

    pub fn json(&mut self, key: &str, v: Value) -> &mut Self {
        self.fields.push((key.into(), Field::Json(v)));
        self
    }

    pub fn flag(&mut self, key: &str, yes: bool) -> &mut Self {
        self.text(key, if yes { "yes" } else { "no" })
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, f) in &self.fields {
            match f {
                Field::Exact(q) => {
                    map.insert(k.clone(), Value::from(exact::to_f64(q)));
                    map.insert(format!("{k}_exact"), Value::String(q.to_string()));
                }
                Field::Bits(x) | Field::Real(x) => {
                    map.insert(k.clone(), bits_value(*x));
                }
                Field::Text(s) => {
                    map.insert(k.clone(), Value::String(s.clone()));
                }
                Field::Json(v) => {
                    map.insert(k.clone(), v.clone());
                }
            }
        }
        Value::Object(map)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, f) in &self.fields {
            let rendered = match f {
                Field::Exact(q) => format!("{q} ({:.6})", exact::to_f64(q)),
                Field::Bits(x) => format!("{x:.6} bits"),
                Field::Real(x) => format!("{x:.6}"),
                Field::Text(s) => s.clone(),
                Field::Json(v) => v.to_string(),
            };
            out.push_str(&format!("{k}: {rendered}\n"));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json");
                s.push('\n');
                s
            }
            Format::Text | Format::Csv => self.to_text(),
        }
    }
}
