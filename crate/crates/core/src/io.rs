//! File formats: matrix CSV and JSON, prior and query-map CSV, mechanism
//! bundle JSON.
//!
//! Matrix CSV has output labels in the first row and input labels in the
//! first column; cells are decimals or `p/q` literals.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{ChannelMatrix, PrivacyParameter, Prior};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graphs::Graph;
use crate::mechanisms::MechanismBundle;

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

pub fn read_matrix_csv(text: &str) -> Result<ChannelMatrix> {
    let mut records = csv_reader(text).into_records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("empty matrix CSV".into()))??;
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in records.enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != col_labels.len() + 1 {
            return Err(Error::Parse(format!(
                "matrix row {} has {} cells, expected {}",
                line + 1,
                record.len().saturating_sub(1),
                col_labels.len()
            )));
        }
        row_labels.push(record[0].to_string());
        rows.push(
            record
                .iter()
                .skip(1)
                .map(exact::parse_rational)
                .collect::<Result<Vec<_>>>()?,
        );
    }
    ChannelMatrix::new(rows)?.with_labels(row_labels, col_labels)
}

pub fn write_matrix_csv(m: &ChannelMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["In/Out".to_string()];
    header.extend(m.col_labels().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for i in 0..m.rows() {
        let mut rec = vec![m.row_labels()[i].clone()];
        rec.extend(m.row(i).iter().map(ToString::to_string));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => exact::parse_rational(s),
        Value::Number(n) => exact::parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!("matrix cell {other} is not a number"))),
    }
}

pub fn matrix_to_json_value(m: &ChannelMatrix) -> Value {
    serde_json::to_value(MatrixJson {
        rows: m.row_labels().to_vec(),
        cols: m.col_labels().to_vec(),
        entries: m
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|x| Value::String(x.to_string())).collect())
            .collect(),
    })
    .expect("matrix serializes")
}

pub fn matrix_from_json_value(v: Value) -> Result<ChannelMatrix> {
    let doc: MatrixJson = serde_json::from_value(v)?;
    let rows = doc
        .entries
        .iter()
        .map(|r| r.iter().map(cell).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    ChannelMatrix::new(rows)?.with_labels(doc.rows, doc.cols)
}

pub fn read_matrix_json(text: &str) -> Result<ChannelMatrix> {
    matrix_from_json_value(serde_json::from_str(text)?)
}

/// Reads a matrix from CSV or JSON, picking by the first non-blank byte.
pub fn read_matrix(text: &str) -> Result<ChannelMatrix> {
    if text.trim_start().starts_with('{') {
        read_matrix_json(text)
    } else {
        read_matrix_csv(text)
    }
}

fn label_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for record in csv_reader(text).into_records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "expected `label,value`, got {} fields",
                record.len()
            )));
        }
        out.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

fn resolve(labels: &[String], name: &str, what: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == name)
        .ok_or_else(|| Error::Parse(format!("unknown {what} label {name:?}")))
}

/// Prior file: one `label,value` line per input, in any order, covering
/// every label of `row_labels`.
pub fn read_prior(text: &str, row_labels: &[String]) -> Result<Prior> {
    let mut probs: Vec<Option<Rational>> = vec![None; row_labels.len()];
    for (label, value) in label_pairs(text)? {
        let i = resolve(row_labels, &label, "prior")?;
        if probs[i].replace(exact::parse_rational(&value)?).is_some() {
            return Err(Error::Parse(format!("prior label {label:?} repeated")));
        }
    }
    let probs = probs
        .into_iter()
        .zip(row_labels)
        .map(|(p, l)| p.ok_or_else(|| Error::Parse(format!("prior misses label {l:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Prior::new(probs)
}

/// Query map file: one `input_label,answer_label` line per input.
pub fn read_f_map(text: &str, input_labels: &[String], answer_labels: &[String]) -> Result<Vec<usize>> {
    let mut map: Vec<Option<usize>> = vec![None; input_labels.len()];
    for (x, y) in label_pairs(text)? {
        let xi = resolve(input_labels, &x, "input")?;
        let yi = resolve(answer_labels, &y, "answer")?;
        if map[xi].replace(yi).is_some() {
            return Err(Error::Parse(format!("input {x:?} mapped twice")));
        }
    }
    map.into_iter()
        .zip(input_labels)
        .map(|(m, l)| m.ok_or_else(|| Error::Argument(format!("query map misses input {l:?}"))))
        .collect()
}

pub fn graph_labels(g: &Graph) -> Vec<String> {
    (0..g.vertex_count()).map(|v| g.label(v)).collect()
}

pub fn bundle_to_json_value(b: &MechanismBundle) -> Value {
    serde_json::json!({
        "graph": serde_json::from_str::<Value>(&b.graph.to_json()).expect("graph json"),
        "matrix": matrix_to_json_value(&b.matrix),
        "r_num": b.pp.ratio().numer().to_string(),
        "r_den": b.pp.ratio().denom().to_string(),
        "c_num": b.normalization.numer().to_string(),
        "c_den": b.normalization.denom().to_string(),
    })
}

pub fn bundle_from_json(text: &str) -> Result<MechanismBundle> {
    let v: Value = serde_json::from_str(text)?;
    let field = |name: &str| -> Result<&Value> {
        v.get(name)
            .ok_or_else(|| Error::Parse(format!("bundle misses field {name:?}")))
    };
    let ratio_of = |num: &str, den: &str| -> Result<Rational> {
        let text = |x: &Value| match x {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::Parse("expected an integer".into())),
        };
        exact::parse_rational(&format!("{}/{}", text(field(num)?)?, text(field(den)?)?))
    };
    let graph = Graph::from_json(&field("graph")?.to_string())?;
    let matrix = matrix_from_json_value(field("matrix")?.clone())?;
    let pp = PrivacyParameter::from_ratio(ratio_of("r_num", "r_den")?)?;
    let normalization = ratio_of("c_num", "c_den")?;
    if matrix.rows() != graph.vertex_count() {
        return Err(Error::Parse("bundle matrix does not match its graph".into()));
    }
    Ok(MechanismBundle {
        graph,
        matrix,
        pp,
        normalization,
    })
}
