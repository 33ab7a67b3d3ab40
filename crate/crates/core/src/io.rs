//! Delimited text formats: data matrices, dense adjacency matrices, class
//! labels and edge lists.
//!
//! Readers accept comma- or tab-separated input; the delimiter is taken from
//! the first non-empty line. Writers emit commas.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::penalty::{NodeClass, NodeClassification};
use crate::simulate::Edge;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn detect_delimiter(text: &str) -> char {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains('\t') {
        '\t'
    } else {
        ','
    }
}

/// Non-empty lines with their 1-based line numbers, split into trimmed fields.
fn records(text: &str) -> Vec<(usize, Vec<String>)> {
    let delim = detect_delimiter(text);
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let fields = l
                .trim_end_matches('\r')
                .split(delim)
                .map(|f| f.trim().trim_matches('"').to_string())
                .collect();
            (k + 1, fields)
        })
        .collect()
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan")
}

/// Data matrix: a header of variable names, then one row per time point.
/// Empty fields and `NA` are read as missing (`NaN`).
pub fn parse_data(text: &str) -> Result<(Vec<String>, DMatrix<f64>)> {
    let recs = records(text);
    let (_, header) = recs.first().ok_or_else(|| parse_err(1, "empty data file"))?;
    let names = header.clone();
    let p = names.len();
    let mut values = Vec::with_capacity(p * recs.len().saturating_sub(1));
    for (line, fields) in &recs[1..] {
        if fields.len() != p {
            return Err(parse_err(
                *line,
                format!("expected {p} fields, found {}", fields.len()),
            ));
        }
        for f in fields {
            if is_missing(f) {
                values.push(f64::NAN);
            } else {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_err(*line, format!("not a number: `{f}`")))?;
                values.push(v);
            }
        }
    }
    let rows = recs.len() - 1;
    Ok((names, DMatrix::from_row_slice(rows, p, &values)))
}

pub fn format_data(names: &[String], values: &DMatrix<f64>) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for r in 0..values.nrows() {
        let row: Vec<String> = values
            .row(r)
            .iter()
            .map(|v| if v.is_nan() { "NA".to_string() } else { v.to_string() })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Dense adjacency: header `,name1,...`, then `name_i,A_i1,...`.
pub fn format_adjacency(names: &[String], a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, name) in names.iter().enumerate() {
        out.push_str(name);
        for j in 0..a.ncols() {
            let _ = write!(out, ",{}", a[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn parse_adjacency(text: &str) -> Result<(Vec<String>, DMatrix<f64>)> {
    let recs = records(text);
    let (_, header) = recs.first().ok_or_else(|| parse_err(1, "empty adjacency file"))?;
    let names: Vec<String> = header.iter().skip(1).cloned().collect();
    let p = names.len();
    if recs.len() != p + 1 {
        return Err(parse_err(
            recs.last().map_or(1, |r| r.0),
            format!("expected {p} rows, found {}", recs.len() - 1),
        ));
    }
    let mut a = DMatrix::zeros(p, p);
    for (i, (line, fields)) in recs[1..].iter().enumerate() {
        if fields.len() != p + 1 {
            return Err(parse_err(*line, format!("expected {} fields", p + 1)));
        }
        if fields[0] != names[i] {
            return Err(parse_err(*line, format!("row `{}` out of order", fields[0])));
        }
        for j in 0..p {
            a[(i, j)] = fields[j + 1]
                .parse()
                .map_err(|_| parse_err(*line, format!("not a number: `{}`", fields[j + 1])))?;
        }
    }
    Ok((names, a))
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

/// Two columns, `name` and `hub`/`leaf`. Unlisted variables default to leaf;
/// their names are returned alongside the classification.
pub fn parse_classes(text: &str, names: &[String]) -> Result<(NodeClassification, Vec<String>)> {
    let index = index_of(names);
    let mut labels: Vec<Option<NodeClass>> = vec![None; names.len()];
    for (line, fields) in records(text) {
        if fields.len() < 2 {
            return Err(parse_err(line, "expected `name,label`"));
        }
        let label = match fields[1].to_ascii_lowercase().as_str() {
            "hub" => NodeClass::Hub,
            "leaf" => NodeClass::Leaf,
            "label" | "class" if line == 1 => continue,
            other => return Err(parse_err(line, format!("unknown label `{other}`"))),
        };
        let &i = index
            .get(fields[0].as_str())
            .ok_or_else(|| parse_err(line, format!("unknown variable `{}`", fields[0])))?;
        labels[i] = Some(label);
    }
    let unlisted: Vec<String> = (0..names.len())
        .filter(|&i| labels[i].is_none())
        .map(|i| names[i].clone())
        .collect();
    let labels = labels.into_iter().map(|l| l.unwrap_or(NodeClass::Leaf)).collect();
    Ok((NodeClassification::known(labels), unlisted))
}

pub fn format_classes(names: &[String], z: &NodeClassification) -> String {
    let mut out = String::from("name,label\n");
    for (name, label) in names.iter().zip(&z.labels) {
        let l = match label {
            NodeClass::Hub => "hub",
            NodeClass::Leaf => "leaf",
        };
        let _ = writeln!(out, "{name},{l}");
    }
    out
}

/// Edge list `source,target[,weight]`; a leading `source,target` header is
/// skipped. Weights, if present, are returned but play no role in evaluation.
pub fn parse_edges(text: &str, names: &[String]) -> Result<Vec<(Edge, Option<f64>)>> {
    let index = index_of(names);
    let mut out = Vec::new();
    for (line, fields) in records(text) {
        if fields.len() < 2 {
            return Err(parse_err(line, "expected `source,target`"));
        }
        if line == 1 && fields[0].eq_ignore_ascii_case("source") && fields[1].eq_ignore_ascii_case("target") {
            continue;
        }
        let lookup = |f: &String| {
            index
                .get(f.as_str())
                .copied()
                .ok_or_else(|| parse_err(line, format!("unknown variable `{f}`")))
        };
        let edge = (lookup(&fields[0])?, lookup(&fields[1])?);
        let weight = match fields.get(2) {
            Some(w) if !w.is_empty() => Some(
                w.parse()
                    .map_err(|_| parse_err(line, format!("not a number: `{w}`")))?,
            ),
            _ => None,
        };
        out.push((edge, weight));
    }
    Ok(out)
}

/// Node names of an edge list in order of first appearance.
pub fn edge_names(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut names = Vec::new();
    for (line, fields) in records(text) {
        if line == 1 && fields.len() >= 2 && fields[0].eq_ignore_ascii_case("source") {
            continue;
        }
        for f in fields.iter().take(2) {
            if seen.insert(f.clone()) {
                names.push(f.clone());
            }
        }
    }
    names
}

/// Edge list of the nonzero entries of `a`, in row-major order.
pub fn format_edges(names: &[String], a: &DMatrix<f64>) -> String {
    let mut out = String::from("source,target,weight\n");
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                let _ = writeln!(out, "{},{},{}", names[i], names[j], a[(i, j)]);
            }
        }
    }
    out
}

/// Graph description in dot format for external visualization tools.
pub fn format_dot(names: &[String], a: &DMatrix<f64>, z: Option<&NodeClassification>) -> String {
    let mut out = String::from("digraph network {\n");
    for (i, name) in names.iter().enumerate() {
        let shape = match z.map(|z| z.labels[i]) {
            Some(NodeClass::Hub) => "doublecircle",
            _ => "circle",
        };
        let _ = writeln!(out, "  \"{name}\" [shape={shape}];");
    }
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let w = a[(i, j)];
            if w != 0.0 {
                let color = if w > 0.0 { "black" } else { "red" };
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [weight={}, color={}];",
                    names[i],
                    names[j],
                    w.abs(),
                    color
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
