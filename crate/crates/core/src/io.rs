//! File formats: JSON for piecewise maps, dendrograms, edit plans, Betti
//! tables and experiment configs; CSV for fields, point clouds and distance
//! matrices.
//!
//! Every top-level JSON document carries `"format_version": 1`. Numbers are
//! written in shortest round-trip form, and the unbounded end of a map or the
//! height of the root is the string `"inf"`. Schema errors name the JSON path
//! (`edges[2].weight.pieces[0].end`) or the CSV line of the offending value.

use std::collections::{BTreeMap, HashMap};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::builders::{BettiEntry, BettiTable, PointCloud, ScalarField1D};
use crate::distance::EditPlan;
use crate::editable::{Piece, PiecewiseMap};
use crate::error::{Error, Result};
use crate::experiments::DistanceMatrix;
use crate::tree::{Dendrogram, TreeStructure};

pub const FORMAT_VERSION: u64 = 1;

fn number(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else {
        Value::from(x)
    }
}

fn numbers(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::from(x)).collect())
}

fn parse_text(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::schema("$", format!("malformed JSON: {e}")))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::schema(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path == "$" {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::schema(path, "expected an array"))
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::schema(path, "expected a string"))
}

fn finite(v: &Value, path: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::schema(path, "expected a finite number")),
    }
}

/// A finite number or the string `"inf"`.
fn extended(v: &Value, path: &str) -> Result<f64> {
    if v.as_str() == Some("inf") {
        return Ok(f64::INFINITY);
    }
    finite(v, path).map_err(|_| Error::schema(path, "expected a finite number or \"inf\""))
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| Error::schema(path, "expected a nonnegative integer"))
}

fn vector(v: &Value, len: usize, path: &str) -> Result<Vec<f64>> {
    let items = array(v, path)?;
    if items.len() != len {
        return Err(Error::schema(path, format!("expected {len} values, got {}", items.len())));
    }
    items.iter().enumerate().map(|(i, x)| finite(x, &format!("{path}[{i}]"))).collect()
}

fn check_version(obj: &Map<String, Value>) -> Result<()> {
    match obj.get("format_version") {
        None => Err(Error::schema("format_version", "missing field")),
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(Error::schema(
            "format_version",
            format!("unsupported version {v}, expected {FORMAT_VERSION}"),
        )),
    }
}

fn versioned(mut obj: Map<String, Value>) -> Value {
    obj.insert("format_version".into(), Value::from(FORMAT_VERSION));
    Value::Object(obj)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// JSON form of a map. Constant pieces carry `value`, affine pieces carry
/// `intercept` and `slope` in global coordinates.
pub fn map_to_json(m: &PiecewiseMap) -> Value {
    let pieces: Vec<Value> = m
        .pieces()
        .map(|p| {
            if p.is_constant() {
                json!({"start": number(p.start), "end": number(p.end), "kind": "const", "value": numbers(p.intercept)})
            } else {
                json!({
                    "start": number(p.start),
                    "end": number(p.end),
                    "kind": "affine",
                    "intercept": numbers(p.intercept),
                    "slope": numbers(p.slope),
                })
            }
        })
        .collect();
    json!({"channels": m.channels(), "pieces": pieces})
}

/// Reads a map from its JSON form; `path` prefixes error locations.
pub fn map_from_json(v: &Value, path: &str) -> Result<PiecewiseMap> {
    let obj = object(v, path)?;
    let channels = count(field(obj, "channels", path)?, &join(path, "channels"))?;
    if channels == 0 {
        return Err(Error::schema(join(path, "channels"), "must be positive"));
    }
    let ppath = join(path, "pieces");
    let mut pieces = Vec::new();
    for (i, p) in array(field(obj, "pieces", path)?, &ppath)?.iter().enumerate() {
        let at = format!("{ppath}[{i}]");
        let po = object(p, &at)?;
        let start = finite(field(po, "start", &at)?, &join(&at, "start"))?;
        let end = extended(field(po, "end", &at)?, &join(&at, "end"))?;
        let piece = match string(field(po, "kind", &at)?, &join(&at, "kind"))? {
            "const" => Piece::constant(start, end, vector(field(po, "value", &at)?, channels, &join(&at, "value"))?),
            "affine" => Piece::affine(
                start,
                end,
                vector(field(po, "intercept", &at)?, channels, &join(&at, "intercept"))?,
                vector(field(po, "slope", &at)?, channels, &join(&at, "slope"))?,
            ),
            other => {
                return Err(Error::schema(
                    join(&at, "kind"),
                    format!("unknown kind '{other}', expected \"const\" or \"affine\""),
                ))
            }
        };
        pieces.push(piece);
    }
    PiecewiseMap::from_pieces(channels, pieces).map_err(|e| Error::schema(ppath, e.to_string()))
}

pub fn dendrogram_to_json(d: &Dendrogram) -> Value {
    let t = d.structure();
    let vertices: Vec<Value> = (0..t.len())
        .map(|v| {
            let h = d.heights().map_or(Value::Null, |h| number(h[v]));
            json!({"id": t.id(v), "height": h})
        })
        .collect();
    let edges: Vec<Value> = (0..t.len())
        .filter_map(|v| {
            let p = t.parent(v)?;
            let w = d.weight(v).expect("edges carry weights");
            Some(json!({"child": t.id(v), "parent": t.id(p), "weight": map_to_json(w)}))
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("root".into(), Value::from(t.id(t.root())));
    obj.insert("channels".into(), Value::from(d.channels()));
    obj.insert("vertices".into(), Value::Array(vertices));
    obj.insert("edges".into(), Value::Array(edges));
    versioned(obj)
}

pub fn dendrogram_to_string(d: &Dendrogram) -> String {
    pretty(&dendrogram_to_json(d))
}

/// Reads a dendrogram document. Heights are either given for every vertex
/// (the root's as `"inf"`) or `null` for every vertex.
pub fn dendrogram_from_json(v: &Value) -> Result<Dendrogram> {
    let obj = object(v, "$")?;
    check_version(obj)?;
    let root = string(field(obj, "root", "$")?, "root")?;
    let vertices = array(field(obj, "vertices", "$")?, "vertices")?;
    let mut ids = Vec::with_capacity(vertices.len());
    let mut heights = Vec::with_capacity(vertices.len());
    let mut index = HashMap::new();
    for (i, vx) in vertices.iter().enumerate() {
        let at = format!("vertices[{i}]");
        let vo = object(vx, &at)?;
        let id = string(field(vo, "id", &at)?, &join(&at, "id"))?;
        if index.insert(id.to_string(), i).is_some() {
            return Err(Error::schema(join(&at, "id"), format!("duplicate vertex id '{id}'")));
        }
        ids.push(id.to_string());
        heights.push(match vo.get("height") {
            None | Some(Value::Null) => None,
            Some(h) => Some(extended(h, &join(&at, "height"))?),
        });
    }
    let Some(&root_index) = index.get(root) else {
        return Err(Error::schema("root", format!("'{root}' is not listed in vertices")));
    };
    let heights = if heights.iter().all(Option::is_none) {
        None
    } else {
        if let Some(i) = heights.iter().position(Option::is_none) {
            return Err(Error::schema(
                format!("vertices[{i}].height"),
                "heights must be given for every vertex or for none",
            ));
        }
        let h: Vec<f64> = heights.into_iter().flatten().collect();
        if h[root_index] != f64::INFINITY {
            return Err(Error::schema(format!("vertices[{root_index}].height"), "the root height must be \"inf\""));
        }
        if let Some(i) = (0..h.len()).find(|&i| i != root_index && !h[i].is_finite()) {
            return Err(Error::schema(format!("vertices[{i}].height"), "only the root may have height \"inf\""));
        }
        Some(h)
    };
    let edges = array(field(obj, "edges", "$")?, "edges")?;
    let mut parent = vec![None; ids.len()];
    let mut weights = vec![None; ids.len()];
    let mut channels = match obj.get("channels") {
        Some(c) => Some(count(c, "channels")?),
        None => None,
    };
    for (i, e) in edges.iter().enumerate() {
        let at = format!("edges[{i}]");
        let eo = object(e, &at)?;
        let lookup = |key: &str| -> Result<usize> {
            let p = join(&at, key);
            let id = string(field(eo, key, &at)?, &p)?;
            index.get(id).copied().ok_or_else(|| Error::schema(p, format!("unknown vertex '{id}'")))
        };
        let (c, p) = (lookup("child")?, lookup("parent")?);
        if c == root_index {
            return Err(Error::schema(join(&at, "child"), "the root cannot be a child"));
        }
        if parent[c].is_some() {
            return Err(Error::schema(
                join(&at, "child"),
                format!("vertex '{}' already has a parent", ids[c]),
            ));
        }
        let w = map_from_json(field(eo, "weight", &at)?, &join(&at, "weight"))?;
        match channels {
            Some(k) if k != w.channels() => {
                return Err(Error::schema(
                    join(&at, "weight.channels"),
                    format!("expected {k} channels, got {}", w.channels()),
                ))
            }
            _ => channels = Some(w.channels()),
        }
        parent[c] = Some(p);
        weights[c] = Some(w);
    }
    if let Some(v) = (0..ids.len()).find(|&v| v != root_index && parent[v].is_none()) {
        return Err(Error::schema("edges", format!("vertex '{}' has no parent edge", ids[v])));
    }
    let structure = TreeStructure::new(ids, parent).map_err(|e| Error::schema("edges", e.to_string()))?;
    Dendrogram::new(structure, weights, heights, channels.unwrap_or(1)).map_err(|e| Error::schema("$", e.to_string()))
}

pub fn parse_dendrogram(text: &str) -> Result<Dendrogram> {
    dendrogram_from_json(&parse_text(text)?)
}

/// Any serializable value with the version field added at the top level.
pub fn to_versioned_string<T: Serialize>(value: &T) -> Result<String> {
    match serde_json::to_value(value)? {
        Value::Object(obj) => Ok(pretty(&versioned(obj))),
        _ => Err(Error::InvalidInput("only objects carry a format version".into())),
    }
}

/// Checks the version field, then deserializes the rest of the document.
pub fn from_versioned_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let Value::Object(mut obj) = parse_text(text)? else {
        return Err(Error::schema("$", "expected an object"));
    };
    check_version(&obj)?;
    obj.remove("format_version");
    serde_json::from_value(Value::Object(obj)).map_err(|e| Error::schema("$", e.to_string()))
}

pub fn plan_to_string(plan: &EditPlan) -> String {
    to_versioned_string(plan).expect("plans serialize to objects")
}

pub fn parse_plan(text: &str) -> Result<EditPlan> {
    from_versioned_str(text)
}

/// Betti table document: `{"dimension": p, "entries": {id: entry}}` where an
/// entry is either a vector `[b0, ..., bp]` or a list of steps
/// `[{"from": h, "betti": [b0, ..., bp]}, ...]`.
pub fn betti_to_string(table: &BettiTable) -> String {
    let entries: Map<String, Value> = table
        .entries
        .iter()
        .map(|(id, e)| {
            let v = match e {
                BettiEntry::Constant(b) => json!(b),
                BettiEntry::Steps(s) => {
                    Value::Array(s.iter().map(|(h, b)| json!({"from": h, "betti": b})).collect())
                }
            };
            (id.clone(), v)
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("dimension".into(), Value::from(table.dimension));
    obj.insert("entries".into(), Value::Object(entries));
    pretty(&versioned(obj))
}

pub fn parse_betti(text: &str) -> Result<BettiTable> {
    let v = parse_text(text)?;
    let obj = object(&v, "$")?;
    check_version(obj)?;
    let dimension = count(field(obj, "dimension", "$")?, "dimension")?;
    let mut entries = BTreeMap::new();
    for (id, e) in object(field(obj, "entries", "$")?, "entries")? {
        let at = format!("entries.{id}");
        let betti = |v: &Value, path: &str| -> Result<Vec<u32>> {
            array(v, path)?
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_u64()
                        .and_then(|b| u32::try_from(b).ok())
                        .ok_or_else(|| Error::schema(format!("{path}[{i}]"), "expected a Betti number"))
                })
                .collect()
        };
        let items = array(e, &at)?;
        let entry = if items.iter().all(Value::is_object) && !items.is_empty() {
            let mut steps = Vec::with_capacity(items.len());
            for (i, s) in items.iter().enumerate() {
                let sp = format!("{at}[{i}]");
                let so = object(s, &sp)?;
                let from = finite(field(so, "from", &sp)?, &join(&sp, "from"))?;
                steps.push((from, betti(field(so, "betti", &sp)?, &join(&sp, "betti"))?));
            }
            BettiEntry::Steps(steps)
        } else {
            BettiEntry::Constant(betti(e, &at)?)
        };
        entries.insert(id.clone(), entry);
    }
    let table = BettiTable { dimension, entries };
    table.check().map_err(|e| Error::schema("entries", e.to_string()))?;
    Ok(table)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Numeric rows of a CSV file. A first row that does not parse as numbers is
/// taken as a header and skipped.
fn numeric_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, record) in reader(text).records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::schema(format!("line {line}, column {}", c + 1), "value is not finite"));
                }
                rows.push(row);
            }
            Err(_) if i == 0 => {}
            Err(_) => {
                let c = record.iter().position(|s| s.parse::<f64>().is_err()).unwrap_or(0);
                return Err(Error::schema(
                    format!("line {line}, column {}", c + 1),
                    format!("'{}' is not a number", &record[c]),
                ));
            }
        }
    }
    Ok(rows)
}

/// Field CSV: columns `x,y`, header optional.
pub fn parse_field(text: &str) -> Result<ScalarField1D> {
    let rows = numeric_rows(text)?;
    if let Some(i) = rows.iter().position(|r| r.len() != 2) {
        return Err(Error::schema(format!("row {}", i + 1), "expected two columns x,y"));
    }
    ScalarField1D::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

pub fn field_to_csv(f: &ScalarField1D) -> String {
    let mut s = String::from("x,y\n");
    for (x, y) in f.xs().iter().zip(f.ys()) {
        s.push_str(&format!("{x:?},{y:?}\n"));
    }
    s
}

/// Cloud CSV: one row per point, header optional.
pub fn parse_cloud(text: &str) -> Result<PointCloud> {
    PointCloud::new(numeric_rows(text)?)
}

pub fn cloud_to_csv(c: &PointCloud) -> String {
    let mut s = String::new();
    let header: Vec<String> = (0..c.dim()).map(|i| format!("x{i}")).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for p in c.points() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Matrix CSV: a header row `label,l1,...,ln`, then one row per label.
pub fn matrix_to_csv(m: &DistanceMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label".to_string()];
    header.extend(m.labels().iter().cloned());
    w.write_record(&header)?;
    for (i, l) in m.labels().iter().enumerate() {
        let mut row = vec![l.clone()];
        row.extend((0..m.len()).map(|j| format!("{:?}", m.get(i, j))));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of strings is UTF-8"))
}

pub fn parse_matrix(text: &str) -> Result<DistanceMatrix> {
    let mut records = reader(text).into_records();
    let header = records.next().ok_or_else(|| Error::schema("line 1", "missing header row"))??;
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut values = Vec::with_capacity(n * n);
    for (i, record) in records.enumerate() {
        let record = record?;
        let line = i + 2;
        if i >= n {
            return Err(Error::schema(format!("line {line}"), format!("more than {n} rows")));
        }
        if record.len() != n + 1 {
            return Err(Error::schema(
                format!("line {line}"),
                format!("expected {} columns, got {}", n + 1, record.len()),
            ));
        }
        if record[0] != labels[i] {
            return Err(Error::schema(
                format!("line {line}, column 1"),
                format!("row label '{}' does not match column label '{}'", &record[0], labels[i]),
            ));
        }
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::schema(format!("line {line}, column {}", j + 2), format!("'{cell}' is not a number"))
            })?;
            values.push(v);
        }
    }
    if values.len() != n * n {
        return Err(Error::schema("$", format!("expected {n} rows, got {}", values.len() / n.max(1))));
    }
    DistanceMatrix::new(labels, values).map_err(|e| Error::schema("$", e.to_string()))
}
