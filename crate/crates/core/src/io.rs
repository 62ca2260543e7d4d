//! JSON and CSV formats. Complex numbers are `[re, im]` pairs, matrices are
//! flattened row-major.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::convergence::{ConvergenceReport, FormSequenceProblem, Member};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentKind, ExperimentSpec};
use crate::forms::{FormInH, Sector};
use crate::linalg::{c64, CMatrix};
use crate::semigroup::SemigroupConvergence;

pub const CONVERGENCE_HEADER: [&str; 7] = [
    "n",
    "sector_margin",
    "defect_max",
    "strong_err_max",
    "op_norm_err",
    "cea_lhs",
    "cea_rhs",
];

pub const SEMIGROUP_HEADER: [&str; 3] = ["n", "probe_index", "sup_err"];

/// Row-major `[re, im]` pairs.
pub fn flatten(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

/// Seventeen significant digits; `NaN` marks a value that was not computed.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

fn object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(field, "expected a JSON object"))
}

fn get<'a>(obj: &'a Map<String, Value>, prefix: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(join(prefix, key), "missing"))
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn uint(v: &Value, field: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(field, "expected a non-negative integer"))
}

fn float(v: &Value, field: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(schema(field, "expected a finite number")),
    }
}

/// Flat list of `[re, im]` pairs.
fn complex_list(v: &Value, field: &str) -> Result<Vec<c64>> {
    let items = v
        .as_array()
        .ok_or_else(|| schema(field, "expected an array of [re, im] pairs"))?;
    items
        .iter()
        .enumerate()
        .map(|(k, item)| {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                schema(format!("{field}[{k}]"), "expected a two-element array [re, im]")
            })?;
            let re = float(&pair[0], &format!("{field}[{k}][0]"))?;
            let im = float(&pair[1], &format!("{field}[{k}][1]"))?;
            Ok(c64::new(re, im))
        })
        .collect()
}

fn matrix(v: &Value, field: &str, rows: usize, cols: usize) -> Result<CMatrix> {
    let data = complex_list(v, field)?;
    if data.len() != rows * cols {
        return Err(schema(
            field,
            format!("expected {} entries for a {rows}x{cols} matrix, got {}", rows * cols, data.len()),
        ));
    }
    Ok(faer::Mat::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

/// Matrix with a known row count; the column count follows from the length.
fn matrix_with_rows(v: &Value, field: &str, rows: usize) -> Result<CMatrix> {
    let data = complex_list(v, field)?;
    if rows == 0 {
        if !data.is_empty() {
            return Err(schema(field, "expected no entries for a matrix with zero rows"));
        }
        return Ok(crate::linalg::zeros(0, 0));
    }
    if data.len() % rows != 0 {
        return Err(schema(field, format!("{} entries is not a multiple of {rows} rows", data.len())));
    }
    let cols = data.len() / rows;
    Ok(faer::Mat::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

fn square_matrix(v: &Value, field: &str) -> Result<CMatrix> {
    let data = complex_list(v, field)?;
    let k = (data.len() as f64).sqrt().round() as usize;
    if k * k != data.len() {
        return Err(schema(field, format!("{} entries do not form a square matrix", data.len())));
    }
    Ok(faer::Mat::from_fn(k, k, |i, j| data[i * k + j]))
}

fn form_from_object(obj: &Map<String, Value>, prefix: &str) -> Result<FormInH> {
    let m = uint(get(obj, prefix, "m")?, &join(prefix, "m"))?;
    let d = uint(get(obj, prefix, "d")?, &join(prefix, "d"))?;
    let f = matrix(get(obj, prefix, "F")?, &join(prefix, "F"), m, m)?;
    let j = matrix(get(obj, prefix, "J")?, &join(prefix, "J"), d, m)?;
    FormInH::new(f, j).map_err(|e| schema(join(prefix, "F"), e.to_string()))
}

/// `{"m", "d", "F", "J"}`.
pub fn form_from_value(v: &Value) -> Result<FormInH> {
    form_from_object(object(v, "<root>")?, "")
}

pub fn form_to_value(form: &FormInH) -> Value {
    json!({
        "m": form.m(),
        "d": form.d(),
        "F": flatten(&form.f),
        "J": flatten(&form.j),
    })
}

/// Optional `theta`/`gamma` stored next to a form.
pub fn sector_from_value(v: &Value) -> Result<Option<Sector>> {
    let obj = object(v, "<root>")?;
    match (obj.get("theta"), obj.get("gamma")) {
        (None, None) => Ok(None),
        (t, g) => {
            let theta = t.map(|t| float(t, "theta")).transpose()?.unwrap_or(0.0);
            let gamma = g.map(|g| float(g, "gamma")).transpose()?.unwrap_or(0.0);
            Sector::new(theta, gamma)
                .map(Some)
                .map_err(|e| schema("theta", e.to_string()))
        }
    }
}

/// Base form plus `members: [{"Fn", "iota"}]`, `theta`, `gamma` and an
/// optional `core` (`m × c`).
pub fn problem_from_value(v: &Value) -> Result<FormSequenceProblem> {
    let obj = object(v, "<root>")?;
    let base = form_from_object(obj, "")?;
    let theta = float(get(obj, "", "theta")?, "theta")?;
    let gamma = float(get(obj, "", "gamma")?, "gamma")?;
    let sector = Sector::new(theta, gamma).map_err(|e| schema("theta", e.to_string()))?;
    let list = get(obj, "", "members")?
        .as_array()
        .ok_or_else(|| schema("members", "expected an array"))?;
    let mut members = Vec::with_capacity(list.len());
    for (k, item) in list.iter().enumerate() {
        let prefix = format!("members[{k}]");
        let mo = object(item, &prefix)?;
        let f = square_matrix(get(mo, &prefix, "Fn")?, &join(&prefix, "Fn"))?;
        let iota = matrix(get(mo, &prefix, "iota")?, &join(&prefix, "iota"), base.m(), f.nrows())?;
        members.push(Member { f, iota });
    }
    let core = match obj.get("core") {
        None | Some(Value::Null) => None,
        Some(c) => Some(matrix_with_rows(c, "core", base.m())?),
    };
    FormSequenceProblem::new(base, sector, members, core).map_err(|e| match e {
        Error::Schema { .. } => e,
        other => schema("members", other.to_string()),
    })
}

pub fn problem_to_value(p: &FormSequenceProblem) -> Value {
    let mut v = form_to_value(&p.base);
    let obj = v.as_object_mut().expect("object");
    obj.insert("theta".into(), json!(p.sector.theta));
    obj.insert("gamma".into(), json!(p.sector.gamma));
    obj.insert(
        "members".into(),
        Value::Array(
            p.members
                .iter()
                .map(|m| json!({"Fn": flatten(&m.f), "iota": flatten(&m.iota)}))
                .collect(),
        ),
    );
    if let Some(c) = &p.core {
        obj.insert("core".into(), json!(flatten(c)));
    }
    v
}

/// Parses an experiment specification, naming the offending field on error.
pub fn experiment_spec_from_value(v: &Value) -> Result<ExperimentSpec> {
    let obj = object(v, "<root>")?;
    const KNOWN: [&str; 8] = ["kind", "d", "N", "lambda", "theta", "gamma", "theta0", "seed"];
    if let Some(extra) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(schema(extra.as_str(), "unknown field"));
    }
    let kind: ExperimentKind = get(obj, "", "kind")?
        .as_str()
        .ok_or_else(|| schema("kind", "expected a string"))?
        .parse()?;
    let theta0 = match obj.get("theta0") {
        None | Some(Value::Null) => None,
        Some(t) => Some(float(t, "theta0")?),
    };
    let seed = get(obj, "", "seed")?
        .as_u64()
        .ok_or_else(|| schema("seed", "expected a non-negative integer"))?;
    let spec = ExperimentSpec {
        kind,
        d: uint(get(obj, "", "d")?, "d")?,
        n: uint(get(obj, "", "N")?, "N")?,
        lambda: float(get(obj, "", "lambda")?, "lambda")?,
        theta: float(get(obj, "", "theta")?, "theta")?,
        gamma: float(get(obj, "", "gamma")?, "gamma")?,
        theta0,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_json(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema("<root>", format!("{}: {e}", path.display())))
}

fn opt(x: Option<f64>) -> String {
    format_float(x.unwrap_or(f64::NAN))
}

pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            format_float(r.sector_margin),
            opt(r.defect_max),
            format_float(r.strong_err_max),
            format_float(r.op_norm_err),
            opt(r.cea_lhs),
            opt(r.cea_rhs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the numeric columns of a convergence CSV.
pub fn read_convergence_csv<R: std::io::Read>(input: R) -> Result<Vec<[f64; 7]>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CONVERGENCE_HEADER {
        return Err(schema("header", format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [0.0; 7];
        for (k, cell) in rec.iter().enumerate().take(7) {
            row[k] = cell
                .parse()
                .map_err(|_| schema(CONVERGENCE_HEADER[k], format!("not a number: {cell}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn convergence_json(report: &ConvergenceReport) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "sector_margin": r.sector_margin,
                "defect_max": r.defect_max,
                "strong_err_max": r.strong_err_max,
                "op_norm_err": r.op_norm_err,
                "cea_lhs": r.cea_lhs,
                "cea_rhs": r.cea_rhs,
                "unif_est_passes": r.unif_est_passes,
                "strong_errors": r.strong_errors,
            })
        })
        .collect();
    json!({"lambda": report.lambda, "rows": rows})
}

pub fn write_semigroup_csv<W: Write>(conv: &SemigroupConvergence, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SEMIGROUP_HEADER)?;
    for r in &conv.rows {
        w.write_record([r.n.to_string(), r.probe_index.to_string(), format_float(r.sup_err)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn matrix_json(m: &CMatrix) -> Value {
    json!({"rows": m.nrows(), "cols": m.ncols(), "data": flatten(m)})
}
