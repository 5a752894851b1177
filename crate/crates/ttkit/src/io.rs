//! On-disk formats: tensor trains as `ttjson/1` documents and pivot sets
//! as CSV.
//!
//! A `ttjson/1` file is a JSON object with `format`, `field` ("real" or
//! "complex"), `n`, `dims`, `ranks` (length n+1), `embeddings`
//! (descriptor strings), `domains` ("discrete" or `[lo, hi]` per site),
//! and `cores` nested as bond-in x physical x bond-out; complex entries
//! are `[re, im]` pairs. Numbers are written in round-trip-exact form, so
//! save followed by load reproduces every finite double bit for bit,
//! negative zero included.
//!
//! Pivot CSV holds one configuration per row with one column per site:
//! 1-based integers for discrete sites, `.`-decimal reals for interval
//! sites. No header by default; loading can skip one.

use std::fs;
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{shape_err, TtError, TtResult};
use crate::field::{Field, FieldTag};
use crate::site::{Configuration, Domain, SiteSpec};
use crate::sketch::PivotSet;
use crate::tt::{AnyTt, TensorTrain};

const FORMAT: &str = "ttjson/1";

#[derive(Serialize, Deserialize)]
struct TtDocument {
    format: String,
    field: String,
    n: usize,
    dims: Vec<usize>,
    ranks: Vec<usize>,
    embeddings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domains: Option<Vec<DomainDoc>>,
    cores: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DomainDoc {
    Name(String),
    Interval([f64; 2]),
}

fn domain_doc(spec: &SiteSpec) -> DomainDoc {
    match spec.domain() {
        Domain::Discrete => DomainDoc::Name("discrete".into()),
        Domain::Interval { lo, hi } => DomainDoc::Interval([lo, hi]),
    }
}

fn core_value<T: Field>(core: &Array3<T>) -> Value {
    let (rl, d, rr) = core.dim();
    let mut rows = Vec::with_capacity(rl);
    for a in 0..rl {
        let mut mids = Vec::with_capacity(d);
        for i in 0..d {
            let mut cols = Vec::with_capacity(rr);
            for b in 0..rr {
                cols.push(core[[a, i, b]].to_json());
            }
            mids.push(Value::Array(cols));
        }
        rows.push(Value::Array(mids));
    }
    Value::Array(rows)
}

fn document<T: Field>(tt: &TensorTrain<T>) -> TtDocument {
    TtDocument {
        format: FORMAT.into(),
        field: T::TAG.as_str().into(),
        n: tt.n(),
        dims: tt.dims(),
        ranks: tt.ranks(),
        embeddings: tt
            .sites()
            .iter()
            .map(|s| s.embedding().descriptor())
            .collect(),
        domains: Some(tt.sites().iter().map(domain_doc).collect()),
        cores: tt.cores().iter().map(core_value).collect(),
    }
}

fn render(doc: &TtDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("document serializes");
    out.push('\n');
    out
}

/// Serialize a tensor train to a `ttjson/1` string.
pub fn tt_to_string<T: Field>(tt: &TensorTrain<T>) -> String {
    render(&document(tt))
}

/// Write a tensor train to `path` as `ttjson/1`.
pub fn save_tt<T: Field>(tt: &TensorTrain<T>, path: impl AsRef<Path>) -> TtResult<()> {
    fs::write(path, tt_to_string(tt))?;
    Ok(())
}

/// Write either field's tensor train to `path` as `ttjson/1`.
pub fn save_any_tt(tt: &AnyTt, path: impl AsRef<Path>) -> TtResult<()> {
    match tt {
        AnyTt::Real(t) => save_tt(t, path),
        AnyTt::Complex(t) => save_tt(t, path),
    }
}

fn entry_real(v: &Value, path: &str) -> TtResult<f64> {
    match v.as_f64() {
        Some(x) => Ok(x),
        None => shape_err(format!("{path}: expected a number, got {v}")),
    }
}

fn entry_complex(v: &Value, path: &str) -> TtResult<Complex64> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            let re = entry_real(&pair[0], path)?;
            let im = entry_real(&pair[1], path)?;
            Ok(Complex64::new(re, im))
        }
        other => shape_err(format!(
            "{path}: expected a [re, im] pair, got {other}"
        )),
    }
}

fn parse_core<T: Field>(
    value: &Value,
    k: usize,
    rl: usize,
    d: usize,
    rr: usize,
    entry: &dyn Fn(&Value, &str) -> TtResult<T>,
) -> TtResult<Array3<T>> {
    let base = format!("cores[{k}]");
    let rows = value
        .as_array()
        .ok_or_else(|| TtError::Shape(format!("{base}: expected an array")))?;
    if rows.len() != rl {
        return shape_err(format!(
            "{base}: {} bond-in slices, ranks say {rl}",
            rows.len()
        ));
    }
    let mut core = Array3::from_elem((rl, d, rr), T::from_real(0.0));
    for (a, row) in rows.iter().enumerate() {
        let mids = row
            .as_array()
            .ok_or_else(|| TtError::Shape(format!("{base}[{a}]: expected an array")))?;
        if mids.len() != d {
            return shape_err(format!(
                "{base}[{a}]: {} physical entries, dims say {d}",
                mids.len()
            ));
        }
        for (i, mid) in mids.iter().enumerate() {
            let cols = mid
                .as_array()
                .ok_or_else(|| TtError::Shape(format!("{base}[{a}][{i}]: expected an array")))?;
            if cols.len() != rr {
                return shape_err(format!(
                    "{base}[{a}][{i}]: {} bond-out entries, ranks say {rr}",
                    cols.len()
                ));
            }
            for (b, v) in cols.iter().enumerate() {
                core[[a, i, b]] = entry(v, &format!("{base}[{a}][{i}][{b}]"))?;
            }
        }
    }
    Ok(core)
}

fn build_sites(doc: &TtDocument) -> TtResult<Vec<SiteSpec>> {
    let n = doc.n;
    if doc.dims.len() != n {
        return shape_err(format!("dims lists {} entries for n = {n}", doc.dims.len()));
    }
    if doc.ranks.len() != n + 1 {
        return shape_err(format!(
            "ranks lists {} entries, need n + 1 = {}",
            doc.ranks.len(),
            n + 1
        ));
    }
    if doc.embeddings.len() != n {
        return shape_err(format!(
            "embeddings lists {} entries for n = {n}",
            doc.embeddings.len()
        ));
    }
    if let Some(ds) = &doc.domains {
        if ds.len() != n {
            return shape_err(format!("domains lists {} entries for n = {n}", ds.len()));
        }
    }
    let mut sites = Vec::with_capacity(n);
    for k in 0..n {
        let embedding = crate::embed::Embedding::parse_descriptor(&doc.embeddings[k])
            .map_err(|e| TtError::Shape(format!("embeddings[{k}]: {e}")))?;
        let domain = match doc.domains.as_ref().map(|ds| &ds[k]) {
            None => Domain::Discrete,
            Some(DomainDoc::Name(s)) if s == "discrete" => Domain::Discrete,
            Some(DomainDoc::Name(s)) => {
                return shape_err(format!("domains[{k}]: unknown domain {s:?}"));
            }
            Some(DomainDoc::Interval([lo, hi])) => Domain::Interval { lo: *lo, hi: *hi },
        };
        let spec = SiteSpec::from_parts(embedding, domain)
            .map_err(|e| TtError::Shape(format!("domains[{k}]: {e}")))?;
        if spec.dim() != doc.dims[k] {
            return shape_err(format!(
                "dims[{k}] = {} disagrees with embedding dimension {}",
                doc.dims[k],
                spec.dim()
            ));
        }
        sites.push(spec);
    }
    Ok(sites)
}

/// Parse a `ttjson/1` string.
pub fn tt_from_string(text: &str) -> TtResult<AnyTt> {
    let doc: TtDocument =
        serde_json::from_str(text).map_err(|e| TtError::Io(format!("ttjson parse: {e}")))?;
    if doc.format != FORMAT {
        return Err(TtError::Unsupported(format!(
            "unsupported format {:?} (this reader understands {FORMAT:?})",
            doc.format
        )));
    }
    let sites = build_sites(&doc)?;
    if doc.cores.len() != doc.n {
        return shape_err(format!(
            "cores lists {} entries for n = {}",
            doc.cores.len(),
            doc.n
        ));
    }
    let dims = &doc.dims;
    let ranks = &doc.ranks;
    match doc.field.as_str() {
        tag if tag == FieldTag::Real64.as_str() => {
            let mut cores = Vec::with_capacity(doc.n);
            for k in 0..doc.n {
                cores.push(parse_core::<f64>(
                    &doc.cores[k],
                    k,
                    ranks[k],
                    dims[k],
                    ranks[k + 1],
                    &entry_real,
                )?);
            }
            Ok(AnyTt::Real(TensorTrain::new(sites, cores)?))
        }
        tag if tag == FieldTag::Complex128.as_str() => {
            let mut cores = Vec::with_capacity(doc.n);
            for k in 0..doc.n {
                cores.push(parse_core::<Complex64>(
                    &doc.cores[k],
                    k,
                    ranks[k],
                    dims[k],
                    ranks[k + 1],
                    &entry_complex,
                )?);
            }
            Ok(AnyTt::Complex(TensorTrain::new(sites, cores)?))
        }
        other => shape_err(format!("unknown field {other:?}")),
    }
}

/// Read a `ttjson/1` file.
pub fn load_tt(path: impl AsRef<Path>) -> TtResult<AnyTt> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| TtError::Io(format!("{}: {e}", path.display())))?;
    tt_from_string(&text)
}

/// Serialize pivots as CSV, one row per configuration.
pub fn pivots_to_string(pivots: &PivotSet) -> String {
    let mut out = String::new();
    for row in pivots.points() {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                crate::site::SiteValue::Index(i) => i.to_string(),
                crate::site::SiteValue::Real(x) => {
                    let mut s = format!("{x}");
                    if !s.contains('.') && !s.contains('e') && !s.contains("inf") {
                        s.push_str(".0");
                    }
                    s
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write pivots to a CSV file.
pub fn save_pivots(pivots: &PivotSet, path: impl AsRef<Path>) -> TtResult<()> {
    fs::write(path, pivots_to_string(pivots))?;
    Ok(())
}

/// Parse configuration CSV rows against the given site specs without any
/// distinctness requirement. `skip_header` drops the first line. Errors
/// carry 1-based line numbers.
pub fn configs_from_string(
    text: &str,
    sites: &[SiteSpec],
    skip_header: bool,
) -> TtResult<Vec<Configuration>> {
    let n = sites.len();
    let mut rows: Vec<Configuration> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if skip_header && lineno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return shape_err(format!(
                "line {}: {} columns for {n} sites",
                lineno + 1,
                cells.len()
            ));
        }
        let mut config = Vec::with_capacity(n);
        for (k, cell) in cells.iter().enumerate() {
            let x: f64 = cell.trim().parse().map_err(|_| {
                TtError::Io(format!(
                    "line {}, column {}: cannot parse {:?} as a number",
                    lineno + 1,
                    k + 1,
                    cell.trim()
                ))
            })?;
            let v = sites[k].value_from_f64(x).map_err(|e| {
                TtError::Domain(format!("line {}, column {}: {e}", lineno + 1, k + 1))
            })?;
            config.push(v);
        }
        rows.push(config);
    }
    Ok(rows)
}

/// Parse pivot CSV against the given site specs. `skip_header` drops the
/// first line. Errors carry 1-based line numbers.
pub fn pivots_from_string(
    text: &str,
    sites: &[SiteSpec],
    skip_header: bool,
) -> TtResult<PivotSet> {
    PivotSet::new(configs_from_string(text, sites, skip_header)?, sites)
}

/// Read pivot CSV from a file.
pub fn load_pivots(
    path: impl AsRef<Path>,
    sites: &[SiteSpec],
    skip_header: bool,
) -> TtResult<PivotSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| TtError::Io(format!("{}: {e}", path.display())))?;
    pivots_from_string(&text, sites, skip_header)
}

/// Serialize any JSON-representable report next to the human summary.
pub fn save_json(value: &Value, path: impl AsRef<Path>) -> TtResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("valid json value");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn report_json<T: Serialize>(report: &T) -> Value {
    serde_json::to_value(report).unwrap_or_else(|e| json!({ "error": e.to_string() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::site::SiteValue;
    use ndarray::Array3;

    fn rank1() -> TensorTrain<f64> {
        let sites = vec![
            SiteSpec::discrete(2).unwrap(),
            SiteSpec::discrete(2).unwrap(),
        ];
        let g1 = Array3::from_shape_vec((1, 2, 1), vec![1.0, 2.0]).unwrap();
        let g2 = Array3::from_shape_vec((1, 2, 1), vec![3.0, -0.0]).unwrap();
        TensorTrain::new(sites, vec![g1, g2]).unwrap()
    }

    #[test]
    fn roundtrip_real_bit_exact() {
        let tt = rank1();
        let text = tt_to_string(&tt);
        let back = tt_from_string(&text).unwrap();
        let AnyTt::Real(back) = back else {
            panic!("field changed in round trip")
        };
        assert_eq!(tt, back);
        // negative zero survives with its sign bit
        assert_eq!(back.cores()[1][[0, 1, 0]].to_bits(), (-0.0f64).to_bits());
        for a in 1..=2 {
            for b in 1..=2 {
                let x = vec![SiteValue::Index(a), SiteValue::Index(b)];
                assert_eq!(tt.evaluate(&x).unwrap(), back.evaluate(&x).unwrap());
            }
        }
        // serialization is stable
        assert_eq!(text, tt_to_string(&back));
    }

    #[test]
    fn roundtrip_complex_exact_fidelity() {
        let tt = crate::aklt::build_aklt_tt(10).unwrap();
        let text = tt_to_string(&tt);
        let back = tt_from_string(&text).unwrap();
        let AnyTt::Complex(back) = back else {
            panic!("field changed in round trip")
        };
        assert_eq!(tt, back);
        assert!((crate::tt::fidelity(&tt, &back).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corrupt_ranks_name_the_core() {
        let tt = crate::tt::TensorTrain::new(
            (0..5)
                .map(|_| SiteSpec::discrete(2).unwrap())
                .collect::<Vec<_>>(),
            vec![
                Array3::from_elem((1, 2, 2), 1.0),
                Array3::from_elem((2, 2, 2), 1.0),
                Array3::from_elem((2, 2, 2), 1.0),
                Array3::from_elem((2, 2, 2), 1.0),
                Array3::from_elem((2, 2, 1), 1.0),
            ],
        )
        .unwrap();
        let mut doc: Value = serde_json::from_str(&tt_to_string(&tt)).unwrap();
        doc["ranks"][3] = Value::from(3);
        let err = tt_from_string(&doc.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cores[3]") || msg.contains("cores[2]"), "{msg}");
    }

    #[test]
    fn rejects_unknown_format_and_field() {
        let tt = rank1();
        let mut doc: Value = serde_json::from_str(&tt_to_string(&tt)).unwrap();
        doc["format"] = Value::from("ttjson/9");
        assert!(tt_from_string(&doc.to_string()).is_err());
        let mut doc: Value = serde_json::from_str(&tt_to_string(&tt)).unwrap();
        doc["field"] = Value::from("quaternion");
        assert!(tt_from_string(&doc.to_string()).is_err());
    }

    #[test]
    fn pivot_csv_roundtrip() {
        let sites = vec![
            SiteSpec::discrete(2).unwrap(),
            SiteSpec::discrete(3).unwrap(),
        ];
        let pivots = PivotSet::new(
            vec![
                vec![SiteValue::Index(1), SiteValue::Index(3)],
                vec![SiteValue::Index(2), SiteValue::Index(1)],
                vec![SiteValue::Index(2), SiteValue::Index(2)],
            ],
            &sites,
        )
        .unwrap();
        let text = pivots_to_string(&pivots);
        assert_eq!(text, "1,3\n2,1\n2,2\n");
        let back = pivots_from_string(&text, &sites, false).unwrap();
        assert_eq!(back.points(), pivots.points());
        let with_header = format!("a,b\n{text}");
        let back = pivots_from_string(&with_header, &sites, true).unwrap();
        assert_eq!(back.len(), 3);
    }

    #[test]
    fn pivot_csv_errors_carry_line_numbers() {
        let sites = vec![
            SiteSpec::discrete(2).unwrap(),
            SiteSpec::discrete(3).unwrap(),
        ];
        let err = pivots_from_string("1,2\n1\n", &sites, false).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = pivots_from_string("1,2\n2,9\n", &sites, false).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = pivots_from_string("1,2\n2,x\n", &sites, false).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");
    }

    #[test]
    fn pivot_csv_continuous_values() {
        let sites = vec![SiteSpec::interval(
            crate::embed::Embedding::parse_descriptor("poly:2").unwrap(),
            0.0,
            1.0,
        )
        .unwrap()];
        let p = pivots_from_string("0.25\n0.75\n", &sites, false).unwrap();
        assert_eq!(
            p.points()[0][0],
            SiteValue::Real(0.25)
        );
        let text = pivots_to_string(&p);
        assert_eq!(text, "0.25\n0.75\n");
        assert!(pivots_from_string("0.25\n1.5\n", &sites, false).is_err());
    }
}
