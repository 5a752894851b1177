//! Reconstruct from an oracle served by another process.
//!
//! Any executable that speaks the newline-delimited JSON protocol can act
//! as the sample source: the client sends
//! `{"hello":{"n":...,"field":"real"}}`, the server answers
//! `{"ready":true}`, and each `{"id":...,"points":[[...],...]}` request
//! is answered with `{"id":...,"values":[...]}`. Here the server is an
//! inline Python script computing `f(x) = prod_k x_k / 2`, a rank-1
//! function that the reconstruction recovers exactly.

use std::io::Write;

use ttkit::site::{SiteSpec, SiteValue};
use ttkit::{decompose, pipe_oracle, sample_pivots_uniform, Oracle, SketchConfig};

const SERVER: &str = r#"
import json, sys

hello = json.loads(sys.stdin.readline())
assert hello["hello"]["field"] == "real"
print(json.dumps({"ready": True}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    values = []
    for point in req["points"]:
        v = 1.0
        for x in point:
            v *= x / 2.0
        values.append(v)
    print(json.dumps({"id": req["id"], "values": values}), flush=True)
"#;

fn main() {
    let mut script = tempfile::NamedTempFile::new().unwrap();
    script.write_all(SERVER.as_bytes()).unwrap();
    script.flush().unwrap();

    let n = 8;
    let sites: Vec<SiteSpec> = (0..n).map(|_| SiteSpec::discrete(2).unwrap()).collect();
    let command = format!("python3 {}", script.path().display());
    let oracle = pipe_oracle::<f64>(&command, sites, None).unwrap();

    let point: Vec<SiteValue> = vec![SiteValue::Index(2); n];
    let v = oracle.eval_batch(std::slice::from_ref(&point)).unwrap()[0];
    println!("server value at all-twos: {v} (exact 1)");

    let pivots = sample_pivots_uniform(oracle.sites(), 10, 4).unwrap();
    let cfg = SketchConfig::new(1, 0);
    let (tt, report) = decompose(&oracle, &pivots, &cfg).unwrap();
    println!(
        "recovered ranks {:?} from {} subprocess evaluations",
        tt.ranks(),
        report.oracle_calls
    );

    // the product function has rank 1; verify a few values
    for pattern in [[1usize, 1, 1, 1, 1, 1, 1, 1], [2, 1, 2, 1, 2, 1, 2, 1]] {
        let x: Vec<SiteValue> = pattern.iter().map(|&i| SiteValue::Index(i)).collect();
        let exact: f64 = pattern.iter().map(|&i| i as f64 / 2.0).product();
        println!(
            "  f{pattern:?} = {:.6} (exact {exact:.6})",
            tt.evaluate(&x).unwrap()
        );
    }
}
