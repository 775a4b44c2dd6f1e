//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; errors become JS exceptions. The
//! `*_json` functions are the same operations with Rust errors, for native use.

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use padic_theta::galrep::{self, LocalShape, ReductionInput};
use padic_theta::padic::{parse_rational, rational_to_f64};
use padic_theta::qexp::{self, Eigenvalue, Provenance};
use padic_theta::thetalift::{self, LiftBounds, Outcome};
use padic_theta::upslopes::{self, Caps};
use padic_theta::{EigenformRecord, PadicScalar, QSeries};

const MAX_DIMENSION: usize = 60;

#[derive(Serialize)]
struct Vertex {
    x: usize,
    y: f64,
}

/// Certified slopes at weight `k` plus the vertices of the Newton polygon
/// of the characteristic series, for plotting.
pub fn newton_polygon_json(p: u64, k: i64, count: usize) -> Result<String, String> {
    let caps = Caps { max_dimension: MAX_DIMENSION, ..Caps::default() };
    let seq = upslopes::slope_sequence_with(p, k, count, true, caps).map_err(|e| e.to_string())?;
    let mut vertices = vec![Vertex { x: 0, y: 0.0 }];
    let (mut x, mut y) = (0usize, 0.0f64);
    for s in &seq.slopes {
        x += s.mult;
        y += rational_to_f64(s.slope) * s.mult as f64;
        vertices.push(Vertex { x, y });
    }
    Ok(json!({ "slopes": seq, "vertices": vertices }).to_string())
}

/// Local shape for weight `k` and slope, its twist by `omega^j`, and the
/// determinant exponent. `ap` is optional (empty string for none).
pub fn classify_json(p: u64, k: i64, slope: &str, ap: &str, j: i64) -> Result<String, String> {
    let slope = parse_rational(slope).map_err(|e| e.to_string())?;
    let mut input = ReductionInput::new(p, k, slope).map_err(|e| e.to_string())?;
    if !ap.trim().is_empty() {
        let a: BigInt = ap.trim().parse().map_err(|_| format!("a_p must be an integer, got {ap:?}"))?;
        input =
            input.with_eigenvalue(Eigenvalue::Padic(PadicScalar::new(p, &a, padic_theta::DEFAULT_PRECISION)));
    }
    let shape = galrep::classify(&input, None).map_err(|e| e.to_string())?;
    let twisted = shape.twist(j);
    let det = |s: &LocalShape| s.det_exponent().ok();
    Ok(json!({
        "shape": shape.to_string(),
        "det": det(&shape),
        "twist": j,
        "twisted": twisted.to_string(),
        "twisted_det": det(&twisted),
        "covered": shape.is_covered(),
    })
    .to_string())
}

fn fixture(name: &str, depth: usize) -> Result<QSeries, String> {
    match name {
        "delta" => Ok(qexp::delta(depth)),
        "e4" => qexp::eisenstein_eigenform(4, depth).map_err(|e| e.to_string()),
        "e6" => qexp::eisenstein_eigenform(6, depth).map_err(|e| e.to_string()),
        other => match other.strip_prefix("eis:").and_then(|k| k.parse().ok()) {
            Some(k) => qexp::eisenstein_eigenform(k, depth).map_err(|e| e.to_string()),
            None => Err(format!("unknown fixture {other:?}")),
        },
    }
}

fn residue(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.try_into().expect("residue fits")
}

/// Searches for `g = theta^(kappa-1) f mod p` and tabulates both sides mod `p`
/// for `n <= rows`.
pub fn theta_table_json(name: &str, p: u64, kappa: u32, l_max: i64, rows: usize) -> Result<String, String> {
    let bounds =
        LiftBounds { l_max, depth: Some(rows), max_dimension: MAX_DIMENSION, ..LiftBounds::default() };
    let depth = qexp::sturm_depth(l_max, p).max(rows).max(p as usize);
    let f =
        EigenformRecord::classical(fixture(name, depth)?, p, bounds.precision, Provenance::ClassicalLevel1)
            .map_err(|e| e.to_string())?;
    let report = thetalift::lift_search(&f, kappa, &bounds).map_err(|e| e.to_string())?;
    let theta = qexp::theta_power(&f.series, kappa).map_err(|e| e.to_string())?;
    let (status, g) = match &report.outcome {
        Outcome::Found { g } => ("found", Some(g)),
        Outcome::Exhausted { .. } => ("exhausted", None),
        Outcome::Capped { .. } => ("capped", None),
    };
    let table: Vec<_> = (1..=rows.min(theta.n_max()))
        .map(|n| {
            let lhs = residue(&theta.coeffs[n], p);
            let rhs = g.and_then(|g| g.series.coeffs.get(n)).map(|c| residue(c, p));
            json!({ "n": n, "f": residue(&f.series.coeffs[n], p), "theta_f": lhs, "g": rhs })
        })
        .collect();
    Ok(json!({
        "status": status,
        "weight": g.map(|g| g.l),
        "slope": g.map(|g| g.slope.to_string()),
        "target_slope": report.target_slope.to_string(),
        "candidates": report.candidates.len(),
        "rows": table,
    })
    .to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn newton_polygon(p: u32, k: i32, count: u32) -> Result<String, JsError> {
    js(newton_polygon_json(p.into(), k.into(), count as usize))
}

#[wasm_bindgen]
pub fn classify(p: u32, k: i32, slope: &str, ap: &str, j: i32) -> Result<String, JsError> {
    js(classify_json(p.into(), k.into(), slope, ap, j.into()))
}

#[wasm_bindgen]
pub fn theta_table(name: &str, p: u32, kappa: u32, l_max: i32, rows: u32) -> Result<String, JsError> {
    js(theta_table_json(name, p.into(), kappa, l_max.into(), rows as usize))
}
