//! Browser bindings. Each export returns a JSON string; the plain functions
//! behind them are what the native tests exercise.

use bvent::codec;
use bvent::cover::{family_ball_cover, family_cover_number, DEFAULT_NODE_BUDGET};
use bvent::packing::{lower_entropy_bound, packing_certificate, PackingFamily};
use bvent::snake::validity_check;
use bvent::{random_bv, BvClass};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest `N^n` the codec demo will render.
pub const DEMO_CELL_CAP: usize = 40_000;
/// Largest family dimension for the in-browser cover search.
pub const DEMO_COVER_CAP: usize = 10;

fn class(n: usize, side: f64, sup: f64, tv: f64) -> Result<BvClass, String> {
    BvClass::new(n, side, sup, tv).map_err(|e| e.to_string())
}

/// Log-spaced sweep of the lower bound, the encoder's bit length and the
/// closed-form upper budget.
pub fn bounds_curve_value(n: usize, side: f64, sup: f64, tv: f64, eps_min: f64, eps_max: f64, points: usize) -> Result<Value, String> {
    let c = class(n, side, sup, tv)?;
    if !(eps_min > 0.0 && eps_min < eps_max) || points < 2 {
        return Err("need 0 < eps_min < eps_max and at least two points".into());
    }
    let ratio = (eps_max / eps_min).ln();
    let rows: Vec<Value> = (0..points)
        .map(|i| if i + 1 == points { eps_max } else { eps_min * (ratio * i as f64 / (points - 1) as f64).exp() })
        .filter(|&eps| validity_check(&c, eps))
        .map(|eps| {
            let budget = codec::theoretical_bit_budget(&c, eps).expect("valid eps");
            json!({
                "eps": eps,
                "lower_bits": lower_entropy_bound(&c, eps).expect("valid eps"),
                "bit_length": codec::planned_bit_length(&c, eps).expect("valid eps"),
                "gamma_bits": budget.gamma_bits,
                "lemma_bits": budget.lemma_bits,
            })
        })
        .collect();
    Ok(json!({ "max_eps": c.max_eps(), "rows": rows }))
}

/// Encodes one seeded random member and returns it with its reconstruction.
pub fn codec_demo_value(n: usize, eps: f64, seed: u64, cells: usize) -> Result<Value, String> {
    let c = BvClass::unit(n);
    if !validity_check(&c, eps) {
        return Err(format!("eps must lie in (0, {}) for n = {n}", c.max_eps()));
    }
    let planned = bvent::snake::select_upper_params(&c, eps).map_err(|e| e.to_string())?;
    if planned.cells.pow(n as u32) > DEMO_CELL_CAP {
        return Err(format!("eps too small for the demo: {}^{n} cells", planned.cells));
    }
    let u = random_bv(&c, cells.clamp(1, 64), seed);
    let enc = codec::encode(&u, &c, eps).map_err(|e| e.to_string())?;
    let back = codec::decode(&enc).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n,
        "eps": eps,
        "original": { "N": u.cells(), "values": u.values() },
        "decoded": { "N": back.cells(), "values": back.values() },
        "distortion": u.l1_distance(&back).map_err(|e| e.to_string())?,
        "total_variation": u.total_variation(),
        "bit_length": codec::bit_length(&enc),
    }))
}

/// Packing-family counts, with an exact cover search for small families.
pub fn packing_value(n: usize, eps: f64) -> Result<Value, String> {
    let c = BvClass::unit(n);
    let r = packing_certificate(&c, eps).map_err(|e| e.to_string())?;
    let family = PackingFamily::new(&c, r.cells, r.height).map_err(|e| e.to_string())?;
    let cover = if r.m <= DEMO_COVER_CAP {
        let exact = family_cover_number(&family, eps, DEMO_COVER_CAP, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let balls = family_ball_cover(&family, eps, DEMO_COVER_CAP).map_err(|e| e.to_string())?;
        json!({ "best": exact.cover.min(balls), "exact": exact.exact, "independent": exact.independent, "ball_greedy": balls })
    } else {
        Value::Null
    };
    Ok(json!({
        "N": r.cells,
        "h": r.height,
        "m": r.m,
        "k": r.k,
        "exact_count": r.exact_count.to_string(),
        "hoeffding_log2": r.hoeffding_log2,
        "count_bits": r.exact_bits,
        "lower_bits": r.lower_entropy_bits,
        "cover_lower_bound": r.cover_lower_bound().to_string(),
        "cover": cover,
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bounds_curve(n: usize, side: f64, sup: f64, tv: f64, eps_min: f64, eps_max: f64, points: usize) -> Result<String, JsValue> {
    to_js(bounds_curve_value(n, side, sup, tv, eps_min, eps_max, points))
}

#[wasm_bindgen]
pub fn codec_demo(n: usize, eps: f64, seed: u64, cells: usize) -> Result<String, JsValue> {
    to_js(codec_demo_value(n, eps, seed, cells))
}

#[wasm_bindgen]
pub fn packing(n: usize, eps: f64) -> Result<String, JsValue> {
    to_js(packing_value(n, eps))
}
