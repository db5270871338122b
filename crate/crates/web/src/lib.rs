//! Browser bindings. Every export takes a run configuration in the CLI's
//! JSON schema and returns a JSON string.

use rangewalk::classify;
use rangewalk::config::RunConfig;
use rangewalk::dist_exact::{self, EntropyTarget, ExactConfig};
use rangewalk::estimate_mc;
use rangewalk::ladder::{self, SkipFreeMeasure};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Browser tabs get a smaller state budget than the CLI.
const MAX_STATES: usize = 2_000_000;
const MAX_N: usize = 12;
const MAX_LADDER_N: usize = 5000;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn entropies_json(config: &str, n_max: usize) -> Result<String, String> {
    let mu = RunConfig::from_json(config).map_err(fail)?.measure().map_err(fail)?;
    if n_max > MAX_N {
        return Err(format!("n_max is limited to {MAX_N} in the browser"));
    }
    let cfg = ExactConfig { max_states: MAX_STATES, max_paths: 1 << 26, ..Default::default() };
    let seq = dist_exact::entropy_sequence(&mu, n_max, &EntropyTarget::ALL, &cfg).map_err(fail)?;
    Ok(json!({
        "sequence": seq,
        "h_proxy": seq.h_proxy(),
        "invariant_violations": seq.invariant_violations(1e-9),
    })
    .to_string())
}

pub fn classify_json(config: &str) -> Result<String, String> {
    let mu = RunConfig::from_json(config).map_err(fail)?.measure().map_err(fail)?;
    let class = classify::classify(&mu);
    let prediction = classify::predict_vanishing(&class.kind).ok();
    let bound = estimate_mc::exact_h_gamma_lower_bound(&mu).map(|(a, b)| json!({"a": a.to_string(), "value": b.value}));
    Ok(json!({
        "class": class,
        "prediction": prediction.map(|(r, g)| json!({"h_r_zero": r, "h_gamma_zero": g})),
        "escape_rate": estimate_mc::exact_escape_rate(&mu),
        "trace_lower_bound": bound,
    })
    .to_string())
}

pub fn supremum_json(config: &str, n: usize) -> Result<String, String> {
    let mu = RunConfig::from_json(config).map_err(fail)?.measure().map_err(fail)?;
    if n > MAX_LADDER_N {
        return Err(format!("n is limited to {MAX_LADDER_N} in the browser"));
    }
    let sk = SkipFreeMeasure::from_measure(&mu).map_err(fail)?;
    let law = ladder::supremum_law(&sk, n).map_err(fail)?;
    let eta = ladder::entropy_eta(&sk, &law).map_err(fail)?;
    Ok(json!({
        "f": law.f,
        "tail_mass": law.tail_mass,
        "eta_entropy": eta.interval(),
        "eta_partial": eta.partial,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn entropies(config: &str, n_max: u32) -> Result<String, JsValue> {
    entropies_json(config, n_max as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify_walk(config: &str) -> Result<String, JsValue> {
    classify_json(config).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn supremum_law(config: &str, n: u32) -> Result<String, JsValue> {
    supremum_json(config, n as usize).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRIFTED: &str = r#"{"group":{"kind":"Z"},"mu":[{"elem":-1,"prob":0.7},{"elem":1,"prob":0.3}],"seed":42}"#;

    #[test]
    fn exports_return_json() {
        let v: serde_json::Value = serde_json::from_str(&entropies_json(DRIFTED, 4).unwrap()).unwrap();
        assert_eq!(v["sequence"]["range_endpoint"].as_array().unwrap().len(), 5);
        let c: serde_json::Value = serde_json::from_str(&classify_json(DRIFTED).unwrap()).unwrap();
        assert_eq!(c["class"]["kind"]["kind"], "TransientNoLeftJump");
        let s: serde_json::Value = serde_json::from_str(&supremum_json(DRIFTED, 20).unwrap()).unwrap();
        assert!((s["f"][0].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn limits_and_errors() {
        assert!(entropies_json(DRIFTED, 40).is_err());
        assert!(classify_json("{").is_err());
        let sym = r#"{"group":{"kind":"Z"},"mu":[{"elem":-1,"prob":0.5},{"elem":1,"prob":0.5}],"seed":1}"#;
        assert!(supremum_json(sym, 10).is_err());
    }
}
