//! wasm-bindgen entry points for the browser demo. Every function returns a
//! JSON string; errors come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hyperorbit::constructions::{factorial_tail, julia_ray_bisection, weight_identity, JuliaConfig};
use hyperorbit::dynamics::iterate_polynomial;
use hyperorbit::spaces::{SeqVector, SpaceTag, WeightGen, WeightSeq};

fn weights(name: &str) -> Result<WeightSeq, String> {
    match name {
        "inverse_square" => Ok(WeightSeq::inverse_square()),
        "unit" => Ok(WeightSeq::unit()),
        "linear" => Ok(WeightSeq::linear()),
        other => other
            .strip_prefix("constant:")
            .and_then(|c| c.parse::<f64>().ok())
            .ok_or_else(|| format!("unknown weights {other:?}"))
            .and_then(|c| WeightSeq::new(WeightGen::Constant(c)).map_err(|e| e.to_string())),
    }
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn render(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Orbit of `t·v` under `P(x) = x_1 B_ω(x)`, `v` the factorial tail.
#[wasm_bindgen]
pub fn ray_orbit(t: f64, steps: usize, weight_name: &str) -> String {
    render((|| {
        let w = weights(weight_name)?;
        if !t.is_finite() || steps == 0 || steps > 5000 {
            return Err("need finite t and 1 ≤ steps ≤ 5000".into());
        }
        let cfg = JuliaConfig::default();
        let x = factorial_tail(cfg.truncation).scale(hyperorbit::arith::LogComplex::from_real(t));
        let orbit = iterate_polynomial(&w, &x, steps, cfg.tol);
        Ok(json!({
            "log_norms": orbit.log_norms.iter().map(|&l| finite(l)).collect::<Vec<_>>(),
            "classification": orbit.classify(cfg.tol).as_str(),
            "escaped_at": orbit.escaped_at,
            "exhausted_at": orbit.exhausted_at,
        }))
    })())
}

/// Bisects for the Julia boundary along the factorial-tail ray.
#[wasm_bindgen]
pub fn julia_boundary(t_lo: f64, t_hi: f64, tol: f64, weight_name: &str) -> String {
    render((|| {
        let w = weights(weight_name)?;
        let cfg = JuliaConfig::default();
        let v = factorial_tail(cfg.truncation);
        let p = julia_ray_bisection(&w, &v, t_lo, t_hi, tol, &cfg).map_err(|e| e.to_string())?;
        Ok(json!({
            "t_lo": p.t_lo,
            "t_hi": p.t_hi,
            "width": p.width(),
            "class_lo": p.class_lo.as_str(),
            "class_hi": p.class_hi.as_str(),
            "steps": p.steps,
        }))
    })())
}

/// Companion vector for `y = (1, …, 1)` of length `n_max + 1`: returns
/// `ln κ_n` against `n ln 2 - ln(ω_1 ⋯ ω_n)` for each `n`.
#[wasm_bindgen]
pub fn companion_weights(n_max: usize, weight_name: &str) -> String {
    render((|| {
        let w = weights(weight_name)?;
        if !(1..=200).contains(&n_max) {
            return Err("need 1 ≤ n_max ≤ 200".into());
        }
        let y = SeqVector::from_reals(&vec![1.0; n_max + 1], SpaceTag::L1).map_err(|e| e.to_string())?;
        let rep = weight_identity(&y, &w, n_max).map_err(|e| e.to_string())?;
        let rows: Vec<Value> = rep
            .entries
            .iter()
            .map(|e| json!({ "n": e.n, "log_kappa": e.log_kappa, "expected": e.expected, "rel_err": e.rel_err, "exact": e.exact }))
            .collect();
        Ok(json!({ "entries": rows, "max_rel_err": rep.max_rel_err, "passed": rep.passed(1e-8) }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn small_ray_converges_large_ray_escapes() {
        assert_eq!(parse(ray_orbit(1.0, 200, "inverse_square"))["classification"], "converges_to_zero");
        assert_eq!(parse(ray_orbit(20.0, 200, "inverse_square"))["classification"], "escaping");
    }

    #[test]
    fn boundary_lies_between_rays() {
        let v = parse(julia_boundary(1.0, 20.0, 1e-6, "inverse_square"));
        assert!(v["width"].as_f64().unwrap() <= 1e-6);
        let t = v["t_lo"].as_f64().unwrap();
        assert!(t > 1.0 && t < 20.0);
    }

    #[test]
    fn companion_identity_holds() {
        let v = parse(companion_weights(12, "inverse_square"));
        assert_eq!(v["passed"], true);
        // n = 3: 3 ln 2 + 2 ln 6
        let e = &v["entries"].as_array().unwrap()[2];
        assert_eq!(e["n"], 3);
        let want = 3.0 * std::f64::consts::LN_2 + 2.0 * 6f64.ln();
        assert!((e["log_kappa"].as_f64().unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn errors_are_json() {
        assert!(parse(ray_orbit(1.0, 0, "unit"))["error"].is_string());
        assert!(parse(julia_boundary(5.0, 1.0, 1e-6, "unit"))["error"].is_string());
        assert!(parse(companion_weights(5, "square"))["error"].is_string());
    }
}
