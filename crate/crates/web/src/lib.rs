//! wasm bindings for the browser demo in `www/`.
//!
//! Everything crosses the boundary as JSON strings or `Float64Array`s so
//! the page needs no bundler.

use fperr_core::condition::condition_number;
use fperr_core::newton::{newton_solve, newton_solve_multi, SolverConfig};
use fperr_core::oracle::{compare_with_oracle, OracleConfig};
use fperr_core::targets::residual_fn;
use fperr_core::{danger_specs, evaluate_traced, is_significant, lookup, registry, site_table, CorpusFunction, ResidualTarget};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn function(id: &str) -> Result<&'static CorpusFunction, JsError> {
    Ok(&lookup(id)?.function)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    Ok(serde_json::to_string(v)?)
}

#[derive(Serialize)]
struct SiteInfo {
    index: usize,
    op: String,
    targets: usize,
}

#[derive(Serialize)]
struct FunctionInfo {
    id: &'static str,
    formula: &'static str,
    arity: usize,
    sites: Vec<SiteInfo>,
}

/// The corpus with each function's sites, as JSON.
#[wasm_bindgen]
pub fn functions() -> Result<String, JsError> {
    let list: Vec<FunctionInfo> = registry()
        .iter()
        .map(|e| FunctionInfo {
            id: e.function.id,
            formula: e.function.formula,
            arity: e.function.arity,
            sites: site_table(&e.function)
                .into_iter()
                .map(|(site, op)| SiteInfo {
                    index: site.index,
                    op: op.to_string(),
                    targets: danger_specs(op).len(),
                })
                .collect(),
        })
        .collect();
    to_json(&list)
}

#[derive(Serialize)]
struct PathView {
    target: String,
    status: String,
    iterations: usize,
    root: Vec<f64>,
    xs: Vec<Vec<f64>>,
    gs: Vec<f64>,
}

/// Newton iterates for the first danger spec of `site`, started at `x0`.
#[wasm_bindgen]
pub fn newton_path(id: &str, site: usize, x0: &[f64]) -> Result<String, JsError> {
    let f = function(id)?;
    f.check_arity(x0.len())?;
    let (site_id, op) = *site_table(f)
        .get(site)
        .ok_or_else(|| JsError::new(&format!("{id} has no site {site}")))?;
    let spec = *danger_specs(op)
        .first()
        .ok_or_else(|| JsError::new(&format!("{op} has no danger spec")))?;
    let target = ResidualTarget { site: site_id, spec };
    let g = residual_fn(f, &target);
    let cfg = SolverConfig::default();
    let out = if x0.len() == 1 {
        newton_solve(|x| g(&[x]), x0[0], &cfg)
    } else {
        newton_solve_multi(&g, x0, &cfg)
    };
    to_json(&PathView {
        target: target.to_string(),
        status: out.status.to_string(),
        iterations: out.iterations,
        root: out.root.clone(),
        xs: out.path.iter().map(|p| p.x.clone()).collect(),
        gs: out.path.iter().map(|p| p.g).collect(),
    })
}

/// Condition number of `site` at `n` evenly spaced points of `[lo, hi]`;
/// `NaN` where the site does not run or cannot be conditioned.
#[wasm_bindgen]
pub fn condition_curve(id: &str, site: usize, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let f = function(id)?;
    f.check_arity(1)?;
    let n = n.max(2);
    Ok((0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            evaluate_traced(f, &[x])
                .ok()
                .and_then(|(_, t)| t.record_at(site).and_then(|r| condition_number(r).ok()))
                .unwrap_or(f64::NAN)
        })
        .collect())
}

#[derive(Serialize)]
struct Validation {
    double: f64,
    oracle: String,
    rel_error: f64,
    significant: bool,
}

/// binary64 result against the high-precision oracle.
#[wasm_bindgen]
pub fn validate(id: &str, inputs: &[f64]) -> Result<String, JsError> {
    let f = function(id)?;
    let c = compare_with_oracle(f, inputs, &OracleConfig::default())?;
    to_json(&Validation {
        double: c.double,
        oracle: c.reference_decimal(40),
        rel_error: c.rel_error,
        significant: is_significant(c.rel_error),
    })
}
