//! Browser bindings: stencil weights, a small Burgers run, and Kraus rank analytics.
//!
//! Build with `wasm-pack build crates/wasm-demo --target web --out-dir www/pkg`
//! and serve `crates/wasm-demo/www/`.

use kvn_core::evolution::{run, RunConfig, Scheme};
use kvn_core::fock::{rank_analytics, stencil_coefficients};
use kvn_core::grid::{Boundary, FieldState, GridSpec};
use kvn_core::rhs::BurgersRhs;
use wasm_bindgen::prelude::*;

pub fn stencil(order: usize, radius: usize) -> Result<Vec<f64>, String> {
    stencil_coefficients(order, radius).map_err(|e| e.to_string())
}

/// Periodic Burgers on `[0, 1)` from `amplitude · sin(2πx)`; returns `x` then `u` at `t_end`.
pub fn burgers(n: usize, re: f64, dt: f64, t_end: f64, amplitude: f64) -> Result<(Vec<f64>, Vec<f64>), String> {
    let go = || -> kvn_core::Result<(Vec<f64>, Vec<f64>)> {
        let grid = GridSpec::line(n, 1.0 / n as f64, Boundary::Periodic)?;
        let initial = FieldState::from_fn(grid.clone(), 0.0, |x, _| amplitude * (2.0 * std::f64::consts::PI * x).sin())?;
        let rhs = BurgersRhs::new(grid.clone(), re)?;
        let mut cfg = RunConfig::new(Scheme::Trotter2, dt, t_end);
        cfg.save_times = vec![t_end];
        let traj = run(&initial, &rhs, &cfg)?;
        if let Some(e) = traj.divergence {
            return Err(e);
        }
        let x = (0..n).map(|i| grid.coordinate(0, i as isize)).collect();
        Ok((x, traj.last.real_part()))
    };
    go().map_err(|e| e.to_string())
}

pub fn rank_summary(l: usize, dims: usize, deriv_order: usize, degree: usize) -> String {
    let r = rank_analytics(l, dims, deriv_order, degree, false);
    format!(
        "stencil radius {}, neighborhood {}, edges {}, monomials per site {}, Kraus rank {}, tree depth {}",
        r.radius, r.stencil_size, r.edges, r.monomials_per_site, r.rank, r.depth
    )
}

#[wasm_bindgen(js_name = stencilWeights)]
pub fn stencil_weights(order: usize, radius: usize) -> Result<Vec<f64>, JsError> {
    stencil(order, radius).map_err(|e| JsError::new(&e))
}

/// Interleaved `[x0, u0, x1, u1, ...]`.
#[wasm_bindgen(js_name = burgersProfile)]
pub fn burgers_profile(n: usize, re: f64, dt: f64, t_end: f64, amplitude: f64) -> Result<Vec<f64>, JsError> {
    let (x, u) = burgers(n, re, dt, t_end, amplitude).map_err(|e| JsError::new(&e))?;
    Ok(x.into_iter().zip(u).flat_map(|(a, b)| [a, b]).collect())
}

#[wasm_bindgen(js_name = rankReport)]
pub fn rank_report(l: usize, dims: usize, deriv_order: usize, degree: usize) -> String {
    rank_summary(l, dims, deriv_order, degree)
}
