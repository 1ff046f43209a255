//! Browser demo. Three operations, each a plain Rust function returning a
//! serializable struct plus a `wasm_bindgen` wrapper that hands JSON to the
//! page.

use outflow_core::boundary::BoundaryDataSpec;
use outflow_core::geometry::{normal_vector, BoundaryShape};
use outflow_core::profile::{decay_rate, default_length, flux_function, solve_profile};
use outflow_core::{PhysicalParams, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Isothermal-or-polytropic gas with unit `K` and far-field density.
pub fn params(gamma: f64, mu1: f64, mu2: f64, u_plus: f64, u_tilde_b: f64) -> Result<PhysicalParams> {
    PhysicalParams::new(1.0, gamma, mu1, mu2, 1.0, u_plus, u_tilde_b)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileView {
    pub x1: Vec<f64>,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    pub alpha: f64,
    pub w_c: f64,
    pub mach: f64,
}

/// Planar profile on `[0, L]` with the default length.
pub fn profile_view(p: &PhysicalParams, nodes: usize) -> Result<ProfileView> {
    let alpha = decay_rate(p)?;
    let w_c = p.compute_wc()?;
    let profile = solve_profile(p, default_length(alpha), nodes)?;
    Ok(ProfileView {
        x1: profile.x1,
        rho: profile.rho,
        u1: profile.u1,
        alpha,
        w_c,
        mach: p.mach(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxView {
    pub u: Vec<f64>,
    pub flux: Vec<f64>,
    pub u_plus: f64,
    /// Boundary speeds left of this value admit a profile.
    pub critical_velocity: Option<f64>,
}

/// Samples the flux function on `(2 u_plus, 0)`, excluding the endpoint 0.
pub fn flux_view(p: &PhysicalParams, samples: usize) -> Result<FluxView> {
    let samples = samples.max(2);
    let lo = 2.0 * p.u_plus;
    let u: Vec<f64> = (0..samples).map(|j| lo * (1.0 - j as f64 / samples as f64)).collect();
    let flux = u.iter().map(|&v| flux_function(p, v)).collect::<Result<Vec<_>>>()?;
    Ok(FluxView {
        u,
        flux,
        u_plus: p.u_plus,
        critical_velocity: p.compute_wc().ok().map(|w| w * p.u_plus),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpView {
    pub x2: Vec<f64>,
    pub height: Vec<f64>,
    /// Outer unit normal `(n1, n2)`.
    pub normal: Vec<[f64; 2]>,
    /// Normal outflow velocity `(u1, u2)`.
    pub velocity: Vec<[f64; 2]>,
}

/// Gaussian boundary over one periodic cell with its normals and the
/// normal outflow data.
pub fn bump_view(amplitude: f64, width: f64, cell: f64, u_tilde_b: f64, samples: usize) -> Result<BumpView> {
    let shape = BoundaryShape::gaussian(2, amplitude, width, [cell, 0.0])?;
    let samples = samples.max(2);
    let x2: Vec<f64> = (0..samples).map(|j| cell * (j as f64 / (samples - 1) as f64 - 0.5)).collect();
    let mut view = BumpView {
        height: Vec::with_capacity(samples),
        normal: Vec::with_capacity(samples),
        velocity: Vec::with_capacity(samples),
        x2: Vec::new(),
    };
    for &x in &x2 {
        let xp = [x, 0.0];
        let n = normal_vector(&shape, xp);
        let u = BoundaryDataSpec::Normal.eval(u_tilde_b, shape.gradient(xp), x, cell)?;
        view.height.push(shape.height(xp));
        view.normal.push([n[0], n[1]]);
        view.velocity.push([u[0], u[1]]);
    }
    view.x2 = x2;
    Ok(view)
}

fn to_json<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn profile(gamma: f64, mu1: f64, mu2: f64, u_plus: f64, u_tilde_b: f64, nodes: usize) -> std::result::Result<String, JsValue> {
    to_json(params(gamma, mu1, mu2, u_plus, u_tilde_b).and_then(|p| profile_view(&p, nodes)))
}

#[wasm_bindgen]
pub fn flux_curve(gamma: f64, u_plus: f64, samples: usize) -> std::result::Result<String, JsValue> {
    to_json(params(gamma, 1.0, 0.0, u_plus, u_plus).and_then(|p| flux_view(&p, samples)))
}

#[wasm_bindgen]
pub fn bump_normals(amplitude: f64, width: f64, cell: f64, u_tilde_b: f64, samples: usize) -> std::result::Result<String, JsValue> {
    to_json(bump_view(amplitude, width, cell, u_tilde_b, samples))
}
