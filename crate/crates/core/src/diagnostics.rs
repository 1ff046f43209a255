//! Weighted norms, discrete Sobolev norms, the energy form and other
//! monitoring quantities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{hat_gradient, MappedGrid};
use crate::params::PhysicalParams;
use crate::solver::{weighted_sum_sq, PerturbationState, Problem, SolverConfig};

/// `sqrt(sum e^{beta x1} |f|^2 dV)` with `x1` the physical normal coordinate.
pub fn weighted_l2(grid: &MappedGrid, field: &[f64], beta: f64) -> f64 {
    weighted_sum_sq(grid, field, beta).sqrt()
}

/// Weighted norm of the whole perturbation `(phi, psi)`.
pub fn state_weighted_l2(state: &PerturbationState, beta: f64) -> f64 {
    state
        .fields()
        .map(|f| weighted_sum_sq(&state.grid, f, beta))
        .sum::<f64>()
        .sqrt()
}

/// Squared `L^2` norms of all derivatives of order `0..=m`, one entry per
/// order. Derivatives are Cartesian, computed by repeated gradients.
pub fn sobolev_seminorms_sq(grid: &MappedGrid, field: &[f64], m: usize) -> Result<Vec<f64>> {
    if m > 3 {
        return Err(Error::Validation(format!("Sobolev order {m} exceeds 3")));
    }
    for axis in 0..grid.dim {
        if grid.n[axis] < 4 {
            return Err(Error::ResolutionTooCoarse(format!(
                "axis {axis} has {} nodes, need at least 4",
                grid.n[axis]
            )));
        }
    }
    grid.check_len(field, "field")?;
    let mut level = vec![field.to_vec()];
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        out.push(level.iter().map(|f| weighted_sum_sq(grid, f, 0.0)).sum());
        if k < m {
            let mut next = Vec::with_capacity(level.len() * grid.dim);
            for f in &level {
                next.extend(hat_gradient(grid, f)?);
            }
            level = next;
        }
    }
    Ok(out)
}

/// Discrete `H^m` norm, `m <= 3`.
pub fn discrete_sobolev(grid: &MappedGrid, field: &[f64], m: usize) -> Result<f64> {
    Ok(sobolev_seminorms_sq(grid, field, m)?.iter().sum::<f64>().sqrt())
}

/// `omega(r) = r - 1 - (r^{1-gamma} - 1) / (1 - gamma)`, with the logarithmic
/// limit at `gamma = 1`.
pub fn omega(r: f64, gamma: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(r));
    }
    let x = r - 1.0;
    if gamma == 1.0 {
        return Ok(x - x.ln_1p());
    }
    let e = 1.0 - gamma;
    Ok(x - (e * r.ln()).exp_m1() / e)
}

/// Pointwise energy density `rho (K rho_t^{gamma-1} omega(rho_t / rho) + |psi|^2 / 2)`.
pub fn energy_density(params: &PhysicalParams, rho_tilde: f64, phi: f64, psi: [f64; 3]) -> Result<f64> {
    let rho = rho_tilde + phi;
    if !(rho > 0.0) {
        return Err(Error::Domain(rho));
    }
    let w = omega(rho_tilde / rho, params.gamma)?;
    let kin = 0.5 * (psi[0] * psi[0] + psi[1] * psi[1] + psi[2] * psi[2]);
    Ok(rho * (params.k * rho_tilde.powf(params.gamma - 1.0) * w + kin))
}

/// Integral of the energy density over the grid.
pub fn energy_form(problem: &Problem, state: &PerturbationState) -> Result<f64> {
    let grid = &problem.grid;
    let mut total = 0.0;
    for idx in 0..grid.len() {
        let i = grid.ix(idx);
        let mut psi = [0.0; 3];
        for (k, c) in state.psi.iter().enumerate() {
            psi[k] = c[idx];
        }
        total += grid.weight(i) * energy_density(&problem.params, problem.profile.rho[i[0]], state.phi[idx], psi)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Squared boundary trace `int_{boundary} f^2 dS` over the `y1 = 0` row.
pub fn boundary_trace_sq(grid: &MappedGrid, field: &[f64]) -> f64 {
    let bw = grid.boundary_weight();
    (0..grid.n_tangential())
        .map(|t| {
            let g = grid.grad_m(t);
            let ds = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            let v = field[grid.index([0, t % grid.n[1], t / grid.n[1]])];
            bw * ds * v * v
        })
        .sum()
}

/// Compares `int e^{-alpha x1} f^2` against `|grad f|^2 + |f|_{boundary}|^2`.
pub fn hardy_check(grid: &MappedGrid, field: &[f64], alpha: f64) -> Result<HardyReport> {
    grid.check_len(field, "field")?;
    let lhs = weighted_sum_sq(grid, field, -alpha);
    let grad = hat_gradient(grid, field)?;
    let rhs = grad.iter().map(|g| weighted_sum_sq(grid, g, 0.0)).sum::<f64>() + boundary_trace_sq(grid, field);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HardyReport { lhs, rhs, ratio })
}

/// Local Mach number `|u| / sqrt(p'(rho))` of the reconstructed full state.
pub fn mach_field(problem: &Problem, state: &PerturbationState) -> Result<Vec<f64>> {
    let grid = &problem.grid;
    let d = grid.dim;
    (0..grid.len())
        .map(|idx| {
            let i1 = idx % grid.n[0];
            let rho = problem.profile.rho[i1] + state.phi[idx];
            if !(rho > 0.0) {
                return Err(Error::PositivityLost { t: state.t, min_rho: rho });
            }
            let mut u2 = 0.0;
            for k in 0..d {
                let mut v = problem.extension.u[k][idx] + state.psi[k][idx];
                if k == 0 {
                    v += problem.profile.u1[i1];
                }
                u2 += v * v;
            }
            Ok(u2.sqrt() / problem.params.dpressure(rho).sqrt())
        })
        .collect()
}

/// Summands of the dissipation functional, reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissipation {
    /// Weighted `L^2` norm of `grad psi`.
    pub grad_psi_weighted: f64,
    /// `L^2` norm of `d phi / dt` from the equation right-hand side.
    pub dphi_dt: f64,
    /// `L^2` norm of the boundary trace of `phi`.
    pub boundary_trace_phi: f64,
}

/// Norms of a state at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub t: f64,
    pub beta: f64,
    /// `|Phi|^2_beta + |Phi|^2_{H^0}`.
    pub e0_beta: f64,
    /// `|Phi|^2_beta + |Phi|^2_{H^3}`.
    pub e3_beta: f64,
    pub weighted_l2: f64,
    /// `H^m` norms of `Phi`, `m = 0..=3`.
    pub h_norms: [f64; 4],
    pub dissipation: Dissipation,
    pub residual_mass: f64,
    pub residual_momentum: f64,
    pub energy_form: f64,
}

pub fn norm_report(
    problem: &Problem,
    state: &PerturbationState,
    config: &SolverConfig,
    beta: f64,
) -> Result<NormReport> {
    let grid = &problem.grid;
    let mut levels = [0.0; 4];
    for f in state.fields() {
        let s = sobolev_seminorms_sq(grid, f, 3)?;
        for (l, v) in levels.iter_mut().zip(&s) {
            *l += v;
        }
    }
    let mut h_norms = [0.0; 4];
    let mut acc = 0.0;
    for m in 0..4 {
        acc += levels[m];
        h_norms[m] = acc.sqrt();
    }
    let wl2 = state_weighted_l2(state, beta);
    let mut grad_psi = 0.0;
    for c in &state.psi {
        for g in hat_gradient(grid, c)? {
            grad_psi += weighted_sum_sq(grid, &g, beta);
        }
    }
    let rate = problem.rhs(state, config)?;
    let residual = problem.stationary_residual(state)?;
    Ok(NormReport {
        t: state.t,
        beta,
        e0_beta: wl2 * wl2 + levels[0],
        e3_beta: wl2 * wl2 + h_norms[3] * h_norms[3],
        weighted_l2: wl2,
        h_norms,
        dissipation: Dissipation {
            grad_psi_weighted: grad_psi.sqrt(),
            dphi_dt: weighted_sum_sq(grid, &rate.phi, 0.0).sqrt(),
            boundary_trace_phi: boundary_trace_sq(grid, &state.phi).sqrt(),
        },
        residual_mass: residual.mass_l2,
        residual_momentum: residual.momentum_l2,
        energy_form: energy_form(problem, state)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryShape;

    #[test]
    fn omega_examples() {
        for &g in &[1.0, 1.4, 5.0 / 3.0, 2.0] {
            assert_eq!(omega(1.0, g).unwrap(), 0.0);
        }
        assert!((omega(2.0, 1.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!(omega(0.0, 1.0).is_err());
        // gamma = 2: r - 1 + (1/r - 1)
        assert!((omega(2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn omega_is_continuous_in_gamma() {
        let a = omega(1.7, 1.0).unwrap();
        let b = omega(1.7, 1.0 + 1e-9).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn zero_field_norms() {
        let grid = MappedGrid::new(BoundaryShape::flat(2, [4.0, 0.0]), 10, [8, 1], 2.0).unwrap();
        let z = vec![0.0; grid.len()];
        assert_eq!(weighted_l2(&grid, &z, 1.0), 0.0);
        assert_eq!(discrete_sobolev(&grid, &z, 3).unwrap(), 0.0);
        assert_eq!(hardy_check(&grid, &z, 0.75).unwrap().ratio, 0.0);
    }

    #[test]
    fn constant_field_sobolev_equals_l2() {
        let grid = MappedGrid::new(BoundaryShape::flat(2, [4.0, 0.0]), 10, [8, 1], 2.0).unwrap();
        let c = vec![1.5; grid.len()];
        let l2 = weighted_l2(&grid, &c, 0.0);
        for m in 0..=3 {
            assert!((discrete_sobolev(&grid, &c, m).unwrap() - l2).abs() < 1e-12);
        }
        assert!(discrete_sobolev(&grid, &c, 4).is_err());
    }
}
