//! Explicit time marching of the perturbation system on the flattened grid.

use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    build_extension, check_profile, stationary_sources, BoundaryDataSpec, BoundaryVelocity, ExtensionField, Sources,
};
use crate::diagnostics::{norm_report, NormReport};
use crate::error::{Error, Result};
use crate::geometry::{Ix, MappedGrid};
use crate::params::PhysicalParams;
use crate::profile::{solve_profile, PlanarProfile};

/// Which equations are discretised.
///
/// `Perturbation` differences only the perturbation and uses the profile's
/// exact derivatives, so the planar solution is an exact discrete fixed
/// point. `FullState` differences the reconstructed density and velocity;
/// the profile then carries its own truncation error, which acts as an
/// `O(h^2)` forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    #[default]
    Perturbation,
    FullState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarField {
    #[default]
    DirichletZero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Fixed time step; `None` picks `cfl_safety` times the stability bound
    /// at every step.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub far_field: FarField,
    /// Convection upwinding order, 1 or 2.
    pub upwind_order: u8,
    pub formulation: Formulation,
    /// Time between norm reports; `None` disables reporting.
    pub report_interval: Option<f64>,
    /// Weight exponent for reported norms; `None` uses `alpha / 4`.
    pub beta: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 1.0,
            cfl_safety: 0.4,
            far_field: FarField::DirichletZero,
            upwind_order: 2,
            formulation: Formulation::Perturbation,
            report_interval: None,
            beta: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::Validation(format!(
                "cfl_safety must lie in (0, 1), got {}",
                self.cfl_safety
            )));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Validation(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Validation(format!("dt must be positive, got {dt}")));
            }
        }
        if self.upwind_order != 1 && self.upwind_order != 2 {
            return Err(Error::Validation(format!(
                "upwind order must be 1 or 2, got {}",
                self.upwind_order
            )));
        }
        if let Some(r) = self.report_interval {
            if !(r > 0.0) {
                return Err(Error::Validation("report interval must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Density perturbation `phi` and velocity perturbation `psi` (Cartesian
/// components) on the flattened grid.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub phi: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub t: f64,
    pub grid: Arc<MappedGrid>,
}

impl PerturbationState {
    pub fn new(grid: Arc<MappedGrid>, phi: Vec<f64>, psi: Vec<Vec<f64>>) -> Self {
        Self { phi, psi, t: 0.0, grid }
    }

    pub fn zero(grid: Arc<MappedGrid>) -> Self {
        let n = grid.len();
        let d = grid.dim;
        Self::new(grid, vec![0.0; n], vec![vec![0.0; n]; d])
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.check_len(&self.phi, "phi")?;
        crate::geometry::check_vector(&self.grid, &self.psi)
    }

    pub fn max_abs(&self) -> f64 {
        self.fields().flat_map(|f| f.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `phi` followed by the `psi` components.
    pub fn fields(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.phi).chain(self.psi.iter())
    }

    fn fields_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.phi).chain(self.psi.iter_mut())
    }

    /// `self - other`, keeping this state's time stamp.
    pub fn difference(&self, other: &Self) -> Self {
        let sub = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        Self {
            phi: sub(&self.phi, &other.phi),
            psi: self.psi.iter().zip(&other.psi).map(|(a, b)| sub(a, b)).collect(),
            t: self.t,
            grid: self.grid.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for f in out.fields_mut() {
            f.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    fn axpy(&mut self, dt: f64, rate: &Rate) {
        for (f, r) in self.fields_mut().zip(rate.fields()) {
            f.iter_mut().zip(r).for_each(|(v, dv)| *v += dt * dv);
        }
    }

    fn average_with(&mut self, other: &Self) {
        for (f, g) in self.fields_mut().zip(other.fields()) {
            f.iter_mut().zip(g).for_each(|(v, w)| *v = 0.5 * *v + 0.5 * w);
        }
    }

    /// `psi = 0` on the boundary and `Phi = 0` on the far-field face.
    fn enforce_boundary(&mut self) {
        let grid = self.grid.clone();
        let last = grid.n[0] - 1;
        for t in 0..grid.n_tangential() {
            let b = grid.index([0, t % grid.n[1], t / grid.n[1]]);
            let f = grid.index([last, t % grid.n[1], t / grid.n[1]]);
            for c in self.psi.iter_mut() {
                c[b] = 0.0;
                c[f] = 0.0;
            }
            self.phi[f] = 0.0;
        }
    }
}

/// Time derivative of a state.
#[derive(Debug, Clone)]
pub struct Rate {
    pub phi: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
}

impl Rate {
    pub fn fields(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.phi).chain(self.psi.iter())
    }
}

/// Stationary residuals of the reconstructed full state, discrete `L^2` and
/// max norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub mass_l2: f64,
    pub mass_max: f64,
    pub momentum_l2: f64,
    pub momentum_max: f64,
}

/// Everything the solver needs that does not change in time.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: PhysicalParams,
    pub grid: Arc<MappedGrid>,
    /// Profile sampled on the grid's `y1` nodes.
    pub profile: PlanarProfile,
    pub boundary: BoundaryVelocity,
    pub extension: ExtensionField,
    pub sources: Sources,
    // transformed gradient of U: grad_u[node][k][l] = D_l U_k
    grad_u: Vec<[[f64; 3]; 3]>,
    div_u: Vec<f64>,
    // profile density and velocity spread over every node, for full-state differencing
    rho_tilde: Vec<f64>,
}

impl Problem {
    pub fn new(params: PhysicalParams, grid: MappedGrid, data: &BoundaryDataSpec) -> Result<Self> {
        params.validate()?;
        params.check_admissible()?;
        let grid = Arc::new(grid);
        let profile = solve_profile(&params, grid.length, grid.n[0])?;
        let boundary = BoundaryVelocity::sample(data, &grid, &params)?;
        let extension = build_extension(&grid, &boundary, &params)?;
        Self::assemble(params, grid, profile, boundary, extension)
    }

    /// Builds a problem from explicit parts; the profile must be sampled on
    /// the grid's `y1` nodes.
    pub fn assemble(
        params: PhysicalParams,
        grid: Arc<MappedGrid>,
        profile: PlanarProfile,
        boundary: BoundaryVelocity,
        extension: ExtensionField,
    ) -> Result<Self> {
        check_profile(&grid, &profile)?;
        crate::geometry::check_vector(&grid, &extension.u)?;
        let sources = stationary_sources(&grid, &profile, &extension, &params)?;
        let d = grid.dim;
        let u = &extension.u;
        let grad_u: Vec<[[f64; 3]; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let i = grid.ix(k);
                let mut g = [[0.0; 3]; 3];
                for (c, row) in g.iter_mut().enumerate().take(d) {
                    *row = grid.hat_grad_at(&u[c], i);
                }
                g
            })
            .collect();
        let div_u = grid.map_nodes(|i| grid.hat_div_at(u, i));
        let rho_tilde = grid.map_nodes(|i| profile.rho[i[0]]);
        Ok(Self {
            params,
            grid,
            profile,
            boundary,
            extension,
            sources,
            grad_u,
            div_u,
            rho_tilde,
        })
    }

    pub fn zero_state(&self) -> PerturbationState {
        PerturbationState::zero(self.grid.clone())
    }

    /// Weight exponent used by reports, `alpha / 4` unless configured.
    pub fn beta(&self, config: &SolverConfig) -> f64 {
        config.beta.unwrap_or(0.25 * self.profile.alpha)
    }

    fn check_state(&self, state: &PerturbationState) -> Result<()> {
        if state.grid.n != self.grid.n || state.grid.dim != self.grid.dim {
            return Err(Error::GridMismatch("state lives on a different grid".into()));
        }
        state.validate()?;
        let min_rho = self
            .rho_tilde
            .iter()
            .zip(&state.phi)
            .map(|(r, p)| r + p)
            .fold(f64::INFINITY, f64::min);
        if min_rho.is_nan() {
            return Err(Error::NonFinite { t: state.t });
        }
        if !(min_rho > 0.0) {
            return Err(Error::PositivityLost { t: state.t, min_rho });
        }
        Ok(())
    }

    /// Background velocity `w = u_tilde e1 + U` at a node.
    #[inline]
    fn background(&self, idx: usize, i1: usize) -> [f64; 3] {
        let mut w = [0.0; 3];
        for (k, c) in self.extension.u.iter().enumerate() {
            w[k] = c[idx];
        }
        w[0] += self.profile.u1[i1];
        w
    }

    /// Homogeneous source terms `(f, g)` of the perturbation system.
    pub fn homogeneous_sources(&self, state: &PerturbationState) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.check_state(state)?;
        let grid = &self.grid;
        let d = grid.dim;
        let per_node: Vec<[f64; 4]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let i = grid.ix(idx);
                let (f, g) = self.sources_at(state, i, idx);
                [f, g[0], g[1], g[2]]
            })
            .collect();
        let f = per_node.iter().map(|v| v[0]).collect();
        let g = (0..d).map(|k| per_node.iter().map(|v| v[k + 1]).collect()).collect();
        Ok((f, g))
    }

    #[inline]
    fn sources_at(&self, state: &PerturbationState, i: Ix, idx: usize) -> (f64, [f64; 3]) {
        let grid = &self.grid;
        let d = grid.dim;
        let i1 = i[0];
        let a = grid.normal_column(grid.tangential_index(i));
        let (r_t, dr, du) = (self.profile.rho[i1], self.profile.drho[i1], self.profile.du1[i1]);
        let phi = state.phi[idx];
        let rho = r_t + phi;
        let mut psi = [0.0; 3];
        for k in 0..d {
            psi[k] = state.psi[k][idx];
        }
        let w = self.background(idx, i1);
        let psi_a: f64 = (0..d).map(|k| psi[k] * a[k]).sum();
        let w_a: f64 = (0..d).map(|k| w[k] * a[k]).sum();
        let f = -dr * psi_a - du * phi - phi * self.div_u[idx];
        let gu = &self.grad_u[idx];
        let dp = self.params.dpressure(rho) - self.params.dpressure(r_t);
        let mut g = [0.0; 3];
        for k in 0..d {
            let mut psi_grad = (0..d).map(|l| psi[l] * gu[k][l]).sum::<f64>();
            let mut w_grad = (0..d).map(|l| w[l] * gu[k][l]).sum::<f64>();
            if k == 0 {
                psi_grad += du * psi_a;
                w_grad += du * w_a;
            }
            g[k] = -rho * psi_grad - phi * w_grad - dp * dr * a[k];
        }
        (f, g)
    }

    /// Time derivative without boundary conditions applied.
    pub fn rhs_raw(&self, state: &PerturbationState, config: &SolverConfig) -> Result<Rate> {
        self.check_state(state)?;
        let per_node: Vec<[f64; 4]> = match config.formulation {
            Formulation::Perturbation => (0..self.grid.len())
                .into_par_iter()
                .map(|idx| self.perturbation_rate_at(state, idx, config.upwind_order))
                .collect(),
            Formulation::FullState => {
                let (rho, u) = self.full_state(state);
                (0..self.grid.len())
                    .into_par_iter()
                    .map(|idx| self.full_rate_at(&rho, &u, idx, config.upwind_order))
                    .collect()
            }
        };
        let d = self.grid.dim;
        Ok(Rate {
            phi: per_node.iter().map(|v| v[0]).collect(),
            psi: (0..d).map(|k| per_node.iter().map(|v| v[k + 1]).collect()).collect(),
        })
    }

    /// Time derivative with `psi_t = 0` on the boundary and `Phi_t = 0` on
    /// the far-field face.
    pub fn rhs(&self, state: &PerturbationState, config: &SolverConfig) -> Result<Rate> {
        let mut r = self.rhs_raw(state, config)?;
        let grid = &self.grid;
        let last = grid.n[0] - 1;
        for t in 0..grid.n_tangential() {
            let (i2, i3) = (t % grid.n[1], t / grid.n[1]);
            let b = grid.index([0, i2, i3]);
            let f = grid.index([last, i2, i3]);
            for c in r.psi.iter_mut() {
                c[b] = 0.0;
                c[f] = 0.0;
            }
            r.phi[f] = 0.0;
        }
        Ok(r)
    }

    #[inline]
    fn convection(&self, f: &[f64], i: Ix, c: [f64; 3], order: u8) -> f64 {
        (0..self.grid.dim)
            .map(|j| c[j] * self.grid.d1_upwind(f, i, j, c[j], order))
            .sum()
    }

    /// Flattened-axis transport coefficients `(u . a, u2, u3)`.
    #[inline]
    fn transport(&self, u: [f64; 3], t: usize) -> [f64; 3] {
        let a = self.grid.normal_column(t);
        let mut c = u;
        c[0] = (0..self.grid.dim).map(|k| u[k] * a[k]).sum();
        c
    }

    fn perturbation_rate_at(&self, state: &PerturbationState, idx: usize, order: u8) -> [f64; 4] {
        let grid = &self.grid;
        let d = grid.dim;
        let i = grid.ix(idx);
        let t = grid.tangential_index(i);
        let r_t = self.profile.rho[i[0]];
        let phi = state.phi[idx];
        let rho = r_t + phi;
        let mut u = self.background(idx, i[0]);
        for k in 0..d {
            u[k] += state.psi[k][idx];
        }
        let c = self.transport(u, t);
        let (f, g) = self.sources_at(state, i, idx);
        let mut out = [0.0; 4];
        out[0] = -self.convection(&state.phi, i, c, order) - rho * grid.hat_div_at(&state.psi, i)
            + f
            + self.sources.f[idx];
        let grad_phi = grid.hat_grad_at(&state.phi, i);
        let graddiv = grid.hat_grad_div_at(&state.psi, i);
        let dp = self.params.dpressure(rho);
        let mu1 = self.params.mu1;
        let mu12 = self.params.mu1 + self.params.mu2;
        for k in 0..d {
            let visc = mu1 * grid.hat_laplacian_at(&state.psi[k], i) + mu12 * graddiv[k];
            out[k + 1] = -self.convection(&state.psi[k], i, c, order)
                + (visc - dp * grad_phi[k] + g[k] + self.sources.g[k][idx]) / rho;
        }
        out
    }

    fn full_state(&self, state: &PerturbationState) -> (Vec<f64>, Vec<Vec<f64>>) {
        let rho = self.rho_tilde.iter().zip(&state.phi).map(|(r, p)| r + p).collect();
        let u = (0..self.grid.dim)
            .map(|k| {
                (0..self.grid.len())
                    .map(|idx| {
                        let i1 = idx % self.grid.n[0];
                        self.background(idx, i1)[k] + state.psi[k][idx]
                    })
                    .collect()
            })
            .collect();
        (rho, u)
    }

    fn full_rate_at(&self, rho: &[f64], u: &[Vec<f64>], idx: usize, order: u8) -> [f64; 4] {
        let grid = &self.grid;
        let d = grid.dim;
        let i = grid.ix(idx);
        let t = grid.tangential_index(i);
        let r = rho[idx];
        let mut uv = [0.0; 3];
        for k in 0..d {
            uv[k] = u[k][idx];
        }
        let c = self.transport(uv, t);
        let mut out = [0.0; 4];
        out[0] = -self.convection(rho, i, c, order) - r * grid.hat_div_at(u, i);
        let grad_rho = grid.hat_grad_at(rho, i);
        let graddiv = grid.hat_grad_div_at(u, i);
        let dp = self.params.dpressure(r);
        let mu1 = self.params.mu1;
        let mu12 = self.params.mu1 + self.params.mu2;
        for k in 0..d {
            let visc = mu1 * grid.hat_laplacian_at(&u[k], i) + mu12 * graddiv[k];
            out[k + 1] = -self.convection(&u[k], i, c, order) + (visc - dp * grad_rho[k]) / r;
        }
        out
    }

    /// `rho psi_t` on the boundary row before the boundary condition is
    /// imposed, one vector per tangential node. Vanishes for compatible data.
    pub fn boundary_momentum(&self, state: &PerturbationState, config: &SolverConfig) -> Result<Vec<[f64; 3]>> {
        let r = self.rhs_raw(state, config)?;
        let grid = &self.grid;
        Ok((0..grid.n_tangential())
            .map(|t| {
                let idx = grid.index([0, t % grid.n[1], t / grid.n[1]]);
                let rho = self.rho_tilde[idx] + state.phi[idx];
                let mut v = [0.0; 3];
                for (k, c) in r.psi.iter().enumerate() {
                    v[k] = rho * c[idx];
                }
                v
            })
            .collect())
    }

    /// Momentum forcing on the boundary row for the zero perturbation; the
    /// input to compatible initial data.
    pub fn boundary_forcing(&self, config: &SolverConfig) -> Result<Vec<[f64; 3]>> {
        self.boundary_momentum(&self.zero_state(), config)
    }

    /// Largest stable time step for the state (before the safety factor).
    pub fn stable_dt(&self, state: &PerturbationState) -> Result<f64> {
        self.check_state(state)?;
        let grid = &self.grid;
        let d = grid.dim;
        let speeds: Vec<(f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let i1 = idx % grid.n[0];
                let rho = self.rho_tilde[idx] + state.phi[idx];
                let mut u = self.background(idx, i1);
                for k in 0..d {
                    u[k] += state.psi[k][idx];
                }
                let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() + self.params.dpressure(rho).sqrt();
                (speed, rho)
            })
            .collect();
        let (vmax, rmin) = speeds
            .iter()
            .fold((0.0f64, f64::INFINITY), |(v, r), &(s, rho)| (v.max(s), r.min(rho)));
        let hmin = grid.h[..d].iter().cloned().fold(f64::INFINITY, f64::min);
        let inv_h2: f64 = grid.h[..d].iter().map(|h| 1.0 / (h * h)).sum();
        let slope = grid.max_slope_sq().sqrt();
        let visc = self.params.mu().max(self.params.mu1);
        let conv = if vmax > 0.0 { hmin / vmax } else { f64::INFINITY };
        let diff = rmin / (2.0 * visc * (1.0 + slope).powi(2) * inv_h2);
        Ok(conv.min(diff))
    }

    fn check_finite(state: &PerturbationState) -> Result<()> {
        if state.fields().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { t: state.t });
        }
        Ok(())
    }

    /// One Heun (SSP-RK2) step of size `dt`.
    pub fn step(&self, state: &PerturbationState, config: &SolverConfig, dt: f64) -> Result<PerturbationState> {
        Self::check_finite(state)?;
        let limit = config.cfl_safety * self.stable_dt(state)?;
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { t: state.t, dt, limit });
        }
        let k1 = self.rhs(state, config)?;
        let mut s1 = state.clone();
        s1.axpy(dt, &k1);
        s1.enforce_boundary();
        s1.t = state.t + dt;
        Self::check_finite(&s1)?;
        let k2 = self.rhs(&s1, config)?;
        s1.axpy(dt, &k2);
        let mut out = state.clone();
        out.average_with(&s1);
        out.enforce_boundary();
        out.t = state.t + dt;
        Self::check_finite(&out)?;
        self.check_state(&out)?;
        Ok(out)
    }

    /// Discrete `L^2` and max norms of the time derivative (boundary
    /// conditions applied): how far the state is from a discrete steady state.
    pub fn scheme_residual(&self, state: &PerturbationState, config: &SolverConfig) -> Result<(f64, f64)> {
        let r = self.rhs(state, config)?;
        let grid = &self.grid;
        let mut l2 = 0.0;
        let mut max = 0.0f64;
        for f in r.fields() {
            l2 += weighted_sum_sq(grid, f, 0.0);
            max = max.max(f.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        Ok((l2.sqrt(), max))
    }

    /// Residuals of the stationary compressible Navier-Stokes equations for
    /// the reconstructed full state, with centred differences.
    pub fn stationary_residual(&self, state: &PerturbationState) -> Result<ResidualReport> {
        self.check_state(state)?;
        let grid = &self.grid;
        let d = grid.dim;
        let (rho, u) = self.full_state(state);
        let flux: Vec<Vec<f64>> = u.iter().map(|c| c.iter().zip(&rho).map(|(v, r)| v * r).collect()).collect();
        let mu1 = self.params.mu1;
        let mu12 = self.params.mu1 + self.params.mu2;
        let per_node: Vec<(f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let i = grid.ix(idx);
                let mass = grid.hat_div_at(&flux, i);
                let r = rho[idx];
                let grad_rho = grid.hat_grad_at(&rho, i);
                let graddiv = grid.hat_grad_div_at(&u, i);
                let dp = self.params.dpressure(r);
                let mut mom2 = 0.0;
                for k in 0..d {
                    let gk = grid.hat_grad_at(&u[k], i);
                    let adv: f64 = (0..d).map(|l| u[l][idx] * gk[l]).sum();
                    let m = r * adv - mu1 * grid.hat_laplacian_at(&u[k], i) - mu12 * graddiv[k] + dp * grad_rho[k];
                    mom2 += m * m;
                }
                (mass, mom2.sqrt())
            })
            .collect();
        let mut report = ResidualReport {
            mass_l2: 0.0,
            mass_max: 0.0,
            momentum_l2: 0.0,
            momentum_max: 0.0,
        };
        for (idx, &(m, p)) in per_node.iter().enumerate() {
            let w = grid.weight(grid.ix(idx));
            report.mass_l2 += w * m * m;
            report.momentum_l2 += w * p * p;
            report.mass_max = report.mass_max.max(m.abs());
            report.momentum_max = report.momentum_max.max(p);
        }
        report.mass_l2 = report.mass_l2.sqrt();
        report.momentum_l2 = report.momentum_l2.sqrt();
        Ok(report)
    }

    /// Marches from `initial` to `config.t_end`, calling `observe` after every
    /// step (returning `Break` stops the run) and collecting norm reports at
    /// the configured cadence.
    pub fn run<F>(&self, config: &SolverConfig, initial: PerturbationState, mut observe: F) -> Result<RunOutput>
    where
        F: FnMut(&PerturbationState) -> ControlFlow<()>,
    {
        config.validate()?;
        self.check_state(&initial)?;
        let beta = self.beta(config);
        let mut reports = Vec::new();
        let mut next_report = 0.0;
        let mut state = initial;
        let t_end = config.t_end;
        let mut steps = 0usize;
        let mut stopped = false;
        let report_due = |t: f64, next: f64| t >= next - 1e-12 * t_end.max(1.0);
        if let Some(every) = config.report_interval {
            if report_due(state.t, next_report) {
                reports.push(norm_report(self, &state, config, beta)?);
                next_report += every;
            }
        }
        while state.t < t_end * (1.0 - 1e-14) {
            let limit = config.cfl_safety * self.stable_dt(&state)?;
            let dt = config.dt.unwrap_or(limit).min(t_end - state.t);
            state = self.step(&state, config, dt)?;
            steps += 1;
            if let Some(every) = config.report_interval {
                if report_due(state.t, next_report) {
                    reports.push(norm_report(self, &state, config, beta)?);
                    while report_due(state.t, next_report) {
                        next_report += every;
                    }
                }
            }
            if observe(&state).is_break() {
                stopped = true;
                break;
            }
        }
        Ok(RunOutput {
            state,
            reports,
            steps,
            stopped,
        })
    }
}

/// Final state of a run and the reports it emitted.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: PerturbationState,
    pub reports: Vec<NormReport>,
    pub steps: usize,
    /// True when the observer ended the run before `t_end`.
    pub stopped: bool,
}

/// `sum_i w_i exp(beta x1_i) f_i^2` in node order.
pub(crate) fn weighted_sum_sq(grid: &MappedGrid, f: &[f64], beta: f64) -> f64 {
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let i = grid.ix(idx);
            let mut w = grid.weight(i);
            if beta != 0.0 {
                w *= (beta * grid.x(i)[0]).exp();
            }
            w * f[idx] * f[idx]
        })
        .collect();
    terms.iter().sum()
}
