//! Shared oracles: second-order jets in Cartesian coordinates and the
//! continuum right-hand sides of the compressible Navier-Stokes system.
#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use outflow_core::geometry::MappedGrid;
use outflow_core::profile::PlanarProfile;
use outflow_core::PhysicalParams;

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    pub fn coord(x: [f64; 3], axis: usize) -> Self {
        let mut j = Self::constant(x[axis]);
        j.g[axis] = 1.0;
        j
    }

    /// `f(self)` given `f, f', f''` at `self.v`.
    pub fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for a in 0..3 {
            out.g[a] = f1 * self.g[a];
            for b in 0..3 {
                out.h[a][b] = f2 * self.g[a] * self.g[b] + f1 * self.h[a][b];
            }
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.v;
        self.compose(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn scale(self, s: f64) -> Self {
        self * Jet::constant(s)
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for a in 0..3 {
            r.g[a] += o.g[a];
            for b in 0..3 {
                r.h[a][b] += o.h[a][b];
            }
        }
        r
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for a in 0..3 {
            r.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..3 {
                r.h[a][b] = self.h[a][b] * o.v
                    + self.g[a] * o.g[b]
                    + self.g[b] * o.g[a]
                    + self.v * o.h[a][b];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

/// Jet of the boundary height `M(x2, x3)` lifted to three coordinates.
pub fn height_jet(grid: &MappedGrid, x: [f64; 3]) -> Jet {
    let (m, g, h) = grid.shape.eval([x[1], x[2]]);
    let mut j = Jet::constant(m);
    j.g = [0.0, g[0], g[1]];
    for a in 0..2 {
        for b in 0..2 {
            j.h[a + 1][b + 1] = h[a][b];
        }
    }
    j
}

/// Planar profile composed with `s = x1 - M(x')`, at the node with normal
/// index `i1` (where `s` equals the node's `y1`). Returns `(rho, u1)` jets.
pub fn profile_jets(profile: &PlanarProfile, grid: &MappedGrid, x: [f64; 3], i1: usize) -> (Jet, Jet) {
    let s = Jet::coord(x, 0) - height_jet(grid, x);
    let u = s.compose(profile.u1[i1], profile.du1[i1], profile.d2u1[i1]);
    let rho = Jet::constant(profile.m) / u;
    (rho, u)
}

/// `d rho / dt = -div(rho u)`.
pub fn mass_rate(rho: Jet, u: &[Jet]) -> f64 {
    u.iter().enumerate().map(|(k, uk)| -(rho * *uk).g[k]).sum()
}

/// `d u_k / dt = -(u . grad) u_k + (mu1 lap u_k + (mu1 + mu2) d_k div u - p'(rho) d_k rho) / rho`.
pub fn momentum_rate(params: &PhysicalParams, rho: Jet, u: &[Jet], k: usize) -> f64 {
    let d = u.len();
    let adv: f64 = (0..d).map(|l| u[l].v * u[k].g[l]).sum();
    let graddiv: f64 = (0..d).map(|l| u[l].h[k][l]).sum();
    let lap: f64 = (0..d).map(|l| u[k].h[l][l]).sum();
    -adv + (params.mu1 * lap + (params.mu1 + params.mu2) * graddiv - params.dpressure(rho.v) * rho.g[k]) / rho.v
}

/// Stationary forcing of the flow `w` over the density `rho`:
/// `L w - rho (w . grad) w - grad p(rho)` (momentum) and `-div(rho w)` (mass).
pub fn stationary_forcing(params: &PhysicalParams, rho: Jet, w: &[Jet]) -> (f64, [f64; 3]) {
    let d = w.len();
    let mut g = [0.0; 3];
    for k in 0..d {
        g[k] = rho.v * momentum_rate(params, rho, w, k);
    }
    (mass_rate(rho, w), g)
}

/// Largest absolute difference over nodes selected by `keep`.
pub fn max_err(grid: &MappedGrid, a: &[f64], b: impl Fn(usize) -> f64, keep: impl Fn([usize; 3]) -> bool) -> f64 {
    (0..grid.len())
        .filter(|&k| keep(grid.ix(k)))
        .map(|k| (a[k] - b(k)).abs())
        .fold(0.0, f64::max)
}

pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

use std::sync::Arc;

use outflow_core::boundary::{compatible_initial_data, BoundaryDataSpec, CompatOrder};
use outflow_core::geometry::{hat_divergence, hat_gradient, hat_laplacian, BoundaryShape};
use outflow_core::solver::{PerturbationState, Problem, SolverConfig};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Bump geometry used by the manufactured-solution checks: amplitude 0.3,
/// width 1, periodic cell 6, normal extent 6.
pub fn mms_grid(n2: usize) -> MappedGrid {
    let shape = BoundaryShape::gaussian(2, 0.3, 1.0, [6.0, 0.0]).unwrap();
    MappedGrid::new(shape, n2 + 1, [n2, 1], 6.0).unwrap()
}

fn wave(grid: &MappedGrid) -> f64 {
    TAU / grid.shape.cell[0]
}

/// Two smooth fields periodic in `x2`.
pub fn mms_fields(grid: &MappedGrid, x: [f64; 3]) -> [Jet; 2] {
    let k = wave(grid);
    let x1 = Jet::coord(x, 0);
    let x2 = Jet::coord(x, 1);
    let f = x1.scale(-0.25).exp() * (Jet::constant(1.0) + x2.scale(k).cos().scale(0.5));
    let g = (x1.scale(0.7) + x2.scale(k)).sin() * x1.scale(-0.5).exp();
    [f, g]
}

/// Max-norm errors of the transformed gradient, divergence and vector
/// Laplacian against the jets.
pub fn hat_operator_errors(n2: usize) -> [f64; 3] {
    let grid = mms_grid(n2);
    let jets: Vec<[Jet; 2]> = (0..grid.len()).map(|k| mms_fields(&grid, grid.x(grid.ix(k)))).collect();
    let f: Vec<f64> = jets.iter().map(|j| j[0].v).collect();
    let g: Vec<f64> = jets.iter().map(|j| j[1].v).collect();
    let all = |_: [usize; 3]| true;
    let grad = hat_gradient(&grid, &f).unwrap();
    let e_grad = (0..2)
        .map(|a| max_err(&grid, &grad[a], |k| jets[k][0].g[a], all))
        .fold(0.0, f64::max);
    let v = vec![f.clone(), g.clone()];
    let div = hat_divergence(&grid, &v).unwrap();
    let e_div = max_err(&grid, &div, |k| jets[k][0].g[0] + jets[k][1].g[1], all);
    let lap = hat_laplacian(&grid, &v).unwrap();
    let e_lap = (0..2)
        .map(|c| max_err(&grid, &lap[c], |k| jets[k][c].laplacian(), all))
        .fold(0.0, f64::max);
    [e_grad, e_div, e_lap]
}

/// Max-norm error of the semi-discrete right-hand side (no boundary
/// conditions) on a manufactured state over the bump, against the
/// continuum rates of mass and momentum.
pub fn evolution_error(n2: usize) -> f64 {
    let params = PhysicalParams::default();
    let problem = Problem::new(params, mms_grid(n2), &BoundaryDataSpec::Planar).unwrap();
    let grid = problem.grid.clone();
    let eps = 0.05;
    let jets: Vec<[Jet; 2]> = (0..grid.len()).map(|k| mms_fields(&grid, grid.x(grid.ix(k)))).collect();
    let phi: Vec<f64> = jets.iter().map(|j| eps * j[1].v).collect();
    let psi: Vec<Vec<f64>> = vec![
        jets.iter().map(|j| eps * j[0].v).collect(),
        jets.iter().map(|j| eps * j[1].v * j[0].v).collect(),
    ];
    let state = PerturbationState::new(grid.clone(), phi, psi);
    let rate = problem.rhs_raw(&state, &SolverConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..grid.len() {
        let i = grid.ix(k);
        let x = grid.x(i);
        let (rt, ut) = profile_jets(&problem.profile, &grid, x, i[0]);
        let [f, g] = jets[k];
        let rho = rt + g.scale(eps);
        let u = [ut + f.scale(eps), (g * f).scale(eps)];
        worst = worst.max((rate.phi[k] - mass_rate(rho, &u)).abs());
        for c in 0..2 {
            worst = worst.max((rate.psi[c][k] - momentum_rate(&params, rho, &u, c)).abs());
        }
    }
    worst
}

/// Custom boundary data `(u_tilde_b + 0.3 cos, 0.3 sin)` sampled exactly at
/// the tangential nodes, so nodal values of the extension are those of the
/// smooth field.
pub fn wavy_data(grid: &MappedGrid, params: &PhysicalParams) -> BoundaryDataSpec {
    let k = wave(grid);
    let x2: Vec<f64> = (0..grid.n[1]).map(|t| grid.tangential_coord(t)[0]).collect();
    let u = x2
        .iter()
        .map(|&x| [params.u_tilde_b + 0.3 * (k * x).cos(), 0.3 * (k * x).sin(), 0.0])
        .collect();
    BoundaryDataSpec::Custom { x2, u }
}

/// Max-norm errors of the stationary forcing `(F, G)` against
/// `-div(rho w)` and `L w - rho (w . grad) w - grad p(rho)` for
/// `w = u_tilde e1 + U`, skipping nodes within two spacings of the cutoff's
/// outer edge `y1 = 1` where it is only `C^2`.
pub fn source_errors(n2: usize) -> (f64, f64) {
    let params = PhysicalParams::default();
    let grid = mms_grid(n2);
    let data = wavy_data(&grid, &params);
    let problem = Problem::new(params, grid, &data).unwrap();
    let grid = problem.grid.clone();
    let k = wave(&grid);
    let h1 = grid.h[0];
    let keep = |i: [usize; 3]| (grid.y1(i[0]) - 1.0).abs() > 2.0 * h1 + 1e-12;
    let (mut ef, mut eg) = (0.0f64, 0.0f64);
    for idx in 0..grid.len() {
        let i = grid.ix(idx);
        if !keep(i) {
            continue;
        }
        let x = grid.x(i);
        let (rt, ut) = profile_jets(&problem.profile, &grid, x, i[0]);
        let s = Jet::coord(x, 0) - height_jet(&grid, x);
        let sv = s.v.clamp(0.0, 1.0);
        let chi = if s.v >= 1.0 {
            Jet::constant(0.0)
        } else {
            s.compose(
                1.0 - sv.powi(3) * (10.0 - 15.0 * sv + 6.0 * sv * sv),
                -30.0 * sv * sv + 60.0 * sv.powi(3) - 30.0 * sv.powi(4),
                -60.0 * sv + 180.0 * sv * sv - 120.0 * sv.powi(3),
            )
        };
        let x2 = Jet::coord(x, 1).scale(k);
        let w = [ut + x2.cos().scale(0.3) * chi, x2.sin().scale(0.3) * chi];
        let (f, g) = stationary_forcing(&params, rt, &w);
        ef = ef.max((problem.sources.f[idx] - f).abs());
        for c in 0..2 {
            eg = eg.max((problem.sources.g[c][idx] - g[c]).abs());
        }
    }
    (ef, eg)
}

pub fn shared(grid: MappedGrid) -> Arc<MappedGrid> {
    Arc::new(grid)
}

/// Gaussian bump with normal boundary velocity, one tangential dimension.
pub fn bump_problem(n1: usize, n2: usize, length: f64) -> Problem {
    let shape = BoundaryShape::gaussian(2, 0.3, 1.0, [12.0, 0.0]).unwrap();
    let grid = MappedGrid::new(shape, n1, [n2, 1], length).unwrap();
    Problem::new(PhysicalParams::default(), grid, &BoundaryDataSpec::Normal).unwrap()
}

pub fn max_boundary(v: &[[f64; 3]]) -> f64 {
    v.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn first_order_boundary_residual(n1: usize, n2: usize) -> f64 {
    let problem = bump_problem(n1, n2, 8.0);
    let cfg = SolverConfig::default();
    let g = problem.boundary_forcing(&cfg).unwrap();
    let phi0 = compatible_initial_data(&problem, &cfg, &g, CompatOrder::First).unwrap();
    max_boundary(&problem.boundary_momentum(&phi0, &cfg).unwrap())
}

/// Flat boundary with a tangential wave of amplitude `delta` on top of the
/// planar boundary velocity.
pub fn wavy_flat_problem(delta: f64) -> Problem {
    let shape = BoundaryShape::flat(2, [12.0, 0.0]);
    let grid = MappedGrid::new(shape, 33, [48, 1], 8.0).unwrap();
    let p = PhysicalParams::default();
    let k = TAU / 12.0;
    let x2: Vec<f64> = (0..grid.n[1]).map(|t| grid.tangential_coord(t)[0]).collect();
    let u = x2
        .iter()
        .map(|&x| [p.u_tilde_b + delta * (k * x).cos(), delta * (k * x).sin(), 0.0])
        .collect();
    Problem::new(p, grid, &BoundaryDataSpec::Custom { x2, u }).unwrap()
}
