//! Run configuration and the batch scenarios behind the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::boundary::{compatible_initial_data, BoundaryDataSpec, CompatOrder};
use crate::diagnostics::{mach_field, state_weighted_l2};
use crate::error::{Error, Result};
use crate::geometry::{hat_gradient, hat_laplacian, BoundaryShape, MappedGrid, ShapeKind};
use crate::io;
use crate::params::PhysicalParams;
use crate::profile::{decay_rate, default_length, profile_residual, solve_profile};
use crate::solver::{PerturbationState, Problem, SolverConfig};
use crate::stationary::{contraction_check, fit_decay, march_to_steady, sample_trajectory, SteadyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Profile,
    #[default]
    Steady,
    Stability,
    Contraction,
    Verify,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "profile" => Ok(Self::Profile),
            "steady" => Ok(Self::Steady),
            "stability" => Ok(Self::Stability),
            "contraction" => Ok(Self::Contraction),
            "verify" => Ok(Self::Verify),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    #[serde(flatten)]
    pub kind: ShapeKind,
    #[serde(default = "default_cell")]
    pub cell: [f64; 2],
}

fn default_cell() -> [f64; 2] {
    [12.0, 12.0]
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            kind: ShapeKind::Flat,
            cell: default_cell(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n_normal: usize,
    pub n_tangential: [usize; 2],
    /// Normal extent; defaults to `ceil(16 / alpha) + 1`.
    pub length: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n_normal: 64,
            n_tangential: [32, 32],
            length: None,
        }
    }
}

/// Perturbations used by the stability and contraction scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub amplitude: f64,
    pub t_end: f64,
    pub sample_interval: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.02,
            t_end: 40.0,
            sample_interval: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub physical: PhysicalParams,
    #[serde(default)]
    pub shape: ShapeConfig,
    #[serde(default)]
    pub boundary_data: BoundaryDataSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub steady: SteadyOptions,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

/// Command-line overrides of individual keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub dim: Option<usize>,
    /// Sets `n_normal = N` and every tangential count to `N / 2`.
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.scenario {
            self.scenario = s;
        }
        if let Some(d) = o.dim {
            self.grid.dim = d;
        }
        if let Some(n) = o.resolution {
            self.grid.n_normal = n;
            self.grid.n_tangential = [n / 2, n / 2];
        }
        if let Some(t) = o.tol {
            self.steady.tol = t;
        }
        if let Some(out) = &o.output_dir {
            self.output_dir = out.clone();
        }
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.solver.validate()?;
        if self.grid.dim != 2 && self.grid.dim != 3 {
            return Err(Error::Validation(format!("dimension must be 2 or 3, got {}", self.grid.dim)));
        }
        if let Some(l) = self.grid.length {
            if !(l > 0.0) {
                return Err(Error::Validation(format!("grid length must be positive, got {l}")));
            }
        }
        self.shape()?;
        if !(self.steady.tol > 0.0 && self.steady.t_star > 0.0) {
            return Err(Error::Validation("steady tol and t_star must be positive".into()));
        }
        let st = &self.stability;
        if !(st.amplitude >= 0.0 && st.t_end > 0.0 && st.sample_interval > 0.0) {
            return Err(Error::Validation("stability settings must be positive".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<BoundaryShape> {
        BoundaryShape::new(self.grid.dim, self.shape.kind.clone(), self.shape.cell)
    }

    pub fn length(&self) -> Result<f64> {
        match self.grid.length {
            Some(l) => Ok(l),
            None => Ok(default_length(decay_rate(&self.physical)?) + 1.0),
        }
    }

    pub fn build_grid(&self) -> Result<MappedGrid> {
        MappedGrid::new(self.shape()?, self.grid.n_normal, self.grid.n_tangential, self.length()?)
    }

    pub fn build_problem(&self) -> Result<Problem> {
        Problem::new(self.physical, self.build_grid()?, &self.boundary_data)
    }
}

/// Files written by a scenario and its JSON summary.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
}

/// Runs the configured scenario and writes its artifacts. Nothing is written
/// when validation or the computation fails.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let mut out = Output::default();
    let summary = match cfg.scenario {
        Scenario::Profile => profile_scenario(cfg, &mut out)?,
        Scenario::Steady => steady_scenario(cfg, &mut out)?,
        Scenario::Stability => stability_scenario(cfg, &mut out)?,
        Scenario::Contraction => contraction_scenario(cfg, &mut out)?,
        Scenario::Verify => verify_scenario(cfg)?,
    };
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let echo = dir.join("config.toml");
    fs::write(&echo, cfg.to_toml()?)?;
    files.push(echo);
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?)?;
    files.push(path);
    for artifact in out.artifacts {
        let path = dir.join(artifact.name());
        artifact.write(&path)?;
        files.push(path);
    }
    Ok(ScenarioOutcome { summary, files })
}

/// Artifacts are assembled in memory and written after the computation
/// succeeds, so a failed run leaves no partial output.
#[derive(Default)]
struct Output {
    artifacts: Vec<Artifact>,
}

enum Artifact {
    Profile(crate::profile::PlanarProfile),
    TimeSeries(Vec<crate::diagnostics::NormReport>),
    Dump(&'static str, PerturbationState),
    Columns(&'static str, Vec<&'static str>, Vec<Vec<f64>>),
}

impl Artifact {
    fn name(&self) -> &str {
        match self {
            Self::Profile(_) => "profile.csv",
            Self::TimeSeries(_) => "time_series.csv",
            Self::Dump(n, _) | Self::Columns(n, _, _) => n,
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        match self {
            Self::Profile(p) => io::write_profile_csv(path, p),
            Self::TimeSeries(r) => io::write_time_series(path, r),
            Self::Dump(_, s) => io::write_state_dump(path, s),
            Self::Columns(_, names, cols) => {
                let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
                io::write_columns(path, names, &refs)
            }
        }
    }
}

fn profile_scenario(cfg: &RunConfig, out: &mut Output) -> Result<serde_json::Value> {
    let p = &cfg.physical;
    let wc = p.compute_wc()?;
    let alpha = decay_rate(p)?;
    let length = cfg.length()?;
    let profile = solve_profile(p, length, cfg.grid.n_normal)?;
    let (r1, r2) = profile_residual(&profile, p);
    let tail = profile.tail_fit();
    let summary = json!({
        "scenario": "profile",
        "alpha": alpha,
        "w_c": wc,
        "critical_velocity": wc * p.u_plus,
        "mach": p.mach(),
        "delta_tilde": p.delta_tilde(),
        "mass_flux": profile.m,
        "length": length,
        "nodes": profile.len(),
        "tail_rate": tail.rate,
        "residual_mass": r1,
        "residual_momentum": r2,
    });
    out.artifacts.push(Artifact::Profile(profile));
    Ok(summary)
}

fn section_artifacts(out: &mut Output, state: &PerturbationState, mach: Vec<f64>) {
    let grid = state.grid.clone();
    let tb: Vec<usize> = (0..grid.n_tangential()).collect();
    let boundary_idx: Vec<usize> = tb.iter().map(|&t| grid.index([0, t % grid.n[1], t / grid.n[1]])).collect();
    let mut cols = vec![
        tb.iter().map(|&t| grid.tangential_coord(t)[0]).collect::<Vec<_>>(),
        tb.iter().map(|&t| grid.height_at(t)).collect(),
    ];
    // one row above the boundary, where psi is not pinned to zero
    let above: Vec<usize> = tb.iter().map(|&t| grid.index([1, t % grid.n[1], t / grid.n[1]])).collect();
    cols.push(boundary_idx.iter().map(|&k| state.phi[k]).collect());
    for c in &state.psi {
        cols.push(above.iter().map(|&k| c[k]).collect());
    }
    let names: Vec<&'static str> = ["x2", "M", "phi", "psi1_above", "psi2_above", "psi3_above"]
        .into_iter()
        .take(3 + grid.dim)
        .collect();
    out.artifacts.push(Artifact::Columns("boundary_section.csv", names, cols));

    let mid = grid.n[1] / 4 + grid.n[1] * (grid.n[2] / 2);
    let line: Vec<usize> = (0..grid.n[0]).map(|i1| grid.index([i1, mid % grid.n[1], mid / grid.n[1]])).collect();
    let mut cols = vec![
        (0..grid.n[0]).map(|i1| grid.y1(i1)).collect::<Vec<_>>(),
        line.iter().map(|&k| grid.x(grid.ix(k))[0]).collect(),
        line.iter().map(|&k| state.phi[k]).collect(),
    ];
    for c in &state.psi {
        cols.push(line.iter().map(|&k| c[k]).collect());
    }
    cols.push(line.iter().map(|&k| mach[k]).collect());
    let mut names: Vec<&'static str> = ["y1", "x1", "phi", "psi1", "psi2", "psi3"].into_iter().take(3 + grid.dim).collect();
    names.push("mach");
    out.artifacts.push(Artifact::Columns("normal_section.csv", names, cols));
}

fn steady_state(cfg: &RunConfig, problem: &Problem) -> Result<crate::stationary::SteadyResult> {
    let forcing = problem.boundary_forcing(&cfg.solver)?;
    let initial = compatible_initial_data(problem, &cfg.solver, &forcing, CompatOrder::First)?;
    march_to_steady(problem, &cfg.solver, initial, &cfg.steady)
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn steady_scenario(cfg: &RunConfig, out: &mut Output) -> Result<serde_json::Value> {
    let problem = cfg.build_problem()?;
    let opts = SteadyOptions {
        report_windows: true,
        ..cfg.steady.clone()
    };
    let forcing = problem.boundary_forcing(&cfg.solver)?;
    let initial = compatible_initial_data(&problem, &cfg.solver, &forcing, CompatOrder::First)?;
    let result = march_to_steady(&problem, &cfg.solver, initial, &opts)?;
    let s = &result.phi_s;
    let mach = mach_field(&problem, s)?;
    let summary = json!({
        "scenario": "steady",
        "alpha": problem.profile.alpha,
        "w_c": problem.params.compute_wc()?,
        "delta": problem.extension.delta,
        "outflow_margin": problem.boundary.outflow_margin,
        "max_abs_phi": max_abs(&s.phi),
        "max_abs_psi": s.psi.iter().map(|c| max_abs(c)).collect::<Vec<_>>(),
        "far_field_mach": mach[problem.grid.n[0] - 2],
        "result": result,
    });
    out.artifacts.push(Artifact::TimeSeries(result.reports.clone()));
    out.artifacts.push(Artifact::Dump("steady.bin", s.clone()));
    section_artifacts(out, s, mach);
    Ok(summary)
}

/// Smooth perturbation supported in `1 <= y1 <= 7`, away from both faces, so
/// it is compatible with the boundary conditions at every order.
pub fn interior_perturbation(grid: &std::sync::Arc<MappedGrid>, amplitude: f64, seed: u64) -> PerturbationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = grid.dim + 1;
    let coeffs: Vec<[f64; 6]> = (0..nf)
        .map(|_| {
            let mut c = [0.0; 6];
            for v in c.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            c
        })
        .collect();
    let tau = 2.0 * std::f64::consts::PI;
    let fields: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|c| {
            grid.map_nodes(|i| {
                let y = grid.y(i);
                let s = (y[0] - 1.0) / 6.0;
                if !(0.0..=1.0).contains(&s) {
                    return 0.0;
                }
                let bump = (std::f64::consts::PI * s).sin().powi(4);
                let k2 = tau * y[1] / grid.shape.cell[0];
                let k3 = if grid.dim == 3 { tau * y[2] / grid.shape.cell[1] } else { 0.0 };
                let tang = c[0] + c[1] * k2.cos() + c[2] * k2.sin() + c[3] * (2.0 * k2).cos() + c[4] * k3.cos() + c[5] * k3.sin();
                amplitude * bump * tang / 4.0
            })
        })
        .collect();
    let mut it = fields.into_iter();
    let phi = it.next().unwrap();
    PerturbationState::new(grid.clone(), phi, it.collect())
}

fn add_states(a: &PerturbationState, b: &PerturbationState) -> PerturbationState {
    let mut out = a.difference(&b.scaled(-1.0));
    out.t = a.t;
    out
}

fn stability_scenario(cfg: &RunConfig, out: &mut Output) -> Result<serde_json::Value> {
    let problem = cfg.build_problem()?;
    let steady = steady_state(cfg, &problem)?;
    let phi_s = steady.phi_s.clone();
    let mut start = add_states(&phi_s, &interior_perturbation(&problem.grid, cfg.stability.amplitude, cfg.seed));
    start.t = 0.0;
    let solver = SolverConfig {
        t_end: cfg.stability.t_end,
        report_interval: Some(cfg.stability.sample_interval),
        ..cfg.solver.clone()
    };
    let beta = problem.beta(&solver);
    let run = problem.run(&solver, start.clone(), |_| std::ops::ControlFlow::Continue(()))?;
    let snaps = sample_trajectory(&problem, &SolverConfig { report_interval: None, ..solver.clone() }, start, cfg.stability.sample_interval)?;
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let dist_beta: Vec<f64> = snaps.iter().map(|s| state_weighted_l2(&s.difference(&phi_s), beta)).collect();
    let dist_plain: Vec<f64> = snaps.iter().map(|s| state_weighted_l2(&s.difference(&phi_s), 0.0)).collect();
    let fit = fit_decay(&times, &dist_beta, 0.2).ok();
    let summary = json!({
        "scenario": "stability",
        "beta": beta,
        "steady_windows": steady.windows,
        "fit": fit,
        "initial_distance": dist_beta.first(),
        "final_distance_weighted": dist_beta.last(),
        "final_distance_plain": dist_plain.last(),
    });
    out.artifacts.push(Artifact::TimeSeries(run.reports));
    out.artifacts.push(Artifact::Columns("decay.csv", vec!["t", "distance_beta", "distance_plain"], vec![times, dist_beta, dist_plain]));
    out.artifacts.push(Artifact::Dump("steady.bin", phi_s));
    Ok(summary)
}

fn contraction_scenario(cfg: &RunConfig, out: &mut Output) -> Result<serde_json::Value> {
    let problem = cfg.build_problem()?;
    let forcing = problem.boundary_forcing(&cfg.solver)?;
    let base = compatible_initial_data(&problem, &cfg.solver, &forcing, CompatOrder::First)?;
    let amp = cfg.stability.amplitude;
    let a = add_states(&base, &interior_perturbation(&problem.grid, amp, cfg.seed));
    let b = add_states(&base, &interior_perturbation(&problem.grid, amp, cfg.seed.wrapping_add(1)));
    let solver = SolverConfig {
        t_end: cfg.stability.t_end,
        ..cfg.solver.clone()
    };
    let beta = problem.beta(&solver);
    let report = contraction_check(&problem, &solver, a, b, beta, cfg.stability.sample_interval)?;
    let summary = json!({
        "scenario": "contraction",
        "beta": beta,
        "non_increasing": report.non_increasing,
        "max_violation": report.max_violation,
        "gamma0": report.gamma0(),
        "fit": report.fit,
    });
    out.artifacts.push(Artifact::Columns(
        "contraction.csv",
        vec!["t", "distance_beta"],
        vec![report.times.clone(), report.distances.clone()],
    ));
    Ok(summary)
}

/// Observed convergence order between successive errors when the spacing
/// halves.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Errors of the transformed gradient and Laplacian against closed forms for
/// `f = exp(-x1/4) cos(2 pi x2 / P)` on the configured shape, on grids with
/// `n` and `2n - 1` normal nodes (spacing halves exactly).
fn operator_errors(shape: &BoundaryShape, n: usize, length: f64) -> Result<(f64, f64)> {
    let grid = MappedGrid::new(shape.clone(), n, [2 * (n - 1), 2 * (n - 1)], length)?;
    let k = 2.0 * std::f64::consts::PI / shape.cell[0];
    let f = grid.map_nodes(|i| {
        let x = grid.x(i);
        (-x[0] / 4.0).exp() * (k * x[1]).cos()
    });
    let g = hat_gradient(&grid, &f)?;
    let lap = hat_laplacian(&grid, std::slice::from_ref(&f).iter().cloned().chain(std::iter::repeat(f.clone()).take(grid.dim - 1)).collect::<Vec<_>>().as_slice())?;
    let mut eg = 0.0f64;
    let mut el = 0.0f64;
    for idx in 0..grid.len() {
        let x = grid.x(grid.ix(idx));
        let e = (-x[0] / 4.0).exp();
        let exact_g = [-0.25 * e * (k * x[1]).cos(), -k * e * (k * x[1]).sin()];
        let exact_l = (1.0 / 16.0 - k * k) * e * (k * x[1]).cos();
        eg = eg.max((g[0][idx] - exact_g[0]).abs()).max((g[1][idx] - exact_g[1]).abs());
        el = el.max((lap[0][idx] - exact_l).abs());
    }
    Ok((eg, el))
}

fn verify_scenario(cfg: &RunConfig) -> Result<serde_json::Value> {
    let p = &cfg.physical;
    let length = cfg.length()?;
    let mut profile_r2 = Vec::new();
    for n in [101usize, 201, 401] {
        profile_r2.push(profile_residual(&solve_profile(p, length, n)?, p).1);
    }
    let shape2 = BoundaryShape::new(2, cfg.shape.kind.clone(), cfg.shape.cell)?;
    let mut grad_err = Vec::new();
    let mut lap_err = Vec::new();
    for n in [17usize, 33, 65] {
        let (g, l) = operator_errors(&shape2, n, 4.0)?;
        grad_err.push(g);
        lap_err.push(l);
    }

    // zero perturbation of the planar problem must stay exactly zero
    let flat = MappedGrid::new(BoundaryShape::flat(2, cfg.shape.cell), cfg.grid.n_normal, [8, 1], length)?;
    let planar = Problem::new(*p, flat, &BoundaryDataSpec::Planar)?;
    let solver = SolverConfig {
        t_end: f64::INFINITY,
        ..cfg.solver.clone()
    };
    let mut steps = 0;
    let out = planar.run(&solver, planar.zero_state(), |_| {
        steps += 1;
        if steps >= 200 {
            std::ops::ControlFlow::Break(())
        } else {
            std::ops::ControlFlow::Continue(())
        }
    })?;

    Ok(json!({
        "scenario": "verify",
        "profile_momentum_residual": profile_r2,
        "profile_order": observed_orders(&profile_r2),
        "gradient_error": grad_err,
        "gradient_order": observed_orders(&grad_err),
        "laplacian_error": lap_err,
        "laplacian_order": observed_orders(&lap_err),
        "fixed_point_steps": out.steps,
        "fixed_point_max_abs": out.state.max_abs(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.scenario, Scenario::Steady);
        assert_eq!(cfg.physical, PhysicalParams::default());
        assert_eq!(cfg.grid.dim, 2);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let text = r#"
            scenario = "profile"
            seed = 7
            [physical]
            u_tilde_b = -2.5
            [shape]
            kind = "gaussian-bump"
            amplitude = 0.3
            width = 1.0
            [boundary_data]
            kind = "normal"
            [grid]
            n_normal = 40
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.scenario, Scenario::Profile);
        assert_eq!(cfg.physical.u_tilde_b, -2.5);
        assert_eq!(cfg.shape.kind, ShapeKind::GaussianBump { amplitude: 0.3, width: 1.0 });
        assert_eq!(cfg.boundary_data, BoundaryDataSpec::Normal);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back.to_toml().unwrap(), cfg.to_toml().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[physical]\nkappa = 1.0").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            scenario: Some(Scenario::Verify),
            dim: Some(3),
            resolution: Some(40),
            tol: Some(1e-5),
            output_dir: Some("elsewhere".into()),
        });
        assert_eq!(cfg.scenario, Scenario::Verify);
        assert_eq!(cfg.grid.dim, 3);
        assert_eq!(cfg.grid.n_normal, 40);
        assert_eq!(cfg.grid.n_tangential, [20, 20]);
        assert_eq!(cfg.steady.tol, 1e-5);
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
    }
}
