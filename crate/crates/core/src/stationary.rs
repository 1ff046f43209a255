//! Steady states by long-time marching, contraction between trajectories and
//! decay-rate fits.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{norm_report, state_weighted_l2, NormReport};
use crate::error::{Error, Result};
use crate::profile::linear_fit;
use crate::solver::{PerturbationState, Problem, ResidualReport, SolverConfig};

/// Stopping rules for [`march_to_steady`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SteadyOptions {
    /// Translation period `T*` between gap measurements.
    pub t_star: f64,
    /// Target for both the translation gap and the scheme residual.
    pub tol: f64,
    /// Windows allowed without a 5% improvement of the best gap.
    pub patience: usize,
    /// Give up after this much simulated time.
    pub max_time: f64,
    /// Record a norm report after every window.
    pub report_windows: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            t_star: 2.0,
            tol: 1e-8,
            patience: 10,
            max_time: 2000.0,
            report_windows: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyResult {
    #[serde(skip)]
    pub phi_s: PerturbationState,
    pub t_final: f64,
    pub iterations: usize,
    pub windows: usize,
    /// Weighted gap `|Phi(t + T*) - Phi(t)|` after each window.
    pub translation_gap: Vec<f64>,
    /// Discrete `L^2` and max norm of the time derivative at the end.
    pub scheme_residual: (f64, f64),
    /// Cartesian residual of the full stationary equations.
    pub final_residuals: ResidualReport,
    /// Decay rate fitted to the gap history, when enough windows exist.
    pub fitted_zeta: Option<f64>,
    pub beta: f64,
    pub t_star: f64,
    pub tol: f64,
    pub reports: Vec<NormReport>,
}

/// Marches until the weighted gap over one period `T*` and the scheme
/// residual both drop below `tol`.
pub fn march_to_steady(
    problem: &Problem,
    config: &SolverConfig,
    initial: PerturbationState,
    opts: &SteadyOptions,
) -> Result<SteadyResult> {
    if !(opts.t_star > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Validation("T* and tol must be positive".into()));
    }
    let beta = problem.beta(config);
    let mut state = initial;
    let mut gaps = Vec::new();
    let mut times = Vec::new();
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let t0 = state.t;
    let mut reports = Vec::new();
    if opts.report_windows {
        reports.push(norm_report(problem, &state, config, beta)?);
    }
    loop {
        let prev = state.clone();
        let cfg = SolverConfig {
            t_end: state.t + opts.t_star,
            report_interval: None,
            ..config.clone()
        };
        let out = problem.run(&cfg, state, |_| ControlFlow::Continue(()))?;
        iterations += out.steps;
        state = out.state;
        let gap = state_weighted_l2(&state.difference(&prev), beta);
        gaps.push(gap);
        times.push(state.t);
        if opts.report_windows {
            reports.push(norm_report(problem, &state, config, beta)?);
        }
        let residual = problem.scheme_residual(&state, config)?;
        if gap < opts.tol && residual.0 < opts.tol {
            let fitted_zeta = fit_gap_rate(&times, &gaps);
            return Ok(SteadyResult {
                final_residuals: problem.stationary_residual(&state)?,
                t_final: state.t,
                phi_s: state,
                iterations,
                windows: gaps.len(),
                translation_gap: gaps,
                scheme_residual: residual,
                fitted_zeta,
                beta,
                t_star: opts.t_star,
                tol: opts.tol,
                reports,
            });
        }
        if gap < 0.95 * best {
            best = gap;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= opts.patience || state.t - t0 >= opts.max_time {
            return Err(Error::NotConverging { t: state.t, gap });
        }
    }
}

fn fit_gap_rate(times: &[f64], gaps: &[f64]) -> Option<f64> {
    fit_decay(times, gaps, 0.2).ok().map(|f| f.zeta)
}

/// Least-squares exponential fit `d(t) ~ C exp(-zeta t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub zeta: f64,
    /// Correlation coefficient of the log-linear fit.
    pub r: f64,
    pub samples: usize,
    /// Set when `|r| < 0.98`.
    pub low_confidence: bool,
}

const NOISE_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Fits `log d` against `t`, skipping the first `transient` fraction of the
/// time span and samples below the noise floor.
pub fn fit_decay(times: &[f64], d: &[f64], transient: f64) -> Result<DecayFit> {
    if times.len() != d.len() {
        return Err(Error::InsufficientData("times and distances differ in length".into()));
    }
    if d.iter().all(|&v| v <= NOISE_FLOOR) {
        return Err(Error::AtFixedPoint);
    }
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let start = first + transient * (last - first);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(d)
        .filter(|(&t, &v)| t >= start && v > NOISE_FLOOR)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} usable samples after the transient, need 10",
            pts.len()
        )));
    }
    let (slope, _) = linear_fit(&pts);
    let r = correlation(&pts);
    Ok(DecayFit {
        zeta: -slope,
        r,
        samples: pts.len(),
        low_confidence: r.abs() < 0.98,
    })
}

fn correlation(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return if syy == 0.0 { 1.0 } else { 0.0 };
    }
    sxy / (sxx * syy).sqrt()
}

/// Decay rate of `|Phi(t) - Phi_s|_beta` along stored snapshots, fitted over
/// `window = (t0, t1)`.
pub fn estimate_decay_rate(
    trajectory: &[PerturbationState],
    phi_s: &PerturbationState,
    beta: f64,
    window: (f64, f64),
) -> Result<DecayFit> {
    let (times, d): (Vec<f64>, Vec<f64>) = trajectory
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, state_weighted_l2(&s.difference(phi_s), beta)))
        .unzip();
    fit_decay(&times, &d, 0.0)
}

/// Runs to `config.t_end` storing a snapshot every `interval` (and the
/// initial state).
pub fn sample_trajectory(
    problem: &Problem,
    config: &SolverConfig,
    initial: PerturbationState,
    interval: f64,
) -> Result<Vec<PerturbationState>> {
    if !(interval > 0.0) {
        return Err(Error::Validation("sampling interval must be positive".into()));
    }
    let mut snaps = vec![initial.clone()];
    let mut next = initial.t + interval;
    problem.run(config, initial, |s| {
        if s.t >= next - 1e-12 {
            snaps.push(s.clone());
            while next <= s.t + 1e-12 {
                next += interval;
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(snaps)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub beta: f64,
    /// Largest excess `d(t_{j+1}) - d(t_j)` beyond the allowed slack.
    pub max_violation: f64,
    pub non_increasing: bool,
    pub fit: Option<DecayFit>,
}

impl ContractionReport {
    pub fn gamma0(&self) -> Option<f64> {
        self.fit.map(|f| f.zeta)
    }
}

/// Evolves two initial data with identical steps and tracks their weighted
/// distance, sampled every `interval`.
pub fn contraction_check(
    problem: &Problem,
    config: &SolverConfig,
    initial_a: PerturbationState,
    initial_b: PerturbationState,
    beta: f64,
    interval: f64,
) -> Result<ContractionReport> {
    config.validate()?;
    if !(interval > 0.0) {
        return Err(Error::Validation("sampling interval must be positive".into()));
    }
    let mut a = initial_a;
    let mut b = initial_b;
    let mut times = vec![a.t];
    let mut distances = vec![state_weighted_l2(&a.difference(&b), beta)];
    let mut next = a.t + interval;
    let t_end = config.t_end;
    while a.t < t_end * (1.0 - 1e-14) {
        let limit = config.cfl_safety * problem.stable_dt(&a)?.min(problem.stable_dt(&b)?);
        let dt = config.dt.unwrap_or(limit).min(t_end - a.t);
        a = problem.step(&a, config, dt)?;
        b = problem.step(&b, config, dt)?;
        b.t = a.t;
        if a.t >= next - 1e-12 || a.t >= t_end * (1.0 - 1e-14) {
            times.push(a.t);
            distances.push(state_weighted_l2(&a.difference(&b), beta));
            while next <= a.t + 1e-12 {
                next += interval;
            }
        }
    }
    let slack = 1e-3 * distances[0];
    let mut max_violation = 0.0f64;
    for j in 1..times.len() {
        let excess = distances[j] - distances[j - 1] - slack * (times[j] - times[j - 1]);
        max_violation = max_violation.max(excess);
    }
    let fit = if distances[0] == 0.0 {
        None
    } else {
        fit_decay(&times, &distances, 0.2).ok()
    };
    Ok(ContractionReport {
        times,
        distances,
        beta,
        max_violation,
        non_increasing: max_violation <= 0.0,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fit() {
        let t: Vec<f64> = (0..50).map(|j| j as f64 * 0.2).collect();
        let d: Vec<f64> = t.iter().map(|t| (-0.3 * t).exp()).collect();
        let fit = fit_decay(&t, &d, 0.2).unwrap();
        assert!((fit.zeta - 0.3).abs() < 1e-6);
        assert!(fit.r.abs() > 0.999 && !fit.low_confidence);
    }

    #[test]
    fn fixed_point_trajectory() {
        let t: Vec<f64> = (0..20).map(|j| j as f64).collect();
        let d = vec![0.0; 20];
        assert!(matches!(fit_decay(&t, &d, 0.2), Err(Error::AtFixedPoint)));
    }

    #[test]
    fn short_trajectory() {
        let t = vec![0.0, 1.0, 2.0];
        let d = vec![1.0, 0.5, 0.25];
        assert!(matches!(fit_decay(&t, &d, 0.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn noisy_trajectory_is_flagged() {
        let t: Vec<f64> = (0..40).map(|j| j as f64).collect();
        let d: Vec<f64> = (0..40).map(|j| if j % 2 == 0 { 1.0 } else { 0.1 }).collect();
        let fit = fit_decay(&t, &d, 0.0).unwrap();
        assert!(fit.low_confidence);
    }
}
