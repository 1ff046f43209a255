//! Planar boundary-layer profile.
//!
//! Mass conservation gives `rho u = m` and the momentum equation integrates
//! once to `mu u' = F(u)`, so the profile is a scalar autonomous ODE started
//! from the boundary velocity and relaxing to the far-field state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Flux function without the domain check; callers guarantee `u < 0`.
pub(crate) fn flux_value(params: &PhysicalParams, u: f64) -> f64 {
    let m = params.mass_flux();
    let up = params.u_plus;
    let rp = params.rho_plus;
    // p(m/u) - p(rho_plus) written to keep relative accuracy near u_plus.
    let drho_rel = m * (up - u) / (u * up) / rp;
    let dp = params.k * rp.powf(params.gamma) * (params.gamma * drho_rel.ln_1p()).exp_m1();
    m * (u - up) + dp
}

/// `F(u) = m u + p(m/u) - (m u_plus + p(rho_plus))`; the profile obeys
/// `mu u1' = F(u1)`.
pub fn flux_function(params: &PhysicalParams, u: f64) -> Result<f64> {
    if !(u < 0.0) {
        return Err(Error::Domain(u));
    }
    Ok(flux_value(params, u))
}

/// `F'(u) = m (1 - p'(m/u) / u^2)`.
pub fn flux_derivative(params: &PhysicalParams, u: f64) -> Result<f64> {
    if !(u < 0.0) {
        return Err(Error::Domain(u));
    }
    let m = params.mass_flux();
    Ok(m * (1.0 - params.dpressure(m / u) / (u * u)))
}

/// Spatial decay rate `alpha = -F'(u_plus) / mu` of the profile tail.
pub fn decay_rate(params: &PhysicalParams) -> Result<f64> {
    if params.u_plus >= 0.0 {
        return Err(Error::WrongSign(params.u_plus));
    }
    let alpha = -flux_derivative(params, params.u_plus)? / params.mu();
    if alpha <= 0.0 {
        return Err(Error::NotSupersonic { mach: params.mach() });
    }
    Ok(alpha)
}

/// Default truncation length `ceil(16 / alpha)`, keeping `exp(-alpha L)`
/// near `1e-7`.
pub fn default_length(alpha: f64) -> f64 {
    (16.0 / alpha).ceil()
}

/// Sampled planar profile on a uniform grid `x1 = i L / (n-1)`.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarProfile {
    pub x1: Vec<f64>,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    /// `d rho / dx1`, from the ODE.
    pub drho: Vec<f64>,
    /// `d u1 / dx1 = F(u1) / mu`.
    pub du1: Vec<f64>,
    /// `d^2 u1 / dx1^2 = F'(u1) u1' / mu`.
    pub d2u1: Vec<f64>,
    pub m: f64,
    pub alpha: f64,
    pub delta_tilde: f64,
    pub u_plus: f64,
    pub rho_plus: f64,
}

impl PlanarProfile {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.x1[1] - self.x1[0]
    }

    pub fn length(&self) -> f64 {
        *self.x1.last().unwrap()
    }

    /// Least-squares fit of `log|u1 - u_plus|` over the last quarter of the
    /// domain.
    pub fn tail_fit(&self) -> TailFit {
        let n = self.len();
        let start = n - n / 4;
        let pts: Vec<(f64, f64)> = (start..n)
            .filter_map(|i| {
                let d = (self.u1[i] - self.u_plus).abs();
                (d > 1e-14 * self.u_plus.abs()).then(|| (self.x1[i], d.ln()))
            })
            .collect();
        if pts.len() < 2 {
            return TailFit {
                rate: f64::NAN,
                prefactor: 0.0,
                samples: pts.len(),
            };
        }
        let (slope, intercept) = linear_fit(&pts);
        TailFit {
            rate: -slope,
            prefactor: intercept.exp() / self.delta_tilde.max(f64::MIN_POSITIVE),
            samples: pts.len(),
        }
    }
}

/// Fitted tail `|u1 - u_plus| ~ C delta_tilde exp(-rate x1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    pub rate: f64,
    pub prefactor: f64,
    pub samples: usize,
}

pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Integrates `mu u' = F(u)` from `u(0) = u_tilde_b` on `[0, length]` and
/// samples `n` uniform nodes.
pub fn solve_profile(params: &PhysicalParams, length: f64, n: usize) -> Result<PlanarProfile> {
    params.validate()?;
    if !(length > 0.0) || n < 2 {
        return Err(Error::Validation(format!(
            "profile needs length > 0 and n >= 2 (got {length}, {n})"
        )));
    }
    let alpha = decay_rate(params)?;
    params.check_admissible()?;

    let mu = params.mu();
    let up = params.u_plus;
    let ub = params.u_tilde_b;
    let h = length / (n - 1) as f64;
    let x1: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();

    // Integrate the deviation w = u - u_plus so the tail keeps relative accuracy.
    let rhs = |w: f64| flux_value(params, up + w) / mu;
    let lo = ub.min(up);
    let hi = ub.max(up);
    let mut w = ub - up;
    let mut ws = Vec::with_capacity(n);
    ws.push(w);
    let mut step = h.min(0.1 / alpha.max(1e-12));
    for i in 1..n {
        let (w_next, last) = integrate_interval(&rhs, w, x1[i - 1], x1[i], step)?;
        w = w_next;
        step = last;
        let u = up + w;
        if !u.is_finite() || u < lo - 1e-12 * hi.abs() || u > hi + 1e-12 * hi.abs() {
            return Err(Error::Diverged { x1: x1[i] });
        }
        ws.push(w);
    }

    let m = params.mass_flux();
    let u1: Vec<f64> = ws.iter().map(|w| up + w).collect();
    let rho: Vec<f64> = u1.iter().map(|u| m / u).collect();
    let du1: Vec<f64> = ws.iter().map(|&w| rhs(w)).collect();
    let d2u1: Vec<f64> = u1
        .iter()
        .zip(&du1)
        .map(|(&u, &du)| flux_derivative(params, u).unwrap() * du / mu)
        .collect();
    let drho: Vec<f64> = u1.iter().zip(&du1).map(|(&u, &du)| -m * du / (u * u)).collect();

    Ok(PlanarProfile {
        x1,
        rho,
        u1,
        drho,
        du1,
        d2u1,
        m,
        alpha,
        delta_tilde: params.delta_tilde(),
        u_plus: up,
        rho_plus: params.rho_plus,
    })
}

/// Dormand-Prince 5(4) on a scalar autonomous ODE, landing exactly on `x1`.
/// Returns the new state and the proposed next step size.
fn integrate_interval(
    rhs: &impl Fn(f64) -> f64,
    mut y: f64,
    x0: f64,
    x1: f64,
    mut h: f64,
) -> Result<(f64, f64)> {
    const RTOL: f64 = 1e-10;
    const ATOL: f64 = 1e-15;
    let mut x = x0;
    let mut iters = 0usize;
    while x < x1 {
        iters += 1;
        if iters > 1_000_000 {
            return Err(Error::Diverged { x1: x });
        }
        let hs = h.min(x1 - x);
        let k1 = rhs(y);
        let k2 = rhs(y + hs * (1.0 / 5.0) * k1);
        let k3 = rhs(y + hs * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
        let k4 = rhs(y + hs * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
        let k5 = rhs(
            y + hs
                * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                    - 212.0 / 729.0 * k4),
        );
        let k6 = rhs(
            y + hs
                * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                    + 46732.0 / 5247.0 * k3
                    + 49.0 / 176.0 * k4
                    - 5103.0 / 18656.0 * k5),
        );
        let y5 = y + hs
            * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                - 2187.0 / 6784.0 * k5
                + 11.0 / 84.0 * k6);
        let k7 = rhs(y5);
        let err = hs
            * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
                - 17253.0 / 339200.0 * k5
                + 22.0 / 525.0 * k6
                - 1.0 / 40.0 * k7);
        if !y5.is_finite() {
            return Err(Error::Diverged { x1: x });
        }
        let scale = ATOL + RTOL * y.abs().max(y5.abs());
        let ratio = err.abs() / scale;
        let clipped = hs < h;
        if ratio <= 1.0 {
            x = if hs == x1 - x { x1 } else { x + hs };
            y = y5;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        // a step clipped to land on the node says nothing about the next one
        if !(clipped && ratio <= 1.0) {
            h = hs * factor;
        }
    }
    Ok((y, h))
}

/// Max-norm residuals of the mass and momentum equations evaluated with
/// centred differences on the sampled profile.
pub fn profile_residual(profile: &PlanarProfile, params: &PhysicalParams) -> (f64, f64) {
    let n = profile.len();
    if n < 3 {
        return (0.0, 0.0);
    }
    let h = profile.spacing();
    let mu = params.mu();
    let flux: Vec<f64> = profile.rho.iter().zip(&profile.u1).map(|(r, u)| r * u).collect();
    let mom: Vec<f64> = profile
        .rho
        .iter()
        .zip(&profile.u1)
        .map(|(&r, &u)| r * u * u + params.pressure(r))
        .collect();
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for i in 1..n - 1 {
        let dflux = (flux[i + 1] - flux[i - 1]) / (2.0 * h);
        let dmom = (mom[i + 1] - mom[i - 1]) / (2.0 * h);
        let d2u = (profile.u1[i + 1] - 2.0 * profile.u1[i] + profile.u1[i - 1]) / (h * h);
        r1 = r1.max(dflux.abs());
        r2 = r2.max((dmom - mu * d2u).abs());
    }
    (r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn flux_examples() {
        let p = base();
        assert_eq!(flux_function(&p, -2.0).unwrap(), 0.0);
        let f = flux_function(&p, -3.0).unwrap();
        assert!((f - 5.0 / 3.0).abs() < 1e-14, "{f}");
        assert!(matches!(flux_function(&p, 0.0), Err(Error::Domain(_))));
        assert!(matches!(flux_function(&p, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn flux_derivative_matches_finite_difference() {
        let p = base();
        let closed = flux_derivative(&p, -2.0).unwrap();
        assert!((closed + 1.5).abs() < 1e-15);
        let e = 1e-5;
        let fd = (flux_value(&p, -2.0 + e) - flux_value(&p, -2.0 - e)) / (2.0 * e);
        assert!((fd - closed).abs() < 1e-8);
    }

    #[test]
    fn decay_rate_examples() {
        let p = base();
        assert!((decay_rate(&p).unwrap() - 0.75).abs() < 1e-15);
        let q = PhysicalParams { mu1: 2.0, ..p };
        assert!((decay_rate(&q).unwrap() - 0.375).abs() < 1e-15);
        // Mach -> 1+ drives alpha to zero.
        let near = PhysicalParams { u_plus: -1.0001, u_tilde_b: -1.5, ..p };
        assert!(decay_rate(&near).unwrap() < 1e-3);
        let sub = PhysicalParams { u_plus: -0.5, ..p };
        assert!(matches!(decay_rate(&sub), Err(Error::NotSupersonic { .. })));
    }

    #[test]
    fn constant_profile_when_boundary_matches_far_field() {
        let p = PhysicalParams { u_tilde_b: -2.0, ..base() };
        let prof = solve_profile(&p, 10.0, 50).unwrap();
        assert!(prof.u1.iter().all(|&u| u == -2.0));
        assert!(prof.rho.iter().all(|&r| r == 1.0));
        assert_eq!(profile_residual(&prof, &p), (0.0, 0.0));
    }

    #[test]
    fn solved_profile_invariants() {
        let p = base();
        let alpha = decay_rate(&p).unwrap();
        let prof = solve_profile(&p, default_length(alpha), 400).unwrap();
        assert_eq!(prof.u1[0], -3.0);
        for w in prof.u1.windows(2) {
            assert!(w[1] >= w[0] && w[1] <= -2.0);
        }
        for (r, u) in prof.rho.iter().zip(&prof.u1) {
            assert!((r * u - prof.m).abs() <= 1e-10 * prof.m.abs());
        }
        let fit = prof.tail_fit();
        assert!((fit.rate - alpha).abs() / alpha < 0.05, "{fit:?}");
    }

    #[test]
    fn momentum_residual_is_second_order() {
        let p = base();
        let a = solve_profile(&p, 22.0, 201).unwrap();
        let b = solve_profile(&p, 22.0, 401).unwrap();
        let (_, r2a) = profile_residual(&a, &p);
        let (_, r2b) = profile_residual(&b, &p);
        let ratio = r2a / r2b;
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn corrupted_profile_breaks_mass_flux() {
        let p = base();
        let mut prof = solve_profile(&p, 22.0, 101).unwrap();
        // a uniform rescaling keeps rho u constant, so corrupt the near half only
        for r in prof.rho.iter_mut().take(50) {
            *r *= 1.01;
        }
        let (r1, _) = profile_residual(&prof, &p);
        assert!(r1 > 1e-3);
    }

    #[test]
    fn admissibility_threshold_is_the_second_flux_zero() {
        // m (u - u_plus) = -3 and p(m/u) - p(rho_plus) = 3 at u = -0.5
        assert!(flux_value(&base(), -0.5).abs() < 1e-14);
        assert!(solve_profile(&PhysicalParams { u_tilde_b: -0.55, ..base() }, 22.0, 50).is_ok());
        assert!(matches!(
            solve_profile(&PhysicalParams { u_tilde_b: -0.45, ..base() }, 22.0, 50),
            Err(Error::NoStationaryProfile { .. })
        ));
    }

    #[test]
    fn inadmissible_boundary_value_is_rejected() {
        let p = PhysicalParams { u_tilde_b: -0.4, ..base() };
        assert!(matches!(
            solve_profile(&p, 22.0, 50),
            Err(Error::NoStationaryProfile { .. })
        ));
    }
}
