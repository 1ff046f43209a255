//! Fluid constants, end states and the admissibility checks every other
//! module relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the isentropic gas `p(rho) = K rho^gamma` together
/// with the far-field state and the planar boundary velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Pressure coefficient `K > 0`.
    pub k: f64,
    /// Adiabatic exponent `gamma >= 1`.
    pub gamma: f64,
    /// Shear viscosity `mu1 > 0`.
    pub mu1: f64,
    /// Second viscosity, `2 mu1 + 3 mu2 >= 0`.
    pub mu2: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    /// Normal velocity of the planar profile on the boundary.
    pub u_tilde_b: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            gamma: 1.0,
            mu1: 1.0,
            mu2: 0.0,
            rho_plus: 1.0,
            u_plus: -2.0,
            u_tilde_b: -3.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(
        k: f64,
        gamma: f64,
        mu1: f64,
        mu2: f64,
        rho_plus: f64,
        u_plus: f64,
        u_tilde_b: f64,
    ) -> Result<Self> {
        let p = Self {
            k,
            gamma,
            mu1,
            mu2,
            rho_plus,
            u_plus,
            u_tilde_b,
        };
        p.validate()?;
        Ok(p)
    }

    /// Structural hypotheses on the constants. Does not check supersonic
    /// flow or profile admissibility, see [`PhysicalParams::check_admissible`].
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k", self.k),
            ("gamma", self.gamma),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("rho_plus", self.rho_plus),
            ("u_plus", self.u_plus),
            ("u_tilde_b", self.u_tilde_b),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("{name} must be finite")));
        }
        if self.k <= 0.0 {
            return Err(Error::Validation(format!("K must be positive, got {}", self.k)));
        }
        if self.gamma < 1.0 {
            return Err(Error::Validation(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if self.mu1 <= 0.0 {
            return Err(Error::Validation(format!("mu1 must be positive, got {}", self.mu1)));
        }
        if 2.0 * self.mu1 + 3.0 * self.mu2 < 0.0 {
            return Err(Error::Validation(format!(
                "2 mu1 + 3 mu2 must be non-negative, got {}",
                2.0 * self.mu1 + 3.0 * self.mu2
            )));
        }
        if self.rho_plus <= 0.0 {
            return Err(Error::Validation(format!(
                "rho_plus must be positive, got {}",
                self.rho_plus
            )));
        }
        Ok(())
    }

    /// `mu = 2 mu1 + mu2`, the effective normal viscosity.
    pub fn mu(&self) -> f64 {
        2.0 * self.mu1 + self.mu2
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.k * rho.powf(self.gamma)
    }

    pub fn dpressure(&self, rho: f64) -> f64 {
        self.k * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn d2pressure(&self, rho: f64) -> f64 {
        self.k * self.gamma * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }

    /// Far-field sound speed `sqrt(p'(rho_plus))`.
    pub fn sound_speed_plus(&self) -> f64 {
        self.dpressure(self.rho_plus).sqrt()
    }

    pub fn mach(&self) -> f64 {
        self.u_plus.abs() / self.sound_speed_plus()
    }

    /// Boundary strength `|u_tilde_b - u_plus|`.
    pub fn delta_tilde(&self) -> f64 {
        (self.u_tilde_b - self.u_plus).abs()
    }

    /// Mass flux `m = rho_plus u_plus` carried by every planar profile.
    pub fn mass_flux(&self) -> f64 {
        self.rho_plus * self.u_plus
    }

    /// Supersonic far field: `|u_plus| / sqrt(p'(rho_plus)) > 1`.
    pub fn check_supersonic(&self) -> bool {
        self.mach() > 1.0
    }

    /// Velocity at which the once-integrated momentum flux has its extremum,
    /// `|u_s|^(gamma+1) = K gamma |m|^(gamma-1)`.
    pub fn sonic_velocity(&self) -> f64 {
        let m = self.mass_flux().abs();
        -(self.k * self.gamma * m.powf(self.gamma - 1.0)).powf(1.0 / (self.gamma + 1.0))
    }

    /// Critical ratio `w_c`: profiles exist iff `u_tilde_b < w_c u_plus`.
    ///
    /// `w_c u_plus` is the second zero of the flux function on `(u_plus, 0)`.
    /// Between `u_plus` and that zero the flux keeps a fixed sign, so the
    /// scalar profile equation carries the boundary value to the far field.
    pub fn compute_wc(&self) -> Result<f64> {
        if self.u_plus >= 0.0 {
            return Err(Error::WrongSign(self.u_plus));
        }
        if !self.check_supersonic() {
            return Err(Error::NotSupersonic { mach: self.mach() });
        }
        let us = self.sonic_velocity();
        let flux = |u: f64| crate::profile::flux_value(self, u);
        // F(us) < 0 and F -> +inf as u -> 0-, so bracket by halving toward 0.
        let mut hi = us;
        let mut guard = 0;
        while flux(hi) <= 0.0 {
            hi *= 0.5;
            guard += 1;
            if guard > 2000 {
                return Err(Error::Validation("unable to bracket the critical root".into()));
            }
        }
        let root = bisect(flux, us, hi);
        Ok(root / self.u_plus)
    }

    /// Supersonic far field plus the existence condition for the planar
    /// profile (`u_plus < 0` and `u_tilde_b < w_c u_plus`).
    pub fn check_admissible(&self) -> Result<()> {
        self.validate()?;
        let wc = self.compute_wc()?;
        if self.u_tilde_b >= wc * self.u_plus {
            return Err(Error::NoStationaryProfile {
                root: wc * self.u_plus,
            });
        }
        Ok(())
    }
}

/// Sign-change bisection on `[a, b]` down to adjacent floats.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
