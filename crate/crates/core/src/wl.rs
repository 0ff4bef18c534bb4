//! The weighted Lindley law.
//!
//! [`WLGeneral`] is the two-parameter family with density
//! `α^{φ+1} z^{φ-1} (1+z) e^{-αz} / ((α+φ) Γ(φ))`, a known-weight mixture of
//! `Gamma(φ, rate α)` and `Gamma(φ+1, rate α)` with weight `ω = α/(α+φ)` on
//! the first component.
//!
//! [`WLFrailty`] is the unit-mean member indexed by its variance θ, with
//! `φ = b_θ = 4/(θ(θ+4))` and `α = 1/a_θ`, `a_θ = θ(θ+4)/(2(θ+2))`.

use alloc::vec::Vec;

// unused when std happens to be linked into the build graph
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{FrailtyError, Result};
use crate::special::{digamma_unchecked, ln_gamma_unchecked, reg_inc_gamma_lower};

/// Admissible frailty variance range used by the estimators.
pub const THETA_MIN: f64 = 1e-6;
pub const THETA_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WLGeneral {
    alpha: f64,
    phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// E[ln Z]
    pub elog: f64,
}

impl WLGeneral {
    pub fn new(alpha: f64, phi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(FrailtyError::domain("WL alpha", alpha));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(FrailtyError::domain("WL phi", phi));
        }
        Ok(Self { alpha, phi })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Weight of the `Gamma(φ, α)` component.
    pub fn omega(&self) -> f64 {
        self.alpha / (self.alpha + self.phi)
    }

    /// Log density; `-∞` outside the support.
    pub fn ln_pdf(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return f64::NEG_INFINITY;
        }
        let (a, p) = (self.alpha, self.phi);
        (p + 1.0) * a.ln() - (a + p).ln() - ln_gamma_unchecked(p) + (p - 1.0) * z.ln() + z.ln_1p() - a * z
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(FrailtyError::domain("WL density argument", z));
        }
        Ok(self.ln_pdf(z).exp())
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(FrailtyError::domain("WL cdf argument", z));
        }
        if z <= 0.0 {
            return Ok(0.0);
        }
        let x = self.alpha * z;
        let w = self.omega();
        let f1 = reg_inc_gamma_lower(self.phi, x)?;
        let f2 = reg_inc_gamma_lower(self.phi + 1.0, x)?;
        Ok(w * f1 + (1.0 - w) * f2)
    }

    pub fn mean(&self) -> f64 {
        let (a, p) = (self.alpha, self.phi);
        p * (a + p + 1.0) / (a * (a + p))
    }

    pub fn variance(&self) -> f64 {
        let (a, p) = (self.alpha, self.phi);
        let s = a + p;
        ((p + 1.0) * s * s - a * a) / (a * a * s * s)
    }

    pub fn elog(&self) -> f64 {
        let (a, p) = (self.alpha, self.phi);
        -a / (p * (a + p)) + digamma_unchecked(p + 1.0) - a.ln()
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.mean(),
            variance: self.variance(),
            elog: self.elog(),
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let shape = if rng.random::<f64>() < self.omega() {
            self.phi
        } else {
            self.phi + 1.0
        };
        Gamma::new(shape, 1.0 / self.alpha)
            .expect("shape and scale are positive")
            .sample(rng)
    }
}

/// Unit-mean WL frailty with variance `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WLFrailty {
    theta: f64,
    a: f64,
    b: f64,
}

impl WLFrailty {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(FrailtyError::domain("frailty variance theta", theta));
        }
        let a = theta * (theta + 4.0) / (2.0 * (theta + 2.0));
        let b = 4.0 / (theta * (theta + 4.0));
        Ok(Self { theta, a, b })
    }

    /// Like [`WLFrailty::new`] but restricted to `[THETA_MIN, THETA_MAX]`.
    pub fn for_fitting(theta: f64) -> Result<Self> {
        if !(THETA_MIN..=THETA_MAX).contains(&theta) {
            return Err(FrailtyError::domain("frailty variance theta", theta));
        }
        Self::new(theta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Scale `a_θ` of both gamma components.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Shape `b_θ` of the first gamma component.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn omega(&self) -> f64 {
        (self.theta + 2.0) / (self.theta + 4.0)
    }

    pub fn general(&self) -> WLGeneral {
        WLGeneral {
            alpha: 1.0 / self.a,
            phi: self.b,
        }
    }

    /// ln L(s); valid for `s > -1/a_θ`.
    pub fn ln_laplace(&self, s: f64) -> f64 {
        -(self.b + 1.0) * (self.a * s).ln_1p() + (0.5 * self.theta * s).ln_1p()
    }

    /// L(s) = E[e^{-sZ}] = (1 + a_θ s)^{-b_θ-1} (1 + θs/2).
    pub fn laplace(&self, s: f64) -> f64 {
        self.ln_laplace(s).exp()
    }

    /// ln |L⁽ᵈ⁾(s)|; the sign of the derivative is `(-1)^d`.
    pub fn ln_abs_laplace_deriv(&self, d: usize, s: f64) -> Result<f64> {
        if d < 1 {
            return Err(FrailtyError::domain("Laplace derivative order", d as f64));
        }
        let (a, b, th) = (self.a, self.b, self.theta);
        let df = d as f64;
        let ln_pi: f64 = (1..d).map(|i| (b + i as f64).ln()).sum();
        Ok(ln_pi + (df - 1.0) * a.ln() - (b + df + 1.0) * (a * s).ln_1p() + (th * (s + df - 1.0) / (th + 2.0)).ln_1p())
    }

    pub fn laplace_deriv(&self, d: usize, s: f64) -> Result<f64> {
        let mag = self.ln_abs_laplace_deriv(d, s)?.exp();
        Ok(if d.is_multiple_of(2) { mag } else { -mag })
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        self.general().pdf(z)
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.general().ln_pdf(z)
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        self.general().cdf(z)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.general().sample_one(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let g = self.general();
        (0..n).map(|_| g.sample_one(rng)).collect()
    }

    /// Deterministic draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(n, &mut rng)
    }
}

/// The general-form parameters of the unit-mean law with variance `theta`.
pub fn reparam(theta: f64) -> Result<WLGeneral> {
    Ok(WLFrailty::new(theta)?.general())
}
