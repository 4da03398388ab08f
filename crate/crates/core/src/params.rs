//! Model parameters of the coupled oscillator–ion master equation.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Rates and couplings entering the two-mode master equation. All
/// frequencies are angular (rad/s), rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Detuning `ω − ν` between oscillator and ion secular frequency.
    pub delta: f64,
    /// Beam-splitter coupling strength.
    pub kappa: f64,
    /// Oscillator energy damping rate `ω / Q`.
    pub gamma_a: f64,
    /// Thermal occupation of the oscillator's bath.
    pub nbar_a0: f64,
    /// Ion downward (cooling) rate, coefficient of `D[b]`.
    pub mu1: f64,
    /// Ion upward (heating) rate, coefficient of `D[b†]`.
    pub mu2: f64,
}

impl SystemParams {
    pub fn new(delta: f64, kappa: f64, gamma_a: f64, nbar_a0: f64, mu1: f64, mu2: f64) -> Result<Self> {
        let p = Self { delta, kappa, gamma_a, nbar_a0, mu1, mu2 };
        p.validate()?;
        Ok(p)
    }

    /// Cantilever/ion parameters used for the exchange curves: `n̄_a0 = 4000`,
    /// `Δ = 0`, `κ = 2π·52.5 kHz`, `γ_a = 2π·19.7 MHz / 30000`, no ion heating.
    pub fn cantilever_reference() -> Self {
        Self {
            delta: 0.0,
            kappa: 2.0 * PI * 52.5e3,
            gamma_a: 2.0 * PI * 19.7e6 / 30_000.0,
            nbar_a0: 4000.0,
            mu1: 0.0,
            mu2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta, self.kappa, self.gamma_a, self.nbar_a0, self.mu1, self.mu2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter { name: "system", reason: "all parameters must be finite" });
        }
        for (name, v) in [("kappa", self.kappa), ("gamma_a", self.gamma_a), ("nbar_a0", self.nbar_a0), ("mu1", self.mu1), ("mu2", self.mu2)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter { name, reason: "must be non-negative" });
            }
        }
        if self.mu1 < self.mu2 {
            return Err(Error::InvalidParameter { name: "mu1", reason: "ion cooling rate must not be below its heating rate" });
        }
        Ok(())
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn with_gamma_a(self, gamma_a: f64) -> Self {
        Self { gamma_a, ..self }
    }

    pub fn with_nbar_a0(self, nbar_a0: f64) -> Self {
        Self { nbar_a0, ..self }
    }

    pub fn with_ion_rates(self, mu1: f64, mu2: f64) -> Self {
        Self { mu1, mu2, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    /// True when the closed-form exchange formulas apply (`Δ = μ1 = μ2 = 0`).
    pub fn is_analytic(&self) -> bool {
        self.delta == 0.0 && self.mu1 == 0.0 && self.mu2 == 0.0
    }
}
