//! Closed second-moment dynamics and the analytic exchange formulas.
//!
//! The master equation is bilinear, so the means `n_a = <a†a>`,
//! `n_b = <b†b>` and `c = <a†b>` obey a closed linear system. From the
//! Heisenberg picture with `H = Δa†a − κ(a†b + ab†)` plus the damping
//! channels:
//!
//! ```text
//! dn_a/dt = −2κ Im c − γ_a (n_a − n̄_a0)
//! dn_b/dt = +2κ Im c − (μ1 − μ2) n_b + μ2
//! dc/dt   = iΔ c − iκ (n_b − n_a) − (γ_a + μ1 − μ2)/2 · c
//! ```
//!
//! With `Δ = μ1 = μ2 = 0` and thermal initial states the system has the
//! closed-form solution evaluated by [`nbar_b_analytic`] and
//! [`nbar_a_analytic`], with `Ω_γ = sqrt(κ² − (γ_a/4)²)`.

use core::f64::consts::PI;

use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::full::JointSpace;
use crate::hilbert::{DensityMatrix, C64};
use crate::ode::{integrate, OdeSystem, StepControl};
use crate::params::SystemParams;
use crate::trajectory::{Sample, Trajectory};

/// `(n_a, n_b, c)`; also used for time derivatives of the same.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub n_a: f64,
    pub n_b: f64,
    pub c: C64,
}

impl MomentState {
    pub fn new(n_a: f64, n_b: f64, c: C64) -> Self {
        Self { n_a, n_b, c }
    }

    /// Uncorrelated thermal start, `c = 0`.
    pub fn thermal(n_a: f64, n_b: f64) -> Self {
        Self { n_a, n_b, c: Complex::new(0.0, 0.0) }
    }

    /// Moments of a joint density matrix on `space`.
    pub fn from_density(rho: &DensityMatrix, space: JointSpace) -> Result<Self> {
        let p = SystemParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)?;
        let gen = crate::full::Liouvillian::new(&p, space)?;
        crate::hilbert::check_dim(space.dim(), rho.dim())?;
        let s = gen.observables(rho.matrix().as_slice());
        Ok(Self { n_a: s.nbar_a, n_b: s.nbar_b, c: s.cross })
    }

    /// `|c|² <= n_a n_b + min(n_a, n_b) + slack`.
    pub fn is_physical(&self, slack: f64) -> bool {
        self.n_a >= -slack && self.n_b >= -slack && self.c.norm_sqr() <= self.n_a * self.n_b + self.n_a.min(self.n_b) + slack
    }

    fn to_array(self) -> [f64; 4] {
        [self.n_a, self.n_b, self.c.re, self.c.im]
    }

    fn from_slice(y: &[f64]) -> Self {
        Self { n_a: y[0], n_b: y[1], c: Complex::new(y[2], y[3]) }
    }
}

/// Time derivative of the moment set.
pub fn moment_rhs(m: &MomentState, p: &SystemParams) -> MomentState {
    let i = Complex::new(0.0, 1.0);
    let damp_c = 0.5 * (p.gamma_a + p.mu1 - p.mu2);
    MomentState {
        n_a: -2.0 * p.kappa * m.c.im - p.gamma_a * (m.n_a - p.nbar_a0),
        n_b: 2.0 * p.kappa * m.c.im - (p.mu1 - p.mu2) * m.n_b + p.mu2,
        c: i * p.delta * m.c - i * p.kappa * (m.n_b - m.n_a) - m.c * damp_c,
    }
}

struct MomentSystem<'a>(&'a SystemParams);

impl OdeSystem for MomentSystem<'_> {
    type Elem = f64;

    fn rhs(&self, y: &[f64], dydt: &mut [f64]) {
        dydt.copy_from_slice(&moment_rhs(&MomentState::from_slice(y), self.0).to_array());
    }
}

/// Integrates the moment equations from `m0` at `t = 0` and samples on `grid`
/// using the default tolerances (`1e-10` absolute, `1e-8` relative).
pub fn evolve_moments(m0: &MomentState, params: &SystemParams, grid: &[f64]) -> Result<Trajectory> {
    evolve_moments_with(m0, params, grid, &StepControl::default())
}

pub fn evolve_moments_with(m0: &MomentState, params: &SystemParams, grid: &[f64], control: &StepControl) -> Result<Trajectory> {
    params.validate()?;
    let mut traj = Trajectory::with_capacity(grid.len());
    integrate(&MomentSystem(params), 0.0, &m0.to_array(), grid, control, |t, y| {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let m = MomentState::from_slice(y);
        traj.push(t, Sample { nbar_a: m.n_a, nbar_b: m.n_b, cross: m.c, trace_error: 0.0 });
        Ok(())
    })?;
    Ok(traj)
}

/// Moments after a single interval of length `t`.
pub fn propagate(m0: &MomentState, params: &SystemParams, t: f64, control: &StepControl) -> Result<MomentState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter { name: "t", reason: "must be non-negative" });
    }
    let traj = evolve_moments_with(m0, params, &[t], control)?;
    let (_, s) = traj.last().ok_or(Error::InvalidParameter { name: "t", reason: "empty grid" })?;
    Ok(MomentState { n_a: s.nbar_a, n_b: s.nbar_b, c: s.cross })
}

/// `Ω_γ = sqrt(κ² − (γ_a/4)²)` for the underdamped regime.
pub fn exchange_frequency(kappa: f64, gamma_a: f64) -> Result<f64> {
    check_rates(kappa, gamma_a)?;
    let q = gamma_a / 4.0;
    if kappa > q {
        Ok((kappa * kappa - q * q).sqrt())
    } else if kappa == q {
        Err(Error::CriticalDamping)
    } else {
        Err(Error::Overdamped)
    }
}

/// `τ* = π / (2Ω_γ)`, the time of the first (near-)complete swap.
pub fn exchange_time(kappa: f64, gamma_a: f64) -> Result<f64> {
    Ok(PI / (2.0 * exchange_frequency(kappa, gamma_a)?))
}

/// Ion occupation after coupling for `tau` (closed form, `Δ = μ1 = μ2 = 0`),
/// underdamped regime only.
pub fn nbar_b_analytic(tau: f64, nbar_a0: f64, nbar_b0: f64, kappa: f64, gamma_a: f64) -> Result<f64> {
    exchange_frequency(kappa, gamma_a)?;
    nbar_b_continued(tau, nbar_a0, nbar_b0, kappa, gamma_a)
}

/// [`nbar_b_analytic`] evaluated with complex `Ω_γ`, which also covers the
/// overdamped regime `κ < γ_a/4`. The result is checked to be real.
pub fn nbar_b_continued(tau: f64, nbar_a0: f64, nbar_b0: f64, kappa: f64, gamma_a: f64) -> Result<f64> {
    check_rates(kappa, gamma_a)?;
    check_occupations(tau, nbar_a0, nbar_b0)?;
    let w = complex_omega(kappa, gamma_a)?;
    let i = Complex::new(0.0, 1.0);
    let k2 = kappa * kappa;
    let w2 = w * w;
    let front = w2 * 4.0 - 2.0 * k2 + i * gamma_a * w;
    let back = w2 * 4.0 - 2.0 * k2 - i * gamma_a * w;
    let bracket = front * (-i * 2.0 * w * tau).exp() + 4.0 * k2 + back * (i * 2.0 * w * tau).exp();
    let value = Complex::new(nbar_a0, 0.0) - bracket * (-gamma_a * tau / 2.0).exp() * (nbar_a0 - nbar_b0) / (w2 * 8.0);
    real_part(value, nbar_a0.max(nbar_b0))
}

/// Oscillator occupation after coupling for `tau`, underdamped regime only.
pub fn nbar_a_analytic(tau: f64, nbar_a0: f64, nbar_b0: f64, kappa: f64, gamma_a: f64) -> Result<f64> {
    exchange_frequency(kappa, gamma_a)?;
    nbar_a_continued(tau, nbar_a0, nbar_b0, kappa, gamma_a)
}

/// [`nbar_a_analytic`] with complex `Ω_γ`.
pub fn nbar_a_continued(tau: f64, nbar_a0: f64, nbar_b0: f64, kappa: f64, gamma_a: f64) -> Result<f64> {
    check_rates(kappa, gamma_a)?;
    check_occupations(tau, nbar_a0, nbar_b0)?;
    let w = complex_omega(kappa, gamma_a)?;
    let s = (w * tau).sin() / w;
    let value = Complex::new(nbar_a0, 0.0) - s * s * (kappa * kappa) * (-gamma_a * tau / 2.0).exp() * (nbar_a0 - nbar_b0);
    real_part(value, nbar_a0.max(nbar_b0))
}

/// Short-time form `n̄_a0 sin²(κτ)` (cantilever damping neglected).
pub fn nbar_b_short_time(tau: f64, nbar_a0: f64, kappa: f64) -> f64 {
    nbar_a0 * (kappa * tau).sin().powi(2)
}

/// Leading quadratic term `n̄_a0 κ² τ²`, which is also the small-signal
/// sideband ratio.
pub fn nbar_b_quadratic(tau: f64, nbar_a0: f64, kappa: f64) -> f64 {
    nbar_a0 * kappa * kappa * tau * tau
}

/// Fraction of the initial ion occupation that survives after `tau`:
/// `n̄_b(τ) = n̄_a0 (1 − F) + n̄_b0 F`.
pub fn retained_fraction(tau: f64, kappa: f64, gamma_a: f64) -> Result<f64> {
    nbar_b_analytic(tau, 0.0, 1.0, kappa, gamma_a)
}

fn complex_omega(kappa: f64, gamma_a: f64) -> Result<C64> {
    let q = gamma_a / 4.0;
    let disc = kappa * kappa - q * q;
    if disc == 0.0 {
        return Err(Error::CriticalDamping);
    }
    Ok(Complex::new(disc, 0.0).sqrt())
}

fn real_part(value: C64, scale: f64) -> Result<f64> {
    let residue = value.im.abs();
    if residue > 1e-12 * scale.max(1.0) {
        return Err(Error::ComplexResidue { residue });
    }
    Ok(value.re)
}

fn check_rates(kappa: f64, gamma_a: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter { name: "kappa", reason: "must be finite and non-negative" });
    }
    if !(gamma_a >= 0.0 && gamma_a.is_finite()) {
        return Err(Error::InvalidParameter { name: "gamma_a", reason: "must be finite and non-negative" });
    }
    Ok(())
}

fn check_occupations(tau: f64, nbar_a0: f64, nbar_b0: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter { name: "tau", reason: "must be finite and non-negative" });
    }
    if !(nbar_a0 >= 0.0 && nbar_b0 >= 0.0) {
        return Err(Error::InvalidParameter { name: "nbar", reason: "occupations must be non-negative" });
    }
    Ok(())
}
