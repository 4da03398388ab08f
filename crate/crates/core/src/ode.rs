//! Adaptive Dormand–Prince 5(4) integrator with continuous output.
//!
//! The state is a flat slice of [`Element`]s (reals or complex numbers).
//! Steps are accepted on the mixed error norm
//! `sqrt(mean((err_i / (atol + rtol * max(|y_i|, |y_new_i|)))^2)) <= 1`
//! and results are reported on a caller-supplied grid through the
//! fourth-order dense-output polynomial, so the step sequence does not depend
//! on the grid.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Scalar type an [`OdeSystem`] state is made of.
pub trait Element: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Element for f64 {
    const ZERO: Self = 0.0;

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Element for Complex<f64> {
    const ZERO: Self = Complex { re: 0.0, im: 0.0 };

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Autonomous system `dy/dt = f(y)`.
pub trait OdeSystem {
    type Elem: Element;

    fn rhs(&self, y: &[Self::Elem], dydt: &mut [Self::Elem]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub tolerances: Tolerances,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on a single step.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), initial_step: None, max_step: None, max_steps: 5_000_000 }
    }
}

impl StepControl {
    pub fn with_tolerances(abs: f64, rel: f64) -> Self {
        Self { tolerances: Tolerances { abs, rel }, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let Tolerances { abs, rel } = self.tolerances;
        if !(abs >= 0.0 && rel >= 0.0 && abs + rel > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerances", reason: "must be non-negative and not both zero" });
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter { name: "max_steps", reason: "must be positive" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand–Prince tableau (autonomous form, so the nodes c_i are not needed).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Shampine's dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrates `sys` from `(t0, y0)` and calls `observe(t, y)` at every grid
/// time, in order. Grid times must be non-decreasing and `>= t0`; a grid
/// point equal to `t0` is reported with `y0` itself.
///
/// The observer may abort the integration by returning an error.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[S::Elem],
    grid: &[f64],
    control: &StepControl,
    mut observe: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[S::Elem]) -> Result<()>,
{
    control.validate()?;
    if grid.windows(2).any(|w| !(w[1] >= w[0])) || grid.first().is_some_and(|&t| !(t >= t0)) {
        return Err(Error::InvalidParameter { name: "grid", reason: "must be non-decreasing and start at or after t0" });
    }
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut grid_iter = grid.iter().copied().peekable();
    while let Some(&t) = grid_iter.peek() {
        if t > t0 {
            break;
        }
        observe(t, y0)?;
        grid_iter.next();
    }
    let Some(t_end) = grid.last().copied() else {
        return Ok(stats);
    };
    if grid_iter.peek().is_none() {
        return Ok(stats);
    }

    let tol = control.tolerances;
    let mut y = y0.to_vec();
    let mut y_new = vec![S::Elem::ZERO; n];
    let mut y_stage = vec![S::Elem::ZERO; n];
    let mut k: [Vec<S::Elem>; 7] = core::array::from_fn(|_| vec![S::Elem::ZERO; n]);
    let mut dense: [Vec<S::Elem>; 5] = core::array::from_fn(|_| vec![S::Elem::ZERO; n]);
    let mut y_out = vec![S::Elem::ZERO; n];

    sys.rhs(&y, &mut k[0]);
    stats.rhs_evals += 1;

    let span = t_end - t0;
    let max_step = control.max_step.unwrap_or(span).min(span);
    let mut h = match control.initial_step {
        Some(h) => h,
        None => {
            let (k0, rest) = k.split_at_mut(1);
            initial_step(sys, &y, &k0[0], tol, &mut y_stage, &mut rest[0], &mut stats)
        }
    }
    .min(max_step);
    let mut t = t0;
    let mut last_err = 1e-4_f64;
    let mut reject_streak = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(Error::StepBudgetExhausted { t, max_steps: control.max_steps });
        }
        if t + h >= t_end || t + 1.01 * h > t_end {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(Error::StepUnderflow { t, h });
        }

        // stages
        stage(&y, h, &[(A21, &k[0])], &mut y_stage);
        sys.rhs(&y_stage, &mut k[1]);
        stage(&y, h, &[(A31, &k[0]), (A32, &k[1])], &mut y_stage);
        sys.rhs(&y_stage, &mut k[2]);
        stage(&y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])], &mut y_stage);
        sys.rhs(&y_stage, &mut k[3]);
        stage(&y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])], &mut y_stage);
        sys.rhs(&y_stage, &mut k[4]);
        stage(&y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])], &mut y_stage);
        sys.rhs(&y_stage, &mut k[5]);
        stage(&y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])], &mut y_new);
        sys.rhs(&y_new, &mut k[6]);
        stats.rhs_evals += 6;

        let mut sum = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            finite &= y_new[i].is_finite();
            let scale = tol.abs + tol.rel * y[i].modulus().max(y_new[i].modulus());
            let r = e.modulus() / scale;
            sum += r * r;
        }
        let err = if n == 0 { 0.0 } else { (sum / n as f64).sqrt() };

        if !finite || !err.is_finite() {
            stats.rejected += 1;
            h *= FAC_MIN;
            reject_streak = true;
            continue;
        }

        if err <= 1.0 {
            // dense output for [t, t + h]
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                dense[0][i] = y[i];
                dense[1][i] = ydiff;
                dense[2][i] = bspl;
                dense[3][i] = ydiff - k[6][i] * h - bspl;
                dense[4][i] = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
            }
            let t_new = if h == t_end - t { t_end } else { t + h };
            while let Some(&tg) = grid_iter.peek() {
                if tg > t_new {
                    break;
                }
                if tg == t_new {
                    observe(tg, &y_new)?;
                } else {
                    let theta = (tg - t) / h;
                    let theta1 = 1.0 - theta;
                    for i in 0..n {
                        y_out[i] = dense[0][i]
                            + (dense[1][i]
                                + (dense[2][i] + (dense[3][i] + dense[4][i] * theta1) * theta) * theta1)
                                * theta;
                    }
                    observe(tg, &y_out)?;
                }
                grid_iter.next();
            }
            core::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;
            stats.accepted += 1;

            // PI step-size controller
            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if reject_streak {
                fac = fac.min(1.0);
            }
            last_err = err_c;
            reject_streak = false;
            h = (h * fac).min(max_step);
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            h *= fac;
            reject_streak = true;
        }
    }
    Ok(stats)
}

fn stage<E: Element>(y: &[E], h: f64, terms: &[(f64, &Vec<E>)], out: &mut [E]) {
    for i in 0..y.len() {
        let mut acc = E::ZERO;
        for (a, k) in terms {
            acc = acc + k[i] * *a;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Hairer's starting-step heuristic.
fn initial_step<S: OdeSystem>(
    sys: &S,
    y: &[S::Elem],
    f0: &[S::Elem],
    tol: Tolerances,
    y1: &mut [S::Elem],
    f1: &mut [S::Elem],
    stats: &mut IntegrationStats,
) -> f64 {
    let n = y.len().max(1) as f64;
    let scale = |i: usize| tol.abs + tol.rel * y[i].modulus();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v.modulus() / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v.modulus() / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..y.len() {
        y1[i] = y[i] + f0[i] * h0;
    }
    sys.rhs(y1, f1);
    stats.rhs_evals += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .enumerate()
        .map(|(i, (a, b))| ((*a - *b).modulus() / scale(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Decay(f64);

    impl OdeSystem for Decay {
        type Elem = f64;

        fn rhs(&self, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = -self.0 * y[0];
        }
    }

    struct Rotor(f64);

    impl OdeSystem for Rotor {
        type Elem = Complex<f64>;

        fn rhs(&self, y: &[Complex<f64>], dydt: &mut [Complex<f64>]) {
            dydt[0] = y[0] * Complex::new(0.0, self.0);
        }
    }

    struct Oscillator;

    impl OdeSystem for Oscillator {
        type Elem = f64;

        fn rhs(&self, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = y[1];
            dydt[1] = -y[0];
        }
    }

    #[test]
    fn exponential_decay_on_grid() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let mut seen = Vec::new();
        integrate(&Decay(1.3), 0.0, &[2.0], &grid, &StepControl::with_tolerances(1e-13, 1e-11), |t, y| {
            seen.push((t, y[0]));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), grid.len());
        for (t, y) in seen {
            assert_relative_eq!(y, 2.0 * (-1.3 * t).exp(), max_relative = 1e-9);
        }
    }

    #[test]
    fn complex_rotation_keeps_modulus() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.37).collect();
        integrate(&Rotor(2.0), 0.0, &[Complex::new(1.0, 0.0)], &grid, &StepControl::default(), |t, y| {
            let exact = Complex::new(0.0, 2.0 * t).exp();
            assert!((y[0] - exact).norm() < 1e-6);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn dense_output_is_independent_of_grid_density() {
        let coarse = [0.0, 10.0];
        let fine: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let control = StepControl::with_tolerances(1e-12, 1e-12);
        let mut end_coarse = [0.0; 2];
        integrate(&Oscillator, 0.0, &[1.0, 0.0], &coarse, &control, |_, y| {
            end_coarse.copy_from_slice(y);
            Ok(())
        })
        .unwrap();
        let mut max_err: f64 = 0.0;
        let mut end_fine = [0.0; 2];
        integrate(&Oscillator, 0.0, &[1.0, 0.0], &fine, &control, |t, y| {
            max_err = max_err.max((y[0] - t.cos()).abs());
            end_fine.copy_from_slice(y);
            Ok(())
        })
        .unwrap();
        assert_eq!(end_coarse, end_fine);
        assert!(max_err < 1e-9, "dense output error {max_err}");
    }

    #[test]
    fn observer_can_abort() {
        let grid = [0.0, 1.0, 2.0];
        let res = integrate(&Decay(1.0), 0.0, &[1.0], &grid, &StepControl::default(), |t, _| {
            if t > 0.5 {
                Err(Error::NonFinite { t })
            } else {
                Ok(())
            }
        });
        assert_eq!(res, Err(Error::NonFinite { t: 1.0 }));
    }

    #[test]
    fn step_budget_is_enforced() {
        let control = StepControl { max_steps: 3, ..StepControl::default() };
        let res = integrate(&Oscillator, 0.0, &[1.0, 0.0], &[100.0], &control, |_, _| Ok(()));
        assert!(matches!(res, Err(Error::StepBudgetExhausted { .. })));
    }

    #[test]
    fn rejects_decreasing_grid() {
        let res = integrate(&Decay(1.0), 0.0, &[1.0], &[1.0, 0.5], &StepControl::default(), |_, _| Ok(()));
        assert!(matches!(res, Err(Error::InvalidParameter { name: "grid", .. })));
    }
}
