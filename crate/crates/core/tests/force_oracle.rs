//! Force-induced phonon shift against a resonantly driven, damped moment
//! system integrated to steady state.

use qems_core::device::constants::HBAR;
use qems_core::device::{zero_point_length, DeviceParams};
use qems_core::ode::{integrate, OdeSystem, StepControl};
use qems_core::protocols::force_sensitivity;

/// `(n, Re α, Im α)` for `H/ħ = −ε(a + a†)` on resonance with damping `γ`
/// towards occupation `n0`.
struct Driven {
    gamma: f64,
    epsilon: f64,
    n0: f64,
}

impl OdeSystem for Driven {
    type Elem = f64;

    fn rhs(&self, y: &[f64], dydt: &mut [f64]) {
        // dα/dt = iε − γα/2,  dn/dt = −γ(n − n0) + 2ε Im α
        dydt[0] = -self.gamma * (y[0] - self.n0) + 2.0 * self.epsilon * y[2];
        dydt[1] = -0.5 * self.gamma * y[1];
        dydt[2] = self.epsilon - 0.5 * self.gamma * y[2];
    }
}

fn driven_shift(dev: &DeviceParams, force: f64, n0: f64) -> f64 {
    let gamma = dev.gamma_a().unwrap();
    let epsilon = force * zero_point_length(dev.cantilever_mass, dev.omega) / HBAR;
    let t_end = 60.0 / gamma;
    let mut last = 0.0;
    integrate(
        &Driven { gamma, epsilon, n0 },
        0.0,
        &[n0, 0.0, 0.0],
        &[t_end],
        &StepControl::with_tolerances(1e-12, 1e-12),
        |_, y| {
            last = y[0];
            Ok(())
        },
    )
    .unwrap();
    last - n0
}

#[test]
fn closed_form_matches_driven_steady_state() {
    let dev = DeviceParams::cantilever_reference();
    let f_min = force_sensitivity(&dev, 0.0).unwrap().f_min;
    for scale in [0.1, 1.0, 3.0, 30.0] {
        let force = scale * f_min;
        let expected = force_sensitivity(&dev, force).unwrap().delta_nbar;
        for n0 in [0.0, 4000.0] {
            let shift = driven_shift(&dev, force, n0);
            assert!((shift - expected).abs() <= 1e-6 * expected, "F = {force:e}, n0 = {n0}: {shift} vs {expected}");
        }
    }
}

#[test]
fn one_quantum_at_minimum_force() {
    let dev = DeviceParams { quality_factor: 1e5, ..DeviceParams::cantilever_reference() };
    let f_min = force_sensitivity(&dev, 0.0).unwrap().f_min;
    let shift = driven_shift(&dev, f_min, 10.0);
    assert!((shift - 1.0).abs() < 1e-6, "{shift}");
}
