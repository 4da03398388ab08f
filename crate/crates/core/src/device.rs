//! Laboratory quantities and the model parameters derived from them.
//!
//! Frequencies are angular (rad/s) throughout; anything quoted in Hz is
//! multiplied by 2π on the way in.

use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// CODATA 2018 values, SI units.
pub mod constants {
    /// Planck constant (exact), J s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant (exact), J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Elementary charge (exact), C.
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Vacuum permittivity, F/m.
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    /// Coulomb constant `1 / (4π ε0)`, N m² / C².
    pub const COULOMB: f64 = 8.987_551_792_3e9;
    /// Atomic mass constant, kg.
    pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
    /// Avogadro constant (exact), 1/mol.
    pub const AVOGADRO: f64 = 6.022_140_76e23;

    /// `(name, value, unit)` rows for reports.
    pub const TABLE: [(&str, f64, &str); 8] = [
        ("planck", PLANCK, "J s"),
        ("hbar", HBAR, "J s"),
        ("boltzmann", BOLTZMANN, "J/K"),
        ("elementary_charge", ELEMENTARY_CHARGE, "C"),
        ("vacuum_permittivity", VACUUM_PERMITTIVITY, "F/m"),
        ("coulomb", COULOMB, "N m^2/C^2"),
        ("atomic_mass", ATOMIC_MASS, "kg"),
        ("avogadro", AVOGADRO, "1/mol"),
    ];
}

use constants::{BOLTZMANN, COULOMB, ELEMENTARY_CHARGE, HBAR};

/// Mass of a singly charged cadmium-112 ion, in atomic mass units.
pub const CADMIUM_MASS_U: f64 = 112.0;
/// Cantilever mass assumed for the reference device; not a measured value.
pub const ASSUMED_CANTILEVER_MASS: f64 = 1e-16;
/// Wavelength of the Cd+ S–P transition used for the sideband drive.
pub const CADMIUM_WAVELENGTH: f64 = 214.5e-9;
/// Warning threshold on `sqrt(n_b + 1) η`.
pub const LAMB_DICKE_WARN: f64 = 0.3;
/// Heating rate of the stochastic-field ion model: 0.06 quanta per ms.
pub const REFERENCE_HEATING_RATE: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Ion mass `m` (kg).
    pub ion_mass: f64,
    /// Cantilever mass `M` (kg).
    pub cantilever_mass: f64,
    /// Ion secular frequency `ν` (rad/s).
    pub nu: f64,
    /// Cantilever frequency `ω` (rad/s).
    pub omega: f64,
    /// Bias voltage `V0` (V).
    pub bias_voltage: f64,
    /// Cantilever capacitance `C0` (F).
    pub capacitance: f64,
    /// Ion–cantilever separation `d` (m).
    pub distance: f64,
    pub quality_factor: f64,
    /// Cantilever bath temperature (K).
    pub bath_temperature: f64,
    /// Laser wave number `k_l` (rad/m).
    pub laser_wavevector: f64,
    /// Carrier Rabi frequency `Ω` (rad/s).
    pub rabi_frequency: f64,
    /// Trap length scale `β` (m).
    pub trap_dimension: f64,
    /// Characteristic ion heating time `τ1` (s).
    pub heating_time: f64,
}

impl DeviceParams {
    /// Cadmium ion 50 µm from a 19.7 MHz cantilever (Q = 30000, 4 K, 7.5 V
    /// bias). The cantilever mass is [`ASSUMED_CANTILEVER_MASS`] and the
    /// capacitance is chosen so that `κ = 2π·52.5 kHz`.
    pub fn cantilever_reference() -> Self {
        let f = 2.0 * PI * 19.7e6;
        let mut p = Self {
            ion_mass: CADMIUM_MASS_U * constants::ATOMIC_MASS,
            cantilever_mass: ASSUMED_CANTILEVER_MASS,
            nu: f,
            omega: f,
            bias_voltage: 7.5,
            capacitance: 0.0,
            distance: 50e-6,
            quality_factor: 30_000.0,
            bath_temperature: 4.0,
            laser_wavevector: 2.0 * PI / CADMIUM_WAVELENGTH,
            rabi_frequency: 2.0 * PI * 1e6,
            trap_dimension: 50e-6,
            heating_time: 1.0 / REFERENCE_HEATING_RATE,
        };
        let product = required_bias_product(2.0 * PI * 52.5e3, &p).expect("reference device is valid");
        p.capacitance = product / p.bias_voltage;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ion_mass", self.ion_mass),
            ("cantilever_mass", self.cantilever_mass),
            ("nu", self.nu),
            ("omega", self.omega),
            ("distance", self.distance),
            ("quality_factor", self.quality_factor),
            ("laser_wavevector", self.laser_wavevector),
            ("rabi_frequency", self.rabi_frequency),
            ("trap_dimension", self.trap_dimension),
            ("heating_time", self.heating_time),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        for (name, v) in [("bias_voltage", self.bias_voltage), ("capacitance", self.capacitance), ("bath_temperature", self.bath_temperature)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be finite and non-negative" });
            }
        }
        let x_zp = zero_point_length(self.ion_mass, self.nu).max(zero_point_length(self.cantilever_mass, self.omega));
        if x_zp / self.distance >= 1e-3 {
            return Err(Error::InvalidParameter { name: "distance", reason: "zero-point motion is not small against the separation" });
        }
        Ok(())
    }

    pub fn gamma_a(&self) -> Result<f64> {
        gamma_a(self.omega, self.quality_factor)
    }

    pub fn kappa(&self) -> Result<f64> {
        coupling_kappa(self)
    }

    /// Bose–Einstein occupation of the cantilever at the bath temperature.
    pub fn nbar_a0(&self) -> Result<f64> {
        thermal_occupation(self.bath_temperature, self.omega)
    }

    /// `g = ηΩ`.
    pub fn sideband_coupling(&self) -> Result<f64> {
        Ok(lamb_dicke(self)?.eta * self.rabi_frequency)
    }
}

/// `sqrt(ħ / (2 m ω))`.
pub fn zero_point_length(mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// `κ = k e V0 C0 / (d³ sqrt(m M ν ω))`.
pub fn coupling_kappa(p: &DeviceParams) -> Result<f64> {
    p.validate()?;
    Ok(COULOMB * ELEMENTARY_CHARGE * p.bias_voltage * p.capacitance / (p.distance.powi(3) * reduced_mass_scale(p)))
}

/// `χ = 2 k e V0 C0 / d³` (N/m), the force gradient behind `κ`.
pub fn chi(p: &DeviceParams) -> Result<f64> {
    p.validate()?;
    Ok(2.0 * COULOMB * ELEMENTARY_CHARGE * p.bias_voltage * p.capacitance / p.distance.powi(3))
}

/// Charge `C0 V0` (coulomb) needed for a target `κ`; `bias_voltage` and
/// `capacitance` of `p` are ignored.
pub fn required_bias_product(kappa_target: f64, p: &DeviceParams) -> Result<f64> {
    if !(kappa_target >= 0.0 && kappa_target.is_finite()) {
        return Err(Error::InvalidParameter { name: "kappa_target", reason: "must be finite and non-negative" });
    }
    let probe = DeviceParams { bias_voltage: 0.0, capacitance: 0.0, ..*p };
    probe.validate()?;
    Ok(kappa_target * p.distance.powi(3) * reduced_mass_scale(p) / (COULOMB * ELEMENTARY_CHARGE))
}

fn reduced_mass_scale(p: &DeviceParams) -> f64 {
    (p.ion_mass * p.cantilever_mass * p.nu * p.omega).sqrt()
}

/// Bose–Einstein occupation `1 / (exp(ħω / k_B T) − 1)`.
pub fn thermal_occupation(temperature: f64, omega: f64) -> Result<f64> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", reason: "must be finite and non-negative" });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter { name: "omega", reason: "must be positive" });
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1())
}

/// High-temperature form `k_B T / (ħω)`.
pub fn thermal_occupation_classical(temperature: f64, omega: f64) -> f64 {
    BOLTZMANN * temperature / (HBAR * omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambDicke {
    /// `η = k_l sqrt(ħ / (2 m ν))`.
    pub eta: f64,
}

impl LambDicke {
    /// `sqrt(n_b + 1) η` and whether it exceeds [`LAMB_DICKE_WARN`].
    pub fn occupancy_check(&self, nbar_b: f64) -> (f64, bool) {
        let v = (nbar_b + 1.0).sqrt() * self.eta;
        (v, v > LAMB_DICKE_WARN)
    }
}

pub fn lamb_dicke(p: &DeviceParams) -> Result<LambDicke> {
    lamb_dicke_parameter(p.laser_wavevector, p.ion_mass, p.nu).map(|eta| LambDicke { eta })
}

pub fn lamb_dicke_parameter(laser_wavevector: f64, ion_mass: f64, nu: f64) -> Result<f64> {
    if !(laser_wavevector >= 0.0) || !(ion_mass > 0.0) || !(nu > 0.0) {
        return Err(Error::InvalidParameter { name: "lamb_dicke", reason: "need k_l >= 0, m > 0, nu > 0" });
    }
    Ok(laser_wavevector * zero_point_length(ion_mass, nu))
}

/// Upper bound `ν (z/β)²` on the secular linewidth from trap anharmonicity,
/// with `z = sqrt(ħ n̄_b / (2 m ν))` (rad/s).
pub fn anharmonic_linewidth(nu: f64, nbar_b: f64, ion_mass: f64, beta: f64) -> Result<f64> {
    if !(nu > 0.0 && ion_mass > 0.0 && beta > 0.0) || !(nbar_b >= 0.0) {
        return Err(Error::InvalidParameter { name: "anharmonic_linewidth", reason: "need positive nu, mass, beta and non-negative nbar" });
    }
    let z_sq = HBAR * nbar_b / (2.0 * ion_mass * nu);
    Ok(nu * z_sq / (beta * beta))
}

/// `Δν ≪ κ`, taken as at least two orders of magnitude.
pub fn anharmonicity_negligible(linewidth: f64, kappa: f64) -> bool {
    linewidth < 0.01 * kappa
}

/// Ion heating channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatingModel {
    /// Thermal bath at rate `γ_b` with occupation `n̄_b0`.
    ThermalBath { gamma_b: f64, nbar_b0: f64 },
    /// Classical fluctuating field with heating time `τ1`.
    StochasticField { tau1: f64 },
    /// Rates `μ1` (down) and `μ2` (up) given directly.
    Rates { mu1: f64, mu2: f64 },
}

impl HeatingModel {
    /// Stochastic field heating at 0.06 quanta per ms.
    pub fn reference() -> Self {
        Self::StochasticField { tau1: 1.0 / REFERENCE_HEATING_RATE }
    }
}

/// `(μ1, μ2)` for the chosen heating model.
pub fn heating_rates(model: HeatingModel) -> Result<(f64, f64)> {
    match model {
        HeatingModel::ThermalBath { gamma_b, nbar_b0 } => {
            if !(gamma_b >= 0.0 && nbar_b0 >= 0.0) || !gamma_b.is_finite() || !nbar_b0.is_finite() {
                return Err(Error::InvalidParameter { name: "thermal_bath", reason: "rates and occupation must be non-negative" });
            }
            Ok((gamma_b * (nbar_b0 + 1.0), gamma_b * nbar_b0))
        }
        HeatingModel::StochasticField { tau1 } => {
            if !(tau1 > 0.0) {
                return Err(Error::InvalidParameter { name: "tau1", reason: "must be positive" });
            }
            Ok((1.0 / tau1, 1.0 / tau1))
        }
        HeatingModel::Rates { mu1, mu2 } => {
            if !(mu2 >= 0.0 && mu1 >= mu2 && mu1.is_finite()) {
                return Err(Error::InvalidParameter { name: "heating_rates", reason: "need mu1 >= mu2 >= 0" });
            }
            Ok((mu1, mu2))
        }
    }
}

/// `γ_a = ω / Q`.
pub fn gamma_a(omega: f64, quality_factor: f64) -> Result<f64> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter { name: "omega", reason: "must be finite and non-negative" });
    }
    if !(quality_factor > 0.0) {
        return Err(Error::InvalidParameter { name: "quality_factor", reason: "must be positive" });
    }
    Ok(omega / quality_factor)
}

/// `Δx_SQL = sqrt(ħ / (2 · mass · ω))`.
pub fn sql_displacement(mass: f64, omega: f64) -> Result<f64> {
    if !(mass > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter { name: "sql_displacement", reason: "mass and omega must be positive" });
    }
    Ok(zero_point_length(mass, omega))
}

#[cfg(test)]
mod tests {
    use super::constants::*;
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> DeviceParams {
        DeviceParams::cantilever_reference()
    }

    #[test]
    fn constants_against_independent_transcriptions() {
        // ħ = h / 2π, k = 1 / (4π ε0), u = M_u / N_A
        assert_relative_eq!(HBAR, PLANCK / (2.0 * PI), max_relative = 1e-9);
        assert_relative_eq!(COULOMB, 1.0 / (4.0 * PI * VACUUM_PERMITTIVITY), max_relative = 1e-10);
        assert_relative_eq!(ATOMIC_MASS, 0.999_999_999_65e-3 / AVOGADRO, max_relative = 1e-10);
        // second transcription of the same CODATA 2018 table
        let second = [
            ("planck", 6.62607015e-34),
            ("hbar", 1.054571817e-34),
            ("boltzmann", 1.380649e-23),
            ("elementary_charge", 1.602176634e-19),
            ("vacuum_permittivity", 8.8541878128e-12),
            ("coulomb", 8.9875517923e9),
            ("atomic_mass", 1.66053906660e-27),
            ("avogadro", 6.02214076e23),
        ];
        for ((name, value, _), (name2, value2)) in TABLE.iter().zip(second) {
            assert_eq!(*name, name2);
            assert_eq!(*value, value2);
        }
    }

    #[test]
    fn kappa_scaling() {
        let p = reference();
        let k = coupling_kappa(&p).unwrap();
        assert_relative_eq!(k, 2.0 * PI * 52.5e3, max_relative = 1e-12);
        let doubled = DeviceParams { bias_voltage: 2.0 * p.bias_voltage, ..p };
        assert_relative_eq!(coupling_kappa(&doubled).unwrap(), 2.0 * k, max_relative = 1e-14);
        let closer = DeviceParams { distance: p.distance / 2.0, ..p };
        assert_relative_eq!(coupling_kappa(&closer).unwrap(), 8.0 * k, max_relative = 1e-14);
        let off = DeviceParams { bias_voltage: 0.0, ..p };
        assert_eq!(coupling_kappa(&off).unwrap(), 0.0);
    }

    #[test]
    fn chi_is_consistent_with_kappa() {
        let p = reference();
        let via_chi = chi(&p).unwrap() * zero_point_length(p.cantilever_mass, p.omega) * zero_point_length(p.ion_mass, p.nu) / HBAR;
        assert_relative_eq!(via_chi, coupling_kappa(&p).unwrap(), max_relative = 1e-12);
        let far = DeviceParams { distance: 2.0 * p.distance, ..p };
        assert_relative_eq!(chi(&far).unwrap(), chi(&p).unwrap() / 8.0, max_relative = 1e-14);
        assert_eq!(chi(&DeviceParams { bias_voltage: 0.0, ..p }).unwrap(), 0.0);
    }

    #[test]
    fn bias_product_round_trip() {
        let p = reference();
        for target in [1.0, 2.0 * PI * 10e3, 2.0 * PI * 52.5e3, 1e7] {
            let q = required_bias_product(target, &p).unwrap();
            let dev = DeviceParams { bias_voltage: 1.0, capacitance: q, ..p };
            assert_relative_eq!(coupling_kappa(&dev).unwrap(), target, max_relative = 1e-12);
        }
        assert_eq!(required_bias_product(0.0, &p).unwrap(), 0.0);
        // M = 1e-16 kg: C0 V0 = 1.5285e-11 C, i.e. C0 ≈ 2.04 pF at 7.5 V
        let q = required_bias_product(2.0 * PI * 52.5e3, &p).unwrap();
        assert_relative_eq!(q, 1.52847e-11, max_relative = 1e-4);
        assert_relative_eq!(p.capacitance, 2.03796e-12, max_relative = 1e-4);
    }

    #[test]
    fn thermal_occupation_values() {
        assert_eq!(thermal_occupation(0.0, 1e6).unwrap(), 0.0);
        let n = thermal_occupation(4.0, 2.0 * PI * 19.7e6).unwrap();
        assert_relative_eq!(n, 4230.2856, max_relative = 1e-7);
        // ħω = k_B T ln 2
        let omega = 1e8;
        let t = HBAR * omega / (BOLTZMANN * 2f64.ln());
        assert_relative_eq!(thermal_occupation(t, omega).unwrap(), 1.0, max_relative = 1e-12);
        for t in [1.0, 4.0, 300.0] {
            let omega = 2.0 * PI * 19.7e6;
            if thermal_occupation_classical(t, omega) > 50.0 {
                assert_relative_eq!(thermal_occupation(t, omega).unwrap(), thermal_occupation_classical(t, omega), max_relative = 1e-2);
            }
        }
        assert!(thermal_occupation(5.0, 1e8).unwrap() > thermal_occupation(4.0, 1e8).unwrap());
        assert!(thermal_occupation(4.0, 2e8).unwrap() < thermal_occupation(4.0, 1e8).unwrap());
    }

    #[test]
    fn lamb_dicke_values() {
        let p = reference();
        let ld = lamb_dicke(&p).unwrap();
        assert_relative_eq!(ld.eta, 0.04433, max_relative = 1e-3);
        let faster = DeviceParams { nu: 4.0 * p.nu, ..p };
        assert_relative_eq!(lamb_dicke(&faster).unwrap().eta, ld.eta / 2.0, max_relative = 1e-14);
        assert_eq!(lamb_dicke_parameter(0.0, p.ion_mass, p.nu).unwrap(), 0.0);
        assert!(!ld.occupancy_check(20.0).1);
        assert!(ld.occupancy_check(100.0).1);
    }

    #[test]
    fn anharmonicity_bound() {
        let p = reference();
        assert_eq!(anharmonic_linewidth(p.nu, 0.0, p.ion_mass, 50e-6).unwrap(), 0.0);
        let one = anharmonic_linewidth(p.nu, 1.0, p.ion_mass, 50e-6).unwrap();
        let lw = anharmonic_linewidth(p.nu, 4000.0, p.ion_mass, 50e-6).unwrap();
        assert_relative_eq!(lw, 4000.0 * one, max_relative = 1e-13);
        // ≈ 454 rad/s against κ ≈ 3.3e5 rad/s
        assert_relative_eq!(lw, 453.6, max_relative = 1e-3);
        assert!(anharmonicity_negligible(lw, 2.0 * PI * 52.5e3));
    }

    #[test]
    fn heating_models() {
        assert_eq!(heating_rates(HeatingModel::ThermalBath { gamma_b: 3.0, nbar_b0: 0.0 }).unwrap(), (3.0, 0.0));
        for nbar in [0.0, 0.5, 12.0] {
            let (m1, m2) = heating_rates(HeatingModel::ThermalBath { gamma_b: 3.0, nbar_b0: nbar }).unwrap();
            assert_relative_eq!(m1 - m2, 3.0, max_relative = 1e-14);
        }
        let (m1, m2) = heating_rates(HeatingModel::reference()).unwrap();
        assert_relative_eq!(m1, 60.0, max_relative = 1e-14);
        assert_eq!(m1, m2);
        assert_eq!(heating_rates(HeatingModel::Rates { mu1: 2.0, mu2: 1.0 }).unwrap(), (2.0, 1.0));
        assert!(heating_rates(HeatingModel::Rates { mu1: 1.0, mu2: 2.0 }).is_err());
        // dn_b/dt = μ2 at n_b = 0: 0.06 quanta per ms
        assert_relative_eq!(m2 * 1e-3, 0.06, max_relative = 1e-14);
    }

    #[test]
    fn damping_rate() {
        let g = gamma_a(2.0 * PI * 19.7e6, 30_000.0).unwrap();
        assert_relative_eq!(g, 4126.0, max_relative = 1e-3);
        assert_eq!(gamma_a(1e8, f64::INFINITY).unwrap(), 0.0);
        assert_relative_eq!(gamma_a(2e8, 100.0).unwrap(), 2.0 * gamma_a(1e8, 100.0).unwrap(), max_relative = 1e-15);
        assert!(gamma_a(1e8, 0.0).is_err());
    }

    #[test]
    fn sql_values() {
        let omega = 2.0 * PI * 19.7e6;
        let x = sql_displacement(1e-16, omega).unwrap();
        assert_relative_eq!(x, 6.5258e-14, max_relative = 1e-4);
        assert_relative_eq!(sql_displacement(4e-16, omega).unwrap(), x / 2.0, max_relative = 1e-14);
        assert_relative_eq!(sql_displacement(1e-16, 2.0 * omega).unwrap(), x / 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn scaling_exponents() {
        // perturb each input by a unit-scale factor and read off the exponent
        let p = reference();
        let s = 1.7f64;
        let exponent = |a: f64, b: f64| (b / a).ln() / s.ln();
        let k0 = coupling_kappa(&p).unwrap();
        assert_relative_eq!(exponent(k0, coupling_kappa(&DeviceParams { ion_mass: s * p.ion_mass, ..p }).unwrap()), -0.5, max_relative = 1e-12);
        assert_relative_eq!(exponent(k0, coupling_kappa(&DeviceParams { cantilever_mass: s * p.cantilever_mass, ..p }).unwrap()), -0.5, max_relative = 1e-12);
        assert_relative_eq!(exponent(k0, coupling_kappa(&DeviceParams { capacitance: s * p.capacitance, ..p }).unwrap()), 1.0, max_relative = 1e-12);
        assert_relative_eq!(exponent(k0, coupling_kappa(&DeviceParams { distance: s * p.distance, ..p }).unwrap()), -3.0, max_relative = 1e-12);
        let e0 = lamb_dicke(&p).unwrap().eta;
        assert_relative_eq!(exponent(e0, lamb_dicke(&DeviceParams { nu: s * p.nu, ..p }).unwrap().eta), -0.5, max_relative = 1e-12);
        assert_relative_eq!(exponent(e0, lamb_dicke(&DeviceParams { laser_wavevector: s * p.laser_wavevector, ..p }).unwrap().eta), 1.0, max_relative = 1e-12);
        let a0 = anharmonic_linewidth(p.nu, 10.0, p.ion_mass, 5e-5).unwrap();
        assert_relative_eq!(exponent(a0, anharmonic_linewidth(p.nu, 10.0, p.ion_mass, s * 5e-5).unwrap()), -2.0, max_relative = 1e-12);
        assert_relative_eq!(exponent(a0, anharmonic_linewidth(s * p.nu, 10.0, p.ion_mass, 5e-5).unwrap()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_device_is_valid() {
        let p = reference();
        assert!(p.validate().is_ok());
        let too_close = DeviceParams { distance: 1e-10, ..p };
        assert!(too_close.validate().is_err());
        assert!(DeviceParams { quality_factor: -1.0, ..p }.validate().is_err());
        assert_relative_eq!(p.sideband_coupling().unwrap(), 0.04433 * 2.0 * PI * 1e6, max_relative = 1e-3);
    }
}
