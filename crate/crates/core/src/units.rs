//! Fixed unit system: energies in cm⁻¹, time in ps, temperature in K.

/// Reduced Planck constant in cm⁻¹·ps.
pub const HBAR_CM1_PS: f64 = 5.308_837_5;

/// Boltzmann constant in cm⁻¹/K.
pub const KB_CM1_PER_K: f64 = 0.695_034_76;

/// Thermal energy k_B·T in cm⁻¹.
#[inline]
pub fn thermal_energy(temperature_k: f64) -> f64 {
    KB_CM1_PER_K * temperature_k
}

/// Converts an energy in cm⁻¹ to an angular rate in ps⁻¹.
#[inline]
pub fn energy_to_rate(energy_cm1: f64) -> f64 {
    energy_cm1 / HBAR_CM1_PS
}
