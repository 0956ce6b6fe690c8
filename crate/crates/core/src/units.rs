//! Atomic units (ħ = m = e = 1) and the few conversions the configuration layer needs.

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035999084;

/// Cycle-averaged intensity of a linearly polarized field of peak strength 1 a.u., in W/cm².
pub const INTENSITY_AU_W_PER_CM2: f64 = 3.50944758e16;

/// Peak field strength in a.u. for a cycle-averaged intensity in W/cm².
pub fn field_from_intensity(intensity_w_cm2: f64) -> f64 {
    (intensity_w_cm2 / INTENSITY_AU_W_PER_CM2).sqrt()
}

pub fn intensity_from_field(e0: f64) -> f64 {
    e0 * e0 * INTENSITY_AU_W_PER_CM2
}

/// Field strength whose classical quiver velocity E₀/ω equals `fraction` of c.
pub fn field_for_quiver_fraction(omega: f64, fraction: f64) -> f64 {
    fraction * omega * SPEED_OF_LIGHT
}
