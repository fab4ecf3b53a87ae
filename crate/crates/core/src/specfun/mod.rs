//! Special functions: gamma, Bessel J and scaled I of real order, and zeros
//! of J_ν.

mod bessel;
mod gamma;
mod zeros;

pub use bessel::{
    bessel_i_scaled, bessel_i_scaled_limit, bessel_j, bessel_j_pair, bessel_j_scaled, bessel_j_scaled_pair,
    ln_bessel_i_scaled_limit, scaled_origin_value,
};
pub use gamma::{gamma_fn, ln_gamma};
pub use zeros::{bessel_j_zeros, mcmahon, zero_table, ZeroTable};

/// Order ν = δ/2 − 1 of the Bessel process of dimension δ.
pub fn order_from_delta(delta: f64) -> crate::error::Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return crate::error::domain(format!("dimension delta must be finite and > 0, got {delta}"));
    }
    Ok(delta / 2.0 - 1.0)
}
