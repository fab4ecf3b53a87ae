//! Transition kernels of the Bessel process and bridge, Fourier–Bessel series
//! for the bridge-maximum law and its barrier derivative, the q₁/q₂ kernels
//! and first-hitting-time densities.

mod params;
mod series;
pub mod theta;

use std::f64::consts::{LN_2, PI};

pub use params::{KernelValue, ProcessParams, SeriesPolicy, ValueKind};
pub(crate) use series::{sum_series, SeriesOut};
pub use series::{truncation_bound, SeriesFamily, TailState};

use crate::error::{domain, Error, Result};
use crate::specfun::{
    bessel_j_pair, bessel_j_scaled, bessel_j_scaled_pair, ln_bessel_i_scaled_limit, scaled_origin_value,
};

/// Log-values below this cannot be differenced without losing accuracy.
pub const LOG_UNDERFLOW_FLOOR: f64 = -1e5;

fn check_time(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return domain(format!("elapsed time must be finite and > 0, got {tau}"));
    }
    Ok(())
}

fn check_below(c: f64, x: f64, y: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("barrier must be finite and > 0, got {c}"));
    }
    if !(x >= 0.0 && x < c) || !(y >= 0.0 && y < c) {
        return domain(format!("need 0 <= x, y < c, got x={x}, y={y}, c={c}"));
    }
    Ok(())
}

// Extra polynomial growth of the series terms when an endpoint sits at 0.
fn endpoint_growth(nu: f64, x: f64, y: f64) -> f64 {
    let zeros = (x == 0.0) as u8 + (y == 0.0) as u8;
    (zeros as f64 * (nu + 0.5)).max(0.0)
}

// Slack allowed when clamping a value whose series had absolute size
// `abs_value` (in value units).
fn slack(policy: &SeriesPolicy, abs_value: f64, kind: ValueKind) -> f64 {
    match kind {
        ValueKind::Probability => 10.0 * policy.rel_tol * abs_value.max(1.0),
        ValueKind::Density => (10.0 * policy.rel_tol * abs_value).max(1e-12 * abs_value.min(1.0)),
    }
}

fn finish(out: &SeriesOut, log_prefactor: f64, kind: ValueKind, policy: &SeriesPolicy) -> Result<KernelValue> {
    let scale = (out.log_shift + log_prefactor).exp();
    let value = out.sum * scale;
    let abs_value = out.abs_sum * scale;
    let mut kv = KernelValue::checked(kind, value, slack(policy, abs_value, kind))?;
    if kv.value > 0.0 && kv.clamped == 0.0 {
        kv.log_value = out.sum.ln() + out.log_shift + log_prefactor;
    }
    Ok(kv)
}

// J_ν(z) at z = (y/c)·j for the zero j, with w = J_{ν+1}(j). When y is close
// to c the argument sits just below the zero and a Taylor expansion in
// h = (1 − y/c)·j avoids the absolute rounding error of a direct evaluation.
pub(crate) fn j_below_zero(nu: f64, y: f64, c: f64, j: f64, w: f64) -> Result<f64> {
    let h = (c - y) / c * j;
    if h < 1e-3 {
        let third = 1.0 - (nu * nu + 2.0) / (j * j);
        return Ok(w * h * (1.0 + h / (2.0 * j) - h * h / 6.0 * third));
    }
    Ok(bessel_j_pair(nu, y * j / c)?.0)
}

// z^{−ν}J_ν(z) at z = (y/c)·j, as above.
pub(crate) fn jsc_below_zero(nu: f64, y: f64, c: f64, j: f64, w: f64) -> Result<f64> {
    if (c - y) / c * j < 1e-3 {
        return Ok((y * j / c).powf(-nu) * j_below_zero(nu, y, c, j, w)?);
    }
    bessel_j_scaled(nu, y * j / c)
}

/// Gaussian kernel n_t(x) = (2πt)^{−1/2} e^{−x²/(2t)}.
pub fn gauss_kernel(t: f64, x: f64) -> Result<KernelValue> {
    check_time(t)?;
    if !x.is_finite() {
        return domain(format!("gauss_kernel needs finite x, got {x}"));
    }
    Ok(KernelValue::density_from_log(-x * x / (2.0 * t) - 0.5 * (2.0 * PI * t).ln()))
}

/// ln of the free transition density relative to the speed measure,
/// −(ν+1) ln τ − (x−y)²/(2τ) + ln(z^{−ν}e^{−z}I_ν(z)) at z = xy/τ. It is
/// symmetric in x and y.
pub fn log_free_kernel(nu: f64, tau: f64, x: f64, y: f64) -> Result<f64> {
    check_time(tau)?;
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return domain(format!("need finite x, y >= 0, got x={x}, y={y}"));
    }
    Ok(-(nu + 1.0) * tau.ln() - (x - y).powi(2) / (2.0 * tau) + ln_bessel_i_scaled_limit(nu, x * y / tau)?)
}

/// Transition density of BES(δ) from x to y over time t.
pub fn bes_transition(p: &ProcessParams, t: f64, x: f64, y: f64) -> Result<KernelValue> {
    if !(y > 0.0) {
        return domain(format!("bes_transition needs y > 0, got {y}"));
    }
    let nu = p.nu();
    let l = log_free_kernel(nu, t, x, y)?;
    Ok(KernelValue::density_from_log((2.0 * nu + 1.0) * y.ln() + l))
}

/// Transition density of the BES(δ) bridge ending at `endpoint` at time
/// `horizon_end`, from x at time s to y at time t.
pub fn bridge_transition(
    p: &ProcessParams,
    s: f64,
    x: f64,
    t: f64,
    y: f64,
    horizon_end: f64,
    endpoint: f64,
) -> Result<KernelValue> {
    if !(s < t && t < horizon_end) {
        return domain(format!("need s < t < horizon_end, got {s}, {t}, {horizon_end}"));
    }
    if !(y > 0.0) || !(x >= 0.0) || !(endpoint >= 0.0) {
        return domain(format!("need x, endpoint >= 0 and y > 0, got x={x}, y={y}, endpoint={endpoint}"));
    }
    let nu = p.nu();
    let den = log_free_kernel(nu, horizon_end - s, x, endpoint)?;
    if den < LOG_UNDERFLOW_FLOOR {
        return Err(Error::Underflow { log_value: den });
    }
    let l = (2.0 * nu + 1.0) * y.ln()
        + log_free_kernel(nu, t - s, x, y)?
        + log_free_kernel(nu, horizon_end - t, y, endpoint)?
        - den;
    Ok(KernelValue::density_from_log(l))
}

/// Probability that the BES(δ) bridge from x to y over elapsed time τ
/// stays at or below c.
pub fn max_dist_bridge(
    p: &ProcessParams,
    c: f64,
    tau: f64,
    x: f64,
    y: f64,
    policy: &SeriesPolicy,
) -> Result<KernelValue> {
    check_time(tau)?;
    check_below(c, x, y)?;
    let nu = p.nu();
    let scale = tau / (2.0 * c * c);
    if scale < policy.tau_floor && p.is_half_order() {
        let v = theta::theta_max_dist_half(c, tau, x, y)?;
        return KernelValue::checked(ValueKind::Probability, v, 0.0);
    }
    let kappa = SeriesFamily::MaxDist.kappa(nu) + endpoint_growth(nu, x, y);
    if x > 0.0 && y > 0.0 {
        let out = sum_series(policy, nu, scale, kappa, |_, j, w| {
            let jx = j_below_zero(nu, x, c, j, w)?;
            let jy = j_below_zero(nu, y, c, j, w)?;
            Ok(jx * jy / (c * c * w * w))
        })?;
        // 1/(πA) = 2τ e^{(x−y)²/(2τ)} / (e^{−z}I_ν(z)), z = xy/τ
        let z = x * y / tau;
        let ln_ei = ln_bessel_i_scaled_limit(nu, z)? + nu * z.ln();
        let pref = (2.0 * tau).ln() + (x - y).powi(2) / (2.0 * tau) - ln_ei;
        return finish(&out, pref, ValueKind::Probability, policy);
    }
    let y = x.max(y);
    let out = sum_series(policy, nu, scale, kappa, |_, j, w| {
        // (j/(cy))^ν J_ν(yj/c) = (j/c)^{2ν} · (yj/c)^{−ν}J_ν(yj/c)
        Ok((j / c).powf(2.0 * nu) * jsc_below_zero(nu, y, c, j, w)? / (c * c * w * w))
    })?;
    // 2τ^{ν+1/2} / (√(2π) n_τ(y)) = 2τ^{ν+1} e^{y²/(2τ)}
    let pref = LN_2 + (nu + 1.0) * tau.ln() + y * y / (2.0 * tau);
    finish(&out, pref, ValueKind::Probability, policy)
}

/// ∂/∂η of the probability that the bridge from x to y over time τ stays
/// at or below η.
pub fn max_dist_eta_derivative(
    p: &ProcessParams,
    eta: f64,
    tau: f64,
    x: f64,
    y: f64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    check_time(tau)?;
    check_below(eta, x, y)?;
    let nu = p.nu();
    let scale = tau / (2.0 * eta * eta);
    let kappa = SeriesFamily::EtaDerivative.kappa(nu) + endpoint_growth(nu, x, y);
    let (e3, e4, e5) = (eta.powi(3), eta.powi(4), eta.powi(5));
    let (out, pref) = if x > 0.0 && y > 0.0 {
        let out = sum_series(policy, nu, scale, kappa, |_, j, w| {
            let (jx, jx1) = bessel_j_pair(nu, x * j / eta)?;
            let (jy, jy1) = bessel_j_pair(nu, y * j / eta)?;
            let lead = -(2.0 * nu + 2.0) / e3 + j * j * tau / e5;
            Ok((lead * jx * jy + x * j / e4 * jx1 * jy + y * j / e4 * jy1 * jx) / (w * w))
        })?;
        let z = x * y / tau;
        let ln_ei = ln_bessel_i_scaled_limit(nu, z)? + nu * z.ln();
        (out, (2.0 * tau).ln() + (x - y).powi(2) / (2.0 * tau) - ln_ei)
    } else {
        let y = x.max(y);
        let out = sum_series(policy, nu, scale, kappa, |_, j, w| {
            let (s0, s1) = bessel_j_scaled_pair(nu, y * j / eta)?;
            // y^{−ν}J_ν(yj/η) = (j/η)^ν s0 and (yη/j) y^{−ν}J_{ν+1}(yj/η) = y²(j/η)^ν s1
            let r = j / eta;
            let brace = (tau - 2.0 * eta * eta * (nu + 1.0) / (j * j)) * s0 + y * y * s1;
            Ok(r.powf(2.0 * nu + 2.0) / (w * w) / e3 * brace)
        })?;
        (out, LN_2 + (nu + 1.0) * tau.ln() + y * y / (2.0 * tau))
    };
    let scale_v = (out.log_shift + pref).exp();
    let v = out.sum * scale_v;
    if !v.is_finite() {
        return Err(Error::NonConvergence(format!("eta derivative is {v}")));
    }
    Ok(v)
}

/// Sub-barrier transition kernel q₁^{(c)}(s,x,t,y): the free density times
/// the probability that the connecting bridge stays at or below c, summed
/// as a single Fourier–Bessel series.
pub fn q1(p: &ProcessParams, c: f64, s: f64, x: f64, t: f64, y: f64, policy: &SeriesPolicy) -> Result<KernelValue> {
    if !(s < t) {
        return domain(format!("q1 needs s < t, got s={s}, t={t}"));
    }
    let tau = t - s;
    check_time(tau)?;
    if (x == c && y <= c) || (y == c && x <= c) {
        // killed at the barrier
        check_below(c, 0.0, 0.0)?;
        return KernelValue::checked(ValueKind::Density, 0.0, 0.0);
    }
    check_below(c, x, y)?;
    let nu = p.nu();
    if y == 0.0 {
        if nu < -0.5 {
            return domain(format!("q1 diverges at y = 0 for nu = {nu} < -1/2"));
        }
        if nu > -0.5 {
            return KernelValue::checked(ValueKind::Density, 0.0, 0.0);
        }
    }
    let scale = tau / (2.0 * c * c);
    if scale < policy.tau_floor && p.is_half_order() {
        let v = theta::theta_q1_half(c, tau, x, y)?;
        return KernelValue::checked(ValueKind::Density, v, 0.0);
    }
    let kappa = SeriesFamily::MaxDist.kappa(nu) + endpoint_growth(nu, x, y);
    let out = q1_core(policy, nu, c, scale, kappa, x, y)?;
    let pref = LN_2 + if y > 0.0 { (2.0 * nu + 1.0) * y.ln() } else { 0.0 };
    finish(&out, pref, ValueKind::Density, policy)
}

// Σ Jsc(xj/c) Jsc(yj/c) (j/c)^{2ν} / (c² J²_{ν+1}(j)) e^{−j² s}
pub(crate) fn q1_core(
    policy: &SeriesPolicy,
    nu: f64,
    c: f64,
    scale: f64,
    kappa: f64,
    x: f64,
    y: f64,
) -> Result<SeriesOut> {
    let jx0 = scaled_origin_value(nu);
    sum_series(policy, nu, scale, kappa, |_, j, w| {
        let r = j / c;
        let a = if x == 0.0 { jx0 } else { jsc_below_zero(nu, x, c, j, w)? };
        let b = if y == 0.0 { jx0 } else { jsc_below_zero(nu, y, c, j, w)? };
        Ok(a * b * r.powf(2.0 * nu) / (c * c * w * w))
    })
}

/// q₂^{(b)}(τ, y): the barrier derivative of q₁, equal to twice the density
/// of the first time the process started at y hits b.
pub fn q2(p: &ProcessParams, b: f64, tau: f64, y: f64, policy: &SeriesPolicy) -> Result<KernelValue> {
    check_time(tau)?;
    check_below(b, y, y)?;
    let nu = p.nu();
    let scale = tau / (2.0 * b * b);
    let (value, log_value, noise) = if scale < policy.tau_floor && p.is_half_order() {
        let v = 2.0 * theta::theta_hitting_density_half(b, tau, y)?;
        (v, v.ln(), 0.0)
    } else {
        let (out, pref) = if y > 0.0 {
            let kappa = SeriesFamily::Hitting.kappa(nu);
            let out = sum_series(policy, nu, scale, kappa, |_, j, w| Ok(j * j_below_zero(nu, y, b, j, w)? / w))?;
            // 2 (b/y)^ν / b²
            (out, LN_2 + nu * (b / y).ln() - 2.0 * b.ln())
        } else {
            let kappa = SeriesFamily::HittingOrigin.kappa(nu);
            let out = sum_series(policy, nu, scale, kappa, |_, j, w| Ok(j.powf(nu + 1.0) / w))?;
            // 1 / (2^{ν−1} Γ(ν+1) b²)
            (out, (2.0 * scaled_origin_value(nu)).ln() - 2.0 * b.ln())
        };
        let scale = (out.log_shift + pref).exp();
        (out.sum * scale, out.sum.ln() + out.log_shift + pref, slack(policy, out.abs_sum * scale, ValueKind::Density))
    };
    if !(value > 0.0) {
        // below the rounding floor of the series: report a clamped zero
        if value.is_finite() && -value <= noise {
            return Ok(KernelValue {
                value: 0.0,
                kind: ValueKind::Density,
                log_value: f64::NEG_INFINITY,
                clamped: -value,
            });
        }
        return Err(Error::PositivityViolation { nu, tau, y, value });
    }
    Ok(KernelValue { value, kind: ValueKind::Density, log_value, clamped: 0.0 })
}

/// Density at t of the first time the process started at a hits b.
pub fn hitting_density(p: &ProcessParams, t: f64, policy: &SeriesPolicy) -> Result<KernelValue> {
    let v = q2(p, p.b(), t, p.a(), policy)?;
    Ok(KernelValue { value: 0.5 * v.value, log_value: v.log_value - LN_2, ..v })
}

/// The same hitting density summed in scaled form,
/// b^{−2} Σ j^{ν+1} (aj/b)^{−ν}J_ν(aj/b) / J_{ν+1}(j) e^{−j²t/(2b²)}.
pub fn kent_hitting_density(p: &ProcessParams, t: f64, policy: &SeriesPolicy) -> Result<KernelValue> {
    check_time(t)?;
    let (nu, a, b) = (p.nu(), p.a(), p.b());
    let scale = t / (2.0 * b * b);
    let kappa = if a == 0.0 { SeriesFamily::HittingOrigin } else { SeriesFamily::Hitting }.kappa(nu);
    let out =
        sum_series(policy, nu, scale, kappa, |_, j, w| Ok(j.powf(nu + 1.0) * jsc_below_zero(nu, a, b, j, w)? / w))?;
    finish(&out, -2.0 * b.ln(), ValueKind::Density, policy)
}

/// P(τ_{a,b} ≤ t) for the first time the process started at a hits b.
pub fn kent_hitting_cdf(p: &ProcessParams, t: f64, policy: &SeriesPolicy) -> Result<KernelValue> {
    check_time(t)?;
    let (nu, a, b) = (p.nu(), p.a(), p.b());
    let scale = t / (2.0 * b * b);
    let (out, pref) = if a > 0.0 {
        let out = sum_series(policy, nu, scale, 0.0, |_, j, w| Ok(j_below_zero(nu, a, b, j, w)? / (j * w)))?;
        (out, LN_2 + nu * (b / a).ln())
    } else {
        let kappa = (nu - 0.5).max(0.0);
        let out = sum_series(policy, nu, scale, kappa, |_, j, w| Ok(j.powf(nu - 1.0) / w))?;
        (out, (2.0 * scaled_origin_value(nu)).ln())
    };
    let survival = out.sum * (out.log_shift + pref).exp();
    let abs = out.abs_sum * (out.log_shift + pref).exp();
    KernelValue::checked(ValueKind::Probability, 1.0 - survival, slack(policy, abs, ValueKind::Probability))
}

#[cfg(test)]
mod tests;
