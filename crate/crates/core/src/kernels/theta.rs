//! Reflection (theta-function) forms of the δ = 3 kernels. They converge
//! fastest at small times, where the Fourier–Bessel series are slowest.

use std::f64::consts::PI;

use crate::error::{domain, Result};

const STOP: f64 = 1e-16;

fn check(c: f64, tau: f64, x: f64, y: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return domain(format!("elapsed time must be > 0, got {tau}"));
    }
    if !(c > 0.0) || !(x >= 0.0 && x < c) || !(y >= 0.0 && y < c) {
        return domain(format!("need 0 <= x, y < c, got x={x}, y={y}, c={c}"));
    }
    Ok(())
}

// [n_τ(u−x) − n_τ(u+x)]/x · √(2πτ) = sign(u) e^{L} h, with
// L = −(|u|−x)²/(2τ) and h = (1 − e^{−2|u|x/τ})/x (→ 2|u|/τ as x → 0).
fn image(tau: f64, x: f64, u: f64) -> (f64, f64) {
    let au = u.abs();
    let l = -(au - x).powi(2) / (2.0 * tau);
    let h = if x == 0.0 { 2.0 * au / tau } else { -(-2.0 * au * x / tau).exp_m1() / x };
    (l, u.signum() * h)
}

// Σ_k [n_τ(y−x+2kc) − n_τ(y+x+2kc)]/x · √(2πτ) as exp(log_ref) · rel,
// referenced to the k = 0 image. Requires y > 0.
fn image_sum(c: f64, tau: f64, x: f64, y: f64) -> (f64, f64) {
    let (l0, h0) = image(tau, x, y);
    let mut rel = h0;
    let mut k = 1i64;
    loop {
        let (lp, hp) = image(tau, x, y + 2.0 * k as f64 * c);
        let (lm, hm) = image(tau, x, y - 2.0 * k as f64 * c);
        let tp = (lp - l0).exp() * hp;
        let tm = (lm - l0).exp() * hm;
        rel += tp + tm;
        if tp.abs().max(tm.abs()) < STOP * rel.abs() || k > 10_000 {
            break;
        }
        k += 1;
    }
    (l0, rel)
}

/// δ = 3 sub-barrier kernel (y/x) Σ_k [n_τ(y−x+2kc) − n_τ(y+x+2kc)]
/// over elapsed time τ; x = 0 is the limit.
pub fn theta_q1_half(c: f64, tau: f64, x: f64, y: f64) -> Result<f64> {
    check(c, tau, x, y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let (l, rel) = image_sum(c, tau, x, y);
    Ok(y * rel * l.exp() / (2.0 * PI * tau).sqrt())
}

/// δ = 3 kernel from the origin: y Σ_k 2(y+2kc)/τ · n_τ(y+2kc).
pub fn theta_q1_half_origin(c: f64, tau: f64, y: f64) -> Result<f64> {
    check(c, tau, 0.0, y)?;
    let n = |u: f64| (-u * u / (2.0 * tau)).exp() / (2.0 * PI * tau).sqrt();
    let mut sum = 2.0 * y / tau * n(y);
    let mut k = 1i64;
    loop {
        let up = y + 2.0 * k as f64 * c;
        let um = y - 2.0 * k as f64 * c;
        let tp = 2.0 * up / tau * n(up);
        let tm = 2.0 * um / tau * n(um);
        sum += tp + tm;
        if tp.abs().max(tm.abs()) < STOP * sum.abs() || k > 10_000 {
            break;
        }
        k += 1;
    }
    Ok(y * sum)
}

/// δ = 3 probability that the bridge x → y over time τ stays at or
/// below c.
pub fn theta_max_dist_half(c: f64, tau: f64, x: f64, y: f64) -> Result<f64> {
    check(c, tau, x, y)?;
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    if y == 0.0 {
        // 0 → 0 bridge: 1 + 2 Σ_{k≥1} (1 − (2kc)²/τ) e^{−(2kc)²/(2τ)}
        let mut sum = 1.0;
        let mut k = 1;
        loop {
            let u = 2.0 * k as f64 * c;
            let t = 2.0 * (1.0 - u * u / tau) * (-u * u / (2.0 * tau)).exp();
            sum += t;
            if t.abs() < STOP * sum.abs() || k > 10_000 {
                break;
            }
            k += 1;
        }
        return Ok(sum.clamp(0.0, 1.0));
    }
    let (_, rel) = image_sum(c, tau, x, y);
    let (_, h0) = image(tau, x, y);
    Ok((rel / h0).clamp(0.0, 1.0))
}

/// δ = 3 density of the first time the process started at y hits b.
pub fn theta_hitting_density_half(b: f64, t: f64, y: f64) -> Result<f64> {
    check(b, t, 0.0, y)?;
    let g = |v: f64| v * (-v * v / (2.0 * t)).exp() / ((2.0 * PI).sqrt() * t.powf(1.5));
    if y == 0.0 {
        let n = |v: f64| (-v * v / (2.0 * t)).exp() / (2.0 * PI * t).sqrt();
        let mut sum = 0.0;
        let mut k = 0;
        loop {
            let v = (2 * k + 1) as f64 * b;
            let term = (v * v / t - 1.0) * n(v) / t;
            sum += term;
            if (k > 0 && term.abs() < STOP * sum.abs()) || k > 10_000 {
                break;
            }
            k += 1;
        }
        return Ok(2.0 * b * sum);
    }
    let mut sum = g(b - y);
    let mut k = 1i64;
    loop {
        let tp = g((2 * k + 1) as f64 * b - y);
        let tm = g((-2 * k + 1) as f64 * b - y);
        sum += tp + tm;
        if tp.abs().max(tm.abs()) < STOP * sum.abs() || k > 10_000 {
            break;
        }
        k += 1;
    }
    Ok(b / y * sum)
}
