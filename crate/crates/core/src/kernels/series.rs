//! Truncated summation of Fourier–Bessel series Σ_n f_n e^{−j_n² s}.

use std::f64::consts::FRAC_PI_2;

use super::params::SeriesPolicy;
use crate::error::{Error, Result};
use crate::specfun::zero_table;

/// Series families, which differ in the polynomial growth n^κ of their
/// terms relative to the Gaussian factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFamily {
    /// Bridge-maximum distribution and the q₁ core.
    MaxDist,
    /// η-derivative of the bridge-maximum distribution.
    EtaDerivative,
    /// q₂ and hitting densities started at the origin.
    HittingOrigin,
    /// q₂ and hitting densities started inside (0, b).
    Hitting,
}

impl SeriesFamily {
    pub fn kappa(self, nu: f64) -> f64 {
        match self {
            SeriesFamily::MaxDist => 0.0,
            SeriesFamily::EtaDerivative => 2.0,
            SeriesFamily::HittingOrigin => nu + 1.5,
            SeriesFamily::Hitting => (nu + 1.5).max(2.0),
        }
    }
}

/// Envelope of a partially summed series: every term satisfies
/// |f_n e^{−j_n² s}| ≤ exp(log_envelope) · n^κ e^{−(nπ)² s/4}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailState {
    pub kappa: f64,
    pub log_envelope: f64,
    /// ln |partial sum|, in the same units as the envelope.
    pub log_sum: f64,
}

// ln of an upper bound on Σ_{m>n} m^κ e^{−(mπ/2)² s}, or +∞ while the
// terms are still growing.
fn log_tail(kappa: f64, scale: f64, n: usize) -> f64 {
    let m = (n + 1) as f64;
    let lead = kappa * m.ln() - (m * FRAC_PI_2).powi(2) * scale;
    let log_ratio = kappa * ((m + 1.0) / m).ln() - (2.0 * m + 1.0) * FRAC_PI_2 * FRAC_PI_2 * scale;
    if log_ratio >= 0.0 {
        return f64::INFINITY;
    }
    lead - (-(log_ratio.exp_m1())).ln()
}

/// Smallest N ≥ n_min for which the envelope tail bound falls below
/// rel_tol · |partial sum|.
pub fn truncation_bound(policy: &SeriesPolicy, nu: f64, scale: f64, state: &TailState) -> Result<usize> {
    let not_converged = || Error::SeriesNotConverged { nu, scale, n_max: policy.n_max };
    if !(scale > 0.0) || scale < policy.tau_floor {
        return Err(not_converged());
    }
    let target = policy.rel_tol.ln() + state.log_sum;
    let ok = |n: usize| state.log_envelope + log_tail(state.kappa, scale, n) < target;
    if !ok(policy.n_max) {
        return Err(not_converged());
    }
    let (mut lo, mut hi) = (policy.n_min, policy.n_max);
    if ok(lo) {
        return Ok(lo);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A summed series: the true value is `sum · exp(log_shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SeriesOut {
    pub sum: f64,
    pub abs_sum: f64,
    pub log_shift: f64,
    pub terms: usize,
}

impl SeriesOut {
    #[cfg(test)]
    pub fn value(&self) -> f64 {
        self.sum * self.log_shift.exp()
    }
}

/// Sum Σ_n f(n, j_n, J_{ν+1}(j_n)) · e^{−j_n² s}. Terms are accumulated
/// relative to the first exponential so that nothing underflows.
pub(crate) fn sum_series<F>(policy: &SeriesPolicy, nu: f64, scale: f64, kappa: f64, mut f: F) -> Result<SeriesOut>
where
    F: FnMut(usize, f64, f64) -> Result<f64>,
{
    if !(scale > 0.0) || scale < policy.tau_floor {
        return Err(Error::SeriesNotConverged { nu, scale, n_max: policy.n_max });
    }
    let mut table = zero_table(nu, policy.n_min.max(64).min(policy.n_max))?;
    let j1 = table.zeros()[0];
    let shift = j1 * j1 * scale;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut log_env = f64::NEG_INFINITY;
    for n in 1..=policy.n_max {
        if n > table.len() {
            table = zero_table(nu, (2 * table.len()).min(policy.n_max).max(n))?;
        }
        let j = table.zeros()[n - 1];
        let w = table.weights()[n - 1];
        let e = (-(j * j - j1 * j1) * scale).exp();
        let term = if e == 0.0 { 0.0 } else { f(n, j, w)? * e };
        if !term.is_finite() {
            return Err(Error::NonConvergence(format!("series term {n} is {term}")));
        }
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += term.abs();
        if term != 0.0 {
            let nf = n as f64;
            let l = term.abs().ln() - kappa * nf.ln() + (nf * FRAC_PI_2).powi(2) * scale;
            log_env = log_env.max(l);
        }
        if n >= policy.n_min {
            if log_env == f64::NEG_INFINITY {
                return Ok(SeriesOut { sum: 0.0, abs_sum: 0.0, log_shift: -shift, terms: n });
            }
            let s = (sum + comp).abs().max(1e-4 * abs_sum);
            if log_env + log_tail(kappa, scale, n) < policy.rel_tol.ln() + s.ln() {
                return Ok(SeriesOut { sum: sum + comp, abs_sum, log_shift: -shift, terms: n });
            }
        }
    }
    Err(Error::SeriesNotConverged { nu, scale, n_max: policy.n_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> TailState {
        TailState { kappa: 0.0, log_envelope: 0.0, log_sum: 0.0 }
    }

    #[test]
    fn bound_at_half_scale() {
        let n = truncation_bound(&SeriesPolicy::default(), 0.5, 0.5, &state()).unwrap();
        assert!(n <= 12, "n = {n}");
    }

    #[test]
    fn below_floor_fails() {
        let p = SeriesPolicy::default();
        assert!(matches!(truncation_bound(&p, 0.0, 1e-7, &state()), Err(Error::SeriesNotConverged { .. })));
    }

    #[test]
    fn bound_nonincreasing_in_scale() {
        let p = SeriesPolicy::default();
        let mut prev = usize::MAX;
        for k in 0..40 {
            let scale = 1e-6 * 1.5f64.powi(k);
            let st = TailState { kappa: 2.0, ..state() };
            let n = truncation_bound(&p, 0.0, scale, &st).unwrap();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn theta_identity_sum() {
        // Σ_n (−1)^{n+1} n² π² e^{−n²π² s} with ν = 1/2 zeros nπ
        let p = SeriesPolicy::default();
        let s = 0.5;
        let out = sum_series(&p, 0.5, s, 2.0, |n, j, _| Ok(if n % 2 == 1 { j * j } else { -j * j })).unwrap();
        let mut exact = 0.0;
        for n in 1..40 {
            let nf = n as f64 * std::f64::consts::PI;
            exact += if n % 2 == 1 { 1.0 } else { -1.0 } * nf * nf * (-nf * nf * s).exp();
        }
        assert!((out.value() - exact).abs() < 1e-14 * exact.abs());
    }
}
