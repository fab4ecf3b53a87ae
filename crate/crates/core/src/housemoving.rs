//! The house-moving process on [0,1]: a Bessel process from a conditioned to
//! hit b for the first time at t = 1.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{
    bes_transition, kent_hitting_density, max_dist_bridge, q1, q2, theta, KernelValue, ProcessParams, SeriesPolicy,
    ValueKind,
};
use crate::quad::TanhSinh;

/// Target accuracy of every integral over (0, b).
pub const QUAD_TOL: f64 = 1e-9;

/// Allowed deviation of a marginal curve's mass from 1.
pub const MASS_TOL: f64 = 1e-6;

/// House-moving model with its cached normaliser q₂(1, a).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HouseMovingModel {
    params: ProcessParams,
    policy: SeriesPolicy,
    normalizer: f64,
}

/// A marginal density sampled on a grid, with its mass over (0, b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub t: f64,
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub mass: f64,
}

impl DensityCurve {
    pub fn check_mass(&self, tol: f64) -> Result<()> {
        if (self.mass - 1.0).abs() > tol {
            return Err(Error::MassDefect { mass: self.mass, tol });
        }
        Ok(())
    }
}

fn quad() -> TanhSinh {
    TanhSinh::with_tol(QUAD_TOL)
}

impl HouseMovingModel {
    pub fn new(params: ProcessParams, policy: SeriesPolicy) -> Result<Self> {
        policy.validate()?;
        let normalizer = q2(&params, params.b(), 1.0, params.a(), &policy)?.value;
        if normalizer == 0.0 {
            return Err(Error::Underflow { log_value: f64::NEG_INFINITY });
        }
        Ok(HouseMovingModel { params, policy, normalizer })
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn policy(&self) -> &SeriesPolicy {
        &self.policy
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    fn check_open_time(t: f64) -> Result<()> {
        if !(t > 0.0 && t < 1.0) {
            return domain(format!("time must lie in (0,1), got {t}"));
        }
        Ok(())
    }

    fn check_state(&self, y: f64) -> Result<()> {
        if !(y > 0.0 && y < self.params.b()) {
            return domain(format!("state must lie in (0, {}), got {y}", self.params.b()));
        }
        Ok(())
    }

    /// Density of H(t) at y.
    pub fn marginal_density(&self, t: f64, y: f64) -> Result<KernelValue> {
        Self::check_open_time(t)?;
        self.check_state(y)?;
        let (p, b) = (&self.params, self.params.b());
        let k1 = q1(p, b, 0.0, p.a(), t, y, &self.policy)?;
        let k2 = q2(p, b, 1.0 - t, y, &self.policy)?;
        Ok(KernelValue::density_from_log(k1.log_value + k2.log_value - self.normalizer.ln()))
    }

    /// Transition density h_b(s, x, t, y). H(1) = b is deterministic, so t = 1
    /// has no density.
    pub fn transition_density(&self, s: f64, x: f64, t: f64, y: f64) -> Result<KernelValue> {
        self.check_transition(s, x, t)?;
        self.check_state(y)?;
        let (p, b) = (&self.params, self.params.b());
        let k1 = q1(p, b, s, x, t, y, &self.policy)?;
        let num = q2(p, b, 1.0 - t, y, &self.policy)?;
        let den = if s == 0.0 { self.normalizer } else { q2(p, b, 1.0 - s, x, &self.policy)?.value };
        if den == 0.0 {
            return Err(Error::Underflow { log_value: f64::NEG_INFINITY });
        }
        Ok(KernelValue::density_from_log(k1.log_value + num.log_value - den.ln()))
    }

    fn check_transition(&self, s: f64, x: f64, t: f64) -> Result<()> {
        if !(s >= 0.0 && s < t) {
            return domain(format!("need 0 <= s < t, got s={s}, t={t}"));
        }
        if t >= 1.0 {
            return domain(format!("H(1) = b is deterministic; no density at t={t}"));
        }
        if s == 0.0 {
            if x != self.params.a() {
                return domain(format!("at s = 0 the state must be a = {}, got {x}", self.params.a()));
            }
        } else {
            self.check_state(x)?;
        }
        Ok(())
    }

    /// The transition density assembled from the free kernel, the bridge
    /// maximum law and two first-hitting densities.
    pub fn transition_density_via_hitting(&self, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
        self.check_transition(s, x, t)?;
        self.check_state(y)?;
        let (p, b, delta) = (&self.params, self.params.b(), self.params.delta());
        let free = bes_transition(p, t - s, x, y)?.value;
        let stay = max_dist_bridge(p, b, t - s, x, y, &self.policy)?.value;
        let from_y = kent_hitting_density(&ProcessParams::new(delta, y, b)?, 1.0 - t, &self.policy)?.value;
        let from_x = kent_hitting_density(&ProcessParams::new(delta, x, b)?, 1.0 - s, &self.policy)?.value;
        Ok(free * stay * from_y / from_x)
    }

    /// P(max_{[0,t]} H ≤ x_bar, H(t) ≤ z).
    pub fn joint_max_cdf(&self, t: f64, x_bar: f64, z: f64) -> Result<KernelValue> {
        Self::check_open_time(t)?;
        let (p, a, b) = (&self.params, self.params.a(), self.params.b());
        if !(x_bar > a && x_bar <= b) {
            return domain(format!("need a < x_bar <= b, got x_bar={x_bar}"));
        }
        if !(z > 0.0 && z <= x_bar) {
            return domain(format!("need 0 < z <= x_bar, got z={z}"));
        }
        let f = |y: f64| -> Result<f64> {
            let k1 = q1(p, x_bar, 0.0, a, t, y, &self.policy)?.value;
            if k1 == 0.0 {
                return Ok(0.0);
            }
            Ok(k1 * q2(p, b, 1.0 - t, y, &self.policy)?.value / self.normalizer)
        };
        let splits: Vec<f64> = [a].into_iter().filter(|&s| s > 0.0 && s < z).collect();
        let v = quad().integrate_split(f, 0.0, z, &splits)?.value;
        KernelValue::checked(ValueKind::Probability, v, MASS_TOL)
    }

    /// Density of the law of H on [0,t] against the Bessel path law from a,
    /// given the value at t and whether the path stayed at or below b.
    pub fn rn_density(&self, t: f64, w_t: f64, below: bool) -> Result<f64> {
        Self::check_open_time(t)?;
        if !(w_t >= 0.0) {
            return domain(format!("terminal value must be >= 0, got {w_t}"));
        }
        if !below || w_t >= self.params.b() {
            return Ok(0.0);
        }
        Ok(q2(&self.params, self.params.b(), 1.0 - t, w_t, &self.policy)?.value / self.normalizer)
    }

    /// ∫₀^b f(y) ρ_t(y) dy.
    pub fn expect<F>(&self, t: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        Self::check_open_time(t)?;
        let b = self.params.b();
        let splits: Vec<f64> = [self.params.a()].into_iter().filter(|&s| s > 0.0).collect();
        Ok(quad().integrate_split(|y| Ok(f(y) * self.marginal_density(t, y)?.value), 0.0, b, &splits)?.value)
    }

    /// ∫₀^b h_b(s, x, t, y) dy.
    pub fn transition_mass(&self, s: f64, x: f64, t: f64) -> Result<f64> {
        let b = self.params.b();
        Ok(quad().integrate_split(|y| Ok(self.transition_density(s, x, t, y)?.value), 0.0, b, &[x])?.value)
    }

    /// E[H(t)] on a time grid; the endpoints are exact.
    pub fn mean_curve(&self, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        t_grid
            .iter()
            .map(|&t| {
                let m = if t == 0.0 {
                    self.params.a()
                } else if t == 1.0 {
                    self.params.b()
                } else {
                    self.expect(t, |y| y)?
                };
                Ok((t, m))
            })
            .collect()
    }

    /// Marginal density of H(t) on `grid` equispaced interior points.
    pub fn density_curve(&self, t: f64, grid: usize) -> Result<DensityCurve> {
        if grid == 0 {
            return domain("grid must have at least one point");
        }
        let b = self.params.b();
        let y_grid: Vec<f64> = (1..=grid).map(|i| b * i as f64 / (grid + 1) as f64).collect();
        let values = y_grid.iter().map(|&y| Ok(self.marginal_density(t, y)?.value)).collect::<Result<Vec<_>>>()?;
        let mass = self.expect(t, |_| 1.0)?;
        Ok(DensityCurve { t, y_grid, values, mass })
    }

    /// ρ_t(y) − ρ_{1−t}(b − y); vanishes for δ = 3 started at 0.
    pub fn reversal_gap(&self, t: f64, y: f64) -> Result<f64> {
        if !self.params.is_half_order() {
            return Err(Error::Order { nu: self.params.nu() });
        }
        if self.params.a() != 0.0 {
            return domain(format!("reversal needs a = 0, got a = {}", self.params.a()));
        }
        self.reversal_gap_unchecked(t, y)
    }

    /// The same difference for any model, without the δ = 3 requirement.
    pub fn reversal_gap_unchecked(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.marginal_density(t, y)?.value - self.marginal_density(1.0 - t, self.params.b() - y)?.value)
    }

    /// Density at y of the bridge from a to b at time t, conditioned to stay
    /// at or below b + η on [0,1].
    pub fn conditioned_bridge_density(&self, eta: f64, t: f64, y: f64) -> Result<f64> {
        Self::check_open_time(t)?;
        if !(eta > 0.0) {
            return domain(format!("eta must be > 0, got {eta}"));
        }
        let (p, a, b) = (&self.params, self.params.a(), self.params.b());
        let c = b + eta;
        if !(y > 0.0 && y < c) {
            return domain(format!("state must lie in (0, {c}), got {y}"));
        }
        let first = q1(p, c, 0.0, a, t, y, &self.policy)?;
        let second = q1(p, c, t, y, 1.0, b, &self.policy)?;
        let whole = q1(p, c, 0.0, a, 1.0, b, &self.policy)?;
        if first.value == 0.0 || second.value == 0.0 {
            return Ok(0.0);
        }
        Ok((first.log_value + second.log_value - whole.log_value).exp())
    }
}

/// Reflection-series form of q₁ below the level `eta` for δ = 3.
pub fn theta_oracle_q1_half(p: &ProcessParams, eta: f64, s: f64, x: f64, t: f64, y: f64) -> Result<f64> {
    if !p.is_half_order() {
        return Err(Error::Order { nu: p.nu() });
    }
    if !(s < t) {
        return domain(format!("need s < t, got s={s}, t={t}"));
    }
    theta::theta_q1_half(eta, t - s, x, y)
}

/// Reflection-series form of q₁ from the origin below the level `eta`
/// for δ = 3.
pub fn theta_oracle_q1_half_origin(p: &ProcessParams, eta: f64, t: f64, y: f64) -> Result<f64> {
    if !p.is_half_order() {
        return Err(Error::Order { nu: p.nu() });
    }
    theta::theta_q1_half_origin(eta, t, y)
}

#[cfg(test)]
mod tests;
