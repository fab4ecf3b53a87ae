use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::order_from_delta;

/// Dimension δ (order ν = δ/2 − 1), start a and barrier/target b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    delta: f64,
    nu: f64,
    a: f64,
    b: f64,
}

impl ProcessParams {
    pub fn new(delta: f64, a: f64, b: f64) -> Result<Self> {
        let nu = order_from_delta(delta)?;
        if !(a >= 0.0) || !a.is_finite() {
            return domain(format!("start a must be finite and >= 0, got {a}"));
        }
        if !(b > a) || !b.is_finite() {
            return domain(format!("barrier b must be finite and > a = {a}, got {b}"));
        }
        Ok(ProcessParams { delta, nu, a, b })
    }

    /// Parameters used only for their order, e.g. in kernels that take the
    /// barrier as an explicit argument.
    pub fn with_delta(delta: f64) -> Result<Self> {
        ProcessParams::new(delta, 0.0, 1.0)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// δ = 3, where the reflection (theta) forms are exact.
    pub fn is_half_order(&self) -> bool {
        self.nu == 0.5
    }
}

/// Truncation rules for Fourier–Bessel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Smallest admissible tau/(2c²).
    pub tau_floor: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy { rel_tol: 1e-12, n_min: 8, n_max: 20_000, tau_floor: 1e-6 }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return domain(format!("rel_tol must lie in (0,1), got {}", self.rel_tol));
        }
        if self.n_min > self.n_max || self.n_max == 0 {
            return domain(format!("need 1 <= n_min <= n_max, got {} and {}", self.n_min, self.n_max));
        }
        if !(self.tau_floor > 0.0) {
            return domain(format!("tau_floor must be > 0, got {}", self.tau_floor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Probability,
    Density,
}

/// A probability or density together with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub kind: ValueKind,
    /// ln(value); −∞ for a zero value.
    pub log_value: f64,
    /// Magnitude removed by clamping into the admissible range.
    pub clamped: f64,
}

impl KernelValue {
    pub fn density_from_log(log_value: f64) -> Self {
        KernelValue { value: log_value.exp(), kind: ValueKind::Density, log_value, clamped: 0.0 }
    }

    pub fn probability_from_log(log_value: f64) -> Self {
        let lv = log_value.min(0.0);
        KernelValue {
            value: lv.exp(),
            kind: ValueKind::Probability,
            log_value: lv,
            clamped: (log_value.exp() - 1.0).max(0.0),
        }
    }

    /// Build from a signed value, clamping into range when the violation is
    /// within `slack`.
    pub(crate) fn checked(kind: ValueKind, value: f64, slack: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonConvergence(format!("kernel value is {value}")));
        }
        let (v, clamped) = match kind {
            ValueKind::Density if value < 0.0 => (0.0, -value),
            ValueKind::Probability if value < 0.0 => (0.0, -value),
            ValueKind::Probability if value > 1.0 => (1.0, value - 1.0),
            _ => (value, 0.0),
        };
        if clamped > slack {
            return Err(Error::NonConvergence(format!(
                "{kind:?} value {value:e} outside its range by more than {slack:e}"
            )));
        }
        Ok(KernelValue { value: v, kind, log_value: v.ln(), clamped })
    }
}
