//! Double-exponential (tanh–sinh) quadrature on finite intervals.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Result of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evals: usize,
}

/// Tanh–sinh rule with level halving of the step.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub tol: f64,
    pub max_level: usize,
    pub t_max: f64,
}

impl Default for TanhSinh {
    fn default() -> Self {
        TanhSinh { tol: 1e-10, max_level: 10, t_max: 4.0 }
    }
}

impl TanhSinh {
    pub fn with_tol(tol: f64) -> Self {
        TanhSinh { tol, ..Default::default() }
    }

    /// ∫_a^b f. Nodes are placed by their distance to the nearer endpoint
    /// so that points never coincide with a or b.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<Quadrature>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
        }
        if a == b {
            return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evals: 0 });
        }
        if a > b {
            let q = self.integrate(f, b, a)?;
            return Ok(Quadrature { value: -q.value, ..q });
        }
        let half = 0.5 * (b - a);
        let mut evals = 0usize;
        let mut node = |t: f64, f: &mut F| -> Result<f64> {
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
            if w == 0.0 {
                return Ok(0.0);
            }
            // distance from the nearer endpoint: (b−a)/(e^{2|u|}+1)
            let d = (b - a) / ((2.0 * u.abs()).exp() + 1.0);
            let x = if t < 0.0 { a + d } else { b - d };
            if !(x > a && x < b) {
                return Ok(0.0);
            }
            evals += 1;
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::Quadrature(format!("integrand is {v} at x = {x}")));
            }
            Ok(w * v)
        };

        let mut h = 1.0;
        let mut sum = node(0.0, &mut f)?;
        let mut k = 1;
        while (k as f64) * h <= self.t_max {
            let t = k as f64 * h;
            sum += node(t, &mut f)? + node(-t, &mut f)?;
            k += 1;
        }
        let mut estimate = h * sum;
        let mut err = f64::INFINITY;
        for _ in 1..=self.max_level {
            h *= 0.5;
            let mut k = 1;
            while (k as f64) * h <= self.t_max {
                let t = k as f64 * h;
                sum += node(t, &mut f)? + node(-t, &mut f)?;
                k += 2;
            }
            let next = h * sum;
            err = (next - estimate).abs();
            estimate = next;
            if err <= self.tol * estimate.abs().max(1e-300) || err < 1e-300 {
                break;
            }
        }
        Ok(Quadrature { value: estimate, error_estimate: err, evals })
    }

    /// ∫_a^b f split at interior points, which helps peaked integrands.
    pub fn integrate_split<F>(&self, mut f: F, a: f64, b: f64, splits: &[f64]) -> Result<Quadrature>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut pts = vec![a];
        let mut inner: Vec<f64> = splits.iter().copied().filter(|&s| s > a && s < b).collect();
        inner.sort_by(|x, y| x.total_cmp(y));
        inner.dedup();
        pts.extend(inner);
        pts.push(b);
        let mut total = Quadrature { value: 0.0, error_estimate: 0.0, evals: 0 };
        for w in pts.windows(2) {
            let q = self.integrate(&mut f, w[0], w[1])?;
            total.value += q.value;
            total.error_estimate += q.error_estimate;
            total.evals += q.evals;
        }
        Ok(total)
    }
}

/// ∫_a^b f with the default rule.
pub fn integrate<F>(f: F, a: f64, b: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    TanhSinh::default().integrate(f, a, b)
}
