//! Tabulated distribution functions with monotone cubic inversion.

use crate::error::{Error, Result};

/// A CDF tabulated at ascending abscissae together with its density; values
/// between nodes come from a monotone (Fritsch–Carlson limited) cubic
/// Hermite interpolant whose node slopes are the density values.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    mass: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InverseCdf(msg.into())
}

impl TabulatedCdf {
    /// Tabulates `f` on `cells` equal cells of (lo, hi), integrating each cell
    /// with Simpson's rule.
    pub fn from_density<F>(mut f: F, lo: f64, hi: f64, cells: usize) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(lo < hi) || cells == 0 {
            return Err(bad(format!("need lo < hi and cells > 0, got ({lo}, {hi}), {cells}")));
        }
        let h = (hi - lo) / cells as f64;
        let x: Vec<f64> = (0..=cells).map(|i| if i == cells { hi } else { lo + h * i as f64 }).collect();
        let pdf = x.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        let mut cdf = Vec::with_capacity(x.len());
        cdf.push(0.0);
        for i in 0..cells {
            let mid = f(0.5 * (x[i] + x[i + 1]))?;
            let cell = (x[i + 1] - x[i]) / 6.0 * (pdf[i] + 4.0 * mid + pdf[i + 1]);
            cdf.push(cdf[i] + cell.max(0.0));
        }
        Self::from_parts(x, cdf, pdf)
    }

    /// Builds a table from unnormalised cumulative values and densities on the
    /// same scale. Both are divided by the final cumulative value.
    pub fn from_parts(x: Vec<f64>, mut cdf: Vec<f64>, mut pdf: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || cdf.len() != n || pdf.len() != n {
            return Err(bad("table needs at least two nodes and matching lengths"));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(bad("abscissae are not strictly ascending"));
        }
        if cdf.windows(2).any(|w| !(w[1] >= w[0])) || cdf.iter().any(|v| !v.is_finite()) {
            return Err(bad("cumulative values are not monotone"));
        }
        if pdf.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(bad("density values must be finite and >= 0"));
        }
        let mass = cdf[n - 1] - cdf[0];
        if !(mass > 0.0) {
            return Err(bad("table has no mass"));
        }
        let c0 = cdf[0];
        for v in cdf.iter_mut() {
            *v = (*v - c0) / mass;
        }
        cdf[n - 1] = 1.0;
        for v in pdf.iter_mut() {
            *v /= mass;
        }
        Ok(TabulatedCdf { x, cdf, pdf, mass })
    }

    /// Total mass before normalisation.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    // Hermite data on cell i in the unit variable s: values and limited slopes.
    fn cell(&self, i: usize) -> (f64, f64, f64, f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let d = f1 - f0;
        let (mut m0, mut m1) = (self.pdf[i] * h, self.pdf[i + 1] * h);
        if d <= 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (a, b) = (m0 / d, m1 / d);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m0 *= tau;
                m1 *= tau;
            }
        }
        (h, f0, f1, m0, m1)
    }

    fn hermite(f0: f64, f1: f64, m0: f64, m1: f64, s: f64) -> (f64, f64) {
        let s2 = s * s;
        let s3 = s2 * s;
        let v =
            (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * f1 + (s3 - s2) * m1;
        let dv = (6.0 * s2 - 6.0 * s) * f0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * f1
            + (3.0 * s2 - 2.0 * s) * m1;
        (v, dv)
    }

    /// Interpolated CDF at x, 0 below the table and 1 above.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let i = self.x.partition_point(|&v| v <= x) - 1;
        let (h, f0, f1, m0, m1) = self.cell(i);
        Self::hermite(f0, f1, m0, m1, (x - self.x[i]) / h).0
    }

    /// x with cdf(x) = u; u = 0 gives lo and u = 1 gives hi.
    pub fn inverse(&self, u: f64) -> f64 {
        if !(u > 0.0) {
            return self.lo();
        }
        if u >= 1.0 {
            return self.hi();
        }
        let mut i = self.cdf.partition_point(|&c| c <= u).max(1) - 1;
        i = i.min(self.x.len() - 2);
        let (h, f0, f1, m0, m1) = self.cell(i);
        if f1 <= f0 {
            return self.x[i];
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut s = ((u - f0) / (f1 - f0)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let (v, dv) = Self::hermite(f0, f1, m0, m1, s);
            let r = v - u;
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            if r.abs() <= 1e-15 || hi - lo <= 1e-15 {
                break;
            }
            let next = s - r / dv;
            s = if dv > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        self.x[i] + h * s
    }
}

/// x with F(x) = u for the tabulated distribution F.
pub fn inverse_cdf(table: &TabulatedCdf, u: f64) -> f64 {
    table.inverse(u)
}
