//! Positive zeros of J_ν with cached J_{ν+1} weights.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::bessel::{bessel_j_pair, bessel_j_scaled};
use crate::error::{domain, Error, Result};

const SCAN_STEP: f64 = 0.1;

/// Ascending positive zeros of J_ν and the values J_{ν+1}(j_{ν,n}).
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroTable {
    nu: f64,
    zeros: Vec<f64>,
    weights: Vec<f64>,
}

impl ZeroTable {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// J_{ν+1}(j_{ν,n}) for each stored zero.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    fn truncated(&self, n: usize) -> ZeroTable {
        ZeroTable { nu: self.nu, zeros: self.zeros[..n].to_vec(), weights: self.weights[..n].to_vec() }
    }

    fn scan_limit(nu: f64) -> f64 {
        30.0 + nu.max(0.0) + 10.0 * nu.max(0.0).cbrt()
    }

    fn extend_to(&mut self, n: usize) -> Result<()> {
        let nu = self.nu;
        if self.zeros.is_empty() {
            self.scan_prefix()?;
        }
        while self.zeros.len() < n {
            let prev = *self.zeros.last().unwrap();
            let idx = self.zeros.len() + 1;
            let (lo, hi) = bracket_after(nu, prev)?;
            let guess = mcmahon(nu, idx);
            let z = refine(nu, lo, hi, guess)?;
            self.push(z)?;
        }
        Ok(())
    }

    // Locate every zero below the scan limit by sign changes of z^{−ν}J_ν.
    fn scan_prefix(&mut self) -> Result<()> {
        let nu = self.nu;
        let limit = Self::scan_limit(nu);
        let mut x0 = 0.0;
        let mut f0 = bessel_j_scaled(nu, 0.0)?;
        while x0 < limit {
            let x1 = x0 + SCAN_STEP;
            let f1 = bessel_j_scaled(nu, x1)?;
            if f1 == 0.0 {
                self.push(x1)?;
                x0 = x1 + 1e-9;
                f0 = bessel_j_scaled(nu, x0)?;
                continue;
            }
            if f0.signum() != f1.signum() {
                let z = refine(nu, x0, x1, 0.5 * (x0 + x1))?;
                self.push(z)?;
            }
            x0 = x1;
            f0 = f1;
        }
        if self.zeros.is_empty() {
            return Err(Error::NonConvergence(format!("no zero of J_{nu} found below {limit}")));
        }
        Ok(())
    }

    fn push(&mut self, z: f64) -> Result<()> {
        let (_, w) = bessel_j_pair(self.nu, z)?;
        if w == 0.0 {
            return Err(Error::NonConvergence(format!("J_{{nu+1}} vanishes at zero {z} of J_{}", self.nu)));
        }
        self.zeros.push(z);
        self.weights.push(w);
        Ok(())
    }
}

/// McMahon initial guess β − (4ν²−1)/(8β), β = (n + ν/2 − 1/4)π.
pub fn mcmahon(nu: f64, n: usize) -> f64 {
    let beta = (n as f64 + 0.5 * nu - 0.25) * PI;
    beta - (4.0 * nu * nu - 1.0) / (8.0 * beta)
}

fn sign_at(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_j_pair(nu, z)?.0)
}

// Bracket of the zero following `prev`. Past the scan region consecutive
// zeros are π apart up to a small correction.
fn bracket_after(nu: f64, prev: f64) -> Result<(f64, f64)> {
    let lo = prev + PI - 0.5;
    let hi = prev + PI + 0.5;
    let (flo, fhi) = (sign_at(nu, lo)?, sign_at(nu, hi)?);
    if flo.signum() != fhi.signum() {
        return Ok((lo, hi));
    }
    let mut x0 = prev + 1e-3;
    let mut f0 = sign_at(nu, x0)?;
    while x0 < prev + 2.0 * PI {
        let x1 = x0 + SCAN_STEP;
        let f1 = sign_at(nu, x1)?;
        if f0.signum() != f1.signum() {
            return Ok((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    Err(Error::NonConvergence(format!("no sign change of J_{nu} within 2π after {prev}")))
}

// Safeguarded Newton on a sign-change bracket, with
// J_ν' = −J_{ν+1} + (ν/z)J_ν.
fn refine(nu: f64, mut lo: f64, mut hi: f64, guess: f64) -> Result<f64> {
    let eval = |z: f64| -> Result<(f64, f64)> {
        if z < 0.5 {
            // near the origin, work with z^{−ν}J_ν which shares the sign
            let f = bessel_j_scaled(nu, z)?;
            let h = 1e-7;
            let d = (bessel_j_scaled(nu, z + h)? - bessel_j_scaled(nu, (z - h).max(0.0))?) / (z + h - (z - h).max(0.0));
            return Ok((f, d));
        }
        let (j, j1) = bessel_j_pair(nu, z)?;
        Ok((j, -j1 + nu / z * j))
    };
    let flo = eval(lo)?.0;
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut z = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (f, d) = eval(z)?;
        if f == 0.0 {
            return Ok(z);
        }
        if f.signum() == flo.signum() {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - f / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 4.0 * f64::EPSILON * z || hi - lo <= 4.0 * f64::EPSILON * z {
            return Ok(next);
        }
        z = next;
    }
    Err(Error::NonConvergence(format!("zero of J_{nu} in [{lo}, {hi}] did not settle")))
}

type Memo = Mutex<HashMap<u64, Arc<ZeroTable>>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared table holding at least `n` zeros of J_ν. Tables are memoized per
/// order and only ever extended.
pub fn zero_table(nu: f64, n: usize) -> Result<Arc<ZeroTable>> {
    if !nu.is_finite() || nu <= -1.0 {
        return domain(format!("Bessel order must be finite and > -1, got {nu}"));
    }
    let key = nu.to_bits();
    let existing = {
        let guard = memo().lock().unwrap_or_else(|e| e.into_inner());
        guard.get(&key).cloned()
    };
    if let Some(t) = &existing {
        if t.len() >= n {
            return Ok(t.clone());
        }
    }
    let mut table = match existing {
        Some(t) => (*t).clone(),
        None => ZeroTable { nu, zeros: Vec::new(), weights: Vec::new() },
    };
    let target = n.max(table.len() * 2).max(64);
    table.extend_to(target)?;
    let table = Arc::new(table);
    let mut guard = memo().lock().unwrap_or_else(|e| e.into_inner());
    let entry = guard.entry(key).or_insert_with(|| table.clone());
    if entry.len() < table.len() {
        *entry = table.clone();
    }
    Ok(entry.clone())
}

/// The first `n_max` positive zeros of J_ν.
pub fn bessel_j_zeros(nu: f64, n_max: usize) -> Result<ZeroTable> {
    if n_max == 0 {
        return domain("bessel_j_zeros needs n_max >= 1");
    }
    Ok(zero_table(nu, n_max)?.truncated(n_max))
}
