//! Bessel functions of the first kind and scaled modified Bessel functions
//! of real order ν > −1 at nonnegative real argument.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use super::gamma::{gamma_unchecked, ln_gamma_unchecked};
use crate::error::{domain, Error, Result};

const SERIES_LIMIT: f64 = 6.0;
const HANKEL_MIN: f64 = 30.0;
const I_ASYMPTOTIC_MIN: f64 = 30.0;

fn check_order(nu: f64) -> Result<()> {
    if !nu.is_finite() || nu <= -1.0 {
        return domain(format!("Bessel order must be finite and > -1, got {nu}"));
    }
    Ok(())
}

fn check_arg(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        return domain(format!("Bessel argument must be finite and >= 0, got {z}"));
    }
    Ok(())
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// 1 / (2^ν Γ(ν+1)), the value of z^{−ν}J_ν(z) at z = 0.
pub fn scaled_origin_value(nu: f64) -> f64 {
    if nu + 1.0 < 150.0 {
        1.0 / (2f64.powf(nu) * gamma_unchecked(nu + 1.0))
    } else {
        (-nu * LN_2 - ln_gamma_unchecked(nu + 1.0)).exp()
    }
}

// z^{−ν}J_ν(z) by the power series.
fn jsc_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut acc = Compensated { sum: 1.0, c: 0.0 };
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        acc.add(term);
        if term.abs() < 1e-17 * acc.sum.abs() {
            break;
        }
    }
    acc.value() * scaled_origin_value(nu)
}

fn use_series(nu: f64, z: f64) -> bool {
    z <= SERIES_LIMIT || 0.25 * z * z <= 0.5 * (nu + 1.0)
}

fn hankel_threshold(nu: f64) -> f64 {
    HANKEL_MIN.max(nu * nu)
}

// (Jsc_ν, Jsc_{ν+1}) · 2^ν by Miller backward recurrence, normalized with
// (z/2)^ν = Γ(ν+1)J_ν + Σ_{k≥1} (ν+2k) Γ(ν+k)/k! J_{ν+2k}.
// Returns (J_ν(z), J_{ν+1}(z)) / (z/2)^ν.
fn miller(nu: f64, z: f64) -> (f64, f64) {
    let start = z + 12.0 * z.cbrt() + 24.0;
    let mut n = start.ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    // g_k = Γ(ν+k)/k! recurred downward from k = n/2.
    let kmax = n / 2;
    let mut g = (ln_gamma_unchecked(nu + kmax as f64) - ln_gamma_unchecked(kmax as f64 + 1.0)).exp();
    let mut f_next = 0.0;
    let mut f = 1e-30;
    let mut norm = 0.0;
    let mut f1 = 0.0;
    for m in (0..=n).rev() {
        if m % 2 == 0 {
            let k = m / 2;
            // c_0 = Γ(ν+1) = g_1, so g stops updating at k = 1
            let ck = if k == 0 { g } else { (nu + 2.0 * k as f64) * g };
            norm += ck * f;
            if k >= 2 {
                g *= k as f64 / (nu + k as f64 - 1.0);
            }
        }
        if m == 1 {
            f1 = f;
        }
        if m == 0 {
            break;
        }
        let f_prev = 2.0 * (nu + m as f64) / z * f - f_next;
        f_next = f;
        f = f_prev;
        if f.abs() > 1e250 {
            f *= 1e-250;
            f_next *= 1e-250;
            norm *= 1e-250;
            f1 *= 1e-250;
        }
    }
    (f / norm, f1 / norm)
}

// Hankel asymptotic J_ν(z) for large z. Errors if the optimal truncation
// cannot reach double precision.
fn hankel(nu: f64, z: f64) -> Result<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut u = 1.0;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for k in 1..200 {
        let kf = k as f64;
        let two_k_minus_1 = 2.0 * kf - 1.0;
        u *= (mu - two_k_minus_1 * two_k_minus_1) / (8.0 * kf * z);
        if u.abs() > last {
            break;
        }
        last = u.abs();
        match k % 4 {
            1 => q += u,
            2 => p -= u,
            3 => q -= u,
            _ => p += u,
        }
        if u.abs() < 1e-17 {
            converged = true;
            break;
        }
    }
    if !converged && last > 1e-14 {
        return Err(Error::NonConvergence(format!("Hankel expansion for J_{nu}({z}) stalls at term size {last:e}")));
    }
    let chi = z - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    Ok((FRAC_2_PI / z).sqrt() * (p * c - q * s))
}

/// (z^{−ν}J_ν(z), z^{−ν−1}J_{ν+1}(z)), finite at z = 0.
pub fn bessel_j_scaled_pair(nu: f64, z: f64) -> Result<(f64, f64)> {
    check_order(nu)?;
    check_arg(z)?;
    if use_series(nu, z) {
        return Ok((jsc_series(nu, z), jsc_series(nu + 1.0, z)));
    }
    if z < hankel_threshold(nu) {
        let (a, b) = miller(nu, z);
        let s = 2f64.powf(-nu);
        return Ok((a * s, b * s / z));
    }
    let zn = z.powf(-nu);
    Ok((hankel(nu, z)? * zn, hankel(nu + 1.0, z)? * zn / z))
}

/// (J_ν(z), J_{ν+1}(z)) for z > 0.
pub fn bessel_j_pair(nu: f64, z: f64) -> Result<(f64, f64)> {
    check_order(nu)?;
    check_arg(z)?;
    if z == 0.0 {
        return Ok((bessel_j(nu, 0.0)?, 0.0));
    }
    if z >= hankel_threshold(nu) && !use_series(nu, z) {
        return Ok((hankel(nu, z)?, hankel(nu + 1.0, z)?));
    }
    let (a, b) = bessel_j_scaled_pair(nu, z)?;
    let zn = z.powf(nu);
    Ok((a * zn, b * zn * z))
}

/// J_ν(z) for ν > −1, z ≥ 0.
pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    check_order(nu)?;
    check_arg(z)?;
    if z == 0.0 {
        return match nu {
            n if n > 0.0 => Ok(0.0),
            0.0 => Ok(1.0),
            _ => Err(Error::Divergence { nu }),
        };
    }
    Ok(bessel_j_pair(nu, z)?.0)
}

/// z^{−ν}J_ν(z); equals 1/(2^ν Γ(ν+1)) at z = 0.
pub fn bessel_j_scaled(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_j_scaled_pair(nu, z)?.0)
}

/// ln(z^{−ν} e^{−z} I_ν(z)); finite at z = 0.
pub fn ln_bessel_i_scaled_limit(nu: f64, z: f64) -> Result<f64> {
    check_order(nu)?;
    check_arg(z)?;
    if z == 0.0 {
        return Ok(-nu * LN_2 - ln_gamma_unchecked(nu + 1.0));
    }
    if z > I_ASYMPTOTIC_MIN.max(nu * nu) {
        let mu = 4.0 * nu * nu;
        let mut sum = 1.0;
        let mut u = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            let a = 2.0 * kf - 1.0;
            u *= -(mu - a * a) / (8.0 * kf * z);
            if u.abs() > last {
                break;
            }
            last = u.abs();
            sum += u;
            if u.abs() < 1e-17 {
                break;
            }
        }
        if last > 1e-14 && last.is_finite() {
            return Err(Error::NonConvergence(format!(
                "asymptotic expansion for I_{nu}({z}) stalls at term size {last:e}"
            )));
        }
        return Ok(sum.ln() - 0.5 * (2.0 * PI * z).ln() - nu * z.ln());
    }
    // Positive power series, rescaled to stay in range.
    let q = 0.25 * z * z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_offset = 0.0;
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term < 1e-17 * sum && kf > q.sqrt() {
            break;
        }
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_offset += 250.0 * std::f64::consts::LN_10;
        }
        k += 1;
        if k > 100_000 {
            return Err(Error::NonConvergence(format!("I_{nu}({z}) series")));
        }
    }
    Ok(sum.ln() + log_offset - z - nu * LN_2 - ln_gamma_unchecked(nu + 1.0))
}

/// z^{−ν} e^{−z} I_ν(z); equals 1/(2^ν Γ(ν+1)) at z = 0.
pub fn bessel_i_scaled_limit(nu: f64, z: f64) -> Result<f64> {
    Ok(ln_bessel_i_scaled_limit(nu, z)?.exp())
}

/// e^{−z} I_ν(z).
pub fn bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    check_order(nu)?;
    check_arg(z)?;
    if z == 0.0 {
        return match nu {
            n if n > 0.0 => Ok(0.0),
            0.0 => Ok(1.0),
            _ => Err(Error::Divergence { nu }),
        };
    }
    Ok((ln_bessel_i_scaled_limit(nu, z)? + nu * z.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn j_reference_values() {
        // mpmath.besselj at 30 digits
        let cases = [
            (0.0, 1.0, 0.765_197_686_557_966_551),
            (0.0, 10.0, -0.245_935_764_451_348_335),
            (1.0, 2.5, 0.497_094_102_464_274_038),
            (0.5, 7.0, 0.198_128_774_076_344_82),
            (-0.5, 3.3, -0.433_721_847_179_362_618),
            (-0.75, 0.4, 0.777_033_012_020_825_804),
            (2.5, 15.0, -0.100_880_349_790_011_774),
            (3.0, 40.0, -0.126_144_815_505_820_803),
            (4.0, 100.0, 0.026_105_809_447_725_282_2),
            (1.25, 1234.5, 0.022_017_849_846_872_007_3),
            (0.0, 9000.0, -0.001_027_134_474_978_638_47),
        ];
        for (nu, z, j) in cases {
            let got = bessel_j(nu, z).unwrap();
            assert!(rel(got, j) < 1e-11, "nu={nu} z={z} got={got} want={j}");
        }
    }

    #[test]
    fn spec_examples() {
        assert!(bessel_j(0.5, PI).unwrap().abs() < 1e-15);
        assert!(rel(bessel_j(0.5, PI / 2.0).unwrap(), 2.0 / PI) < 1e-14);
        assert!(bessel_j(0.0, 2.404_825_557_7).unwrap().abs() < 1e-10);
        assert!(rel(bessel_j_scaled(0.5, 0.0).unwrap(), 0.797_884_560_802_865_4) < 1e-14);
        assert_eq!(bessel_j_scaled(0.0, 0.0).unwrap(), 1.0);
        assert!(rel(bessel_j_scaled(0.5, 1.0).unwrap(), 0.671_396_707_141_803_09) < 1e-14);
        assert!(rel(bessel_i_scaled(0.5, 1.0).unwrap(), 0.344_951_313_888_244_626) < 1e-14);
        assert_eq!(bessel_i_scaled(2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_argument_contract() {
        assert_eq!(bessel_j(1.3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert!(matches!(bessel_j(-0.3, 0.0), Err(Error::Divergence { .. })));
        assert!(bessel_j(-0.3, 0.5).unwrap().is_finite());
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(0.5, -1.0).is_err());
    }

    #[test]
    fn ln_i_reference_values() {
        // ln(z^{-nu} e^{-z} I_nu(z)) from mpmath
        let cases = [
            (0.0, 0.5, -0.438_450_280_814_518_696),
            (0.5, 1.0, -1.064_351_991_073_531_8),
            (1.0, 20.0, -5.431_777_651_034_646_69),
            (2.0, 35.0, -9.861_653_357_389_398_84),
            (4.0, 150.0, -23.519_470_410_884_843_2),
            (-0.5, 2.0, -0.900_788_605_286_863_001),
            (-0.75, 60.0, 0.102_021_388_074_277_827),
        ];
        for (nu, z, l) in cases {
            let got = ln_bessel_i_scaled_limit(nu, z).unwrap();
            assert!((got - l).abs() < 1e-13 * l.abs().max(1.0), "nu={nu} z={z}");
        }
    }

    #[test]
    fn half_integer_closed_forms() {
        let mut z = 0.1;
        while z <= 50.0 {
            let c = (FRAC_2_PI / z).sqrt();
            let j12 = c * z.sin();
            let j32 = c * (z.sin() / z - z.cos());
            let scale = c;
            assert!((bessel_j(0.5, z).unwrap() - j12).abs() <= 1e-10 * j12.abs().max(1e-3 * scale), "z={z}");
            assert!((bessel_j(1.5, z).unwrap() - j32).abs() <= 1e-10 * j32.abs().max(1e-3 * scale), "z={z}");
            z += 0.0997;
        }
    }

    #[test]
    fn crossover_overlap() {
        for &nu in &[-0.75, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0] {
            let z = SERIES_LIMIT;
            let s = jsc_series(nu, z);
            let m = miller(nu, z).0 * 2f64.powf(-nu);
            assert!((s - m).abs() <= 1e-10 * s.abs().max(1e-2), "series/miller nu={nu}");
            let z = hankel_threshold(nu);
            let m = miller(nu, z).0 * (0.5 * z).powf(nu);
            let h = hankel(nu, z).unwrap();
            assert!((h - m).abs() <= 1e-10 * h.abs().max(1e-2), "miller/hankel nu={nu}");
        }
    }

    #[test]
    fn scaled_i_bound() {
        for &nu in &[-0.75, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0] {
            let mut sup: f64 = 0.0;
            let mut z = 0.0;
            while z <= 100.0 {
                let v = bessel_i_scaled_limit(nu, z).unwrap() * (1.0 + z).powf(nu + 0.5);
                assert!(v.is_finite() && v > 0.0);
                sup = sup.max(v);
                z += 0.25;
            }
            assert!(sup < 10.0, "nu={nu} sup={sup}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn derivative_identity(nu in -0.9f64..6.0, z in 0.2f64..60.0) {
            let h = 1e-5 * z.max(1.0);
            let fd = (bessel_j_scaled(nu, z + h).unwrap() - bessel_j_scaled(nu, z - h).unwrap()) / (2.0 * h);
            let (_, s1) = bessel_j_scaled_pair(nu, z).unwrap();
            let exact = -z * s1;
            let scale = bessel_j_scaled(nu, z).unwrap().abs().max(exact.abs());
            prop_assert!((fd - exact).abs() <= 1e-6 * scale.max(1e-300), "fd={fd} exact={exact}");
        }

        #[test]
        fn pair_matches_scaled(nu in -0.9f64..6.0, z in 0.01f64..200.0) {
            let (j, j1) = bessel_j_pair(nu, z).unwrap();
            let (s, s1) = bessel_j_scaled_pair(nu, z).unwrap();
            let zn = z.powf(nu);
            prop_assert!((j - s * zn).abs() <= 1e-12 * (j.abs() + 1e-3 * zn.min(1.0)));
            prop_assert!((j1 - s1 * zn * z).abs() <= 1e-12 * (j1.abs() + 1e-3 * (zn * z).min(1.0)));
        }
    }
}
