/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the distribution function `cdf`.
///
/// Ties are grouped so that at each distinct value both the empirical level
/// before and after the jump are compared; midpoints between consecutive
/// distinct values are also checked. NaN samples are ignored.
pub fn ks_statistic<F>(samples: &[f64], mut cdf: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut s: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
    if s.is_empty() {
        return 0.0;
    }
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let v = s[i];
        let mut j = i;
        while j < s.len() && s[j] == v {
            j += 1;
        }
        let f = cdf(v).clamp(0.0, 1.0);
        // left limit at +inf
        let below = if v == f64::INFINITY { cdf(f64::MAX).clamp(0.0, 1.0) } else { f };
        d = d.max((below - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        if j < s.len() && v.is_finite() && s[j].is_finite() {
            let mid = cdf(0.5 * (v + s[j])).clamp(0.0, 1.0);
            d = d.max((mid - j as f64 / n).abs());
        }
        i = j;
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut b: Vec<f64> = b.iter().copied().filter(|v| !v.is_nan()).collect();
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 99.9% critical value of the one-sample statistic.
pub fn ks_critical_999(n: usize) -> f64 {
    1.949_6 / (n as f64).sqrt()
}
