use super::*;
use crate::quad::TanhSinh;
use proptest::prelude::*;

fn pp(delta: f64) -> ProcessParams {
    ProcessParams::with_delta(delta).unwrap()
}

fn pol() -> SeriesPolicy {
    SeriesPolicy::default()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn gauss_kernel_values() {
    assert!(rel(gauss_kernel(1.0, 0.0).unwrap().value, 0.398_942_280_401_432_7) < 1e-15);
    assert!(rel(gauss_kernel(0.3, 1.0).unwrap().value, 0.137_570_495_638_207_34) < 1e-14);
    assert_eq!(gauss_kernel(0.7, 1.3).unwrap().value, gauss_kernel(0.7, -1.3).unwrap().value);
    assert!(gauss_kernel(0.0, 1.0).is_err());
}

#[test]
fn bes_transition_closed_forms() {
    let v = bes_transition(&pp(3.0), 1.0, 0.0, 1.0).unwrap().value;
    assert!(rel(v, 0.483_941_449_038_286_7) < 1e-14);
    for &(t, y) in &[(0.5, 0.2), (1.0, 1.3), (2.0, 0.05)] {
        let half_normal = 2.0 * gauss_kernel(t, y).unwrap().value;
        assert!(rel(bes_transition(&pp(1.0), t, 0.0, y).unwrap().value, half_normal) < 1e-13);
    }
    assert!(bes_transition(&pp(2.0), 1.0, 0.5, 0.0).is_err());
}

#[test]
fn bes_transition_normalizes() {
    let p = pp(3.0);
    let q = TanhSinh::with_tol(1e-12)
        .integrate_split(|y| Ok(bes_transition(&p, 0.5, 0.7, y)?.value), 0.0, 12.0, &[0.7])
        .unwrap();
    assert!((q.value - 1.0).abs() < 1e-9);
}

#[test]
fn bridge_transition_normalizes_and_concentrates() {
    let p = pp(2.0);
    let q = TanhSinh::with_tol(1e-12)
        .integrate_split(|y| Ok(bridge_transition(&p, 0.2, 0.5, 0.6, y, 1.0, 1.0)?.value), 0.0, 10.0, &[0.5, 1.0])
        .unwrap();
    assert!((q.value - 1.0).abs() < 1e-9);
    let t = 1.0 - 1e-3;
    let window = |w: f64| {
        TanhSinh::with_tol(1e-12)
            .integrate_split(|y| Ok(bridge_transition(&p, 0.2, 0.5, t, y, 1.0, 1.0)?.value), 1.0 - w, 1.0 + w, &[1.0])
            .unwrap()
            .value
    };
    // mpmath quadrature; the bridge spread is about 0.032 here
    assert!((window(0.05) - 0.886_382_024_261_385).abs() < 1e-9);
    assert!(window(0.1) >= 0.99);
    // endpoint at the origin
    let q = TanhSinh::with_tol(1e-12)
        .integrate(|y| Ok(bridge_transition(&pp(3.0), 0.0, 0.4, 0.5, y, 1.0, 0.0)?.value), 0.0, 8.0)
        .unwrap();
    assert!((q.value - 1.0).abs() < 1e-9);
}

#[test]
fn mpmath_reference_values() {
    // independent high-precision Fourier–Bessel sums (mpmath, 40 digits)
    let q1_cases = [
        (2.0, 1.0, 0.4, 0.3, 0.6, 0.661_798_203_732_554_98, Some(0.736_564_822_024_376_8)),
        (6.0, 1.5, 0.2, 0.7, 1.1, 1.013_720_791_295_389_2, Some(0.949_920_266_650_837_67)),
        (10.0, 1.0, 0.5, 0.0, 0.5, 1.047_995_740_909_203_7e-6, Some(0.008_267_693_063_626_252)),
        (0.5, 1.0, 0.1, 0.2, 0.3, 1.079_560_014_101_299_3, Some(0.999_987_308_185_934_11)),
        (1.0, 1.0, 0.3, 0.0, 0.0, 1.453_023_469_964_088_2, Some(0.997_454_732_402_566_47)),
        (3.0, 1.0, 0.3, 0.5, 0.5, 0.455_078_068_921_155_26, Some(0.770_280_677_432_315_13)),
    ];
    for (delta, c, tau, x, y, q, md) in q1_cases {
        let p = pp(delta);
        assert!(rel(q1(&p, c, 0.0, x, tau, y, &pol()).unwrap().value, q) < 1e-12, "q1 delta={delta}");
        if let Some(md) = md {
            assert!(rel(max_dist_bridge(&p, c, tau, x, y, &pol()).unwrap().value, md) < 1e-12, "md delta={delta}");
        }
    }
    let q2_cases = [
        (2.0, 1.0, 0.5, 0.3, 1.900_718_331_073_443_3),
        (6.0, 1.5, 0.3, 0.0, 5.557_944_131_402_311_7),
        (0.5, 1.0, 0.2, 0.5, 1.801_945_318_890_634_5),
        (10.0, 1.0, 1.0, 0.9, 5.417_891_651_778_872_7e-12),
        (3.0, 1.0, 1.0, 0.0, 0.141_961_876_009_297_36),
    ];
    for (delta, b, tau, y, v) in q2_cases {
        assert!(rel(q2(&pp(delta), b, tau, y, &pol()).unwrap().value, v) < 1e-12, "q2 delta={delta}");
    }
}

#[test]
fn max_dist_examples() {
    let v = max_dist_bridge(&pp(3.0), 1e6, 0.25, 0.5, 0.5, &pol()).unwrap().value;
    assert!((v - 1.0).abs() <= 1e-12);
    let p = pp(3.0);
    let theta = theta::theta_max_dist_half(1.0, 0.3, 0.5, 0.5).unwrap();
    assert!(rel(max_dist_bridge(&p, 1.0, 0.3, 0.5, 0.5, &pol()).unwrap().value, theta) < 1e-12);
    let mut prev = 0.0;
    for k in 0..20 {
        let c = 0.65 + 0.1 * k as f64;
        let v = max_dist_bridge(&p, c, 0.4, 0.3, 0.6, &pol()).unwrap().value;
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn max_dist_boundary_limit() {
    for &delta in &[1.0, 2.0, 3.0, 6.0] {
        let p = pp(delta);
        let edge = 1.0 - 1e-4;
        assert!(max_dist_bridge(&p, 1.0, 0.3, 0.4, edge, &pol()).unwrap().value <= 1e-3);
        assert!(max_dist_bridge(&p, 1.0, 0.3, edge, 0.0, &pol()).unwrap().value <= 1e-3);
    }
}

#[test]
fn small_time_policy() {
    let p = pp(2.0);
    assert!(matches!(q1(&p, 1.0, 0.0, 0.5, 1e-6, 0.5, &pol()), Err(Error::SeriesNotConverged { .. })));
    // δ = 3 falls back to the reflection series
    let v = q1(&pp(3.0), 1.0, 0.0, 0.5, 1e-6, 0.5, &pol()).unwrap().value;
    let free = bes_transition(&pp(3.0), 1e-6, 0.5, 0.5).unwrap().value;
    assert!(rel(v, free) < 1e-12);
}

#[test]
fn eta_derivative_examples() {
    let p = pp(2.0);
    let (eta, tau, x, y) = (1.0, 0.4, 0.3, 0.6);
    let h = 1e-4 * eta;
    let d = max_dist_eta_derivative(&p, eta, tau, x, y, &pol()).unwrap();
    let fd = (max_dist_bridge(&p, eta + h, tau, x, y, &pol()).unwrap().value
        - max_dist_bridge(&p, eta - h, tau, x, y, &pol()).unwrap().value)
        / (2.0 * h);
    assert!(rel(d, fd) < 1e-5);
    let d0 = max_dist_eta_derivative(&p, eta, tau, 0.0, y, &pol()).unwrap();
    let d1 = max_dist_eta_derivative(&p, eta, tau, 1e-6, y, &pol()).unwrap();
    assert!(rel(d1, d0) < 1e-6);
    let lam = 2.0;
    let ds = max_dist_eta_derivative(&p, lam * eta, lam * lam * tau, lam * x, lam * y, &pol()).unwrap();
    assert!(rel(ds, d / lam) < 1e-10);
}

#[test]
fn eta_derivative_origin_branch_matches_fd() {
    for &delta in &[0.5, 2.0, 3.0, 6.0] {
        let p = pp(delta);
        let (eta, tau, y) = (1.2, 0.5, 0.4);
        let h = 1e-4 * eta;
        let fd = (max_dist_bridge(&p, eta + h, tau, 0.0, y, &pol()).unwrap().value
            - max_dist_bridge(&p, eta - h, tau, 0.0, y, &pol()).unwrap().value)
            / (2.0 * h);
        let d = max_dist_eta_derivative(&p, eta, tau, 0.0, y, &pol()).unwrap();
        assert!(rel(d, fd) < 1e-5, "delta={delta} d={d} fd={fd}");
    }
}

#[test]
fn q1_examples() {
    let p = pp(3.0);
    let (c, s, x, t, y) = (1.0, 0.0, 0.4, 0.5, 0.6);
    let q = q1(&p, c, s, x, t, y, &pol()).unwrap().value;
    let prod =
        bes_transition(&p, t - s, x, y).unwrap().value * max_dist_bridge(&p, c, t - s, x, y, &pol()).unwrap().value;
    assert!(rel(q, prod) < 1e-9);
    let th = theta::theta_q1_half(1.0, 0.3, 0.5, 0.5).unwrap();
    assert!(rel(q1(&p, 1.0, 0.0, 0.5, 0.3, 0.5, &pol()).unwrap().value, th) < 1e-12);
    let p = pp(6.0);
    let nu = p.nu();
    let (x, y) = (0.3, 0.8);
    let a = q1(&p, 1.0, 0.1, x, 0.4, y, &pol()).unwrap().value / (y.powf(nu + 1.0) * x.powf(-nu));
    let b = q1(&p, 1.0, 0.1, y, 0.4, x, &pol()).unwrap().value / (x.powf(nu + 1.0) * y.powf(-nu));
    assert!(rel(a, b) < 1e-10);
}

#[test]
fn q2_examples() {
    let mut f = 0.0;
    for n in 1..30 {
        let nf = n as f64;
        f += if n % 2 == 1 { 1.0 } else { -1.0 } * nf * nf * (-nf * nf * PI * PI / 2.0).exp();
    }
    f *= 2.0 * PI * PI;
    assert!(rel(q2(&pp(3.0), 1.0, 1.0, 0.0, &pol()).unwrap().value, f) < 1e-13);
    for &delta in &[1.0, 2.0, 3.0, 6.0, 10.0] {
        for &tau in &[0.1, 0.5, 1.0] {
            for &y in &[0.0, 0.25, 0.5, 0.75] {
                assert!(q2(&pp(delta), 1.0, tau, y, &pol()).unwrap().value > 0.0);
            }
        }
    }
    let a = q2(&pp(2.0), 1.0, 0.5, 1e-8, &pol()).unwrap().value;
    let b = q2(&pp(2.0), 1.0, 0.5, 0.0, &pol()).unwrap().value;
    assert!(rel(a, b) < 1e-6);
}

#[test]
fn hitting_examples() {
    let p = ProcessParams::new(3.0, 0.0, 1.0).unwrap();
    let h = hitting_density(&p, 1.0, &pol()).unwrap().value;
    assert!(rel(h, 0.070_980_938_004_648_685) < 1e-13);
    for &(delta, a, b) in &[(2.0, 0.3, 1.0), (3.0, 0.0, 1.0), (0.5, 0.2, 1.5), (6.0, 0.0, 2.0), (10.0, 0.7, 1.0)] {
        let p = ProcessParams::new(delta, a, b).unwrap();
        for &t in &[0.1, 0.3, 1.0, 4.0] {
            let h = hitting_density(&p, t, &pol()).unwrap().value;
            let k = kent_hitting_density(&p, t, &pol()).unwrap().value;
            assert!(rel(h, k) < 1e-12, "delta={delta} a={a} t={t}");
        }
    }
}

#[test]
fn hitting_small_time_cancellation() {
    // alternating terms of order one against a value of order 1e-6
    let p = ProcessParams::new(0.5, 0.2, 1.5).unwrap();
    let h = hitting_density(&p, 0.05, &pol()).unwrap().value;
    assert!(rel(h, 1.245_218_210_078_538_4e-6) < 1e-7);
    assert!(rel(kent_hitting_density(&p, 0.05, &pol()).unwrap().value, h) < 1e-9);
}

#[test]
fn hitting_cdf_matches_density() {
    let p = ProcessParams::new(2.0, 0.3, 1.0).unwrap();
    let (t0, t1) = (0.2, 0.9);
    let q = TanhSinh::with_tol(1e-12).integrate(|t| Ok(hitting_density(&p, t, &pol())?.value), t0, t1).unwrap();
    let diff = kent_hitting_cdf(&p, t1, &pol()).unwrap().value - kent_hitting_cdf(&p, t0, &pol()).unwrap().value;
    assert!((q.value - diff).abs() < 1e-11);
}

#[test]
fn theta_grid_everywhere() {
    let p = pp(3.0);
    for &tau in &[0.05, 0.1, 0.3, 1.0] {
        for &x in &[0.0, 0.2, 0.4, 0.6, 0.8] {
            for &y in &[0.2, 0.4, 0.6, 0.8] {
                let a = q1(&p, 1.0, 0.0, x, tau, y, &pol()).unwrap().value;
                let b = theta::theta_q1_half(1.0, tau, x, y).unwrap();
                assert!(rel(a, b) < 1e-8, "tau={tau} x={x} y={y}");
            }
            if x > 0.0 {
                let md = max_dist_bridge(&p, 1.0, tau, x, 0.5, &pol()).unwrap().value;
                let th = theta::theta_max_dist_half(1.0, tau, x, 0.5).unwrap();
                assert!(rel(md, th) < 1e-8);
            }
            let hq = q2(&p, 1.0, tau, x, &pol()).unwrap().value;
            let ht = 2.0 * theta::theta_hitting_density_half(1.0, tau, x).unwrap();
            assert!(rel(hq, ht) < 1e-8, "q2 tau={tau} y={x}");
        }
    }
}

#[test]
fn scaling_covariance() {
    let lam = 2.5;
    for &delta in &[1.0, 3.0, 6.0] {
        let p = pp(delta);
        let (c, tau, x, y) = (1.0, 0.3, 0.35, 0.6);
        let m1 = max_dist_bridge(&p, c, tau, x, y, &pol()).unwrap().value;
        let m2 = max_dist_bridge(&p, lam * c, lam * lam * tau, lam * x, lam * y, &pol()).unwrap().value;
        assert!(rel(m2, m1) < 1e-10);
        let q_1 = q1(&p, c, 0.0, x, tau, y, &pol()).unwrap().value;
        let q_2 = q1(&p, lam * c, 0.0, lam * x, lam * lam * tau, lam * y, &pol()).unwrap().value;
        assert!(rel(q_2, q_1 / lam) < 1e-10);
        let h1 = ProcessParams::new(delta, x, c).unwrap();
        let h2 = ProcessParams::new(delta, lam * x, lam * c).unwrap();
        let d1 = hitting_density(&h1, tau, &pol()).unwrap().value;
        let d2 = hitting_density(&h2, lam * lam * tau, &pol()).unwrap().value;
        assert!(rel(d2, d1 / (lam * lam)) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn product_identity(di in 0usize..5, c in 0.5f64..2.0, tau in 0.02f64..1.0, fx in 0.0f64..0.95, fy in 0.01f64..0.95) {
        let delta = [1.0, 2.0, 3.0, 6.0, 10.0][di];
        let p = pp(delta);
        let (x, y) = (fx * c, fy * c);
        let md = max_dist_bridge(&p, c, tau, x, y, &pol()).unwrap().value;
        prop_assume!(md >= 1e-3);
        // the direct series carries absolute error near ε times its peak scale
        prop_assume!((x - y).powi(2) / (2.0 * tau) <= 12.0);
        let q = q1(&p, c, 0.0, x, tau, y, &pol()).unwrap().value;
        let prod = bes_transition(&p, tau, x, y).unwrap().value * md;
        prop_assert!(rel(q, prod) < 1e-9, "q={} prod={}", q, prod);
    }

    #[test]
    fn product_identity_absolute(di in 0usize..5, tau in 0.02f64..1.0, fx in 0.0f64..0.95, fy in 0.01f64..0.95) {
        let delta = [1.0, 2.0, 3.0, 6.0, 10.0][di];
        let p = pp(delta);
        let q = q1(&p, 1.0, 0.0, fx, tau, fy, &pol()).unwrap().value;
        let prod = bes_transition(&p, tau, fx, fy).unwrap().value * max_dist_bridge(&p, 1.0, tau, fx, fy, &pol()).unwrap().value;
        let peak = bes_transition(&p, tau, fy, fy).unwrap().value;
        prop_assert!((q - prod).abs() <= 1e-12 * peak.max(1.0));
    }

    #[test]
    fn probabilities_in_range(delta in 0.2f64..12.0, tau in 0.01f64..2.0, fx in 0.0f64..0.999, fy in 0.0f64..0.999) {
        let v = max_dist_bridge(&pp(delta), 1.0, tau, fx, fy, &pol()).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.value));
        // clamping only absorbs rounding of the series relative to its conditioning
        let e = if fx > 0.0 && fy > 0.0 { (fx - fy).powi(2) } else { fx.max(fy).powi(2) } / (2.0 * tau);
        prop_assert!(v.clamped <= 10.0 * pol().rel_tol * e.exp(), "clamped {}", v.clamped);
    }
}

#[test]
fn expansion_below_zero_matches_direct() {
    let zt = crate::specfun::zero_table(0.7, 5).unwrap();
    for (&j, &w) in zt.zeros().iter().zip(zt.weights()) {
        for &h in &[5e-4, 9.9e-4] {
            let y = 1.0 - h / j;
            let direct = crate::specfun::bessel_j(0.7, y * j).unwrap();
            assert!(rel(j_below_zero(0.7, y, 1.0, j, w).unwrap(), direct) < 1e-9);
        }
    }
}

#[test]
fn q1_is_zero_on_the_barrier() {
    let p = pp(2.5);
    assert_eq!(q1(&p, 1.0, 0.0, 0.3, 0.5, 1.0, &pol()).unwrap().value, 0.0);
    assert_eq!(q1(&p, 1.0, 0.0, 1.0, 0.5, 0.2, &pol()).unwrap().value, 0.0);
    assert!(q1(&p, 1.0, 0.0, 0.3, 0.5, 1.1, &pol()).is_err());
    assert!(q1(&p, -1.0, 0.0, -1.0, 0.5, -1.0, &pol()).is_err());
}

#[test]
fn q2_below_rounding_floor() {
    // true values near e^-40, far under the series' absolute rounding
    for (delta, y) in [(2.0, 0.036), (10.0, 0.05), (3.5, 0.0)] {
        let v = q2(&pp(delta), 1.5, 0.025, y, &pol()).unwrap();
        assert!(v.value >= 0.0 && v.value < 1e-9, "{delta} {y}: {}", v.value);
        if v.value == 0.0 {
            assert_eq!(v.log_value, f64::NEG_INFINITY);
        }
    }
    let loose = SeriesPolicy { rel_tol: 1e-3, ..pol() };
    assert!(q2(&pp(2.0), 1.5, 0.5, 0.3, &loose).unwrap().value > 0.0);
}

#[test]
fn q2_vanishes_linearly_at_barrier() {
    let p = pp(6.0);
    let near = q2(&p, 1.5, 0.7, 1.5 - 1.5e-12, &pol()).unwrap().value;
    let less = q2(&p, 1.5, 0.7, 1.5 - 1.5e-10, &pol()).unwrap().value;
    assert!(near > 0.0);
    // the gap itself is only known to about 1e-4 at this distance
    assert!(rel(less / near, 100.0) < 1e-3);
    let edge = q1(&p, 1.5, 0.0, 0.2, 0.7, 1.5 - 4e-16, &pol()).unwrap();
    assert!(edge.value >= 0.0 && edge.value < 1e-12);
}
