use super::*;
use crate::kernels::ProcessParams;

fn model(delta: f64, a: f64, b: f64) -> HouseMovingModel {
    HouseMovingModel::new(ProcessParams::new(delta, a, b).unwrap(), SeriesPolicy::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn normalizer_is_positive_and_cached() {
    let m = model(2.0, 0.0, 1.5);
    assert!(m.normalizer() > 0.0);
    let direct = q2(m.params(), 1.5, 1.0, 0.0, m.policy()).unwrap().value;
    assert_eq!(m.normalizer(), direct);
}

#[test]
fn marginal_mass_and_edges() {
    let m = model(2.0, 0.0, 1.5);
    assert!((m.expect(0.5, |_| 1.0).unwrap() - 1.0).abs() < 1e-6);
    assert!(m.marginal_density(0.5, 1.5 * (1.0 - 1e-4)).unwrap().value <= 1e-3);
    assert!(m.marginal_density(0.0, 0.5).is_err());
    assert!(m.marginal_density(0.5, 1.5).is_err());
}

#[test]
fn mpmath_reference_values() {
    let m = model(2.0, 0.0, 1.5);
    assert!(rel(m.marginal_density(0.5, 0.7).unwrap().value, MARG_D2) < 1e-11);
    let m = model(6.0, 0.0, 1.0);
    assert!(rel(m.transition_density(0.4, 0.4, 0.8, 0.5).unwrap().value, TRANS_D6) < 1e-11);
    let m = model(0.5, 0.2, 1.0);
    assert!(rel(m.transition_density(0.0, 0.2, 0.3, 0.6).unwrap().value, MARG_D05) < 1e-11);
}

// mpmath, 30 digits
const MARG_D2: f64 = 1.184_821_422_742_172_4;
const TRANS_D6: f64 = 1.765_970_459_875_373_2;
const MARG_D05: f64 = 0.340_534_531_164_291_64;

#[test]
fn space_time_reversal() {
    let m = model(3.0, 0.0, 1.5);
    let a = m.marginal_density(0.3, 0.6).unwrap().value;
    let b = m.marginal_density(0.7, 0.9).unwrap().value;
    assert!(rel(a, b) < 1e-8);
    assert!(m.reversal_gap(0.3, 0.6).unwrap().abs() <= 1e-8 * a);
    for &y in &[0.1, 0.4, 0.7, 1.2] {
        let g = m.reversal_gap(0.5, y).unwrap();
        assert!(g.abs() <= 1e-8 * m.marginal_density(0.5, y).unwrap().value);
    }
    let m2 = model(2.0, 0.0, 1.5);
    assert!(matches!(m2.reversal_gap(0.3, 0.6), Err(Error::Order { .. })));
    assert!(m2.reversal_gap_unchecked(0.3, 0.6).unwrap().is_finite());
    assert!(model(3.0, 0.2, 1.5).reversal_gap(0.3, 0.6).is_err());
}

#[test]
fn transition_mass_and_chapman_kolmogorov() {
    let m = model(3.0, 0.0, 1.0);
    assert!((m.transition_mass(0.2, 0.4, 0.7).unwrap() - 1.0).abs() < 1e-6);
    let m = model(2.0, 0.0, 1.0);
    let lhs = crate::quad::TanhSinh::with_tol(1e-10)
        .integrate(
            |y| Ok(m.transition_density(0.2, 0.3, 0.5, y)?.value * m.transition_density(0.5, y, 0.8, 0.4)?.value),
            0.0,
            1.0,
        )
        .unwrap()
        .value;
    let rhs = m.transition_density(0.2, 0.3, 0.8, 0.4).unwrap().value;
    assert!((lhs - rhs).abs() < 1e-6);
}

#[test]
fn transition_concentrates() {
    let m = model(3.0, 0.0, 1.0);
    let (s, x, t) = (0.2, 0.4, 0.2 + 1e-3);
    let window = |w: f64| {
        crate::quad::TanhSinh::with_tol(1e-12)
            .integrate_split(|y| Ok(m.transition_density(s, x, t, y)?.value), x - w, x + w, &[x])
            .unwrap()
            .value
    };
    assert!((window(0.05) - CONC_05).abs() < 1e-8);
    assert!(window(0.1) >= 0.99);
}

// mpmath quadrature of the reflection forms
const CONC_05: f64 = 0.887_938_044_582_72;

#[test]
fn transition_preconditions() {
    let m = model(2.0, 0.3, 1.0);
    assert!(m.transition_density(0.0, 0.4, 0.5, 0.5).is_err());
    assert!(m.transition_density(0.2, 0.4, 1.0, 0.5).is_err());
    assert!(m.transition_density(0.5, 0.4, 0.5, 0.5).is_err());
    assert!(m.transition_density(0.0, 0.3, 0.5, 0.5).is_ok());
}

#[test]
fn two_routes_agree() {
    for &(delta, a, b, s, x, t, y) in &[
        (2.0, 0.0, 1.0, 0.2, 0.3, 0.5, 0.6),
        (3.0, 0.0, 1.5, 0.1, 0.5, 0.6, 0.9),
        (0.5, 0.2, 1.0, 0.0, 0.2, 0.4, 0.5),
        (6.0, 0.0, 1.0, 0.3, 0.6, 0.9, 0.5),
        (10.0, 0.5, 2.0, 0.0, 0.5, 0.5, 1.2),
    ] {
        let m = model(delta, a, b);
        let one = m.transition_density(s, x, t, y).unwrap().value;
        let two = m.transition_density_via_hitting(s, x, t, y).unwrap();
        assert!(rel(two, one) < 1e-10, "delta={delta}");
    }
}

#[test]
fn joint_max_cdf_properties() {
    let m = model(2.0, 0.0, 1.5);
    assert!((m.joint_max_cdf(0.5, 1.5, 1.5).unwrap().value - 1.0).abs() < 1e-6);
    let mut prev = 0.0;
    for k in 1..=10 {
        let v = m.joint_max_cdf(0.5, 1.2, 1.2 * k as f64 / 10.0).unwrap().value;
        assert!(v >= prev - 1e-12);
        prev = v;
    }
    let mut prev = 0.0;
    for k in 1..=10 {
        let x_bar = 0.5 + 1.0 * k as f64 / 10.0;
        let v = m.joint_max_cdf(0.5, x_bar, 0.5).unwrap().value;
        assert!(v >= prev - 1e-12);
        prev = v;
    }
    let marginal = crate::quad::TanhSinh::with_tol(1e-10)
        .integrate(|y| Ok(m.marginal_density(0.5, y)?.value), 0.0, 0.8)
        .unwrap()
        .value;
    assert!((m.joint_max_cdf(0.5, 1.5, 0.8).unwrap().value - marginal).abs() < 1e-6);
}

#[test]
fn rn_density_contract() {
    let m = model(3.0, 0.2, 1.0);
    assert_eq!(m.rn_density(0.5, 0.4, false).unwrap(), 0.0);
    for k in 0..50 {
        let y = (1.0 - 1e-4) * (k as f64 + 0.5) / 50.0;
        let v = m.rn_density(0.5, y, true).unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
    let direct = m.marginal_density(0.5, 0.6).unwrap().value;
    let free = bes_transition(m.params(), 0.5, 0.2, 0.6).unwrap().value
        * max_dist_bridge(m.params(), 1.0, 0.5, 0.2, 0.6, m.policy()).unwrap().value;
    assert!(rel(free * m.rn_density(0.5, 0.6, true).unwrap(), direct) < 1e-9);
}

#[test]
fn mean_curve_values() {
    let m = model(3.0, 0.0, 1.5);
    let c = m.mean_curve(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
    assert_eq!(c[0], (0.0, 0.0));
    assert_eq!(c[4], (1.0, 1.5));
    assert!((c[2].1 - 0.75).abs() < 1e-6);
    assert!((c[1].1 + c[3].1 - 1.5).abs() < 1e-6);
    assert!(c.iter().skip(1).take(3).all(|&(_, v)| v > 0.0 && v < 1.5));
}

#[test]
fn density_curve_invariants() {
    let m = model(6.0, 0.0, 1.5);
    let c = m.density_curve(0.3, 64).unwrap();
    assert_eq!(c.y_grid.len(), 64);
    assert!(c.y_grid.windows(2).all(|w| w[0] < w[1]));
    assert!(c.y_grid[0] > 0.0 && c.y_grid[63] < 1.5);
    assert!(c.values.iter().all(|&v| v >= 0.0));
    c.check_mass(MASS_TOL).unwrap();
    let bad = DensityCurve { mass: 1.1, ..c };
    assert!(matches!(bad.check_mass(MASS_TOL), Err(Error::MassDefect { .. })));
}

#[test]
fn theta_oracles() {
    let p3 = ProcessParams::new(3.0, 0.0, 1.0).unwrap();
    let p2 = ProcessParams::new(2.0, 0.0, 1.0).unwrap();
    assert!(matches!(theta_oracle_q1_half(&p2, 1.0, 0.0, 0.3, 0.3, 0.4), Err(Error::Order { .. })));
    assert!(matches!(theta_oracle_q1_half_origin(&p2, 1.0, 0.3, 0.4), Err(Error::Order { .. })));
    let pol = SeriesPolicy::default();
    for i in 0..5 {
        for j in 0..5 {
            let (x, y) = (0.1 + 0.18 * i as f64, 0.1 + 0.18 * j as f64);
            let th = theta_oracle_q1_half(&p3, 1.0, 0.0, x, 0.3, y).unwrap();
            let fb = q1(&p3, 1.0, 0.0, x, 0.3, y, &pol).unwrap().value;
            assert!(rel(th, fb) < 1e-8);
            let swapped = theta_oracle_q1_half(&p3, 1.0, 0.0, y, 0.3, x).unwrap();
            assert!(rel(th * x / y, swapped * y / x) < 1e-12);
        }
        let y = 0.1 + 0.18 * i as f64;
        let th = theta_oracle_q1_half_origin(&p3, 1.0, 0.3, y).unwrap();
        assert!(rel(th, q1(&p3, 1.0, 0.0, 0.0, 0.3, y, &pol).unwrap().value) < 1e-8);
    }
    let far = theta_oracle_q1_half(&p3, 50.0, 0.0, 0.4, 0.3, 0.7).unwrap();
    assert!(rel(far, bes_transition(&p3, 0.3, 0.4, 0.7).unwrap().value) < 1e-8);
}

#[test]
fn conditioned_bridge_density_normalizes() {
    let m = model(3.0, 0.0, 1.0);
    let eta = 0.1;
    let q = crate::quad::TanhSinh::with_tol(1e-10)
        .integrate(|y| m.conditioned_bridge_density(eta, 0.5, y), 0.0, 1.0 + eta)
        .unwrap();
    assert!((q.value - 1.0).abs() < 1e-8);
    assert!(m.conditioned_bridge_density(0.0, 0.5, 0.3).is_err());
}
