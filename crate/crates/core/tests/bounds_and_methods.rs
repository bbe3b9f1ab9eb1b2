use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use surfverify_core::bounds::{cp_type1, cp_type2, gronwall, ode_oracle};
use surfverify_core::residual::IntervalData;
use surfverify_core::verify::{comparison_ode, method1, method2, method3};
use surfverify_core::{BoundSeries, CoefficientSeries, Constants, OdeCoefficients};

const K: f64 = 205885.75;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn gronwall_closed_forms() {
    let c = OdeCoefficients::constant(5.0, 2.0, 40, 0.0, 0.0, 0.3).unwrap();
    for t in [0.0, 0.37, 1.0, 2.0] {
        assert!(rel(gronwall(1.5, &c, t).unwrap(), 1.5 + 0.3 * t) <= 1e-12);
    }
    let (alpha, beta) = (-0.8, 0.25);
    let c = OdeCoefficients::constant(5.0, 2.0, 40, alpha, 0.0, beta).unwrap();
    for t in [0.05, 0.5, 1.234, 2.0] {
        let e = (alpha * t).exp();
        let expect = 2.0 * e + beta * (e - 1.0) / alpha;
        assert!(rel(gronwall(2.0, &c, t).unwrap(), expect) <= 1e-12);
    }
    let c = OdeCoefficients::constant(5.0, 1.0, 7, 3.0, 0.0, 0.0).unwrap();
    assert_eq!(gronwall(0.0, &c, 1.0).unwrap(), 0.0);
}

#[test]
fn cp_type1_closed_forms() {
    for t in [0.0, 0.1, 0.5, 0.9] {
        assert!(rel(cp_type1(1.0, t, 0.0, 2.0), 1.0 / (1.0 - t)) <= 1e-12);
    }
    assert!(cp_type1(1.0, 1.0, 0.0, 2.0).is_infinite());
    assert!(cp_type1(1.0, 1.5, 0.0, 2.0).is_infinite());
    assert!(rel(cp_type1(0.7, 0.0, 0.2, 5.0), 0.9) <= 1e-15);
    let expect = 0.5 * (1.0 - 4.0 * 0.5f64.powi(4) * 0.1).powf(-0.25);
    assert!(rel(cp_type1(0.5, 0.1, 0.0, 5.0), expect) <= 1e-12);
    assert!(rel(expect, 0.503175) <= 1e-6);
}

#[test]
fn cp_type1_blowup_time() {
    // ẋ = c xᵖ blows up at t_b = 1 / ((p−1) c x0^{p−1})
    for (x0, c, p) in [(1.0, 1.0, 2.0), (0.5, 3.0, 5.0), (0.02, K, 5.0), (2.0, 0.1, 3.5)] {
        let t_b = 1.0 / ((p - 1.0) * c * f64::powf(x0, p - 1.0));
        assert!(cp_type1(x0, c * t_b * (1.0 + 1e-12), 0.0, p).is_infinite());
        assert!(cp_type1(x0, c * t_b * (1.0 - 1e-12), 0.0, p).is_finite());
    }
}

#[test]
fn cp_type2_closed_forms() {
    // a ≡ 0 reduces to cp_type1
    let c = OdeCoefficients::constant(5.0, 1.0, 10, 0.0, 2.0, 0.3).unwrap();
    assert!(rel(cp_type2(0.1, &c, 1.0).unwrap(), cp_type1(0.1, 2.0, 0.3, 5.0)) <= 1e-12);
    // a ≡ −1/4, b ≡ K, f ≡ 0: A(1) = −1/4, ∫b̃ = K (1 − e^{−1})
    let c = OdeCoefficients::constant(5.0, 1.0, 25, -0.25, K, 0.0).unwrap();
    let brace = 1.0 - 4.0 * 0.01f64.powi(4) * K * (1.0 - (-1.0f64).exp());
    let expect = (-0.25f64).exp() * 0.01 * brace.powf(-0.25);
    assert!(rel(cp_type2(0.01, &c, 1.0).unwrap(), expect) <= 1e-12);
    assert!(rel(expect, 7.7982e-3) <= 1e-4);
    // the oracle sits below the bound
    let oracle = ode_oracle(0.01, &c, 1.0);
    for (t, v) in oracle.times.iter().zip(&oracle.values) {
        assert!(*v <= cp_type2(0.01, &c, *t).unwrap() + 1e-8);
    }
    let c = OdeCoefficients::constant(5.0, 1.0, 9, 1.7, 40.0, 0.0).unwrap();
    assert_eq!(cp_type2(0.0, &c, 1.0).unwrap(), 0.0);
}

#[test]
fn gronwall_is_small_b_limit_of_cp_type2() {
    let lin = OdeCoefficients::constant(5.0, 1.5, 30, 0.4, 0.0, 0.2).unwrap();
    let tiny = OdeCoefficients::constant(5.0, 1.5, 30, 0.4, 1e-12, 0.2).unwrap();
    for t in [0.3, 1.0, 1.5] {
        assert!(rel(cp_type2(0.3, &tiny, t).unwrap(), gronwall(0.3, &lin, t).unwrap()) <= 1e-6);
    }
}

#[test]
fn oracle_closed_forms() {
    let c = OdeCoefficients::constant(2.0, 0.5, 10, 0.0, 1.0, 0.0).unwrap();
    let s = ode_oracle(1.0, &c, 0.5);
    assert!((s.last_value().unwrap() - 2.0).abs() <= 1e-8);
    let c = OdeCoefficients::new(3.0, vec![0.0, 0.2, 0.7, 1.0], vec![0.0; 3], vec![0.0; 3], vec![0.1, 0.4, 0.05]).unwrap();
    let s = ode_oracle(0.5, &c, 1.0);
    assert_eq!(s.times, vec![0.0, 0.2, 0.7, 1.0]);
    for (v, e) in s.values.iter().zip([0.5, 0.6, 1.0, 1.05]) {
        assert!((v - e).abs() <= 1e-12);
    }
}

fn random_series(rng: &mut StdRng) -> CoefficientSeries {
    let n = rng.gen_range(5..60);
    let mut t = 0.0;
    let intervals = (0..n)
        .map(|_| {
            let w = rng.gen_range(1e-3..0.05);
            let l: f64 = rng.gen_range(0.0..0.5);
            let iv = IntervalData {
                t_start: t,
                t_end: t + w,
                res_hm1_sq_integral: rng.gen_range(0.0..1e-3) * w,
                phixx_linf_sq_integral: l * l * w,
                phixx_linf_endpoints: (l, l),
            };
            t += w;
            iv
        })
        .collect();
    CoefficientSeries::new(intervals).unwrap()
}

fn assert_dominates(bound: &BoundSeries, oracle: &BoundSeries) {
    for (i, t) in bound.times.iter().enumerate() {
        if !bound.is_valid(i) || !bound.values[i].is_finite() {
            continue;
        }
        let j = oracle.nodes.iter().position(|&n| n == bound.nodes[i]).unwrap();
        assert_eq!(oracle.times[j], *t);
        assert!(oracle.values[j] <= bound.values[i] + 1e-8, "t = {t}: {} > {}", oracle.values[j], bound.values[i]);
    }
}

#[test]
fn methods_dominate_oracle() {
    let consts = Constants::default();
    let mut rng = StdRng::seed_from_u64(31);
    for _ in 0..50 {
        let series = random_series(&mut rng);
        let d0: f64 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.02) };
        let ode = comparison_ode(&series, &consts).unwrap();
        let oracle = ode_oracle(d0, &ode, series.end_time());
        assert_dominates(&method2(d0, &series, &consts), &oracle);
        let stride = rng.gen_range(1..=series.len());
        assert_dominates(&method3(d0, &series, stride, &consts), &oracle);
    }
}

#[test]
fn method1_dominates_oracle_from_zero() {
    let consts = Constants::default();
    let mut rng = StdRng::seed_from_u64(32);
    for _ in 0..50 {
        let series = random_series(&mut rng);
        let ode = comparison_ode(&series, &consts).unwrap();
        let oracle = ode_oracle(0.0, &ode, series.end_time());
        assert_dominates(&method1(0.0, &series, consts.kstar_paper), &oracle);
    }
}

#[test]
fn single_cell_reduction_is_bitwise() {
    let consts = Constants::default();
    let mut rng = StdRng::seed_from_u64(33);
    for _ in 0..20 {
        let series = random_series(&mut rng);
        let d0 = rng.gen_range(0.0..0.05);
        let m2 = method2(d0, &series, &consts);
        let m3 = method3(d0, &series, series.len(), &consts);
        for (i, t) in m3.times.iter().enumerate() {
            let j = m2.times.iter().position(|s| s == t).unwrap();
            assert_eq!(m3.values[i].to_bits(), m2.values[j].to_bits());
        }
        // the coarser reporting grid can only see blow-up later
        assert!(m3.valid_until >= m2.valid_until);
    }
}

#[test]
fn restarted_bound_converges_to_oracle() {
    let consts = Constants::default();
    let (t_end, res_rate, l) = (1.0, 0.03, 0.3);
    let mut errors = Vec::new();
    for count in [100, 1000, 10000] {
        let series = CoefficientSeries::constant(count, t_end / count as f64, res_rate, l);
        let ode = comparison_ode(&series, &consts).unwrap();
        let oracle = ode_oracle(0.0, &ode, t_end).last_value().unwrap();
        let m3 = method3(0.0, &series, 1, &consts).last_value().unwrap();
        assert!(m3 >= oracle);
        errors.push(rel(m3, oracle));
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] <= 0.05);
}

#[test]
fn enlarging_initial_value_never_lowers_bounds() {
    let consts = Constants::default();
    let mut rng = StdRng::seed_from_u64(34);
    for _ in 0..20 {
        let series = random_series(&mut rng);
        let d0 = rng.gen_range(0.0..0.02);
        let d1 = d0 + rng.gen_range(0.0..0.02);
        let pairs = [
            (method1(d0, &series, 1.0), method1(d1, &series, 1.0)),
            (method2(d0, &series, &consts), method2(d1, &series, &consts)),
            (method3(d0, &series, 3, &consts), method3(d1, &series, 3, &consts)),
        ];
        for (lo, hi) in pairs {
            for (a, b) in lo.values.iter().zip(&hi.values) {
                assert!(b >= a);
            }
        }
    }
}
