use surfverify_core::evolve::{simulate, Stepper};
use surfverify_core::{InitialDatum, Simulation, SolverConfig, Trig};

#[test]
fn l2_norm_non_increasing_on_sin_run() {
    let cfg = SolverConfig::new(128, 1e-4, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for item in Simulation::new(cfg, &InitialDatum::sin(1, 1.0)).unwrap() {
        let (n, phi) = item.unwrap();
        let l2 = phi.l2_norm();
        assert!(l2 <= prev + 1e-12, "step {n}: {l2} > {prev}");
        prev = l2;
    }
}

#[test]
fn zero_mean_on_every_step() {
    let cfg = SolverConfig::new(16, 1e-3, 0.05).unwrap();
    let u0: InitialDatum = "sin(x) + 0.5 cos(3x)".parse().unwrap();
    for item in Simulation::new(cfg, &u0).unwrap() {
        let (_, phi) = item.unwrap();
        let values = phi.grid_values(64);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(mean.abs() <= 1e-14 * scale.max(1.0));
        assert!(phi.band() <= 16);
    }
}

#[test]
fn linear_only_decay_is_geometric() {
    let h = 1e-3;
    let u0 = InitialDatum::new(vec![(Trig::Sin, 1, 1.0), (Trig::Cos, 3, 0.5), (Trig::Sin, 5, -2.0)]).unwrap();
    let cfg = SolverConfig::new(8, h, 0.2).unwrap();
    let phi0 = u0.to_field(8).unwrap();
    for item in Simulation::new(cfg, &u0).unwrap().linear_only() {
        let (n, phi) = item.unwrap();
        for k in 1..=8 {
            let factor = (1.0 + h * (k as f64).powi(4)).powi(-(n as i32));
            let expect = phi0.coeff(k) * factor;
            let got = phi.coeff(k);
            assert!((got - expect).norm() <= 1e-12 * expect.norm().max(f64::MIN_POSITIVE), "n={n} k={k}");
            if expect.norm() == 0.0 {
                assert_eq!(got.norm(), 0.0);
            }
        }
    }
}

#[test]
fn stepper_matches_simulation() {
    let cfg = SolverConfig::new(32, 1e-4, 1e-3).unwrap();
    let u0 = InitialDatum::sin(2, 1.0);
    let traj = simulate(cfg, &u0).unwrap();
    let stepper = Stepper::new(32, 1e-4);
    let mut phi = u0.to_field(32).unwrap();
    for snap in &traj.snapshots[1..] {
        phi = stepper.step(&phi);
        assert_eq!(&phi, snap);
    }
}

#[test]
fn refinement_is_first_order() {
    let t_end = 0.1;
    let u0 = InitialDatum::sin(1, 1.0);
    let h1_at_end = |h: f64| {
        let traj = simulate(SolverConfig::new(32, h, t_end).unwrap(), &u0).unwrap();
        traj.snapshots.last().unwrap().hp_norm(1)
    };
    let v: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|&h| h1_at_end(h)).collect();
    let ratio = (v[0] - v[1]) / (v[1] - v[2]);
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn smallness_of_sin_run_near_reference_time() {
    // ‖φ‖_{H¹} alone drops below 1/2 a bit before the certified time
    let cfg = SolverConfig::new(64, 1e-4, 1.3).unwrap();
    let traj = simulate(cfg, &InitialDatum::sin(1, 1.0)).unwrap();
    let first = traj.h1_norms().iter().position(|&v| v < 0.5).unwrap();
    let t = cfg.time(first);
    assert!((1.0..1.25).contains(&t), "t = {t}");
}
