//! Monte Carlo checks: invariance, moments, determinism, integrator behaviour.

use langevin_cert::certificate::{default_growth_constants, ModelParams};
use langevin_cert::dynamics::{
    ensemble_autocorrelation, raw_params, sample_invariant, sample_invariant_with_stats, simulate_ensemble,
    simulate_gradient_system, simulate_trajectory, step, stream_rng, SamplerConfig, SimConfig,
};
use langevin_cert::gamma::{apply_l, FnField, ScalarField, StencilConfig};
use langevin_cert::harness::{gradient_moment_bound, weighted_h1_norm};
use langevin_cert::potential::{PhasePoint, PotentialModel, SingularParams};
use langevin_cert::stats::mean_and_stderr;

fn singular_pair() -> PotentialModel {
    PotentialModel::singular_pair(SingularParams {
        n: 2,
        k: 1,
        a_coef: 1.0,
        b_coef: 1.0,
        a: 2,
        b: 6.0,
        ordered: true,
    })
    .unwrap()
}

fn sampler(seed: u64) -> SamplerConfig {
    SamplerConfig { seed, ..Default::default() }
}

fn within_3se(xs: &[f64], target: f64) -> (bool, f64, f64) {
    let (m, se) = mean_and_stderr(xs, 20).unwrap();
    ((m - target).abs() <= 3.0 * se, m, se)
}

#[test]
fn generator_has_zero_mean_under_mu() {
    for (model, mp) in [
        (PotentialModel::double_well(1).unwrap(), ModelParams::new(1.0, 1.0, 1, 1).unwrap()),
        (singular_pair(), ModelParams::new(1.0, 1.0, 2, 1).unwrap()),
    ] {
        let pts = sample_invariant(&model, &mp, &sampler(5), 40_000).unwrap();
        let cap = 10.0;
        let h_cap = |p: &PhasePoint| cap * -(-model.hamiltonian(p) / cap).exp_m1();
        let fields: Vec<Box<dyn ScalarField>> = vec![
            Box::new(FnField { name: "x_1".into(), f: |p: &PhasePoint| p.x[0] }),
            Box::new(FnField { name: "v_1".into(), f: |p: &PhasePoint| p.v[0] }),
            Box::new(FnField { name: "x_1 v_1".into(), f: |p: &PhasePoint| p.x[0] * p.v[0] }),
            Box::new(FnField { name: "H cap".into(), f: h_cap }),
        ];
        let st = StencilConfig::default();
        for f in &fields {
            let lf: Vec<f64> = pts.iter().map(|p| apply_l(&model, &mp, f.as_ref(), p, &st).unwrap()).collect();
            let (ok, m, se) = within_3se(&lf, 0.0);
            assert!(ok, "{}: mean L f = {m} +- {se}", f.name());
        }
    }
}

#[test]
fn weighted_norm_of_velocity() {
    let model = PotentialModel::single_well(1).unwrap();
    let mp = ModelParams::new(2.0, 1.0, 1, 1).unwrap();
    let pts = sample_invariant(&model, &mp, &sampler(6), 20_000).unwrap();
    let f = FnField { name: "v".into(), f: |p: &PhasePoint| p.v[0] };
    let est = weighted_h1_norm(&f, &|_| Ok(1.0), 1.0, &mp, &pts, &StencilConfig::default(), 20).unwrap();
    let c = 1.0 + 2f64.sqrt();
    let expect = 1.0 + 1.0 + c * c;
    assert!((expect - 7.828427).abs() < 1e-6);
    assert!((est.value - expect).abs() <= 3.0 * est.stderr, "{} +- {}", est.value, est.stderr);

    let doubled = weighted_h1_norm(&f, &|_| Ok(2.0), 1.0, &mp, &pts, &StencilConfig::default(), 20).unwrap();
    assert_eq!(doubled.weight_term, 2.0 * est.weight_term);
    let one = FnField { name: "1".into(), f: |_: &PhasePoint| 1.0 };
    let unit = weighted_h1_norm(&one, &|_| Ok(1.0), 1.0, &mp, &pts, &StencilConfig::default(), 20).unwrap();
    assert_eq!(unit.value, 1.0);
}

#[test]
fn sampler_gaussian_moments() {
    let model = PotentialModel::single_well(2).unwrap();
    let mp = ModelParams::new(1.0, 1.5, 1, 2).unwrap();
    let out = sample_invariant_with_stats(&model, &mp, &sampler(8), 40_000).unwrap();
    assert!(out.acceptance_rate > 0.05 && out.acceptance_rate < 0.95);
    for i in 0..2 {
        let x2: Vec<f64> = out.points.iter().map(|p| p.x[i] * p.x[i]).collect();
        let (ok, m, se) = within_3se(&x2, mp.temperature);
        assert!(ok, "E x_{i}^2 = {m} +- {se}");
    }
    let v2: Vec<f64> = out.points.iter().map(|p| p.v.iter().map(|c| c * c).sum()).collect();
    let (ok, m, se) = within_3se(&v2, 2.0 * mp.temperature);
    assert!(ok, "E |v|^2 = {m} +- {se}");
}

#[test]
fn velocity_autocovariance_of_critical_oscillator() {
    let model = PotentialModel::single_well(1).unwrap();
    let mp = ModelParams::new(2.0, 1.0, 1, 1).unwrap();
    let starts = sample_invariant(&model, &mp, &sampler(9), 4000).unwrap();
    let cfg = SimConfig { dt: 2e-3, t_max: 3.0, ensemble_size: 4000, seed: 3, record_interval: 0.1, ..Default::default() };
    let trajs = simulate_ensemble(&model, &mp, &cfg, &starts).unwrap();
    let acf = ensemble_autocorrelation(&trajs, &|p: &PhasePoint| p.v[0], 20).unwrap();
    for a in &acf {
        let exact = (1.0 - a.t) * (-a.t).exp();
        assert!((a.c - exact).abs() <= 3.0 * a.stderr, "t = {}: {} vs {exact}", a.t, a.c);
    }
}

#[test]
fn stationary_moments_stay_constant() {
    let model = PotentialModel::double_well(1).unwrap();
    let mp = ModelParams::new(1.0, 1.0, 1, 1).unwrap();
    let starts = sample_invariant(&model, &mp, &sampler(10), 4000).unwrap();
    let cfg = SimConfig { dt: 2e-3, t_max: 2.0, ensemble_size: 4000, seed: 4, record_interval: 0.5, ..Default::default() };
    let trajs = simulate_ensemble(&model, &mp, &cfg, &starts).unwrap();
    let at = |j: usize, f: &dyn Fn(&PhasePoint) -> f64| -> Vec<f64> { trajs.iter().map(|t| f(&t.points[j])).collect() };
    let kinetic = |p: &PhasePoint| p.v[0] * p.v[0];
    let pot = |p: &PhasePoint| model.value(&p.x).unwrap();
    for j in 1..trajs[0].points.len() {
        for f in [&kinetic as &dyn Fn(&PhasePoint) -> f64, &pot] {
            let (m0, s0) = mean_and_stderr(&at(0, f), 20).unwrap();
            let (m, s) = mean_and_stderr(&at(j, f), 20).unwrap();
            assert!((m - m0).abs() <= 3.0 * (s * s + s0 * s0).sqrt(), "moment drifted: {m0} -> {m}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = singular_pair();
    let mp = ModelParams::new(1.0, 1.0, 2, 1).unwrap();
    let cfg = SimConfig { dt: 1e-3, t_max: 0.5, ensemble_size: 64, seed: 12, ..Default::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let starts = sample_invariant(&model, &mp, &sampler(11), 64).unwrap();
            simulate_ensemble(&model, &mp, &cfg, &starts).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn ordering_preserved_over_many_steps() {
    let model = singular_pair();
    let mp = ModelParams::new(1.0, 1.0, 2, 1).unwrap();
    let starts = sample_invariant(&model, &mp, &sampler(13), 100).unwrap();
    let cfg = SimConfig { dt: 1e-3, t_max: 10.0, ensemble_size: 100, seed: 5, record_interval: 1e-3, ..Default::default() };
    let trajs = simulate_ensemble(&model, &mp, &cfg, &starts).unwrap();
    let mut steps = 0;
    for t in &trajs {
        assert!(t.valid);
        for p in &t.points {
            assert!(p.x[0] < p.x[1]);
        }
        steps += t.points.len() - 1;
    }
    assert_eq!(steps, 1_000_000);
}

#[test]
fn harmonic_oscillator_second_order() {
    let model = PotentialModel::single_well(1).unwrap();
    let mp = raw_params(0.0, 0.0, 1);
    let err = |dt: f64| {
        let cfg = SimConfig { dt, t_max: 2.0 * std::f64::consts::PI, record_interval: dt, ..Default::default() };
        let tr = simulate_trajectory(&model, &mp, &cfg, &PhasePoint::new(vec![1.0], vec![0.0]).unwrap(), 0).unwrap();
        tr.times.iter().zip(&tr.points).map(|(t, p)| (p.x[0] - t.cos()).abs()).fold(0.0, f64::max)
    };
    let ratio = err(0.01) / err(0.005);
    assert!((ratio - 4.0).abs() <= 0.5, "{ratio}");
}

#[test]
fn zero_temperature_dissipates_energy() {
    let model = PotentialModel::single_well(2).unwrap();
    let mp = raw_params(0.5, 0.0, 2);
    let cfg = SimConfig { dt: 1e-3, t_max: 10.0, record_interval: 0.05, ..Default::default() };
    let tr = simulate_trajectory(&model, &mp, &cfg, &PhasePoint::new(vec![1.0, -2.0], vec![0.5, 0.3]).unwrap(), 0).unwrap();
    let hs: Vec<f64> = tr.points.iter().map(|p| model.hamiltonian(p)).collect();
    assert!(hs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn friction_only_step_scales_velocity() {
    // a point where the force vanishes
    let model = PotentialModel::double_well(1).unwrap();
    let mp = raw_params(3.0, 0.0, 1);
    let cfg = SimConfig { dt: 1e-3, ..Default::default() };
    let p = PhasePoint::new(vec![0.0], vec![0.0]).unwrap();
    let out = step(&model, &mp, &cfg, &p, &mut stream_rng(0, 0, 0)).unwrap();
    assert_eq!(out.point.v[0], 0.0);
    let flat = PotentialModel::single_well(1).unwrap();
    let q = PhasePoint::new(vec![0.0], vec![1.0]).unwrap();
    let out = step(&flat, &mp, &SimConfig { dt: 1e-6, ..Default::default() }, &q, &mut stream_rng(0, 0, 0)).unwrap();
    // force stays O(dt) over one tiny step
    assert!((out.point.v[0] - (-3e-6f64).exp()).abs() < 1e-11);
}

#[test]
fn gradient_system_moments() {
    let model = PotentialModel::single_well(1).unwrap();
    let cfg = SimConfig { dt: 1e-2, t_max: 2000.0, record_interval: 1.0, seed: 6, ..Default::default() };
    let tr = simulate_gradient_system(&model, 1.0, &cfg, &[0.0], 0).unwrap();
    let x2: Vec<f64> = tr.xs[10..].iter().map(|x| x[0] * x[0]).collect();
    let (m, se) = mean_and_stderr(&x2, 20).unwrap();
    // Euler-Maruyama stationary variance is T / (1 - dt/2)
    let target = 1.0 / (1.0 - 0.5 * cfg.dt);
    assert!((m - target).abs() <= 3.0 * se, "{m} +- {se}");

    let sp = singular_pair();
    let mp = ModelParams::new(1.0, 1.0, 2, 1).unwrap();
    let gc = default_growth_constants(&sp, &mp).unwrap();
    let cfg = SimConfig { dt: 1e-4, t_max: 200.0, record_interval: 0.1, seed: 7, ..Default::default() };
    let tr = simulate_gradient_system(&sp, 1.0, &cfg, &[-0.5, 0.5], 0).unwrap();
    assert!(tr.valid);
    let g2: Vec<f64> = tr.xs[100..].iter().map(|x| sp.gradient(x).unwrap().iter().map(|c| c * c).sum()).collect();
    let (m, se) = mean_and_stderr(&g2, 20).unwrap();
    assert!(m - 3.0 * se <= gradient_moment_bound(gc.kappa2, 1.0, 2));
}

/// The printed gradient-moment bound uses |Laplacian U| <= sqrt(d) |Hess U|,
/// which fails for d >= 2. For U = |x|^2/2 in d = 4, E|grad U|^2 = T d = 4
/// while the bound with kappa'' = 1 is 2 / (1 - 1/32) ~ 2.06.
#[test]
fn gradient_moment_bound_fails_for_isotropic_well_in_d4() {
    let model = PotentialModel::single_well(4).unwrap();
    let mp = ModelParams::new(1.0, 1.0, 1, 4).unwrap();
    let pts = sample_invariant(&model, &mp, &sampler(14), 20_000).unwrap();
    let g2: Vec<f64> = pts.iter().map(|p| p.x.iter().map(|c| c * c).sum()).collect();
    let (m, se) = mean_and_stderr(&g2, 20).unwrap();
    let bound = gradient_moment_bound(1.0, 1.0, 4);
    assert!((m - 4.0).abs() <= 3.0 * se);
    assert!(m - 3.0 * se > bound, "{m} vs {bound}");
}
