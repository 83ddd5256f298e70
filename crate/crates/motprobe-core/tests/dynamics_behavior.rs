//! Cross-module behavior: apparent time constants seen through the fiber
//! versus the true trap dynamics, and fitter Jacobians against finite
//! differences.

use motprobe_core::config::ExperimentConfig;
use motprobe_core::dynamics::{simulate_schedule, Schedule, TnfSignalModel, TrapDynamics};
use motprobe_core::fit::FitModel;
use motprobe_core::rng::SplitMix64;

/// 1/e time of a positive, decreasing signal via bisection.
fn one_over_e_time(signal: impl Fn(f64) -> f64, t_max: f64) -> f64 {
    let target = signal(0.0) / std::f64::consts::E;
    let mut lo = 0.0;
    let mut hi = t_max;
    assert!(signal(hi) < target, "signal does not reach 1/e by t_max");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if signal(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn fiber_apparent_decay_is_slower_for_alpha_below_one() {
    let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
    let n0 = 10.0 * cfg.regime.crossover_atoms;
    let dynamics = TrapDynamics {
        capture_rate_per_s: 0.0,
        lifetime_tau_s: 9.4,
        initial_atoms: n0,
    };

    let atom_tau = one_over_e_time(|t| dynamics.decay_curve(t), 200.0);
    assert!((atom_tau - 9.4).abs() / 9.4 < 1e-9);

    for alpha in [0.1, 0.3, 0.5, 0.723, 0.9] {
        let mut regime = cfg.regime.clone();
        regime.central_density_exponent_alpha = alpha;
        let model = TnfSignalModel::new(&regime, &cfg.cloud_template, &cfg.fiber).unwrap();
        let apparent =
            one_over_e_time(|t| model.visible(dynamics.decay_curve(t)), 400.0);
        assert!(
            apparent > atom_tau,
            "alpha {alpha}: apparent {apparent} not slower than {atom_tau}"
        );
    }

    let mut regime = cfg.regime.clone();
    regime.central_density_exponent_alpha = 1.0;
    let model = TnfSignalModel::new(&regime, &cfg.cloud_template, &cfg.fiber).unwrap();
    let apparent = one_over_e_time(|t| model.visible(dynamics.decay_curve(t)), 200.0);
    assert!((apparent - atom_tau).abs() / atom_tau < 1e-6);
}

#[test]
fn fiber_apparent_lifetime_is_tau_over_alpha() {
    let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
    let dynamics = TrapDynamics {
        capture_rate_per_s: 0.0,
        lifetime_tau_s: 9.4,
        initial_atoms: 10.0 * cfg.regime.crossover_atoms,
    };
    let model = TnfSignalModel::new(&cfg.regime, &cfg.cloud_template, &cfg.fiber).unwrap();
    let apparent = one_over_e_time(|t| model.visible(dynamics.decay_curve(t)), 100.0);
    assert!(
        (apparent - 13.0).abs() / 13.0 < 0.02,
        "apparent fiber lifetime {apparent} s, expected 13 s ± 2%"
    );
}

#[test]
fn tnf_signal_continuous_and_nondecreasing_in_atom_number() {
    let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut regime = cfg.regime.clone();
        regime.central_density_exponent_alpha = alpha;
        let model = TnfSignalModel::new(&regime, &cfg.cloud_template, &cfg.fiber).unwrap();
        let mut previous = -1.0;
        let mut n = 1.0;
        while n < 1.0e8 {
            let v = model.visible(n);
            assert!(v >= previous, "alpha {alpha}: signal decreasing at N = {n}");
            previous = v;
            n *= 1.17;
        }
        // continuity across the crossover
        let nx = regime.crossover_atoms;
        let below = model.visible(nx * (1.0 - 1e-10));
        let above = model.visible(nx * (1.0 + 1e-10));
        assert!((above - below).abs() <= 1e-6 * below.max(1e-300));
    }
}

#[test]
fn noise_free_schedule_reproduces_closed_form_loading() {
    let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
    let schedule: Schedule<f64> = Schedule::loading(3.0, 0.1);
    let (spcm, pd) = simulate_schedule(&schedule, &cfg, 0, false).unwrap();

    let dynamics = cfg.loading_dynamics().unwrap();
    let model =
        TnfSignalModel::new(&cfg.regime, &cfg.cloud_template, &cfg.fiber).unwrap();
    let per_atom = motprobe_core::physics::rate_per_effective_atom(
        &cfg.laser,
        &cfg.fiber,
        cfg.spcm.quantum_efficiency_eta_d,
    )
    .unwrap();
    let gamma = motprobe_core::physics::scattering_rate(&cfg.laser).unwrap();

    for (&(t, rate), &(_, volts)) in spcm.samples.iter().zip(&pd.samples) {
        let n = dynamics.loading_curve(t);
        let expect_rate = 2.1e5 + per_atom * model.visible(n);
        assert!(
            (rate - expect_rate).abs() <= 1e-9 * expect_rate,
            "t = {t}: {rate} vs {expect_rate}"
        );
        let expect_volts = cfg.photodiode.background_volts
            + motprobe_core::detector::photodiode_voltage(
                n,
                gamma,
                &cfg.photodiode,
                cfg.laser.wavelength_um,
            )
            .unwrap();
        assert!((volts - expect_volts).abs() <= 1e-12 * expect_volts.max(1e-300));
    }
}

#[test]
fn jacobians_match_central_finite_differences() {
    let mut rng = SplitMix64::new(31415);
    let mut random_in = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_unit_f64();

    let cases: Vec<(FitModel, usize)> = vec![
        (FitModel::Gaussian, 4),
        (FitModel::Loading, 3),
        (FitModel::Decay, 3),
    ];
    for (model, n_params) in cases {
        for point in 0..20 {
            let params: Vec<f64> = match model {
                FitModel::Gaussian => vec![
                    random_in(-5.0, 5.0),
                    random_in(0.5, 10.0),
                    random_in(-3.0, 3.0),
                    random_in(0.3, 4.0),
                ],
                _ => vec![
                    random_in(-5.0, 5.0),
                    random_in(0.5, 10.0),
                    random_in(0.4, 15.0),
                ],
            };
            // probe where the model has support, not deep in its tails
            let x = match model {
                FitModel::Gaussian => params[2] + params[3] * random_in(-2.0, 2.0),
                _ => params[2] * random_in(0.05, 3.0),
            };
            let analytic = model.gradient(&params, x);
            for p in 0..n_params {
                let h = 1e-6 * params[p].abs().max(1e-3);
                let mut plus = params.clone();
                plus[p] += h;
                let mut minus = params.clone();
                minus[p] -= h;
                let fd = (model.value(&plus, x) - model.value(&minus, x)) / (2.0 * h);
                let scale = analytic[p].abs().max(fd.abs()).max(1e-8);
                assert!(
                    (analytic[p] - fd).abs() / scale < 1e-5,
                    "{model:?} point {point} param {p}: analytic {} vs fd {fd}",
                    analytic[p]
                );
            }
        }
    }
}
