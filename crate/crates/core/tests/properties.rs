use proptest::prelude::*;

use lmkyle::config::{parse_config, Experiment, ExperimentConfig};
use lmkyle::depth::{check_bounds, DepthCurve};
use lmkyle::equilibrium::{strategy, time_change, Economy, LiquidationValue, MarketParams};
use lmkyle::fbm::{fbm_covariance, FractionalParams, KernelWeights, NoisePath, TimeGrid};
use lmkyle::rng::{stream_rng, Stream};
use lmkyle::stats::EnsembleStats;
use lmkyle::volatility::{simulate_vol, RateFn, Regime, VolatilityModel};

fn markov_model() -> impl Strategy<Value = VolatilityModel> {
    (0.2..1.5f64, 1.1..3.0f64, 0.2..3.0f64, 0.2..3.0f64, any::<bool>()).prop_map(|(lo, ratio, up, down, high)| {
        VolatilityModel::TwoStateMarkov {
            sigma_low: lo,
            sigma_high: lo * ratio,
            rate_to_high: up,
            rate_to_low: down,
            initial: if high { Regime::High } else { Regime::Low },
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merged_moments_match_sequential(xs in prop::collection::vec(-1e3..1e3f64, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let all: EnsembleStats = xs.iter().collect();
        let a: EnsembleStats = xs[..split].iter().collect();
        let b: EnsembleStats = xs[split..].iter().collect();
        let m = a.merge(&b);
        prop_assert_eq!(m.count(), all.count());
        prop_assert!((m.mean() - all.mean()).abs() <= 1e-9 * (1.0 + all.mean().abs()));
        prop_assert!((m.variance() - all.variance()).abs() <= 1e-9 * (1.0 + all.variance()));
        prop_assert!(m.variance() >= 0.0);
    }

    #[test]
    fn covariance_is_symmetric(t in 0.0..2.0f64, s in 0.0..2.0f64, h in 0.5..1.0f64) {
        let a = fbm_covariance(t, s, h).unwrap();
        prop_assert_eq!(a, fbm_covariance(s, t, h).unwrap());
        prop_assert!((fbm_covariance(t, t, h).unwrap() - t.powf(2.0 * h)).abs() <= 1e-12 * (1.0 + t));
        // Cauchy-Schwarz
        prop_assert!(a <= (t.powf(2.0 * h) * s.powf(2.0 * h)).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn strategy_is_affine_in_the_edge(v in -2.0..2.0f64, p in -2.0..2.0f64, lambda in 0.01..5.0f64,
                                      kappa in 0.0..50.0f64, psi in -3.0..3.0f64, h in 0.5..1.0f64) {
        let base = strategy(p, p, lambda, kappa, psi, h).unwrap();
        let full = strategy(v, p, lambda, kappa, psi, h).unwrap();
        prop_assert!((base + (h - 0.5) * psi).abs() <= 1e-12);
        prop_assert!((full - base - kappa / lambda * (v - p)).abs() <= 1e-9 * (1.0 + full.abs()));
    }

    #[test]
    fn noise_paths_start_at_zero(h in 0.5..1.0f64, eps in 0.001..0.5f64, steps in 1usize..128, seed in any::<u64>()) {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let kernel = KernelWeights::new(&grid, FractionalParams::new(h, eps).unwrap());
        let path = NoisePath::generate(&grid, &kernel, &mut stream_rng(seed, 0, Stream::OrderFlow));
        prop_assert_eq!(path.psi.len(), steps + 1);
        prop_assert_eq!(path.fbm_approx.len(), steps + 1);
        prop_assert_eq!(path.psi[0], 0.0);
        prop_assert_eq!(path.fbm_approx[0], 0.0);
        prop_assert_eq!(grid.t(steps), 1.0);
    }

    #[test]
    fn config_round_trips(steps in 16usize..10_000, paths in 0usize..100_000, seed in any::<u64>(),
                          h in 0.5..1.0f64, eps in 0.0001..1.0f64, which in 0usize..9) {
        let mut cfg = ExperimentConfig::defaults(Experiment::ALL[which]);
        cfg.steps = steps;
        cfg.paths = paths;
        cfg.seed = seed;
        let m = cfg.market;
        cfg.market = MarketParams::new(m.value, m.prior_mean, m.prior_variance, m.horizon,
                                       FractionalParams::new(h, eps).unwrap()).unwrap();
        let text = cfg.dump();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.dump(), text);
    }

    #[test]
    fn simulated_volatility_stays_in_bounds(model in markov_model(), seed in any::<u64>()) {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let b = model.bounds(1.0);
        let path = simulate_vol(&model, &grid, seed).unwrap();
        prop_assert!(path.sigma.iter().all(|s| *s >= b.lower && *s <= b.upper));
    }

    #[test]
    fn clamped_growth_stays_in_bounds(mu in -1.0..1.0f64, nu in 0.0..1.0f64, seed in any::<u64>()) {
        let model = VolatilityModel::DeterministicGrowth {
            sigma0: 1.0,
            growth: RateFn::Constant(mu),
            vol_of_vol: RateFn::Constant(nu),
            clamp: Some((0.5, 2.0)),
        };
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let path = simulate_vol(&model, &grid, seed).unwrap();
        prop_assert!(path.sigma.iter().all(|s| (0.5..=2.0).contains(s)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn markov_depth_respects_bounds(model in markov_model(), h in 0.5..0.95f64, eps in 0.01..0.5f64) {
        let frac = FractionalParams::new(h, eps).unwrap();
        let curve = DepthCurve::for_model(&model, 1.0, frac, 512).unwrap();
        let b = model.bounds(1.0);
        let report = check_bounds(&curve, &model, b.lower, b.upper, &TimeGrid::new(1.0, 128).unwrap());
        prop_assert!(report.passed(), "{:?}", report);
        prop_assert!(curve.markov_table().unwrap().shape().monotone);
    }

    #[test]
    fn posterior_decreases_and_time_change_holds(model in markov_model(), h in 0.5..0.95f64, seed in any::<u64>()) {
        let params = MarketParams::new(LiquidationValue::Prior, 1.0, 0.04, 1.0, FractionalParams::new(h, 0.1).unwrap()).unwrap();
        let econ = Economy::new(params, model, 64).unwrap();
        let p = econ.path(seed, 0, 1.0);
        prop_assert!(p.posterior.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(p.posterior[63] > 0.0);
        prop_assert!(econ.construction_residual(&p) < 1e-10);
        prop_assert!(time_change(&econ, &p).max_rel_error < 1e-8);
    }
}
