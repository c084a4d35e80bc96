//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use lmkyle::config::{Experiment, ExperimentConfig, SigmaPath};
use lmkyle::depth::{check_bounds, verify_fixed_point, DepthCurve};
use lmkyle::equilibrium::{
    expected_trading_rate, price_diffusion, profit_cost_decomposition, Economy, LiquidationValue, MarketParams,
};
use lmkyle::experiments::{
    beta_perturbation, bridge_ladder, depth_probes, epsilon_gap_ladder, exact_covariance_reports, figure_anchor,
    identity_error, run_experiment, strictly_decreasing, time_change_errors, BETA_SCALES, COVARIANCE_PAIRS,
    FIG_EPSILONS,
};
use lmkyle::fbm::{FractionalParams, TimeGrid};
use lmkyle::stats::{ks_normal, EnsembleStats, SE_BAND};
use lmkyle::volatility::{RateFn, Regime, VolatilityModel};
use lmkyle::Result;

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn frac(h: f64, eps: f64) -> FractionalParams {
    FractionalParams::new(h, eps).unwrap()
}

fn markov() -> VolatilityModel {
    VolatilityModel::TwoStateMarkov {
        sigma_low: 0.5,
        sigma_high: 2.0,
        rate_to_high: 1.0,
        rate_to_low: 1.0,
        initial: Regime::Low,
    }
}

fn growth() -> VolatilityModel {
    VolatilityModel::DeterministicGrowth {
        sigma0: 1.0,
        growth: RateFn::Constant(1.0),
        vol_of_vol: RateFn::Constant(0.0),
        clamp: None,
    }
}

fn market(value: LiquidationValue, h: f64, eps: f64) -> MarketParams {
    MarketParams::new(value, 1.0, 0.04, 1.0, frac(h, eps)).unwrap()
}

fn classical_degeneracy() -> Result<Outcome> {
    let econ = Economy::new(market(LiquidationValue::Prior, 0.5, 0.1), VolatilityModel::Constant { sigma: 1.0 }, 1024)?;
    let worst = econ
        .map_paths(SEED, 200, 1.0, |p| {
            let l = p.lambda.iter().map(|l| (l - 0.2).abs() / 0.2).fold(0.0, f64::max);
            let d = price_diffusion(&econ, p).iter().map(|d| (d - 0.2).abs() / 0.2).fold(0.0, f64::max);
            l.max(d)
        })
        .into_iter()
        .fold(0.0, f64::max);
    Ok(outcome(worst < 1e-12, format!("max relative gap of lambda and price vol to 0.2: {worst:.2e}")))
}

fn fbm_approximation() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for h in [0.6, 0.9] {
        let ladder = epsilon_gap_ladder(h, &FIG_EPSILONS, 4096, 10_000, SEED)?;
        let means: Vec<f64> = ladder.mc.iter().map(|s| s.mean()).collect();
        let dec = strictly_decreasing(&means);
        ok &= dec;
        parts.push(format!("H={h} gaps {:.3e}>{:.3e}>{:.3e}", means[0], means[1], means[2]));
        let cov = exact_covariance_reports(h, 16, &COVARIANCE_PAIRS, 10_000, SEED)?;
        let passed = cov.iter().filter(|r| r.passed).count();
        ok &= passed == cov.len();
        parts.push(format!("covariance {passed}/{}", cov.len()));
    }
    Ok(outcome(ok, parts.join(", ")))
}

fn kernel_identity() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for h in [0.6, 0.75, 0.9] {
        let f = frac(h, 0.01);
        let coarse = identity_error(4096, f, SEED)?;
        let fine = identity_error(16384, f, SEED)?;
        ok &= coarse < 1e-2 && fine < 1e-3;
        parts.push(format!("H={h}: {coarse:.2e} (N=4096), {fine:.2e} (N=16384)"));
    }
    Ok(outcome(ok, parts.join(", ")))
}

fn bridge_convergence() -> Result<Outcome> {
    let cfg = ExperimentConfig::defaults(Experiment::Bridge);
    let res = bridge_ladder(cfg.market, &markov(), &[256, 1024, 4096], 2000, SEED, cfg.ode_steps)?;
    let dec = strictly_decreasing(&res.median_error);
    let ks = ks_normal(&res.h_terminal)?;
    Ok(outcome(
        dec && ks.passed,
        format!(
            "median |P - v| {:.3e} > {:.3e} > {:.3e}; KS D*sqrt(n) = {:.3} vs {:.3}",
            res.median_error[0], res.median_error[1], res.median_error[2], ks.statistic, ks.critical
        ),
    ))
}

fn depth_martingale() -> Result<Outcome> {
    let econ = Economy::new(market(LiquidationValue::Prior, 0.75, 0.1), markov(), 1024)?;
    let probes = depth_probes(&econ, &[(0.0, 0.5), (0.25, 0.75)], 10_000, SEED)?;
    let all = probes.iter().all(|p| p.inverse_impact.passed && p.impact.passed && p.orthogonality.passed);
    let best = probes.iter().map(|p| p.impact_z).fold(f64::NEG_INFINITY, f64::max);
    let detail = probes
        .iter()
        .map(|p| {
            format!(
                "({},{}): 1/lambda drift {:.2e} (band {:.2e}), lambda z {:.2}, corr z {:.3}",
                p.t, p.s, p.inverse_impact.statistic, p.inverse_impact.critical, p.impact_z, p.orthogonality.statistic
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(outcome(all && best > 2.0, detail))
}

fn depth_certification() -> Result<Outcome> {
    let grid = TimeGrid::new(1.0, 512)?;
    let f = frac(0.75, 0.1);
    let clamped = VolatilityModel::DeterministicGrowth {
        sigma0: 1.0,
        growth: RateFn::Constant(0.5),
        vol_of_vol: RateFn::Constant(0.3),
        clamp: Some((0.5, 2.0)),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, model) in
        [("constant", VolatilityModel::Constant { sigma: 1.0 }), ("growth", growth()), ("clamped", clamped), ("markov", markov())]
    {
        let curve = DepthCurve::for_model(&model, 1.0, f, 4096)?;
        let b = model.bounds(1.0);
        let r = check_bounds(&curve, &model, b.lower, b.upper, &grid);
        ok &= r.passed();
        parts.push(format!("{name} bounds {}", if r.passed() { "ok" } else { "violated" }));
    }
    let curve = DepthCurve::for_model(&markov(), 1.0, f, 4096)?;
    let gap = curve.markov_table().expect("markov").refinement_gap()?;
    ok &= gap < 1e-8;
    parts.push(format!("step-halving {gap:.2e}"));
    let fixed = verify_fixed_point(&curve, &markov(), &grid, 4000, SEED)?;
    ok &= fixed.passed() && fixed.probes.len() == 8;
    parts.push(format!(
        "fixed point {}/{} probes",
        fixed.probes.iter().filter(|p| p.passed && !p.inconclusive).count(),
        fixed.probes.len()
    ));
    Ok(outcome(ok, parts.join(", ")))
}

fn expected_rate() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (h, eps) in [(0.5, 0.1), (0.6, 0.01)] {
        let params = market(LiquidationValue::Fixed(1.1), h, eps);
        let econ = Economy::new(params, growth(), 512)?;
        let idx = [0, econ.grid().index_at(0.5)];
        let rows = econ.map_paths(SEED, 10_000, 1.0, |p| (p.theta[idx[0]], p.theta[idx[1]]));
        for (i, t) in [0.0, 0.5].into_iter().enumerate() {
            let s: EnsembleStats = rows.iter().map(|r| if i == 0 { r.0 } else { r.1 }).collect();
            let target = expected_trading_rate(1.1, 1.0, 0.04, 1.0, params.frac, &RateFn::Constant(1.0), 1.0, t)?;
            if h == 0.5 {
                // the stated anchor 0.27974 e^{2t}
                ok &= (target - 0.27974 * (2.0 * t).exp()).abs() < 1e-4 * target;
            }
            let pass = (s.mean() - target).abs() <= SE_BAND * s.standard_error() + 1e-12 * target;
            ok &= pass;
            parts.push(format!("H={h} t={t}: {:.5} vs {target:.5} (se {:.1e})", s.mean(), s.standard_error()));
        }
    }
    Ok(outcome(ok, parts.join(", ")))
}

fn profit_decomposition() -> Result<Outcome> {
    let econ = Economy::new(market(LiquidationValue::Prior, 0.75, 0.1), markov(), 512)?;
    let frac_run = profit_cost_decomposition(&econ, 10_000, SEED)?;
    let econ = Economy::new(market(LiquidationValue::Prior, 0.5, 0.1), markov(), 512)?;
    let classical = profit_cost_decomposition(&econ, 10_000, SEED)?;
    let c = classical.classical.as_ref().expect("H = 1/2");
    Ok(outcome(
        frac_run.passed() && classical.passed(),
        format!(
            "H=0.75 residual {:.2e} (band {:.2e}); H=0.5 weighted correction {:.1e}, profit - cost {:.2e} (band {:.2e})",
            frac_run.identity.statistic, frac_run.identity.critical, c[0].statistic, c[1].statistic, c[1].critical
        ),
    ))
}

fn optimality() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, model) in [("constant", VolatilityModel::Constant { sigma: 1.0 }), ("markov", markov())] {
        let econ = Economy::new(market(LiquidationValue::Prior, 0.75, 0.1), model, 512)?;
        let (_, scaled) = beta_perturbation(&econ, &BETA_SCALES, 10_000, SEED);
        for s in &scaled {
            let z = s.loss.mean() / s.loss.standard_error();
            ok &= z > 2.0;
            parts.push(format!("{name} beta x {}: loss z = {z:.2}", s.scale));
        }
    }
    Ok(outcome(ok, parts.join(", ")))
}

fn figures() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for e in [Experiment::FigImpactH, Experiment::FigImpactEps] {
        for sp in [SigmaPath::Evolving, SigmaPath::Frozen] {
            let mut cfg = ExperimentConfig::defaults(e);
            cfg.sigma_path = sp;
            let out = run_experiment(&cfg)?;
            ok &= out.passed();
            parts.push(format!("{} {sp:?} {}", e.name(), if out.passed() { "ordered" } else { "unordered" }));
        }
    }
    let anchor = figure_anchor()?;
    ok &= (anchor - 0.17734).abs() < 1e-5;
    parts.push(format!("lambda_0 = {anchor:.6}"));
    Ok(outcome(ok, parts.join(", ")))
}

fn time_change() -> Result<Outcome> {
    let econ = Economy::new(market(LiquidationValue::Prior, 0.75, 0.1), markov(), 1024)?;
    let (err, _) = time_change_errors(&econ, 200, SEED);
    let classical = Economy::new(market(LiquidationValue::Prior, 0.5, 0.1), VolatilityModel::Constant { sigma: 1.0 }, 1024)?;
    let (_, calendar) = time_change_errors(&classical, 20, SEED);
    Ok(outcome(
        err < 1e-8 && calendar < 1e-8,
        format!("Sigma identity {err:.2e}, classical |tau - t|/t {calendar:.2e}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("C1 classical degeneracy", classical_degeneracy),
        ("C2 fBm approximation", fbm_approximation),
        ("C3 kernel identity", kernel_identity),
        ("C4 bridge convergence", bridge_convergence),
        ("C5 depth martingale", depth_martingale),
        ("C6 depth certification", depth_certification),
        ("C7 expected trading rate", expected_rate),
        ("C8 profit decomposition", profit_decomposition),
        ("C9 optimality", optimality),
        ("C10 figure orderings", figures),
        ("C11 time change", time_change),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.passed);
        println!(
            "{} {name} [{:.1}s]: {}",
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {}/11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
