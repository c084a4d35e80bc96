//! Experiment configuration files.
//!
//! Line-oriented `key = value` pairs under `[experiment]`, `[market]` and
//! `[volatility]` headers. `#` starts a comment. Rate functions are either a
//! number or `linear(a, b)` for `a + b t`.
//!
//! ```text
//! [experiment]
//! name = bridge
//! steps = 4096
//! paths = 2000
//! seed = 7
//! out = out
//!
//! [market]
//! value = prior
//! prior_mean = 1
//! prior_variance = 0.04
//! horizon = 1
//! hurst = 0.75
//! epsilon = 0.1
//!
//! [volatility]
//! model = markov
//! sigma_low = 0.5
//! sigma_high = 2
//! rate_to_high = 1
//! rate_to_low = 1
//! initial = low
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::depth::DEFAULT_ODE_STEPS;
use crate::equilibrium::{LiquidationValue, MarketParams};
use crate::fbm::FractionalParams;
use crate::volatility::{RateFn, Regime, VolatilityModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    FigImpactH,
    FigImpactEps,
    Bridge,
    DepthMartingale,
    MarkovEquilibrium,
    FbmValidate,
    ProfitDecomposition,
    TimeChange,
    Optimality,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::FigImpactH,
        Experiment::FigImpactEps,
        Experiment::Bridge,
        Experiment::DepthMartingale,
        Experiment::MarkovEquilibrium,
        Experiment::FbmValidate,
        Experiment::ProfitDecomposition,
        Experiment::TimeChange,
        Experiment::Optimality,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FigImpactH => "fig-impact-h",
            Experiment::FigImpactEps => "fig-impact-eps",
            Experiment::Bridge => "bridge",
            Experiment::DepthMartingale => "depth-martingale",
            Experiment::MarkovEquilibrium => "markov-equilibrium",
            Experiment::FbmValidate => "fbm-validate",
            Experiment::ProfitDecomposition => "profit-decomposition",
            Experiment::TimeChange => "time-change",
            Experiment::Optimality => "optimality",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::FigImpactH => "price impact over time for H in {0.6, 0.75, 0.9}",
            Experiment::FigImpactEps => "price impact over time for eps in {0.1, 0.01, 0.001}",
            Experiment::Bridge => "price convergence to v over a step ladder and normality of h",
            Experiment::DepthMartingale => "martingale 1/lambda, submartingale lambda, orthogonality to Y",
            Experiment::MarkovEquilibrium => "depth table, bounds, fixed point and equilibrium paths",
            Experiment::FbmValidate => "kernel identity, eps ladder and exact fBm covariance",
            Experiment::ProfitDecomposition => "insider profit against execution cost and correction",
            Experiment::TimeChange => "directing process and posterior-variance identity",
            Experiment::Optimality => "profit under +-20% scaling of the strategy's beta",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == name)
    }
}

/// Volatility path used by the figure experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaPath {
    /// `sigma_t = sigma_0 exp(int_0^t m)`.
    Evolving,
    /// `sigma_t = sigma_0`.
    Frozen,
}

impl SigmaPath {
    fn name(&self) -> &'static str {
        match self {
            SigmaPath::Evolving => "evolving",
            SigmaPath::Frozen => "frozen",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub sigma_path: SigmaPath,
    pub ode_steps: usize,
    pub market: MarketParams,
    pub vol: VolatilityModel,
}

fn markov_defaults() -> VolatilityModel {
    VolatilityModel::TwoStateMarkov {
        sigma_low: 0.5,
        sigma_high: 2.0,
        rate_to_high: 1.0,
        rate_to_low: 1.0,
        initial: Regime::Low,
    }
}

fn growth_defaults() -> VolatilityModel {
    VolatilityModel::DeterministicGrowth {
        sigma0: 1.0,
        growth: RateFn::Constant(1.0),
        vol_of_vol: RateFn::Constant(0.0),
        clamp: None,
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults for an experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let frac = |h, e| FractionalParams::new(h, e).expect("valid defaults");
        let market = |value, h, e| MarketParams::new(value, 1.0, 0.04, 1.0, frac(h, e)).expect("valid defaults");
        let (steps, paths, market, vol) = match experiment {
            Experiment::FigImpactH => (200, 1, market(LiquidationValue::Prior, 0.6, 0.01), growth_defaults()),
            Experiment::FigImpactEps => (200, 1, market(LiquidationValue::Prior, 0.6, 0.01), growth_defaults()),
            Experiment::Bridge => (4096, 2000, market(LiquidationValue::Fixed(1.0), 0.75, 0.1), markov_defaults()),
            Experiment::DepthMartingale => (1024, 10000, market(LiquidationValue::Prior, 0.75, 0.1), markov_defaults()),
            Experiment::MarkovEquilibrium => (512, 2000, market(LiquidationValue::Prior, 0.75, 0.1), markov_defaults()),
            Experiment::FbmValidate => (4096, 10000, market(LiquidationValue::Prior, 0.75, 0.01), VolatilityModel::Constant { sigma: 1.0 }),
            Experiment::ProfitDecomposition => (512, 10000, market(LiquidationValue::Prior, 0.75, 0.1), markov_defaults()),
            Experiment::TimeChange => (1024, 100, market(LiquidationValue::Prior, 0.75, 0.1), markov_defaults()),
            Experiment::Optimality => (512, 10000, market(LiquidationValue::Prior, 0.75, 0.1), markov_defaults()),
        };
        Self {
            experiment,
            steps,
            paths,
            seed: 20_240_601,
            out: PathBuf::from("out"),
            sigma_path: SigmaPath::Evolving,
            ode_steps: DEFAULT_ODE_STEPS,
            market,
            vol,
        }
    }

    /// Canonical text form; `parse_config(dump())` reproduces `self`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "name = {}", self.experiment.name());
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "sigma_path = {}", self.sigma_path.name());
        let _ = writeln!(s, "ode_steps = {}", self.ode_steps);
        let _ = writeln!(s);
        let m = &self.market;
        let _ = writeln!(s, "[market]");
        match m.value {
            LiquidationValue::Fixed(v) => {
                let _ = writeln!(s, "value = {v}");
            }
            LiquidationValue::Prior => {
                let _ = writeln!(s, "value = prior");
            }
        }
        let _ = writeln!(s, "prior_mean = {}", m.prior_mean);
        let _ = writeln!(s, "prior_variance = {}", m.prior_variance);
        let _ = writeln!(s, "horizon = {}", m.horizon);
        let _ = writeln!(s, "hurst = {}", m.frac.hurst());
        let _ = writeln!(s, "epsilon = {}", m.frac.epsilon());
        let _ = writeln!(s);
        let _ = writeln!(s, "[volatility]");
        match &self.vol {
            VolatilityModel::Constant { sigma } => {
                let _ = writeln!(s, "model = constant");
                let _ = writeln!(s, "sigma = {sigma}");
            }
            VolatilityModel::DeterministicGrowth { sigma0, growth, vol_of_vol, clamp } => {
                let _ = writeln!(s, "model = growth");
                let _ = writeln!(s, "sigma0 = {sigma0}");
                let _ = writeln!(s, "growth = {}", fmt_rate(growth));
                let _ = writeln!(s, "vol_of_vol = {}", fmt_rate(vol_of_vol));
                if let Some((lo, hi)) = clamp {
                    let _ = writeln!(s, "clamp_lower = {lo}");
                    let _ = writeln!(s, "clamp_upper = {hi}");
                }
            }
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, initial } => {
                let _ = writeln!(s, "model = markov");
                let _ = writeln!(s, "sigma_low = {sigma_low}");
                let _ = writeln!(s, "sigma_high = {sigma_high}");
                let _ = writeln!(s, "rate_to_high = {rate_to_high}");
                let _ = writeln!(s, "rate_to_low = {rate_to_low}");
                let _ = writeln!(s, "initial = {}", initial.label());
            }
        }
        s
    }
}

fn fmt_rate(r: &RateFn) -> String {
    match r {
        RateFn::Constant(c) => format!("{c}"),
        RateFn::Linear { intercept, slope } => format!("linear({intercept}, {slope})"),
    }
}

const SECTIONS: [&str; 3] = ["experiment", "market", "volatility"];

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Fields {
    map: BTreeMap<(String, String), Entry>,
    missing: Vec<String>,
}

impl Fields {
    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        match self.map.get_mut(&(section.to_string(), key.to_string())) {
            Some(e) => {
                e.used = true;
                Some((e.value.clone(), e.line))
            }
            None => None,
        }
    }

    fn required(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let r = self.raw(section, key);
        if r.is_none() {
            self.missing.push(format!("{section}.{key}"));
        }
        r
    }

    fn number<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.required(section, key) {
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse { line, message: format!("{key}: cannot parse '{v}'") }),
            None => Ok(None),
        }
    }

    fn rate(&mut self, section: &str, key: &str) -> Result<Option<RateFn>> {
        match self.required(section, key) {
            Some((v, line)) => parse_rate(&v).map(Some).ok_or_else(|| Error::Parse {
                line,
                message: format!("{key}: expected a number or linear(a, b), got '{v}'"),
            }),
            None => Ok(None),
        }
    }
}

fn parse_rate(v: &str) -> Option<RateFn> {
    if let Ok(c) = v.parse::<f64>() {
        return Some(RateFn::Constant(c));
    }
    let inner = v.strip_prefix("linear(")?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some(RateFn::Linear { intercept: a.trim().parse().ok()?, slope: b.trim().parse().ok()? })
}

/// Parse a configuration file. Unknown or duplicate keys are errors, and
/// every missing required key is listed in one error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::Parse { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse { line, message: format!("expected 'key = value', got '{content}'") });
        };
        let Some(sec) = section.clone() else {
            return Err(Error::Parse { line, message: "key outside of a [section]".into() });
        };
        let key = key.trim().to_string();
        let entry = Entry { value: value.trim().to_string(), line, used: false };
        if let Some(prev) = map.insert((sec.clone(), key.clone()), entry) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key {sec}.{key} (first set on line {})", prev.line),
            });
        }
    }
    let mut f = Fields { map, missing: Vec::new() };

    let experiment = match f.required("experiment", "name") {
        Some((v, line)) => Some(
            Experiment::from_name(&v)
                .ok_or_else(|| Error::Parse { line, message: format!("unknown experiment '{v}'") })?,
        ),
        None => None,
    };
    let steps = f.number::<usize>("experiment", "steps")?;
    let paths = f.number::<usize>("experiment", "paths")?;
    let seed = f.number::<u64>("experiment", "seed")?;
    let out = f.required("experiment", "out").map(|(v, _)| PathBuf::from(v));
    let sigma_path = match f.raw("experiment", "sigma_path") {
        None => SigmaPath::Evolving,
        Some((v, line)) => match v.as_str() {
            "evolving" => SigmaPath::Evolving,
            "frozen" => SigmaPath::Frozen,
            _ => return Err(Error::Parse { line, message: format!("sigma_path must be evolving or frozen, got '{v}'") }),
        },
    };
    let ode_steps = match f.raw("experiment", "ode_steps") {
        None => DEFAULT_ODE_STEPS,
        Some((v, line)) => v
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("ode_steps: cannot parse '{v}'") })?,
    };

    let value = match f.required("market", "value") {
        Some((v, _)) if v == "prior" => Some(LiquidationValue::Prior),
        Some((v, line)) => Some(LiquidationValue::Fixed(v.parse().map_err(|_| Error::Parse {
            line,
            message: format!("value: expected a number or 'prior', got '{v}'"),
        })?)),
        None => None,
    };
    let prior_mean = f.number::<f64>("market", "prior_mean")?;
    let prior_variance = f.number::<f64>("market", "prior_variance")?;
    let horizon = f.number::<f64>("market", "horizon")?;
    let hurst = f.number::<f64>("market", "hurst")?;
    let epsilon = f.number::<f64>("market", "epsilon")?;

    let vol = match f.required("volatility", "model") {
        None => None,
        Some((model, line)) => match model.as_str() {
            "constant" => f.number("volatility", "sigma")?.map(|sigma| VolatilityModel::Constant { sigma }),
            "growth" => {
                let sigma0 = f.number("volatility", "sigma0")?;
                let growth = f.rate("volatility", "growth")?;
                let vol_of_vol = f.rate("volatility", "vol_of_vol")?;
                let lo = f.raw("volatility", "clamp_lower");
                let hi = f.raw("volatility", "clamp_upper");
                let clamp = match (lo, hi) {
                    (None, None) => None,
                    (Some((a, la)), Some((b, lb))) => {
                        let a = a.parse().map_err(|_| Error::Parse { line: la, message: "clamp_lower: not a number".into() })?;
                        let b = b.parse().map_err(|_| Error::Parse { line: lb, message: "clamp_upper: not a number".into() })?;
                        Some((a, b))
                    }
                    (Some((_, l)), None) | (None, Some((_, l))) => {
                        return Err(Error::Parse { line: l, message: "clamp_lower and clamp_upper go together".into() })
                    }
                };
                match (sigma0, growth, vol_of_vol) {
                    (Some(sigma0), Some(growth), Some(vol_of_vol)) => {
                        Some(VolatilityModel::DeterministicGrowth { sigma0, growth, vol_of_vol, clamp })
                    }
                    _ => None,
                }
            }
            "markov" => {
                let sl = f.number("volatility", "sigma_low")?;
                let sh = f.number("volatility", "sigma_high")?;
                let up = f.number("volatility", "rate_to_high")?;
                let down = f.number("volatility", "rate_to_low")?;
                let initial = match f.required("volatility", "initial") {
                    None => None,
                    Some((v, l)) => Some(match v.as_str() {
                        "low" => Regime::Low,
                        "high" => Regime::High,
                        _ => return Err(Error::Parse { line: l, message: format!("initial must be low or high, got '{v}'") }),
                    }),
                };
                match (sl, sh, up, down, initial) {
                    (Some(sigma_low), Some(sigma_high), Some(rate_to_high), Some(rate_to_low), Some(initial)) => {
                        Some(VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, initial })
                    }
                    _ => None,
                }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("model must be constant, growth or markov, got '{other}'"),
                })
            }
        },
    };

    if let Some(((sec, key), e)) = f.map.iter().find(|(_, e)| !e.used) {
        return Err(Error::Parse { line: e.line, message: format!("unknown key {sec}.{key}") });
    }
    if !f.missing.is_empty() {
        return Err(Error::Config(format!("missing keys: {}", f.missing.join(", "))));
    }
    let (Some(experiment), Some(steps), Some(paths), Some(seed), Some(out)) = (experiment, steps, paths, seed, out)
    else {
        unreachable!("missing keys reported above")
    };
    let (Some(value), Some(prior_mean), Some(prior_variance), Some(horizon), Some(hurst), Some(epsilon), Some(vol)) =
        (value, prior_mean, prior_variance, horizon, hurst, epsilon, vol)
    else {
        unreachable!("missing keys reported above")
    };
    let frac = FractionalParams::new(hurst, epsilon)?;
    let market = MarketParams::new(value, prior_mean, prior_variance, horizon, frac)?;
    vol.validate()?;
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    Ok(ExperimentConfig { experiment, steps, paths, seed, out, sigma_path, ode_steps, market, vol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_lists_missing_keys() {
        let err = parse_config("").unwrap_err().to_string();
        for key in ["experiment.name", "experiment.steps", "market.hurst", "volatility.model"] {
            assert!(err.contains(key), "{err}");
        }
    }

    #[test]
    fn duplicate_key_reports_line() {
        let text = "[experiment]\nname = bridge\nsteps = 4\nsteps = 5\n";
        match parse_config(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let mut text = ExperimentConfig::defaults(Experiment::Bridge).dump();
        text.push_str("colour = blue\n");
        assert!(matches!(parse_config(&text), Err(Error::Parse { .. })));
        let text = ExperimentConfig::defaults(Experiment::Bridge).dump().replace("[volatility]", "[vol]");
        assert!(matches!(parse_config(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn keys_of_another_model_are_unknown() {
        let text = ExperimentConfig::defaults(Experiment::Bridge).dump() + "sigma = 1\n";
        assert!(matches!(parse_config(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn every_default_round_trips() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::defaults(e);
            let text = cfg.dump();
            let back = parse_config(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.dump(), text);
        }
    }

    #[test]
    fn rate_syntax() {
        assert_eq!(parse_rate("1.5"), Some(RateFn::Constant(1.5)));
        assert_eq!(parse_rate("linear(0.5, -2)"), Some(RateFn::Linear { intercept: 0.5, slope: -2.0 }));
        assert_eq!(parse_rate("linear(0.5)"), None);
        let mut cfg = ExperimentConfig::defaults(Experiment::FigImpactH);
        cfg.vol = VolatilityModel::DeterministicGrowth {
            sigma0: 1.0,
            growth: RateFn::Linear { intercept: 0.25, slope: 1.0 },
            vol_of_vol: RateFn::Constant(0.2),
            clamp: Some((0.5, 4.0)),
        };
        assert_eq!(parse_config(&cfg.dump()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values() {
        let text = ExperimentConfig::defaults(Experiment::Bridge).dump().replace("sigma_low = 0.5", "sigma_low = 3");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
        let text = ExperimentConfig::defaults(Experiment::Bridge).dump().replace("name = bridge", "name = nope");
        assert!(matches!(parse_config(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = ExperimentConfig::defaults(Experiment::TimeChange).dump().replace("[market]", "# prices\n[market] # here");
        assert!(parse_config(&text).is_ok());
    }
}
