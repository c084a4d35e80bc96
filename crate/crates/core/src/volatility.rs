//! Noise-trading volatility models.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::fbm::TimeGrid;
use crate::quad::adaptive_simpson;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// A deterministic function of time, `a + b t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFn {
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
}

impl RateFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RateFn::Constant(c) => c,
            RateFn::Linear { intercept, slope } => intercept + slope * t,
        }
    }

    /// `int_a^b f(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            RateFn::Constant(c) => c * (b - a),
            RateFn::Linear { intercept, slope } => {
                intercept * (b - a) + 0.5 * slope * (b * b - a * a)
            }
        }
    }

    /// `int_a^b f(s)^2 ds`.
    pub fn square_integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            RateFn::Constant(c) => c * c * (b - a),
            RateFn::Linear { intercept, slope } => {
                if slope == 0.0 {
                    intercept * intercept * (b - a)
                } else {
                    let cube = |t: f64| (intercept + slope * t).powi(3) / (3.0 * slope);
                    cube(b) - cube(a)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            RateFn::Constant(c) => c == 0.0,
            RateFn::Linear { intercept, slope } => intercept == 0.0 && slope == 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RateFn::Constant(_) | RateFn::Linear { slope: 0.0, .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Low,
    High,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Low => "low",
            Regime::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolatilityModel {
    Constant {
        sigma: f64,
    },
    /// `d sigma = m(t) sigma dt + nu(t) sigma dM` with `M` a standard Brownian
    /// motion. With `nu != 0` the path is clamped to `clamp`.
    DeterministicGrowth {
        sigma0: f64,
        growth: RateFn,
        vol_of_vol: RateFn,
        clamp: Option<(f64, f64)>,
    },
    /// Two-state chain; `rate_to_high` is the intensity of leaving the low
    /// state, `rate_to_low` the intensity of leaving the high state.
    TwoStateMarkov {
        sigma_low: f64,
        sigma_high: f64,
        rate_to_high: f64,
        rate_to_low: f64,
        initial: Regime,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolBounds {
    pub lower: f64,
    pub upper: f64,
    /// Paths are clamped to `[lower, upper]` rather than bounded by construction.
    pub clamped: bool,
}

/// Volatility at the grid nodes. For the Markov model the regime labels and
/// the exact jump times are kept as well.
#[derive(Debug, Clone)]
pub struct VolPath {
    pub sigma: Vec<f64>,
    pub regime: Option<Vec<Regime>>,
    pub jump_times: Vec<f64>,
    pub clamp_hits: usize,
    /// First node of the path; nodes before it are copies of the start state.
    pub start: usize,
}

/// Starting point of a conditional simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolStart {
    Sigma(f64),
    Regime(Regime),
}

impl VolatilityModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VolatilityModel::Constant { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
                }
            }
            VolatilityModel::DeterministicGrowth { sigma0, vol_of_vol, clamp, .. } => {
                if !(sigma0 > 0.0 && sigma0.is_finite()) {
                    return Err(Error::Config(format!("sigma0 must be positive, got {sigma0}")));
                }
                if !vol_of_vol.is_zero() {
                    match clamp {
                        Some((lo, hi)) if lo > 0.0 && lo <= sigma0 && sigma0 <= hi && hi.is_finite() => {}
                        Some((lo, hi)) => {
                            return Err(Error::Config(format!(
                                "clamp bounds [{lo}, {hi}] must satisfy 0 < lower <= sigma0 <= upper"
                            )))
                        }
                        None => {
                            return Err(Error::Config(
                                "a non-zero vol-of-vol needs truncation bounds".into(),
                            ))
                        }
                    }
                }
            }
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, .. } => {
                if !(sigma_low > 0.0) {
                    return Err(Error::Config(format!("sigma_low must be positive, got {sigma_low}")));
                }
                if sigma_low >= sigma_high {
                    return Err(Error::Config(format!(
                        "need sigma_low < sigma_high, got {sigma_low} >= {sigma_high}"
                    )));
                }
                if rate_to_high < 0.0 || rate_to_low < 0.0 {
                    return Err(Error::Config("switching intensities must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_markov(&self) -> bool {
        matches!(self, VolatilityModel::TwoStateMarkov { .. })
    }

    /// Growth rate seen by the depth formulas (zero for the constant model).
    pub fn growth(&self) -> Option<RateFn> {
        match *self {
            VolatilityModel::Constant { .. } => Some(RateFn::Constant(0.0)),
            VolatilityModel::DeterministicGrowth { growth, .. } => Some(growth),
            VolatilityModel::TwoStateMarkov { .. } => None,
        }
    }

    pub fn initial_sigma(&self) -> f64 {
        match *self {
            VolatilityModel::Constant { sigma } => sigma,
            VolatilityModel::DeterministicGrowth { sigma0, .. } => sigma0,
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, initial, .. } => match initial {
                Regime::Low => sigma_low,
                Regime::High => sigma_high,
            },
        }
    }

    pub fn regime_sigma(&self, regime: Regime) -> Option<f64> {
        match *self {
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, .. } => Some(match regime {
                Regime::Low => sigma_low,
                Regime::High => sigma_high,
            }),
            _ => None,
        }
    }

    /// Deterministic bounds on the volatility over `[0, horizon]`.
    pub fn bounds(&self, horizon: f64) -> VolBounds {
        match *self {
            VolatilityModel::Constant { sigma } => VolBounds { lower: sigma, upper: sigma, clamped: false },
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, .. } => {
                VolBounds { lower: sigma_low, upper: sigma_high, clamped: false }
            }
            VolatilityModel::DeterministicGrowth { sigma0, growth, vol_of_vol, clamp } => {
                if !vol_of_vol.is_zero() {
                    let (lower, upper) = clamp.unwrap_or((sigma0, sigma0));
                    return VolBounds { lower, upper, clamped: true };
                }
                // sigma0 exp(int_0^t m) is extremal at the ends or where m changes sign
                let mut candidates = vec![0.0, horizon];
                if let RateFn::Linear { intercept, slope } = growth {
                    if slope != 0.0 {
                        let root = -intercept / slope;
                        if root > 0.0 && root < horizon {
                            candidates.push(root);
                        }
                    }
                }
                let values: Vec<f64> =
                    candidates.iter().map(|&t| sigma0 * growth.integral(0.0, t).exp()).collect();
                VolBounds {
                    lower: values.iter().copied().fold(f64::INFINITY, f64::min),
                    upper: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    clamped: false,
                }
            }
        }
    }

    /// `E[sigma_u | sigma_t] = sigma_t exp(int_t^u m)`.
    pub fn conditional_mean(&self, sigma_t: f64, t: f64, u: f64) -> Result<f64> {
        let VolatilityModel::DeterministicGrowth { growth, .. } = self else {
            return Err(Error::Unsupported(
                "conditional mean is defined for the deterministic-growth model".into(),
            ));
        };
        if u < t {
            return Err(Error::Domain(format!("need u >= t, got u = {u} < t = {t}")));
        }
        let integral = if growth.is_constant() {
            growth.integral(t, u)
        } else {
            adaptive_simpson(|s| growth.eval(s), t, u, 1e-13)
        };
        Ok(sigma_t * integral.exp())
    }

    /// `E[sigma_u^2 | state at t]`, ignoring clamping for the growth model.
    pub fn conditional_second_moment(&self, start: VolStart, t: f64, u: f64) -> f64 {
        match (self, start) {
            (VolatilityModel::Constant { sigma }, _) => sigma * sigma,
            (VolatilityModel::DeterministicGrowth { growth, vol_of_vol, .. }, VolStart::Sigma(s)) => {
                s * s * (2.0 * growth.integral(t, u) + vol_of_vol.square_integral(t, u)).exp()
            }
            (
                VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, .. },
                VolStart::Regime(r),
            ) => {
                let p_high = high_probability(*rate_to_high, *rate_to_low, r, u - t);
                sigma_low * sigma_low + (sigma_high * sigma_high - sigma_low * sigma_low) * p_high
            }
            _ => panic!("start state does not match the volatility model"),
        }
    }

    /// Simulate the whole path from the model's initial state.
    pub fn simulate<R: Rng>(&self, grid: &TimeGrid, diffusion: &mut R, clock: &mut R) -> VolPath {
        let start = match *self {
            VolatilityModel::TwoStateMarkov { initial, .. } => VolStart::Regime(initial),
            _ => VolStart::Sigma(self.initial_sigma()),
        };
        self.simulate_from(grid, 0, start, diffusion, clock)
    }

    /// Simulate from node `start_index` in the given state.
    pub fn simulate_from<R: Rng>(
        &self,
        grid: &TimeGrid,
        start_index: usize,
        start: VolStart,
        diffusion: &mut R,
        clock: &mut R,
    ) -> VolPath {
        let n = grid.steps();
        match (*self, start) {
            (VolatilityModel::Constant { sigma }, _) => VolPath {
                sigma: vec![sigma; n + 1],
                regime: None,
                jump_times: Vec::new(),
                clamp_hits: 0,
                start: start_index,
            },
            (VolatilityModel::DeterministicGrowth { growth, vol_of_vol, clamp, .. }, VolStart::Sigma(s0)) => {
                let mut sigma = vec![s0; n + 1];
                let mut hits = 0;
                let sd = grid.dt().sqrt();
                for k in start_index..n {
                    let (t0, t1) = (grid.t(k), grid.t(k + 1));
                    let drift = growth.integral(t0, t1).exp();
                    let mut next = sigma[k] * drift;
                    if !vol_of_vol.is_zero() {
                        let dm = sd * diffusion.sample::<f64, _>(StandardNormal);
                        next += vol_of_vol.eval(t0) * sigma[k] * dm;
                        if let Some((lo, hi)) = clamp {
                            if next < lo || next > hi {
                                hits += 1;
                                next = next.clamp(lo, hi);
                            }
                        }
                    }
                    sigma[k + 1] = next;
                }
                VolPath { sigma, regime: None, jump_times: Vec::new(), clamp_hits: hits, start: start_index }
            }
            (
                VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, .. },
                VolStart::Regime(r0),
            ) => {
                let horizon = grid.horizon();
                let mut jump_times = Vec::new();
                let mut state = r0;
                let mut t = grid.t(start_index);
                loop {
                    let rate = match state {
                        Regime::Low => rate_to_high,
                        Regime::High => rate_to_low,
                    };
                    if rate <= 0.0 {
                        break;
                    }
                    t += clock.sample::<f64, _>(Exp1) / rate;
                    if t > horizon {
                        break;
                    }
                    jump_times.push(t);
                    state = flip(state);
                }
                let mut regime = vec![r0; n + 1];
                let mut state = r0;
                let mut next_jump = 0;
                for (k, slot) in regime.iter_mut().enumerate().skip(start_index) {
                    let tk = grid.t(k);
                    while next_jump < jump_times.len() && jump_times[next_jump] <= tk {
                        state = flip(state);
                        next_jump += 1;
                    }
                    *slot = state;
                }
                let sigma = regime
                    .iter()
                    .map(|r| match r {
                        Regime::Low => sigma_low,
                        Regime::High => sigma_high,
                    })
                    .collect();
                VolPath { sigma, regime: Some(regime), jump_times, clamp_hits: 0, start: start_index }
            }
            _ => panic!("start state does not match the volatility model"),
        }
    }
}

impl VolPath {
    /// Regime held on `[t0, t1]` split at the jump times in between.
    pub fn regime_segments(&self, grid: &TimeGrid, k: usize) -> Vec<(f64, f64, Regime)> {
        let regimes = self.regime.as_ref().expect("regime path");
        let (t0, t1) = (grid.t(k), grid.t(k + 1));
        let mut out = Vec::with_capacity(1);
        let mut state = regimes[k];
        let mut a = t0;
        for &j in self.jump_times.iter().filter(|&&j| j > t0 && j <= t1) {
            out.push((a, j, state));
            state = flip(state);
            a = j;
        }
        out.push((a, t1, state));
        out
    }

    /// Fraction of `[t0, t1]` spent in the high state.
    pub fn high_occupancy(&self, t0: f64, t1: f64, initial: Regime) -> f64 {
        let mut state = initial;
        let mut a = t0;
        let mut high = 0.0;
        for &j in self.jump_times.iter().filter(|&&j| j > t0 && j <= t1) {
            if state == Regime::High {
                high += j - a;
            }
            state = flip(state);
            a = j;
        }
        if state == Regime::High {
            high += t1 - a;
        }
        high / (t1 - t0)
    }
}

fn flip(r: Regime) -> Regime {
    match r {
        Regime::Low => Regime::High,
        Regime::High => Regime::Low,
    }
}

/// `P(high at t + h | r at t)` for the two-state chain.
pub fn high_probability(rate_to_high: f64, rate_to_low: f64, from: Regime, h: f64) -> f64 {
    let total = rate_to_high + rate_to_low;
    let p0 = if from == Regime::High { 1.0 } else { 0.0 };
    if total == 0.0 {
        return p0;
    }
    let stationary = rate_to_high / total;
    stationary + (p0 - stationary) * (-total * h).exp()
}

/// Simulate from a single seed; the diffusion and jump clocks use separate streams.
pub fn simulate_vol(model: &VolatilityModel, grid: &TimeGrid, seed: u64) -> Result<VolPath> {
    model.validate()?;
    let mut diffusion = stream_rng(seed, 0, Stream::VolDiffusion);
    let mut clock = stream_rng(seed, 0, Stream::RegimeClock);
    Ok(model.simulate(grid, &mut diffusion, &mut clock))
}

pub fn conditional_mean(model: &VolatilityModel, sigma_t: f64, t: f64, u: f64) -> Result<f64> {
    model.conditional_mean(sigma_t, t, u)
}

pub fn vol_bounds(model: &VolatilityModel, horizon: f64) -> VolBounds {
    model.bounds(horizon)
}
