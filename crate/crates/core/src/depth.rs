//! Expected-depth process `G_t`, defined through `lambda_t = sqrt(Sigma_t / G_t)`.
//!
//! Under deterministic volatility growth `G_t = eps^(2H-1) sigma_t^2 D_t` with
//! `D_t = int_t^T exp(int_t^u 2 m_s ds) du`. Under the two-state chain
//! `G_t = eps^(2H-1) G^i(T - t)` in state `i`, where `(G^L, G^H)` solve a
//! coupled ODE system in time-to-go `tau`, integrated here by classical RK4.
//!
//! Besides `G` itself the curve exposes the exact per-step integral of the
//! mean-reversion rate `kappa = eps^(2H-1) sigma^2 / G`, which is what the
//! posterior-variance update and the directing process consume. `kappa`
//! behaves like `1 / tau` near the horizon; the Markov table stores the
//! smooth remainder `R^i(tau) = int_0^tau (sigma_i^2 / G^i(s) - 1/s) ds` so
//! that the singular part can be integrated in closed form.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fbm::{FractionalParams, TimeGrid};
use crate::quad::adaptive_simpson;
use crate::rng::{sub_seed, Stream};
use crate::stats::EnsembleStats;
use crate::volatility::{RateFn, Regime, VolPath, VolStart, VolatilityModel};
use crate::{Error, Result};

pub const DEFAULT_ODE_STEPS: usize = 4096;
pub const MIN_ODE_STEPS: usize = 16;

/// Relative slack for the bound checks; covers rounding in `G` only.
const BOUND_RTOL: f64 = 1e-10;

/// `D_t = int_t^T exp(2 int_t^u m) du`.
pub fn compute_d(growth: &RateFn, t: f64, horizon: f64) -> Result<f64> {
    if t > horizon {
        return Err(Error::Domain(format!("D_t needs t <= T, got t = {t} > T = {horizon}")));
    }
    Ok(d_unchecked(growth, t, horizon))
}

fn d_unchecked(growth: &RateFn, t: f64, horizon: f64) -> f64 {
    let tau = horizon - t;
    if tau <= 0.0 {
        return 0.0;
    }
    match *growth {
        RateFn::Constant(0.0) => tau,
        RateFn::Constant(m) => (2.0 * m * tau).exp_m1() / (2.0 * m),
        RateFn::Linear { intercept, slope: 0.0 } => {
            d_unchecked(&RateFn::Constant(intercept), t, horizon)
        }
        RateFn::Linear { .. } => {
            adaptive_simpson(|u| (2.0 * growth.integral(t, u)).exp(), t, horizon, 1e-14 * tau.max(1.0))
        }
    }
}

/// `G_t = eps^(2H-1) sigma_t^2 D_t`.
pub fn depth_deterministic(sigma_t: f64, d_t: f64, frac: FractionalParams) -> f64 {
    frac.depth_scale() * sigma_t * sigma_t * d_t
}

/// Tabulated `(G^L, G^H)` on a uniform `tau` grid over `[0, T]`.
#[derive(Debug, Clone)]
pub struct MarkovDepthTable {
    horizon: f64,
    step: f64,
    sigma: [f64; 2],
    rates: [f64; 2],
    g: [Vec<f64>; 2],
    dg: [Vec<f64>; 2],
    remainder: [Vec<f64>; 2],
    remainder_rate: [Vec<f64>; 2],
}

fn slot(r: Regime) -> usize {
    match r {
        Regime::Low => 0,
        Regime::High => 1,
    }
}

/// Shape diagnostics of a solved table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableShape {
    pub monotone: bool,
    /// `G^L <= G^H` everywhere; only asserted by theory when intensities match.
    pub ordered: bool,
    pub equal_intensities: bool,
}

impl MarkovDepthTable {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.g[0].len() - 1
    }

    pub fn sigma(&self, r: Regime) -> f64 {
        self.sigma[slot(r)]
    }

    /// Node values of `G^i` (without the `eps^(2H-1)` factor).
    pub fn nodes(&self, r: Regime) -> &[f64] {
        &self.g[slot(r)]
    }

    pub fn node_tau(&self, j: usize) -> f64 {
        if j == self.steps() {
            self.horizon
        } else {
            self.step * j as f64
        }
    }

    fn locate(&self, tau: f64) -> (usize, f64) {
        let n = self.steps();
        let x = (tau / self.step).clamp(0.0, n as f64);
        let j = (x.floor() as usize).min(n - 1);
        (j, x - j as f64)
    }

    fn hermite(&self, values: &[f64], slopes: &[f64], tau: f64) -> f64 {
        let (j, s) = self.locate(tau);
        let h = self.step;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * values[j] + h10 * h * slopes[j] + h01 * values[j + 1] + h11 * h * slopes[j + 1]
    }

    /// `G^i(tau)` by cubic Hermite interpolation using the ODE slopes.
    pub fn g(&self, r: Regime, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let i = slot(r);
        self.hermite(&self.g[i], &self.dg[i], tau)
    }

    /// `R^i(tau)`, the regular part of the integrated reversion rate.
    pub fn remainder(&self, r: Regime, tau: f64) -> f64 {
        let i = slot(r);
        self.hermite(&self.remainder[i], &self.remainder_rate[i], tau)
    }

    /// `int_lo^hi sigma_i^2 / G^i(s) ds` for `0 <= lo <= hi`; infinite at `lo = 0`.
    pub fn rate_integral(&self, r: Regime, tau_hi: f64, tau_lo: f64) -> f64 {
        if tau_lo <= 0.0 {
            return f64::INFINITY;
        }
        (tau_hi / tau_lo).ln() + self.remainder(r, tau_hi) - self.remainder(r, tau_lo)
    }

    /// `exp(-rate_integral)`, evaluated without forming the logarithm.
    pub fn decay_factor(&self, r: Regime, tau_hi: f64, tau_lo: f64) -> f64 {
        if tau_lo <= 0.0 {
            return 0.0;
        }
        tau_lo / tau_hi * (self.remainder(r, tau_lo) - self.remainder(r, tau_hi)).exp()
    }

    pub fn shape(&self) -> TableShape {
        let monotone = self.g.iter().all(|g| g.windows(2).all(|w| w[1] >= w[0]));
        let ordered = self.g[0].iter().zip(&self.g[1]).all(|(l, h)| l <= h);
        TableShape { monotone, ordered, equal_intensities: self.rates[0] == self.rates[1] }
    }

    /// Largest relative change of `G^i` at the common nodes when the step count doubles.
    pub fn refinement_gap(&self) -> Result<f64> {
        let fine = solve_markov_odes(
            self.sigma[0],
            self.sigma[1],
            self.rates[0],
            self.rates[1],
            self.horizon,
            2 * self.steps(),
        )?;
        let mut gap: f64 = 0.0;
        for i in 0..2 {
            for (j, &coarse) in self.g[i].iter().enumerate().skip(1) {
                let refined = fine.g[i][2 * j];
                gap = gap.max((refined - coarse).abs() / refined.abs());
            }
        }
        Ok(gap)
    }

    /// CSV with columns `tau,G_L,G_H`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau,G_L,G_H")?;
        for j in 0..=self.steps() {
            writeln!(
                out,
                "{},{},{}",
                crate::report::fmt_sig(self.node_tau(j)),
                crate::report::fmt_sig(self.g[0][j]),
                crate::report::fmt_sig(self.g[1][j])
            )?;
        }
        Ok(())
    }
}

fn ode_rhs(sigma: [f64; 2], rates: [f64; 2], gl: f64, gh: f64) -> [f64; 2] {
    let geo = (gl * gh).sqrt();
    [
        sigma[0] * sigma[0] + 2.0 * rates[0] * (geo - gl),
        sigma[1] * sigma[1] + 2.0 * rates[1] * (geo - gh),
    ]
}

/// Integrate the coupled depth ODEs forward in `tau` from `G^L(0) = G^H(0) = 0`.
///
/// `rate_to_high` is the intensity of leaving the low state (it weights the
/// `G^L` equation), `rate_to_low` that of leaving the high state.
pub fn solve_markov_odes(
    sigma_low: f64,
    sigma_high: f64,
    rate_to_high: f64,
    rate_to_low: f64,
    horizon: f64,
    steps: usize,
) -> Result<MarkovDepthTable> {
    if steps < MIN_ODE_STEPS {
        return Err(Error::Config(format!("need at least {MIN_ODE_STEPS} ODE steps, got {steps}")));
    }
    if !(0.0 < sigma_low && sigma_low < sigma_high) {
        return Err(Error::Config(format!(
            "need 0 < sigma_low < sigma_high, got {sigma_low}, {sigma_high}"
        )));
    }
    if rate_to_high < 0.0 || rate_to_low < 0.0 {
        return Err(Error::Config("switching intensities must be non-negative".into()));
    }
    let sigma = [sigma_low, sigma_high];
    let rates = [rate_to_high, rate_to_low];
    let h = horizon / steps as f64;
    let mut g = [Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1)];
    g[0].push(0.0);
    g[1].push(0.0);
    let (mut gl, mut gh) = (0.0_f64, 0.0_f64);
    for j in 0..steps {
        let k1 = ode_rhs(sigma, rates, gl, gh);
        let k2 = ode_rhs(sigma, rates, gl + 0.5 * h * k1[0], gh + 0.5 * h * k1[1]);
        let k3 = ode_rhs(sigma, rates, gl + 0.5 * h * k2[0], gh + 0.5 * h * k2[1]);
        let k4 = ode_rhs(sigma, rates, gl + h * k3[0], gh + h * k3[1]);
        gl += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        gh += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        if !(gl > 0.0 && gh > 0.0) {
            return Err(Error::Solver {
                tau: h * (j + 1) as f64,
                reason: format!("non-positive depth (G_L = {gl}, G_H = {gh})"),
            });
        }
        g[0].push(gl);
        g[1].push(gh);
    }
    let dg: [Vec<f64>; 2] = {
        let rhs: Vec<[f64; 2]> = (0..=steps).map(|j| ode_rhs(sigma, rates, g[0][j], g[1][j])).collect();
        [rhs.iter().map(|r| r[0]).collect(), rhs.iter().map(|r| r[1]).collect()]
    };

    // Regular part of sigma^2 / G: its value at tau = 0 follows from the
    // second-order expansion G^i = sigma_i^2 tau + a_i tau^2.
    let limits = [
        -rate_to_high * (sigma_high - sigma_low) / sigma_low,
        rate_to_low * (sigma_high - sigma_low) / sigma_high,
    ];
    let mut remainder_rate = [vec![0.0; steps + 1], vec![0.0; steps + 1]];
    for i in 0..2 {
        remainder_rate[i][0] = limits[i];
        for j in 1..=steps {
            let tau = if j == steps { horizon } else { h * j as f64 };
            remainder_rate[i][j] = (sigma[i] * sigma[i] * tau - g[i][j]) / (g[i][j] * tau);
        }
    }
    let remainder = [cumulative_quartic(&remainder_rate[0], h), cumulative_quartic(&remainder_rate[1], h)];

    Ok(MarkovDepthTable { horizon, step: h, sigma, rates, g, dg, remainder, remainder_rate })
}

/// Cumulative integral of node values with the four-point (cubic) rule.
fn cumulative_quartic(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    for j in 0..n {
        let piece = if n < 3 {
            0.5 * (f[j] + f[j + 1])
        } else if j == 0 {
            (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if j == n - 1 {
            (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]) / 24.0
        } else {
            (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]) / 24.0
        };
        out[j + 1] = out[j] + h * piece;
    }
    out
}

/// Decay of the posterior variance over one grid step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecay {
    /// `exp(-int kappa)`.
    pub factor: f64,
    /// `int kappa` over the step; `+inf` on the step that ends at the horizon.
    pub log_rate: f64,
}

#[derive(Debug, Clone)]
pub enum DepthCurve {
    ClosedForm { growth: RateFn, horizon: f64, frac: FractionalParams },
    Markov { table: MarkovDepthTable, frac: FractionalParams },
}

impl DepthCurve {
    /// Build the curve matching a volatility model.
    pub fn for_model(
        model: &VolatilityModel,
        horizon: f64,
        frac: FractionalParams,
        ode_steps: usize,
    ) -> Result<Self> {
        model.validate()?;
        match *model {
            VolatilityModel::Constant { .. } => {
                Ok(DepthCurve::ClosedForm { growth: RateFn::Constant(0.0), horizon, frac })
            }
            VolatilityModel::DeterministicGrowth { growth, .. } => {
                Ok(DepthCurve::ClosedForm { growth, horizon, frac })
            }
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, .. } => {
                let table =
                    solve_markov_odes(sigma_low, sigma_high, rate_to_high, rate_to_low, horizon, ode_steps)?;
                Ok(DepthCurve::Markov { table, frac })
            }
        }
    }

    pub fn frac(&self) -> FractionalParams {
        match self {
            DepthCurve::ClosedForm { frac, .. } | DepthCurve::Markov { frac, .. } => *frac,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            DepthCurve::ClosedForm { horizon, .. } => *horizon,
            DepthCurve::Markov { table, .. } => table.horizon,
        }
    }

    pub fn markov_table(&self) -> Option<&MarkovDepthTable> {
        match self {
            DepthCurve::Markov { table, .. } => Some(table),
            _ => None,
        }
    }

    /// Whether the curve was built for this volatility model and horizon.
    pub fn is_consistent_with(&self, model: &VolatilityModel, horizon: f64) -> bool {
        if (self.horizon() - horizon).abs() > 1e-12 * horizon {
            return false;
        }
        match (self, model) {
            (DepthCurve::ClosedForm { growth, .. }, VolatilityModel::Constant { .. }) => growth.is_zero(),
            (DepthCurve::ClosedForm { growth, .. }, VolatilityModel::DeterministicGrowth { growth: m, .. }) => {
                growth == m
            }
            (
                DepthCurve::Markov { table, .. },
                VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, rate_to_high, rate_to_low, .. },
            ) => {
                table.sigma == [*sigma_low, *sigma_high] && table.rates == [*rate_to_high, *rate_to_low]
            }
            _ => false,
        }
    }

    /// `G_t` in the given volatility state. `sigma` is ignored by the Markov
    /// curve, `regime` by the closed form.
    pub fn g(&self, t: f64, sigma: f64, regime: Option<Regime>) -> f64 {
        match self {
            DepthCurve::ClosedForm { growth, horizon, frac } => {
                depth_deterministic(sigma, d_unchecked(growth, t, *horizon), *frac)
            }
            DepthCurve::Markov { table, frac } => {
                let r = regime.expect("Markov depth curve needs a regime");
                frac.depth_scale() * table.g(r, table.horizon - t)
            }
        }
    }

    /// Exact integral of `kappa` over grid step `k` along a volatility path.
    pub fn step_decay(&self, grid: &TimeGrid, k: usize, vol: &VolPath) -> StepDecay {
        match self {
            DepthCurve::ClosedForm { growth, horizon, .. } => {
                let d0 = d_unchecked(growth, grid.t(k), *horizon);
                let d1 = d_unchecked(growth, grid.t(k + 1), *horizon);
                let drift = 2.0 * growth.integral(grid.t(k), grid.t(k + 1));
                if d1 <= 0.0 {
                    return StepDecay { factor: 0.0, log_rate: f64::INFINITY };
                }
                StepDecay { factor: d1 / d0 * drift.exp(), log_rate: (d0 / d1).ln() - drift }
            }
            DepthCurve::Markov { table, .. } => {
                let horizon = table.horizon;
                let mut factor = 1.0;
                let mut log_rate = 0.0;
                for (a, b, r) in vol.regime_segments(grid, k) {
                    let tau_a = if a == grid.t(k) { grid.remaining(k) } else { horizon - a };
                    let tau_b = if b == grid.t(k + 1) { grid.remaining(k + 1) } else { horizon - b };
                    factor *= table.decay_factor(r, tau_a, tau_b);
                    log_rate += table.rate_integral(r, tau_a, tau_b);
                }
                StepDecay { factor, log_rate }
            }
        }
    }

    /// `q(t)` such that `eps^(2H-1) sigma_t^2 / (2 sqrt(G_t)) = q(t) / sqrt(T - t)`.
    /// `q` stays finite at the horizon.
    fn root_weight(&self, tau: f64, sigma: f64, regime: Option<Regime>) -> f64 {
        let frac = self.frac();
        match self {
            DepthCurve::ClosedForm { growth, horizon, .. } => {
                if tau <= 0.0 {
                    0.5 * frac.noise_scale() * sigma
                } else {
                    let d = d_unchecked(growth, horizon - tau, *horizon);
                    0.5 * frac.noise_scale() * sigma * (tau / d).sqrt()
                }
            }
            DepthCurve::Markov { table, .. } => {
                let r = regime.expect("Markov depth curve needs a regime");
                let s = table.sigma(r);
                if tau <= 0.0 {
                    0.5 * frac.noise_scale() * s
                } else {
                    0.5 * frac.noise_scale() * s * s * (tau / table.g(r, tau)).sqrt()
                }
            }
        }
    }

    /// `int_t^T eps^(2H-1) sigma_s^2 / (2 sqrt(G_s)) ds` along a volatility
    /// path started at node `from`. The `1/sqrt(T - s)` singularity is
    /// integrated exactly against a piecewise-linear `q`.
    pub fn fixed_point_integral(&self, grid: &TimeGrid, vol: &VolPath, from: usize) -> f64 {
        let horizon = grid.horizon();
        let mut total = 0.0;
        for k in from..grid.steps() {
            match self {
                DepthCurve::ClosedForm { .. } => {
                    let (ta, tb) = (grid.remaining(k), grid.remaining(k + 1));
                    let qa = self.root_weight(ta, vol.sigma[k], None);
                    let qb = self.root_weight(tb, vol.sigma[k + 1], None);
                    total += product_trapezoid(ta, tb, qa, qb);
                }
                DepthCurve::Markov { .. } => {
                    for (a, b, r) in vol.regime_segments(grid, k) {
                        let ta = if a == grid.t(k) { grid.remaining(k) } else { horizon - a };
                        let tb = if b == grid.t(k + 1) { grid.remaining(k + 1) } else { horizon - b };
                        let qa = self.root_weight(ta, 0.0, Some(r));
                        let qb = self.root_weight(tb, 0.0, Some(r));
                        total += product_trapezoid(ta, tb, qa, qb);
                    }
                }
            }
        }
        total
    }
}

/// `int_lo^hi q(tau) tau^(-1/2) dtau` with `q` linear between `q(hi) = q_hi`
/// and `q(lo) = q_lo`.
fn product_trapezoid(tau_hi: f64, tau_lo: f64, q_hi: f64, q_lo: f64) -> f64 {
    let width = tau_hi - tau_lo;
    if width <= 0.0 {
        return 0.0;
    }
    let (rh, rl) = (tau_hi.sqrt(), tau_lo.sqrt());
    let m0 = 2.0 * (rh - rl);
    let m1 = 2.0 / 3.0 * (tau_hi * rh - tau_lo * rl);
    q_lo * m0 + (q_hi - q_lo) / width * (m1 - tau_lo * m0)
}

/// One probe of the fixed-point check.
#[derive(Debug, Clone)]
pub struct FixedPointProbe {
    pub t: f64,
    pub state: String,
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    pub passed: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub probes: Vec<FixedPointProbe>,
}

impl FixedPointReport {
    pub fn passed(&self) -> bool {
        self.probes.iter().all(|p| p.passed && !p.inconclusive)
    }
}

/// Quadrature floor added to the 3-SE band; matters only when the
/// right-hand side is deterministic and the SE vanishes.
const FIXED_POINT_QUAD_RTOL: f64 = 1e-5;

/// Monte Carlo check of `sqrt(G_t) = E[int_t^T eps^(2H-1) sigma_s^2 / (2 sqrt(G_s)) ds | F_t]`
/// at `t in {0, T/4, T/2, 3T/4}`, in both regimes for the Markov model.
pub fn verify_fixed_point(
    curve: &DepthCurve,
    model: &VolatilityModel,
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<FixedPointReport> {
    if !curve.is_consistent_with(model, grid.horizon()) {
        return Err(Error::Config("depth curve does not match the volatility model".into()));
    }
    if paths < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: paths });
    }
    let horizon = grid.horizon();
    let probe_nodes: Vec<usize> =
        [0.0, 0.25, 0.5, 0.75].iter().map(|f| grid.index_at(f * horizon)).collect();
    let starts: Vec<(String, VolStart)> = match model {
        VolatilityModel::TwoStateMarkov { .. } => vec![
            ("low".to_string(), VolStart::Regime(Regime::Low)),
            ("high".to_string(), VolStart::Regime(Regime::High)),
        ],
        _ => vec![("sigma".to_string(), VolStart::Sigma(model.initial_sigma()))],
    };
    let mut probes = Vec::new();
    let mut probe_id = 0u64;
    for &node in &probe_nodes {
        let t = grid.t(node);
        for (label, start) in &starts {
            // the growth model is started from its mean path sigma0 exp(int_0^t m)
            let start = match (*start, model.growth()) {
                (VolStart::Sigma(s0), Some(m)) => VolStart::Sigma(s0 * m.integral(0.0, t).exp()),
                (s, _) => s,
            };
            let (sigma_t, regime) = match start {
                VolStart::Sigma(s) => (s, None),
                VolStart::Regime(r) => (model.regime_sigma(r).unwrap_or(0.0), Some(r)),
            };
            let target = curve.g(t, sigma_t, regime).sqrt();
            let mut stats = EnsembleStats::new();
            for p in 0..paths as u64 {
                let key = probe_id * paths as u64 + p;
                let mut diffusion = ChaCha8Rng::seed_from_u64(sub_seed(seed, key, Stream::VolDiffusion));
                let mut clock = ChaCha8Rng::seed_from_u64(sub_seed(seed, key, Stream::RegimeClock));
                let vol = model.simulate_from(grid, node, start, &mut diffusion, &mut clock);
                stats.push(curve.fixed_point_integral(grid, &vol, node));
            }
            probe_id += 1;
            let estimate = stats.mean();
            let se = stats.standard_error();
            let passed = (estimate - target).abs() <= 3.0 * se + FIXED_POINT_QUAD_RTOL * target;
            probes.push(FixedPointProbe {
                t,
                state: label.clone(),
                target,
                estimate,
                se,
                passed,
                inconclusive: se > 0.5 * target,
            });
        }
    }
    Ok(FixedPointReport { probes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub t: f64,
    pub state: String,
    pub g: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub points: usize,
    /// Violations of `sigma_lo^2 eps^(2H-1) (T-t) <= G_t <= sigma_hi^2 eps^(2H-1) (T-t)`.
    pub band_violations: Vec<BoundViolation>,
    /// Violations of `G_t <= eps^(2H-1) E[int_t^T sigma_s^2 ds | F_t]`.
    pub expectation_violations: Vec<BoundViolation>,
    /// Every point with `t < T` lies strictly inside the band.
    pub strict_interior: bool,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.band_violations.is_empty() && self.expectation_violations.is_empty()
    }
}

/// Evaluate both bounds at every grid node. The Markov curve is checked in
/// both regimes; the closed form along the mean path `sigma0 exp(int_0^t m)`.
pub fn check_bounds(
    curve: &DepthCurve,
    model: &VolatilityModel,
    sigma_lower: f64,
    sigma_upper: f64,
    grid: &TimeGrid,
) -> BoundsReport {
    let frac = curve.frac();
    let scale = frac.depth_scale();
    let horizon = grid.horizon();
    let mut band_violations = Vec::new();
    let mut expectation_violations = Vec::new();
    let mut strict_interior = true;
    let mut points = 0;
    for k in 0..=grid.steps() {
        let t = grid.t(k);
        let tau = grid.remaining(k);
        let states: Vec<(String, f64, Option<Regime>, VolStart)> = match model {
            VolatilityModel::TwoStateMarkov { sigma_low, sigma_high, .. } => vec![
                ("low".into(), *sigma_low, Some(Regime::Low), VolStart::Regime(Regime::Low)),
                ("high".into(), *sigma_high, Some(Regime::High), VolStart::Regime(Regime::High)),
            ],
            _ => {
                let growth = model.growth().unwrap_or(RateFn::Constant(0.0));
                let s = model.initial_sigma() * growth.integral(0.0, t).exp();
                vec![("sigma".into(), s, None, VolStart::Sigma(s))]
            }
        };
        for (label, sigma, regime, start) in states {
            points += 1;
            let g = curve.g(t, sigma, regime);
            let lower = sigma_lower * sigma_lower * scale * tau;
            let upper = sigma_upper * sigma_upper * scale * tau;
            let slack = BOUND_RTOL * upper + f64::MIN_POSITIVE;
            if g < lower - slack || g > upper + slack {
                band_violations.push(BoundViolation { t, state: label.clone(), g, lower, upper });
            }
            if tau > 0.0 && !(g > lower && g < upper) {
                strict_interior = false;
            }
            let second_moment = |u: f64| model.conditional_second_moment(start, t, u);
            let expected = scale * adaptive_simpson(second_moment, t, horizon, 1e-14 * (1.0 + tau));
            if g > expected + BOUND_RTOL * expected.abs() + f64::MIN_POSITIVE {
                expectation_violations.push(BoundViolation { t, state: label, g, lower: 0.0, upper: expected });
            }
        }
    }
    BoundsReport { points, band_violations, expectation_violations, strict_interior }
}
