//! Equilibrium paths: price, posterior variance, price impact, mean-reversion
//! rate, the insider's trading rate and the order flow.
//!
//! One Brownian driver `W` moves the memory kernel, the noise order flow and
//! (through `dP = lambda dY`) the price. The noise demand is
//! `(H - 1/2) psi dt + sigma eps^(H-1/2) dW`, which the `-(H - 1/2) psi` term
//! of the insider strategy cancels exactly, so the price follows
//! `dP = kappa (v - P) dt + sqrt(Sigma kappa) dW`.
//!
//! The posterior variance is advanced with the exact integral of `kappa`
//! over each step (split at regime jumps), so `Sigma` stays positive and the
//! directing process `tau` is available without extra quadrature error.
//! Quantities that depend on `kappa` are stored on nodes `0..N-1` only.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::depth::{DepthCurve, DEFAULT_ODE_STEPS};
use crate::fbm::{FractionalParams, KernelWeights, NoisePath, TimeGrid};
use crate::rng::{stream_rng, Stream};
use crate::volatility::{Regime, VolatilityModel};
use crate::{Error, Result};

mod accounting;
mod closed_form;

pub use accounting::{
    estimate_a, execution_cost, fractional_correction, price_diffusion, profit_cost_decomposition,
    realized_profit, standardized_deviation, time_change, value_function, DecompositionReport, Deviation,
    TimeChangeReport, ValueAccount,
};
pub use closed_form::{
    expected_trading_rate, impact_deterministic, mean_reversion, price_impact, strategy, value_volatility,
};

pub const MIN_STEPS: usize = 16;

/// `Sigma` below this multiple of `Sigma_0` is treated as exhausted.
pub const SIGMA_FLOOR: f64 = 1e-14;

/// How the liquidation value is fixed for each path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiquidationValue {
    /// The same `v` on every path.
    Fixed(f64),
    /// `v ~ N(P_0, Sigma_0)` drawn per path.
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub value: LiquidationValue,
    pub prior_mean: f64,
    pub prior_variance: f64,
    pub horizon: f64,
    pub frac: FractionalParams,
}

impl MarketParams {
    pub fn new(
        value: LiquidationValue,
        prior_mean: f64,
        prior_variance: f64,
        horizon: f64,
        frac: FractionalParams,
    ) -> Result<Self> {
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::Config(format!("prior variance must be positive, got {prior_variance}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if let LiquidationValue::Fixed(v) = value {
            if !v.is_finite() {
                return Err(Error::Config("liquidation value must be finite".into()));
            }
        }
        Ok(Self { value, prior_mean, prior_variance, horizon, frac })
    }
}

/// One discretised equilibrium path. `kappa`-dependent series have length
/// `N` (nodes up to `T - dt`), the others `N + 1`.
#[derive(Debug, Clone)]
pub struct SimPath {
    pub value: f64,
    pub sigma: Vec<f64>,
    pub regime: Option<Vec<Regime>>,
    pub g: Vec<f64>,
    pub lambda: Vec<f64>,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
    pub posterior: Vec<f64>,
    pub price: Vec<f64>,
    pub flow: Vec<f64>,
    pub psi: Vec<f64>,
    pub increments: Vec<f64>,
    pub tau: Vec<f64>,
    /// First node where `Sigma` fell under the floor before the horizon.
    pub floor_hit: Option<usize>,
}

impl SimPath {
    pub fn steps(&self) -> usize {
        self.increments.len()
    }
}

/// A fully specified economy on a fixed grid.
#[derive(Debug, Clone)]
pub struct Economy {
    params: MarketParams,
    vol: VolatilityModel,
    curve: DepthCurve,
    grid: TimeGrid,
    kernel: KernelWeights,
}

impl Economy {
    pub fn new(params: MarketParams, vol: VolatilityModel, steps: usize) -> Result<Self> {
        let curve = DepthCurve::for_model(&vol, params.horizon, params.frac, DEFAULT_ODE_STEPS)?;
        Self::with_curve(params, vol, curve, steps)
    }

    pub fn with_curve(params: MarketParams, vol: VolatilityModel, curve: DepthCurve, steps: usize) -> Result<Self> {
        vol.validate()?;
        if steps < MIN_STEPS {
            return Err(Error::Config(format!("need at least {MIN_STEPS} steps, got {steps}")));
        }
        if !curve.is_consistent_with(&vol, params.horizon) || curve.frac() != params.frac {
            return Err(Error::Config("depth curve does not match the volatility model".into()));
        }
        let grid = TimeGrid::new(params.horizon, steps)?;
        let kernel = KernelWeights::new(&grid, params.frac);
        Ok(Self { params, vol, curve, grid, kernel })
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn vol(&self) -> &VolatilityModel {
        &self.vol
    }

    pub fn curve(&self) -> &DepthCurve {
        &self.curve
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Path `index` of the ensemble keyed by `master`, with the `beta`
    /// component `kappa / lambda` of the strategy multiplied by `beta_scale`.
    pub fn path(&self, master: u64, index: u64, beta_scale: f64) -> SimPath {
        let p = &self.params;
        let frac = p.frac;
        let grid = &self.grid;
        let n = grid.steps();
        let dt = grid.dt();

        let value = match p.value {
            LiquidationValue::Fixed(v) => v,
            LiquidationValue::Prior => {
                let mut rng = stream_rng(master, index, Stream::Value);
                p.prior_mean + p.prior_variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
        };
        let mut diffusion = stream_rng(master, index, Stream::VolDiffusion);
        let mut clock = stream_rng(master, index, Stream::RegimeClock);
        let vol = self.vol.simulate(grid, &mut diffusion, &mut clock);
        let mut order_flow = stream_rng(master, index, Stream::OrderFlow);
        let noise = NoisePath::generate(grid, &self.kernel, &mut order_flow);

        let excess = frac.excess();
        let noise_scale = frac.noise_scale();
        let depth_scale = frac.depth_scale();
        let floor = SIGMA_FLOOR * p.prior_variance;

        let mut g = Vec::with_capacity(n);
        let mut lambda = Vec::with_capacity(n);
        let mut kappa = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        let mut posterior = Vec::with_capacity(n + 1);
        let mut price = Vec::with_capacity(n + 1);
        let mut flow = Vec::with_capacity(n + 1);
        let mut tau = Vec::with_capacity(n + 1);
        posterior.push(p.prior_variance);
        price.push(p.prior_mean);
        flow.push(0.0);
        tau.push(0.0);
        let mut log_decay = 0.0;
        let mut floor_hit = None;

        for k in 0..n {
            let t = grid.t(k);
            let s = vol.sigma[k];
            let regime = vol.regime.as_ref().map(|r| r[k]);
            let gk = self.curve.g(t, s, regime);
            let sig = posterior[k];
            let lam = (sig / gk).sqrt();
            let kap = depth_scale * s * s / gk;
            let edge = value - price[k];
            let th = beta_scale * kap / lam * edge - excess * noise.psi[k];
            let dy = th * dt + excess * noise.psi[k] * dt + noise_scale * s * noise.increments[k];
            g.push(gk);
            lambda.push(lam);
            kappa.push(kap);
            theta.push(th);
            price.push(price[k] + lam * dy);
            flow.push(flow[k] + dy);

            let decay = self.curve.step_decay(grid, k, &vol);
            let next = if k + 1 == n { 0.0 } else { sig * decay.factor };
            log_decay += decay.log_rate;
            posterior.push(next);
            tau.push(if k + 1 == n { p.horizon } else { -p.horizon * (-log_decay).exp_m1() });
            if k + 1 < n && floor_hit.is_none() && next < floor {
                floor_hit = Some(k + 1);
            }
        }

        SimPath {
            value,
            sigma: vol.sigma,
            regime: vol.regime,
            g,
            lambda,
            kappa,
            theta,
            posterior,
            price,
            flow,
            psi: noise.psi,
            increments: noise.increments,
            tau,
            floor_hit,
        }
    }

    /// Map every path of an ensemble through `f`, in parallel, returning the
    /// results in path order.
    pub fn map_paths<T, F>(&self, master: u64, paths: usize, beta_scale: f64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&SimPath) -> T + Sync,
    {
        (0..paths as u64)
            .into_par_iter()
            .map(|i| f(&self.path(master, i, beta_scale)))
            .collect()
    }

    /// Residual of `dP = lambda dY` against the mean-reverting form
    /// `dP = kappa (v - P) dt + sqrt(Sigma kappa) dW`, relative to the size
    /// of the price increment.
    pub fn construction_residual(&self, path: &SimPath) -> f64 {
        let dt = self.grid.dt();
        let mut worst: f64 = 0.0;
        for k in 0..path.steps() {
            let dp = path.price[k + 1] - path.price[k];
            let dp_via_flow = path.lambda[k] * (path.flow[k + 1] - path.flow[k]);
            let drift = path.kappa[k] * (path.value - path.price[k]) * dt;
            let diffusion = (path.posterior[k] * path.kappa[k]).sqrt() * path.increments[k];
            let scale = drift.abs() + diffusion.abs() + f64::MIN_POSITIVE;
            worst = worst.max((dp - (drift + diffusion)).abs() / scale);
            worst = worst.max((dp - dp_via_flow).abs() / scale);
        }
        worst
    }
}

/// Single equilibrium path from a seed.
pub fn simulate_path(
    params: MarketParams,
    vol: VolatilityModel,
    depth: DepthCurve,
    steps: usize,
    seed: u64,
) -> Result<SimPath> {
    Ok(Economy::with_curve(params, vol, depth, steps)?.path(seed, 0, 1.0))
}
