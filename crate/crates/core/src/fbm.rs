//! Brownian drivers, the memory-kernel process `psi` and the semimartingale
//! approximation of fractional Brownian motion built from it.
//!
//! With kernel `k(r) = (r + eps)^(H - 3/2)` the kernel process is
//! `psi_t = int_0^t k(t - u) dW_u` and the approximation reads
//! `B^{eps,H}_t = (H - 1/2) int_0^t psi_s ds + eps^(H - 1/2) W_t`.
//! The stochastic integral uses left-point (Ito) sums over the Brownian
//! increments, the time integral uses the trapezoid rule.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Largest grid accepted by the dense exact-fBm sampler.
pub const EXACT_FBM_MAX_STEPS: usize = 4096;

const CHOLESKY_JITTER: f64 = 1e-12;

/// Uniform grid `t_k = k T / N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            self.horizon * k as f64 / self.steps as f64
        }
    }

    /// Time remaining to the horizon at node `k`.
    pub fn remaining(&self, k: usize) -> f64 {
        self.horizon * (self.steps - k) as f64 / self.steps as f64
    }

    /// Largest node index with `t_k <= t`.
    pub fn index_at(&self, t: f64) -> usize {
        let raw = (t / self.horizon * self.steps as f64 + 1e-9).floor();
        (raw.max(0.0) as usize).min(self.steps)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.t(k))
    }
}

/// Hurst index and smoothing parameter of the fBm approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    hurst: f64,
    epsilon: f64,
}

impl FractionalParams {
    /// `H = 1/2` is accepted as the memoryless reference case.
    pub fn new(hurst: f64, epsilon: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&hurst) {
            return Err(Error::Config(format!("Hurst index must lie in [1/2, 1], got {hurst}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { hurst, epsilon })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `H - 1/2`, the weight of the memory correction.
    pub fn excess(&self) -> f64 {
        self.hurst - 0.5
    }

    /// `eps^(H - 1/2)`, the loading of `W` in the approximation.
    pub fn noise_scale(&self) -> f64 {
        self.epsilon.powf(self.hurst - 0.5)
    }

    /// `eps^(2H - 1)`.
    pub fn depth_scale(&self) -> f64 {
        self.epsilon.powf(2.0 * self.hurst - 1.0)
    }
}

/// One Brownian realisation together with its kernel process and fBm
/// approximation. `increments` has length `N`, every other series `N + 1`.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub increments: Vec<f64>,
    pub brownian: Vec<f64>,
    pub psi: Vec<f64>,
    pub fbm_approx: Vec<f64>,
}

impl NoisePath {
    fn from_increments(increments: Vec<f64>) -> Self {
        let n = increments.len();
        let mut brownian = Vec::with_capacity(n + 1);
        brownian.push(0.0);
        let mut w = 0.0;
        for dw in &increments {
            w += dw;
            brownian.push(w);
        }
        Self {
            increments,
            brownian,
            psi: vec![0.0; n + 1],
            fbm_approx: vec![0.0; n + 1],
        }
    }

    /// Brownian increments drawn from an existing generator.
    pub fn brownian_from<R: Rng>(grid: &TimeGrid, rng: &mut R) -> Self {
        let sd = grid.dt().sqrt();
        let increments = (0..grid.steps())
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_increments(increments)
    }

    /// Brownian increments, kernel process and fBm approximation in one go.
    pub fn generate<R: Rng>(grid: &TimeGrid, kernel: &KernelWeights, rng: &mut R) -> Self {
        let mut path = Self::brownian_from(grid, rng);
        path.psi = kernel.psi(&path.increments);
        path.fbm_approx = kernel.fbm_approx(&path.psi, &path.brownian);
        path
    }

    pub fn with_increments(increments: Vec<f64>) -> Self {
        Self::from_increments(increments)
    }
}

/// Draw i.i.d. `N(0, dt)` increments. Only `increments` and `brownian` are
/// populated; `psi` and `fbm_approx` are left at zero.
pub fn sample_brownian(grid: &TimeGrid, seed: u64) -> NoisePath {
    let mut rng = stream_rng(seed, 0, Stream::OrderFlow);
    NoisePath::brownian_from(grid, &mut rng)
}

/// Kernel weights `k(m dt)` for lags `m = 0..=N`, shared by every path on a grid.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    weights: Vec<f64>,
    dt: f64,
    params: FractionalParams,
}

impl KernelWeights {
    pub fn new(grid: &TimeGrid, params: FractionalParams) -> Self {
        let dt = grid.dt();
        let exponent = params.hurst() - 1.5;
        let weights = (0..=grid.steps())
            .map(|m| (m as f64 * dt + params.epsilon()).powf(exponent))
            .collect();
        Self { weights, dt, params }
    }

    pub fn params(&self) -> FractionalParams {
        self.params
    }

    /// `psi_k = sum_{j<k} k((k-j) dt) dW_j`, with `psi_0 = 0`.
    pub fn psi(&self, increments: &[f64]) -> Vec<f64> {
        let n = increments.len();
        assert!(n < self.weights.len(), "kernel built for a shorter grid");
        let reversed: Vec<f64> = increments.iter().rev().copied().collect();
        let mut psi = Vec::with_capacity(n + 1);
        psi.push(0.0);
        for k in 1..=n {
            psi.push(dot(&self.weights[1..=k], &reversed[n - k..]));
        }
        psi
    }

    /// Coefficients `c_j` with `B^{eps,H}_T = sum_j c_j dW_j`, matching
    /// [`Self::psi`] followed by [`Self::fbm_approx`] on the full grid.
    pub fn terminal_coefficients(&self) -> Vec<f64> {
        let n = self.weights.len() - 1;
        let mut prefix = vec![0.0; n + 1];
        for m in 1..=n {
            prefix[m] = prefix[m - 1] + self.weights[m];
        }
        let excess = self.params.excess();
        let scale = self.params.noise_scale();
        (0..n)
            .map(|j| excess * self.dt * (prefix[n - 1 - j] + 0.5 * self.weights[n - j]) + scale)
            .collect()
    }

    /// `psi_N` as a linear functional of the increments.
    pub fn terminal_psi(&self, increments: &[f64]) -> f64 {
        let n = increments.len();
        (0..n).map(|j| self.weights[n - j] * increments[j]).sum()
    }

    /// Trapezoid integral of `psi` scaled by `H - 1/2`, plus `eps^(H-1/2) W`.
    pub fn fbm_approx(&self, psi: &[f64], brownian: &[f64]) -> Vec<f64> {
        let excess = self.params.excess();
        let scale = self.params.noise_scale();
        let mut out = Vec::with_capacity(psi.len());
        out.push(0.0);
        let mut integral = 0.0;
        for k in 1..psi.len() {
            integral += 0.5 * (psi[k - 1] + psi[k]) * self.dt;
            out.push(excess * integral + scale * brownian[k]);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Kernel process of a path on `grid`.
pub fn kernel_psi(path: &NoisePath, params: FractionalParams, grid: &TimeGrid) -> Vec<f64> {
    KernelWeights::new(grid, params).psi(&path.increments)
}

/// fBm approximation of a path whose `psi` is already populated.
pub fn fbm_semimartingale(path: &NoisePath, params: FractionalParams, grid: &TimeGrid) -> Vec<f64> {
    KernelWeights::new(grid, params).fbm_approx(&path.psi, &path.brownian)
}

/// Direct left-point kernel sum `sum_{j<k} (t_k - t_j + eps)^(H-1/2) dW_j`.
///
/// This is the second route to `B^{eps,H}` used to check the integrated
/// form above; it shares no code with [`KernelWeights`].
pub fn direct_kernel_fbm(increments: &[f64], grid: &TimeGrid, params: FractionalParams) -> Vec<f64> {
    let n = increments.len();
    let exponent = params.hurst() - 0.5;
    let mut out = vec![0.0; n + 1];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        let tk = grid.t(k);
        *slot = (0..k)
            .map(|j| (tk - grid.t(j) + params.epsilon()).powf(exponent) * increments[j])
            .sum();
    }
    out
}

/// Riemann-Liouville value `int_0^T (T - s)^(H-1/2) dW_s` with the kernel
/// averaged exactly over each cell. Used as the `eps -> 0` target.
pub fn riemann_liouville_terminal(increments: &[f64], grid: &TimeGrid, hurst: f64) -> f64 {
    let a = hurst + 0.5;
    let dt = grid.dt();
    increments
        .iter()
        .enumerate()
        .map(|(j, dw)| {
            let hi = grid.remaining(j);
            let lo = grid.remaining(j + 1);
            (hi.powf(a) - lo.powf(a)) / (a * dt) * dw
        })
        .sum()
}

/// fBm covariance `R(t, s) = (|t|^2H + |s|^2H - |t - s|^2H) / 2`.
pub fn fbm_covariance(t: f64, s: f64, hurst: f64) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return Err(Error::Domain(format!("fBm covariance needs t, s >= 0, got ({t}, {s})")));
    }
    let h2 = 2.0 * hurst;
    Ok(0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2)))
}

/// Exact fBm sampler by dense Cholesky factorisation of the covariance on
/// the grid nodes `t_1..t_N`. Test oracle only.
#[derive(Debug, Clone)]
pub struct ExactFbm {
    factor: DMatrix<f64>,
}

impl ExactFbm {
    pub fn new(grid: &TimeGrid, hurst: f64) -> Result<Self> {
        let n = grid.steps();
        if n > EXACT_FBM_MAX_STEPS {
            return Err(Error::Config(format!(
                "exact fBm limited to {EXACT_FBM_MAX_STEPS} steps, got {n}"
            )));
        }
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = fbm_covariance(grid.t(i + 1), grid.t(j + 1), hurst)?;
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let factor = match cov.clone().cholesky() {
            Some(ch) => ch.l(),
            None => {
                let mut jittered = cov;
                for i in 0..n {
                    jittered[(i, i)] += CHOLESKY_JITTER;
                }
                jittered
                    .cholesky()
                    .ok_or_else(|| {
                        Error::Oracle(format!(
                            "fBm covariance not positive definite (H = {hurst}, N = {n})"
                        ))
                    })?
                    .l()
            }
        };
        Ok(Self { factor })
    }

    /// One path `B^H_{t_0..t_N}` with `B^H_0 = 0`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.factor.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.factor * z;
        std::iter::once(0.0).chain(x.iter().copied()).collect()
    }
}

pub fn exact_fbm(grid: &TimeGrid, hurst: f64, seed: u64) -> Result<Vec<f64>> {
    let sampler = ExactFbm::new(grid, hurst)?;
    let mut rng = stream_rng(seed, 0, Stream::ExactFbm);
    Ok(sampler.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t, n).unwrap()
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(matches!(TimeGrid::new(1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(2.0, 7);
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(7), 2.0);
        assert!((g.dt() - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(g.index_at(1.0), 3);
        assert_eq!(g.index_at(2.0), 7);
    }

    #[test]
    fn fractional_params_range() {
        assert!(FractionalParams::new(0.5, 0.1).is_ok());
        assert!(FractionalParams::new(1.0, 0.1).is_ok());
        assert!(FractionalParams::new(0.4, 0.1).is_err());
        assert!(FractionalParams::new(0.7, 0.0).is_err());
    }

    #[test]
    fn single_increment_is_reproducible() {
        let g = grid(0.25, 1);
        let a = sample_brownian(&g, 42);
        let b = sample_brownian(&g, 42);
        assert_eq!(a.increments.len(), 1);
        assert_eq!(a.increments, b.increments);
        assert_ne!(a.increments, sample_brownian(&g, 43).increments);
    }

    #[test]
    fn increment_variance_matches_dt() {
        // Sample variance of N(0, dt) has standard error dt * sqrt(2 / (n - 1)).
        let g = grid(100_000.0 / 256.0, 100_000);
        let path = sample_brownian(&g, 9);
        let n = path.increments.len() as f64;
        let mean = path.increments.iter().sum::<f64>() / n;
        let var = path.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let dt = 1.0 / 256.0;
        let se = dt * (2.0 / (n - 1.0)).sqrt();
        assert!((var - dt).abs() < 3.0 * se, "var {var} vs {dt} (se {se})");
    }

    #[test]
    fn psi_single_increment() {
        let g = grid(1.0, 1);
        let p = FractionalParams::new(0.75, 1.0).unwrap();
        let path = NoisePath::with_increments(vec![1.0]);
        let psi = kernel_psi(&path, p, &g);
        assert_eq!(psi[0], 0.0);
        assert!((psi[1] - 0.594_603_557_501_360_5).abs() < 1e-12);
    }

    #[test]
    fn psi_vanishes_without_noise() {
        let g = grid(1.0, 32);
        let p = FractionalParams::new(0.8, 0.05).unwrap();
        let path = NoisePath::with_increments(vec![0.0; 32]);
        assert!(kernel_psi(&path, p, &g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn brownian_case_reduces_to_w() {
        let g = grid(1.0, 64);
        let p = FractionalParams::new(0.5, 0.3).unwrap();
        let k = KernelWeights::new(&g, p);
        let mut rng = stream_rng(1, 0, Stream::OrderFlow);
        let path = NoisePath::generate(&g, &k, &mut rng);
        // psi is well defined but the memory correction carries weight zero
        assert!(path.psi.iter().any(|&x| x != 0.0));
        for (b, w) in path.fbm_approx.iter().zip(&path.brownian) {
            assert!((b - w).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_psi_gives_scaled_brownian() {
        let g = grid(1.0, 16);
        let p = FractionalParams::new(0.7, 0.01).unwrap();
        let mut path = sample_brownian(&g, 3);
        path.psi = vec![0.0; 17];
        let b = fbm_semimartingale(&path, p, &g);
        for (b, w) in b.iter().zip(&path.brownian) {
            assert!((b - p.noise_scale() * w).abs() < 1e-15);
        }
    }

    #[test]
    fn covariance_values() {
        assert!((fbm_covariance(1.0, 1.0, 0.83).unwrap() - 1.0).abs() < 1e-15);
        assert!((fbm_covariance(2.0, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((fbm_covariance(2.0, 1.0, 0.75).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(fbm_covariance(-1.0, 1.0, 0.7), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_fbm_cap() {
        let g = grid(1.0, EXACT_FBM_MAX_STEPS + 1);
        assert!(ExactFbm::new(&g, 0.7).is_err());
    }

    #[test]
    fn exact_fbm_brownian_increments() {
        // H = 1/2: increments are i.i.d. N(0, dt); check their pooled variance.
        let g = grid(1.0, 8);
        let sampler = ExactFbm::new(&g, 0.5).unwrap();
        let mut rng = stream_rng(5, 0, Stream::ExactFbm);
        let mut sum_sq = 0.0;
        let mut lag_prod = 0.0;
        let paths = 5000;
        for _ in 0..paths {
            let b = sampler.sample(&mut rng);
            let inc: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
            sum_sq += inc.iter().map(|x| x * x).sum::<f64>();
            lag_prod += inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
        }
        let n = (paths * 8) as f64;
        let dt = g.dt();
        let var = sum_sq / n;
        assert!((var - dt).abs() < 3.0 * dt * (2.0 / n).sqrt());
        let m = (paths * 7) as f64;
        assert!((lag_prod / m).abs() < 3.0 * dt / m.sqrt());
    }

    #[test]
    fn exact_fbm_terminal_variance() {
        // R(T, T) = T^{2H} = 1 for T = 1.
        let g = grid(1.0, 16);
        let sampler = ExactFbm::new(&g, 0.75).unwrap();
        let mut rng = stream_rng(6, 0, Stream::ExactFbm);
        let samples: Vec<f64> = (0..10_000).map(|_| sampler.sample(&mut rng)[16]).collect();
        let n = samples.len() as f64;
        let sq: Vec<f64> = samples.iter().map(|x| x * x).collect();
        let mean_sq = sq.iter().sum::<f64>() / n;
        let sd = (sq.iter().map(|x| (x - mean_sq).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean_sq - 1.0).abs() < 3.0 * sd / n.sqrt(), "{mean_sq}");
    }

    #[test]
    fn terminal_coefficients_match_full_route() {
        let g = grid(1.0, 200);
        let p = FractionalParams::new(0.7, 0.05).unwrap();
        let k = KernelWeights::new(&g, p);
        let mut rng = stream_rng(8, 0, Stream::OrderFlow);
        let path = NoisePath::generate(&g, &k, &mut rng);
        let c = k.terminal_coefficients();
        let via: f64 = c.iter().zip(&path.increments).map(|(c, dw)| c * dw).sum();
        assert!((via - path.fbm_approx[200]).abs() < 1e-12);
        assert!((k.terminal_psi(&path.increments) - path.psi[200]).abs() < 1e-12);
    }

    #[test]
    fn riemann_liouville_of_constant_increments() {
        // dW_j = dt gives int_0^T (T - s)^(H-1/2) ds = T^(H+1/2) / (H + 1/2).
        let g = grid(1.0, 10);
        let inc = vec![0.1; 10];
        let v = riemann_liouville_terminal(&inc, &g, 0.7);
        assert!((v - 1.0 / 1.2).abs() < 1e-12);
    }
}
