use crate::depth::compute_d;
use crate::fbm::FractionalParams;
use crate::volatility::RateFn;
use crate::{Error, Result};

/// Insider trading rate `(kappa / lambda)(v - P) - (H - 1/2) psi`.
pub fn strategy(v: f64, p: f64, lambda: f64, kappa: f64, psi: f64, hurst: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("price impact must be positive, got {lambda}")));
    }
    Ok(kappa / lambda * (v - p) - (hurst - 0.5) * psi)
}

/// `lambda = sqrt(Sigma / G)`.
pub fn price_impact(posterior: f64, g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("depth must be positive, got {g}")));
    }
    if posterior < 0.0 {
        return Err(Error::Domain(format!("posterior variance must be non-negative, got {posterior}")));
    }
    Ok((posterior / g).sqrt())
}

/// `kappa = eps^(2H-1) sigma^2 / G`.
pub fn mean_reversion(sigma: f64, g: f64, frac: FractionalParams) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("depth must be positive, got {g}")));
    }
    Ok(frac.depth_scale() * sigma * sigma / g)
}

/// `sigma_v = sqrt(Sigma_0 / D_0)` under deterministic growth `m`.
pub fn value_volatility(prior_variance: f64, growth: &RateFn, horizon: f64) -> Result<f64> {
    Ok((prior_variance / compute_d(growth, 0.0, horizon)?).sqrt())
}

/// `lambda_t = exp(int_0^t m) sigma_v / (eps^(H-1/2) sigma_t)`.
pub fn impact_deterministic(t: f64, growth: &RateFn, sigma_t: f64, sigma_v: f64, frac: FractionalParams) -> f64 {
    growth.integral(0.0, t).exp() * sigma_v / (frac.noise_scale() * sigma_t)
}

/// `E[theta_t | v, F_0] = eps^(H-1/2) exp(2 int_0^t m) sigma_0 (v - P_0) / (sigma_v D_0)`
/// under deterministic growth with no volatility noise.
pub fn expected_trading_rate(
    v: f64,
    prior_mean: f64,
    prior_variance: f64,
    horizon: f64,
    frac: FractionalParams,
    growth: &RateFn,
    sigma0: f64,
    t: f64,
) -> Result<f64> {
    let d0 = compute_d(growth, 0.0, horizon)?;
    let sigma_v = (prior_variance / d0).sqrt();
    Ok(frac.noise_scale() * (2.0 * growth.integral(0.0, t)).exp() * sigma0 * (v - prior_mean) / (sigma_v * d0))
}
