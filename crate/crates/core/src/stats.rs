//! Monte Carlo reducers and the statistical probes behind every check.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Band width, in standard errors, for Monte Carlo equalities.
pub const SE_BAND: f64 = 3.0;

/// Asymptotic 1% critical value of `sqrt(n) D_n`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

pub const KS_MIN_SAMPLES: usize = 100;

/// Streaming mean and variance (Welford), mergeable across partial ensembles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsembleStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl EnsembleStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combine two partial reducers (Chan et al. update).
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Self {
            count: n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `sqrt(variance / n)`; infinite below two samples.
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for EnsembleStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

impl<'a> FromIterator<&'a f64> for EnsembleStats {
    fn from_iter<I: IntoIterator<Item = &'a f64>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

pub fn mc_mean(samples: &[f64]) -> EnsembleStats {
    samples.iter().collect()
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
    pub description: String,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, critical: f64, passed: bool, description: impl Into<String>) -> Self {
        Self { name: name.into(), statistic, critical, passed, description: description.into() }
    }

    /// `|statistic| <= critical`.
    pub fn within(name: impl Into<String>, statistic: f64, critical: f64, description: impl Into<String>) -> Self {
        let passed = statistic.abs() <= critical;
        Self::new(name, statistic, critical, passed, description)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl std::fmt::Display for TestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: statistic = {:.6e}, critical = {:.6e} ({})",
            self.verdict(),
            self.name,
            self.statistic,
            self.critical,
            self.description
        )
    }
}

/// Kolmogorov-Smirnov statistic `sup |F_n - Phi|`.
pub fn ks_statistic(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// One-sample KS test against the standard normal at the 1% level.
pub fn ks_normal(samples: &[f64]) -> Result<TestReport> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: KS_MIN_SAMPLES, got: n });
    }
    let d = ks_statistic(samples);
    let critical = KS_CRITICAL_1PCT / (n as f64).sqrt();
    Ok(TestReport::new(
        "ks-normal",
        d,
        critical,
        d <= critical,
        format!("KS distance to N(0,1), n = {n}, 1% level"),
    ))
}

fn differences(pairs: &[(f64, f64)]) -> Result<EnsembleStats> {
    if pairs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: pairs.len() });
    }
    Ok(pairs.iter().map(|(xt, xs)| xs - xt).collect())
}

/// Mean of `X_s - X_t` over `(X_t, X_s)` pairs is zero within 3 SE.
pub fn martingale_probe(pairs: &[(f64, f64)]) -> Result<TestReport> {
    let d = differences(pairs)?;
    let band = SE_BAND * d.standard_error();
    Ok(TestReport::new(
        "martingale",
        d.mean(),
        band,
        d.mean().abs() <= band,
        format!("mean increment vs 0, n = {}", d.count()),
    ))
}

/// Mean of `X_s - X_t` is no lower than -3 SE.
pub fn submartingale_probe(pairs: &[(f64, f64)]) -> Result<TestReport> {
    let d = differences(pairs)?;
    let band = SE_BAND * d.standard_error();
    Ok(TestReport::new(
        "submartingale",
        d.mean(),
        -band,
        d.mean() >= -band,
        format!("mean increment >= -3 SE, n = {}", d.count()),
    ))
}

/// Pearson correlation; `NaN` when either series is constant.
pub fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Zero correlation within a Fisher-z band of `3 / sqrt(n - 3)`.
pub fn corr_probe(pairs: &[(f64, f64)]) -> Result<TestReport> {
    let n = pairs.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let r = correlation(pairs);
    let z = r.atanh();
    let band = SE_BAND / ((n - 3) as f64).sqrt();
    Ok(TestReport::new(
        "correlation",
        z,
        band,
        z.abs() <= band,
        format!("Fisher z of sample correlation {r:.4}, n = {n}"),
    ))
}
