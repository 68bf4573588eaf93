//! Descriptive statistics and the Jarque–Bera normality test.
//!
//! Central moments use the population convention (divide by n). Kurtosis is
//! the non-excess form, so a normal sample sits near 3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    /// `None` when the series is constant.
    pub skewness: Option<f64>,
    /// Non-excess kurtosis; `None` when the series is constant.
    pub kurtosis: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JbResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Reject normality at `alpha`.
    pub h: bool,
    pub alpha: f64,
}

struct Moments {
    n: f64,
    mean: f64,
    m2_sum: f64,
    m3_sum: f64,
    m4_sum: f64,
}

impl Moments {
    fn of(series: &[f64]) -> Self {
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        // the mean of equal values can be off by an ulp
        let constant = series.iter().all(|&x| x == series[0]);
        if !constant {
            for &x in series {
                let d = x - mean;
                let d2 = d * d;
                m2 += d2;
                m3 += d2 * d;
                m4 += d2 * d2;
            }
        }
        Moments {
            n,
            mean: if constant { series[0] } else { mean },
            m2_sum: m2,
            m3_sum: m3,
            m4_sum: m4,
        }
    }

    fn std(&self) -> f64 {
        (self.m2_sum / self.n).sqrt()
    }

    // Ratios are formed from raw sums so that exactly symmetric, exactly
    // mesokurtic inputs give S = 0 and K = 3 without rounding.
    fn skewness(&self) -> Option<f64> {
        (self.m2_sum > 0.0).then(|| self.n.sqrt() * self.m3_sum / self.m2_sum.powf(1.5))
    }

    fn kurtosis(&self) -> Option<f64> {
        (self.m2_sum > 0.0).then(|| self.n * self.m4_sum / (self.m2_sum * self.m2_sum))
    }
}

pub fn summarize(series: &[f64]) -> Result<SeriesSummary> {
    if series.len() < 2 {
        return Err(Error::Argument(format!(
            "summary needs at least 2 observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("series contains non-finite values".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let m = Moments::of(series);
    Ok(SeriesSummary {
        n,
        mean: m.mean,
        median,
        min: sorted[0],
        max: sorted[n - 1],
        std: m.std(),
        skewness: m.skewness(),
        kurtosis: m.kurtosis(),
    })
}

/// JB = n/6 · (S² + (K − 3)²/4) with the asymptotic chi-square(2) p-value
/// `exp(-JB/2)`.
pub fn jarque_bera(series: &[f64], alpha: f64) -> Result<JbResult> {
    if series.len() < 8 {
        return Err(Error::Argument(format!(
            "Jarque-Bera needs at least 8 observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("series contains non-finite values".into()));
    }
    let m = Moments::of(series);
    match (m.skewness(), m.kurtosis()) {
        (Some(s), Some(k)) => jarque_bera_from_moments(series.len(), s, k, alpha),
        _ => Err(Error::Argument(
            "Jarque-Bera is undefined for a constant series".into(),
        )),
    }
}

/// The test from precomputed skewness and non-excess kurtosis.
pub fn jarque_bera_from_moments(n: usize, skewness: f64, kurtosis: f64, alpha: f64) -> Result<JbResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let excess = kurtosis - 3.0;
    let statistic = n as f64 / 6.0 * (skewness * skewness + excess * excess / 4.0);
    let p_value = (-statistic / 2.0).exp().clamp(0.0, 1.0);
    Ok(JbResult {
        statistic,
        p_value,
        h: p_value < alpha,
        alpha,
    })
}
