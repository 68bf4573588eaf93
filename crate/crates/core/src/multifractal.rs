//! Wavelet multifractal spectrum: structure functions, Besov exponent,
//! Legendre singularity spectrum and the concavity verdict.
//!
//! Levels follow the finest-first numbering of [`crate::wavelet`]. The
//! fine-scale limit therefore runs toward *decreasing* level, and the Besov
//! exponent is `b(p) = 1 + slope`, where `slope` is the least-squares slope
//! of `log2 S_j(p)` against the level `j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::WaveletCoefficients;

/// Evenly spaced grid `start, start+step, ..., stop` (inclusive when `stop`
/// lies on the grid).
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::Argument(format!(
            "invalid grid {start}..{stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(Error::Argument("grid has more than a million points".into()));
    }
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

/// Inclusive range of levels used by the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub first: usize,
    pub last: usize,
}

impl LevelRange {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first == 0 || last < first {
            return Err(Error::Argument(format!("invalid level range {first}:{last}")));
        }
        Ok(LevelRange { first, last })
    }

    /// Levels `2..=J-1`: drops the finest and the coarsest level.
    pub fn default_for(levels: usize) -> Result<Self> {
        Self::new(2, levels.saturating_sub(1).max(2))
    }

    pub fn count(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl FromStr for LevelRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("level range `{s}` is not of the form a:b")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Argument(format!("level range `{s}`: `{v}` is not a level")))
        };
        LevelRange::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.last)
    }
}

/// `S_j(p) = Σ_k |d_{j,k}|^p` for every level and moment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunctions {
    pub p_grid: Vec<f64>,
    /// `values[j-1][i]` is `S_j(p_grid[i])`.
    pub values: Vec<Vec<f64>>,
    /// Zero coefficients per level; they are left out of the sums for p < 0.
    pub zero_counts: Vec<usize>,
}

impl StructureFunctions {
    pub fn levels(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, level: usize, p_index: usize) -> f64 {
        self.values[level - 1][p_index]
    }
}

pub fn structure_functions(coeffs: &WaveletCoefficients, p_grid: &[f64]) -> Result<StructureFunctions> {
    if p_grid.is_empty() {
        return Err(Error::Argument("empty moment-order grid".into()));
    }
    if let Some(p) = p_grid.iter().find(|p| !p.is_finite()) {
        return Err(Error::Argument(format!("moment order {p} is not finite")));
    }
    let usable = coeffs
        .details
        .iter()
        .filter(|d| d.iter().any(|&c| c != 0.0))
        .count();
    if usable < 3 {
        return Err(Error::Estimation(format!(
            "only {usable} levels carry nonzero detail coefficients; at least 3 are needed"
        )));
    }
    let mut values = Vec::with_capacity(coeffs.levels());
    let mut zero_counts = Vec::with_capacity(coeffs.levels());
    for detail in &coeffs.details {
        zero_counts.push(detail.iter().filter(|&&c| c == 0.0).count());
        let row = p_grid
            .iter()
            .map(|&p| {
                detail
                    .iter()
                    .map(|c| c.abs())
                    .filter(|&a| p >= 0.0 || a > 0.0)
                    .map(|a| a.powf(p))
                    .sum()
            })
            .collect();
        values.push(row);
    }
    Ok(StructureFunctions {
        p_grid: p_grid.to_vec(),
        values,
        zero_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovFit {
    pub p_grid: Vec<f64>,
    pub b: Vec<f64>,
    /// Slope of `log2 S_j(p)` against `j`, per p.
    pub slopes: Vec<f64>,
    /// Largest absolute residual of each log-linear fit.
    pub residuals: Vec<f64>,
    pub fit_range: LevelRange,
}

/// Ordinary least squares; returns (slope, intercept, max |residual|).
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

pub fn besov_exponent(sf: &StructureFunctions, fit_range: LevelRange) -> Result<BesovFit> {
    if fit_range.count() < 3 {
        return Err(Error::Estimation(format!(
            "fit range {fit_range} has fewer than 3 levels"
        )));
    }
    if fit_range.last > sf.levels() {
        return Err(Error::Estimation(format!(
            "fit range {fit_range} exceeds the {} available levels",
            sf.levels()
        )));
    }
    let xs: Vec<f64> = fit_range.iter().map(|j| j as f64).collect();
    let mut b = Vec::with_capacity(sf.p_grid.len());
    let mut slopes = Vec::with_capacity(sf.p_grid.len());
    let mut residuals = Vec::with_capacity(sf.p_grid.len());
    for (i, &p) in sf.p_grid.iter().enumerate() {
        let ys = fit_range
            .iter()
            .map(|j| {
                let s = sf.get(j, i);
                if s > 0.0 && s.is_finite() {
                    Ok(s.log2())
                } else {
                    Err(Error::NonPositive { level: j, p })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let (slope, _, resid) = ols(&xs, &ys);
        slopes.push(slope);
        b.push(1.0 + slope);
        residuals.push(resid);
    }
    Ok(BesovFit {
        p_grid: sf.p_grid.clone(),
        b,
        slopes,
        residuals,
        fit_range,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub alpha: f64,
    pub d: f64,
    /// Moment order attaining the infimum (first one on ties).
    pub argmin_p: f64,
}

/// Discrete Legendre transform `d(α) = min_p (α·p − b(p) + 1)` over the grid.
pub fn singularity_spectrum(b: &[f64], p_grid: &[f64], alpha_grid: &[f64]) -> Result<Vec<SpectrumPoint>> {
    if p_grid.is_empty() || alpha_grid.is_empty() {
        return Err(Error::Argument("empty p or alpha grid".into()));
    }
    if b.len() != p_grid.len() {
        return Err(Error::Argument(format!(
            "{} exponents for {} moment orders",
            b.len(),
            p_grid.len()
        )));
    }
    if b.iter().chain(p_grid).chain(alpha_grid).any(|v| !v.is_finite()) {
        return Err(Error::Argument("non-finite value in Legendre inputs".into()));
    }
    Ok(alpha_grid
        .iter()
        .map(|&alpha| {
            let mut best = SpectrumPoint {
                alpha,
                d: f64::INFINITY,
                argmin_p: p_grid[0],
            };
            for (&p, &bp) in p_grid.iter().zip(b) {
                let v = alpha * p - bp + 1.0;
                if v < best.d {
                    best.d = v;
                    best.argmin_p = p;
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concavity {
    pub concave: bool,
    /// Largest convexity violation (0 when none).
    pub gap: f64,
}

/// Second-difference concavity check. For an interior point the violation is
/// twice the height of the neighbours' chord above `d`, which on a uniform
/// grid equals `d[i-1] - 2 d[i] + d[i+1]`.
pub fn concavity_test(points: &[SpectrumPoint], tol: f64) -> Result<Concavity> {
    if points.len() < 3 {
        return Err(Error::Argument(format!(
            "concavity needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| !(w[1].alpha > w[0].alpha)) {
        return Err(Error::Argument("alpha values must be strictly increasing".into()));
    }
    let mut gap = 0.0f64;
    for w in points.windows(3) {
        let (l, m, r) = (w[0], w[1], w[2]);
        let t = (m.alpha - l.alpha) / (r.alpha - l.alpha);
        let chord = l.d + t * (r.d - l.d);
        gap = gap.max(2.0 * (chord - m.d));
    }
    Ok(Concavity {
        concave: gap <= tol,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultifractalConfig {
    /// Defaults to −5..5 step 0.25 when every coefficient is nonzero, else 0..5.
    pub p_grid: Option<Vec<f64>>,
    pub alpha_grid: Vec<f64>,
    /// Defaults to levels `2..=J-1`.
    pub fit_range: Option<LevelRange>,
    pub concavity_tol: f64,
}

pub const ESTIMATED_CONCAVITY_TOL: f64 = 1e-3;
pub const EXACT_CONCAVITY_TOL: f64 = 1e-8;

impl Default for MultifractalConfig {
    fn default() -> Self {
        MultifractalConfig {
            p_grid: None,
            alpha_grid: grid(0.0, 1.5, 0.01).expect("static grid"),
            fit_range: None,
            concavity_tol: ESTIMATED_CONCAVITY_TOL,
        }
    }
}

pub fn default_p_grid(coeffs: &WaveletCoefficients) -> Vec<f64> {
    let all_nonzero = coeffs.details.iter().flatten().all(|&c| c != 0.0);
    let result = if all_nonzero {
        grid(-5.0, 5.0, 0.25)
    } else {
        grid(0.0, 5.0, 0.25)
    };
    result.expect("static grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultifractalSpectrum {
    pub structure: StructureFunctions,
    pub besov: BesovFit,
    pub spectrum: Vec<SpectrumPoint>,
    pub concavity: Concavity,
}

impl MultifractalSpectrum {
    pub fn p_grid(&self) -> &[f64] {
        &self.besov.p_grid
    }

    pub fn b(&self) -> &[f64] {
        &self.besov.b
    }

    pub fn fit_range(&self) -> LevelRange {
        self.besov.fit_range
    }

    pub fn is_concave(&self) -> bool {
        self.concavity.concave
    }
}

/// Full estimate from detail coefficients.
pub fn estimate_spectrum(coeffs: &WaveletCoefficients, config: &MultifractalConfig) -> Result<MultifractalSpectrum> {
    let p_grid = config
        .p_grid
        .clone()
        .unwrap_or_else(|| default_p_grid(coeffs));
    let fit_range = match config.fit_range {
        Some(r) => r,
        None => LevelRange::default_for(coeffs.levels())?,
    };
    let structure = structure_functions(coeffs, &p_grid)?;
    let besov = besov_exponent(&structure, fit_range)?;
    let spectrum = singularity_spectrum(&besov.b, &p_grid, &config.alpha_grid)?;
    let concavity = concavity_test(&spectrum, config.concavity_tol)?;
    Ok(MultifractalSpectrum {
        structure,
        besov,
        spectrum,
        concavity,
    })
}
