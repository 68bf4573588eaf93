//! Periodized orthonormal DWT (Mallat pyramid) and additive multiresolution
//! analysis.
//!
//! Levels are numbered `1..=J` from finest to coarsest, so `details[0]` holds
//! the level-1 coefficients and `approx` the level-J approximation.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature-mirror pair of an orthonormal wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    name: &'static str,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl FilterPair {
    pub fn haar() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_lowpass("haar", vec![h, h])
    }

    /// Daubechies, two vanishing moments (4 taps).
    pub fn db2() -> Self {
        let s3 = 3f64.sqrt();
        let norm = 4.0 * 2f64.sqrt();
        Self::from_lowpass(
            "db2",
            vec![
                (1.0 + s3) / norm,
                (3.0 + s3) / norm,
                (3.0 - s3) / norm,
                (1.0 - s3) / norm,
            ],
        )
    }

    fn from_lowpass(name: &'static str, lowpass: Vec<f64>) -> Self {
        let len = lowpass.len();
        // g[n] = (-1)^n h[L-1-n]
        let highpass = (0..len)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - n]
            })
            .collect();
        FilterPair {
            name,
            lowpass,
            highpass,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

impl FromStr for FilterPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" | "db1" => Ok(FilterPair::haar()),
            "db2" | "d4" | "daub4" => Ok(FilterPair::db2()),
            other => Err(Error::Argument(format!(
                "unknown wavelet filter `{other}` (expected haar or db2)"
            ))),
        }
    }
}

/// What to do when the length is not a multiple of `2^J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    #[default]
    Error,
    /// Zero-pad evenly on both sides up to the next multiple of `2^J`.
    SymmetricZero,
}

impl FromStr for Padding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" | "none" => Ok(Padding::Error),
            "symmetric-zero" | "zero" => Ok(Padding::SymmetricZero),
            other => Err(Error::Argument(format!("unknown padding mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    /// `details[j-1]` is level j, finest first.
    pub details: Vec<Vec<f64>>,
    /// Level-J approximation.
    pub approx: Vec<f64>,
    /// Length of the transformed (possibly padded) signal.
    pub len: usize,
    /// Zeros added before and after the original samples.
    pub padding: (usize, usize),
}

impl WaveletCoefficients {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Detail coefficients of level `j` (1-based).
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    /// Sum of squares of all coefficients.
    pub fn energy(&self) -> f64 {
        self.details
            .iter()
            .chain(std::iter::once(&self.approx))
            .flatten()
            .map(|c| c * c)
            .sum()
    }

    pub fn is_padded(&self) -> bool {
        self.padding != (0, 0)
    }

    /// Same shape, all zeros.
    pub fn zeros_like(&self) -> Self {
        WaveletCoefficients {
            details: self.details.iter().map(|d| vec![0.0; d.len()]).collect(),
            approx: vec![0.0; self.approx.len()],
            len: self.len,
            padding: self.padding,
        }
    }

    fn check_shape(&self) -> Result<()> {
        let levels = self.levels();
        if levels == 0 {
            return Err(Error::Structure("no detail levels".into()));
        }
        let block = 1usize.checked_shl(levels as u32).unwrap_or(0);
        if block == 0 || self.len % block != 0 || self.len == 0 {
            return Err(Error::Structure(format!(
                "length {} is not a positive multiple of 2^{levels}",
                self.len
            )));
        }
        for (j, d) in self.details.iter().enumerate() {
            let expected = self.len >> (j + 1);
            if d.len() != expected {
                return Err(Error::Structure(format!(
                    "level {} has {} coefficients, expected {expected}",
                    j + 1,
                    d.len()
                )));
            }
        }
        if self.approx.len() != self.len >> levels {
            return Err(Error::Structure(format!(
                "approximation has {} coefficients, expected {}",
                self.approx.len(),
                self.len >> levels
            )));
        }
        if self.padding.0 + self.padding.1 >= self.len {
            return Err(Error::Structure("padding exceeds signal length".into()));
        }
        Ok(())
    }
}

/// One analysis step: `a[k] = Σ h[n] x[2k+n]`, `d[k] = Σ g[n] x[2k+n]`,
/// indices taken modulo the input length.
fn analysis_step(x: &[f64], filter: &FilterPair) -> (Vec<f64>, Vec<f64>) {
    let len = x.len();
    let half = len / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let v = x[(2 * k + n) % len];
            sa += h * v;
            sd += g * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// Adjoint of [`analysis_step`], which for orthonormal filters is its inverse.
fn synthesis_step(a: &[f64], d: &[f64], filter: &FilterPair) -> Vec<f64> {
    let len = 2 * a.len();
    let mut x = vec![0.0; len];
    for k in 0..a.len() {
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            x[(2 * k + n) % len] += h * a[k] + g * d[k];
        }
    }
    x
}

fn validate_levels(len: usize, levels: usize) -> Result<()> {
    if levels == 0 || levels >= usize::BITS as usize || len < (1usize << levels) {
        return Err(Error::Level { len, levels });
    }
    Ok(())
}

/// Forward transform with periodic boundary. The length must be a multiple
/// of `2^levels`.
pub fn dwt_forward(series: &[f64], filter: &FilterPair, levels: usize) -> Result<WaveletCoefficients> {
    dwt_forward_padded(series, filter, levels, Padding::Error)
}

pub fn dwt_forward_padded(
    series: &[f64],
    filter: &FilterPair,
    levels: usize,
    padding: Padding,
) -> Result<WaveletCoefficients> {
    validate_levels(series.len(), levels)?;
    let block = 1usize << levels;
    let rem = series.len() % block;
    let (signal, pad) = if rem == 0 {
        (series.to_vec(), (0, 0))
    } else {
        match padding {
            Padding::Error => {
                return Err(Error::Level {
                    len: series.len(),
                    levels,
                })
            }
            Padding::SymmetricZero => {
                let extra = block - rem;
                let before = extra / 2;
                let after = extra - before;
                let mut v = vec![0.0; before];
                v.extend_from_slice(series);
                v.resize(series.len() + extra, 0.0);
                (v, (before, after))
            }
        }
    };
    let len = signal.len();
    let mut details = Vec::with_capacity(levels);
    let mut approx = signal;
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, filter);
        details.push(d);
        approx = a;
    }
    Ok(WaveletCoefficients {
        details,
        approx,
        len,
        padding: pad,
    })
}

/// Inverse transform. Padding recorded in `coeffs` is stripped from the
/// output.
pub fn dwt_inverse(coeffs: &WaveletCoefficients, filter: &FilterPair) -> Result<Vec<f64>> {
    coeffs.check_shape()?;
    let mut approx = coeffs.approx.clone();
    for d in coeffs.details.iter().rev() {
        approx = synthesis_step(&approx, d, filter);
    }
    let (before, after) = coeffs.padding;
    Ok(approx[before..approx.len() - after].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MraDecomposition {
    /// Smooth component reconstructed from the level-J approximation alone.
    pub approximation: Vec<f64>,
    /// `details[j-1]` is the level-j detail component.
    pub details: Vec<Vec<f64>>,
}

impl MraDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn len(&self) -> usize {
        self.approximation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.approximation.is_empty()
    }

    /// `A_J + Σ D_j`, which reproduces the analysed series.
    pub fn sum(&self) -> Vec<f64> {
        let mut total = self.approximation.clone();
        for d in &self.details {
            for (t, v) in total.iter_mut().zip(d) {
                *t += v;
            }
        }
        total
    }
}

/// Additive decomposition `x = A_J + D_1 + ... + D_J`.
pub fn mra(series: &[f64], filter: &FilterPair, levels: usize) -> Result<MraDecomposition> {
    mra_padded(series, filter, levels, Padding::Error)
}

pub fn mra_padded(
    series: &[f64],
    filter: &FilterPair,
    levels: usize,
    padding: Padding,
) -> Result<MraDecomposition> {
    let coeffs = dwt_forward_padded(series, filter, levels, padding)?;
    mra_from_coefficients(&coeffs, filter)
}

pub fn mra_from_coefficients(coeffs: &WaveletCoefficients, filter: &FilterPair) -> Result<MraDecomposition> {
    let empty = coeffs.zeros_like();
    let mut only_approx = empty.clone();
    only_approx.approx.clone_from(&coeffs.approx);
    let approximation = dwt_inverse(&only_approx, filter)?;
    let details = (0..coeffs.levels())
        .map(|j| {
            let mut only = empty.clone();
            only.details[j].clone_from(&coeffs.details[j]);
            dwt_inverse(&only, filter)
        })
        .collect::<Result<_>>()?;
    Ok(MraDecomposition {
        approximation,
        details,
    })
}
