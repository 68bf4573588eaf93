//! Seeded synthetic panels and coefficient cascades with known answers.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, and Gaussian
//! draws use the `rand_distr` standard normal sampler. Both are portable, so
//! the same seed gives the same bytes on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::wavelet::WaveletCoefficients;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cycle length in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Period {
    Days(f64),
    Infinite,
}

impl Period {
    pub fn frequency(&self) -> f64 {
        match self {
            Period::Days(p) => 1.0 / p,
            Period::Infinite => 0.0,
        }
    }
}

// Periods are plain numbers or the string "inf".
impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Period::Days(p) => s.serialize_f64(*p),
            Period::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) if p.is_infinite() => Ok(Period::Infinite),
            Raw::Num(p) => Ok(Period::Days(p)),
            Raw::Int(p) => Ok(Period::Days(p as f64)),
            Raw::Text(t) if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") => {
                Ok(Period::Infinite)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid period `{t}`"))),
        }
    }
}

/// One planted component: series `n` gets
/// `exp(g t) · a · loading[n] · cos(2πt/P + φ + spatial_phase[n])`.
///
/// With all spatial phases equal the component spans a single direction of
/// the panel, and no linear one-step operator on that direction can
/// oscillate. Distinct spatial phases make a cycle visible to DMD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSpec {
    pub period: Period,
    #[serde(default)]
    pub growth_rate: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    pub loading: Vec<f64>,
    /// Per-series phase offsets in radians; empty means all zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spatial_phase: Vec<f64>,
}

impl CycleSpec {
    fn validate(&self) -> Result<()> {
        if let Period::Days(p) = self.period {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Argument(format!("cycle period must be positive, got {p}")));
            }
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::Argument(format!(
                "cycle amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !self.growth_rate.is_finite()
            || !self.phase.is_finite()
            || self.loading.iter().chain(&self.spatial_phase).any(|v| !v.is_finite())
        {
            return Err(Error::Argument("cycle parameters must be finite".into()));
        }
        if !self.spatial_phase.is_empty() && self.spatial_phase.len() != self.loading.len() {
            return Err(Error::Argument(format!(
                "{} spatial phases for {} loadings",
                self.spatial_phase.len(),
                self.loading.len()
            )));
        }
        Ok(())
    }
}

/// Panel with columns `x_k = A^k x0`, `k = 0..len`.
pub fn gen_linear_system(a: &[Vec<f64>], x0: &[f64], len: usize) -> Result<Panel> {
    let n = x0.len();
    if n == 0 || a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Argument(format!(
            "operator must be {n}x{n} to match the initial state"
        )));
    }
    if len < 2 {
        return Err(Error::Argument(format!("need at least 2 snapshots, got {len}")));
    }
    let mut rows = vec![Vec::with_capacity(len); n];
    let mut x = x0.to_vec();
    for _ in 0..len {
        for (row, v) in rows.iter_mut().zip(&x) {
            row.push(*v);
        }
        x = a.iter().map(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
    }
    Panel::from_rows(rows)
}

/// Sum of planted cycles plus seeded Gaussian noise, on days `0..len`.
pub fn gen_planted_cycles(specs: &[CycleSpec], len: usize, noise_std: f64, seed: u64) -> Result<Panel> {
    let n = specs
        .first()
        .map(|s| s.loading.len())
        .ok_or_else(|| Error::Argument("no cycles to plant".into()))?;
    if n == 0 || specs.iter().any(|s| s.loading.len() != n) {
        return Err(Error::Argument("all cycle loadings must share one non-zero length".into()));
    }
    for s in specs {
        s.validate()?;
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::Argument(format!("noise_std must be non-negative, got {noise_std}")));
    }
    if len < 2 {
        return Err(Error::Argument(format!("need at least 2 observations, got {len}")));
    }
    let mut rows = vec![vec![0.0; len]; n];
    for s in specs {
        let freq = s.period.frequency();
        for (i, (row, l)) in rows.iter_mut().zip(&s.loading).enumerate() {
            let phase = s.phase + s.spatial_phase.get(i).copied().unwrap_or(0.0);
            for (t, v) in row.iter_mut().enumerate() {
                let tf = t as f64;
                *v += (s.growth_rate * tf).exp() * s.amplitude * l * (2.0 * PI * freq * tf + phase).cos();
            }
        }
    }
    if noise_std > 0.0 {
        let mut rng = rng(seed);
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise_std * z;
            }
        }
    }
    Panel::from_rows(rows)
}

/// Random unit-norm loading vectors, one per cycle.
pub fn random_loadings(count: usize, n_series: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n_series).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleFile {
    #[serde(default)]
    cycle: Vec<CycleSpec>,
}

/// Reads a list of `[[cycle]]` tables. Every cycle must have the same number
/// of loadings.
pub fn parse_cycles(text: &str) -> Result<Vec<CycleSpec>> {
    let file: CycleFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.cycle.is_empty() {
        return Err(Error::Config("no [[cycle]] entries".into()));
    }
    let n = file.cycle[0].loading.len();
    for (i, spec) in file.cycle.iter().enumerate() {
        spec.validate()?;
        if spec.loading.len() != n {
            return Err(Error::Config(format!(
                "cycle {} has {} loadings, expected {n}",
                i + 1,
                spec.loading.len()
            )));
        }
    }
    Ok(file.cycle)
}

/// (frequency in cycles/day, growth rate per day) of a planted preset row.
type PresetRow = (Option<f64>, f64);

/// The eight price cycles, strongest first: 925, 654, ∞, 5, 19, 31, 7 and
/// 332 days. The short cycles are planted at the frequencies whose rounded
/// reciprocals give those durations (0.2154, 0.0517, 0.0320, 0.1436).
pub const PRICE_CYCLES: [PresetRow; 8] = [
    (Some(1.0 / 925.0), -2e-4),
    (Some(1.0 / 654.0), -2e-4),
    (None, 0.0),
    (Some(0.2154), -1e-4),
    (Some(0.0517), -1e-4),
    (Some(0.0320), -1e-4),
    (Some(0.1436), -1e-4),
    (Some(1.0 / 332.0), -2e-4),
];

/// Ten sales components, strongest first: a constant offset, a slowly
/// decaying offset, then cycles of 263, 9, 3, 3, 1037, 2, 7 and 469 days.
pub const SALES_CYCLES: [PresetRow; 10] = [
    (None, 0.0),
    (None, -2e-3),
    (Some(0.0038), -1e-4),
    (Some(0.1081), -1e-4),
    (Some(0.3511), -1e-4),
    (Some(0.3801), -1e-4),
    (Some(1.0 / 1037.0), -1e-4),
    (Some(0.4502), -1e-4),
    (Some(0.1488), -1e-4),
    (Some(1.0 / 469.0), -1e-4),
];

/// Builds cycle specs from a preset. Strength `k` (0 = strongest) gets mode
/// amplitude `count - k`; cycles carry twice that since a real cosine splits
/// its amplitude across a conjugate pair. Loadings are random unit vectors;
/// cycles get uniform random spatial phases from a second ChaCha stream.
pub fn preset_specs(rows: &[PresetRow], n_series: usize, seed: u64) -> Vec<CycleSpec> {
    let loadings = random_loadings(rows.len(), n_series, seed);
    let mut phases = rng(seed);
    phases.set_stream(1);
    rows.iter()
        .zip(loadings)
        .enumerate()
        .map(|(k, (&(freq, growth), loading))| {
            let strength = (rows.len() - k) as f64;
            let (period, amplitude, phase, spatial_phase) = match freq {
                Some(f) => (
                    Period::Days(1.0 / f),
                    2.0 * strength,
                    0.3 * k as f64,
                    (0..n_series).map(|_| phases.random_range(0.0..2.0 * PI)).collect(),
                ),
                None => (Period::Infinite, strength, 0.0, Vec::new()),
            };
            CycleSpec {
                period,
                growth_rate: growth,
                amplitude,
                phase,
                loading,
                spatial_phase,
            }
        })
        .collect()
}

/// Binomial multiplicative cascade written directly as detail coefficients.
///
/// The signal length is `2^depth`. The coarsest level holds a single unit
/// coefficient; each coefficient at level `j` passes `m0` to one child and
/// `m1` to the other at level `j-1`, the order picked by a seeded coin. Then
/// `S_j(p) = (m0^p + m1^p)^(depth - j)` exactly.
pub fn gen_cascade(depth: usize, multipliers: (f64, f64), seed: u64) -> Result<WaveletCoefficients> {
    let (m0, m1) = multipliers;
    if !(m0 > 0.0 && m1 > 0.0) || !m0.is_finite() || !m1.is_finite() {
        return Err(Error::Argument(format!(
            "cascade multipliers must be positive and finite, got ({m0}, {m1})"
        )));
    }
    if !(3..=24).contains(&depth) {
        return Err(Error::Argument(format!("cascade depth must lie in 3..=24, got {depth}")));
    }
    let mut rng = rng(seed);
    let mut details = vec![Vec::new(); depth];
    details[depth - 1] = vec![1.0];
    for level in (1..depth).rev() {
        let parents = &details[level];
        let mut children = Vec::with_capacity(parents.len() * 2);
        for &p in parents {
            if rng.random::<bool>() {
                children.extend([p * m0, p * m1]);
            } else {
                children.extend([p * m1, p * m0]);
            }
        }
        details[level - 1] = children;
    }
    Ok(WaveletCoefficients {
        details,
        approx: vec![0.0],
        len: 1 << depth,
        padding: (0, 0),
    })
}

/// Random real `n×n` operator with the given eigenvalues. Complex entries must
/// come in conjugate pairs; each pair becomes a 2×2 rotation block, and the
/// block-diagonal matrix is conjugated by a random, well-conditioned basis.
/// Returns the operator in row-major order.
pub fn operator_with_spectrum(eigenvalues: &[num_complex::Complex64], seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = eigenvalues.len();
    let mut block = vec![vec![0.0; n]; n];
    let mut i = 0;
    while i < n {
        let l = eigenvalues[i];
        if l.im == 0.0 {
            block[i][i] = l.re;
            i += 1;
        } else {
            let partner = eigenvalues.get(i + 1).copied();
            if partner.map_or(true, |p| (p - l.conj()).norm() > 1e-14) {
                return Err(Error::Argument(format!(
                    "complex eigenvalue {l} must be followed by its conjugate"
                )));
            }
            block[i][i] = l.re;
            block[i][i + 1] = -l.im;
            block[i + 1][i] = l.im;
            block[i + 1][i + 1] = l.re;
            i += 2;
        }
    }
    let mut rng = rng(seed);
    // identity plus a small random perturbation keeps the basis well conditioned
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    (if r == c { 1.0 } else { 0.0 }) + 0.3 * z / (n as f64).sqrt()
                })
                .collect()
        })
        .collect();
    let inv = invert(&basis)?;
    let pb = matmul(&basis, &block);
    Ok(matmul(&pb, &inv))
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|c| row.iter().zip(b).map(|(x, brow)| x * brow[c]).sum())
                .collect()
        })
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap_or(col);
        if m[pivot][col].abs() < 1e-12 {
            return Err(Error::Linalg("random basis is singular".into()));
        }
        m.swap(col, pivot);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}
