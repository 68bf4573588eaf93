//! Exact dynamic mode decomposition of a panel, with power-ranked mode
//! reports, temporal traces, reconstruction and per-series phase/magnitude.
//!
//! Fitting follows the usual exact-DMD recipe on snapshot pairs
//! `X1 = [x_0 .. x_{T-2}]`, `X2 = [x_1 .. x_{T-1}]`:
//!
//! 1. thin SVD `X1 = U Σ Vᵀ`, truncated to rank r;
//! 2. reduced operator `Ã = Uᵀ X2 V Σ⁻¹`;
//! 3. eigenpairs `Ã W = W Λ`;
//! 4. exact modes `Φ = X2 V Σ⁻¹ W`, each scaled to unit norm;
//! 5. amplitudes `b` from the least-squares fit `Φ b ≈ x_0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSelection {
    /// Keep exactly this many singular directions.
    Rank(usize),
    /// Smallest rank whose squared singular values reach this fraction.
    Energy(f64),
}

pub const DEFAULT_ENERGY: f64 = 0.999;

impl Default for RankSelection {
    fn default() -> Self {
        RankSelection::Energy(DEFAULT_ENERGY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerDefinition {
    /// `|b_i|²`
    #[default]
    SquaredAmplitude,
    /// `|b_i|`
    Amplitude,
}

impl FromStr for PowerDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared-amplitude" | "squared" => Ok(PowerDefinition::SquaredAmplitude),
            "amplitude" => Ok(PowerDefinition::Amplitude),
            other => Err(Error::Argument(format!(
                "unknown power definition `{other}` (expected squared-amplitude or amplitude)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmdModel {
    pub rank: usize,
    pub eigenvalues: Vec<Complex64>,
    /// `modes[i]` has one entry per series and unit Euclidean norm. The
    /// largest-magnitude entry is rotated onto the positive real axis.
    pub modes: Vec<Vec<Complex64>>,
    pub amplitudes: Vec<Complex64>,
    /// `ln λ / dt` on the principal branch; `None` for modes that vanish
    /// after one step (λ = 0).
    pub omega: Vec<Option<Complex64>>,
    pub dt: f64,
    /// Fraction of Σσ² retained by the truncation.
    pub svd_energy: f64,
    pub singular_values: Vec<f64>,
    pub n_series: usize,
    pub n_snapshots: usize,
}

impl DmdModel {
    /// Index of the conjugate partner of a complex mode, if present.
    pub fn conjugate_partner(&self, index: usize) -> Option<usize> {
        let lambda = self.eigenvalues[index];
        if lambda.im == 0.0 {
            return None;
        }
        let target = lambda.conj();
        let tol = 1e-8 * lambda.norm().max(1.0);
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(j, l)| j != index && (l.im > 0.0) != (lambda.im > 0.0))
            .map(|(j, l)| (j, (l - target).norm()))
            .filter(|&(_, dist)| dist <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
    }

    /// True when λ lies on the negative real axis, so the principal
    /// logarithm puts it at the Nyquist frequency `1/(2 dt)`.
    pub fn is_nyquist(&self, index: usize) -> bool {
        let l = self.eigenvalues[index];
        l.im == 0.0 && l.re < 0.0
    }

    pub fn is_decayed(&self, index: usize) -> bool {
        self.omega[index].is_none()
    }

    /// Sample span in days, measured from the first snapshot.
    pub fn span(&self) -> f64 {
        (self.n_snapshots.saturating_sub(1)) as f64 * self.dt
    }

    /// Cycles per day, `|Im ω| / 2π`.
    pub fn frequency(&self, index: usize) -> f64 {
        self.omega[index].map_or(0.0, |w| w.im.abs() / (2.0 * PI))
    }

    pub fn growth_rate(&self, index: usize) -> f64 {
        self.omega[index].map_or(f64::NEG_INFINITY, |w| w.re)
    }

    pub fn power(&self, index: usize, definition: PowerDefinition) -> f64 {
        let amp = self.amplitudes[index].norm();
        match definition {
            PowerDefinition::SquaredAmplitude => amp * amp,
            PowerDefinition::Amplitude => amp,
        }
    }
}

fn select_rank(s: &[f64], selection: RankSelection, dims: (usize, usize)) -> Result<usize> {
    let max_rank = s.len();
    let tiny = s.first().copied().unwrap_or(0.0) * f64::EPSILON * dims.0.max(dims.1) as f64;
    let numerical_rank = s.iter().take_while(|&&v| v > tiny && v > 0.0).count();
    match selection {
        RankSelection::Rank(r) => {
            if r > max_rank {
                return Err(Error::Rank(format!(
                    "rank {r} exceeds min(N, T-1) = {max_rank}"
                )));
            }
            if r > numerical_rank {
                return Err(Error::Rank(format!(
                    "singular value {} of the snapshot matrix is numerically zero; \
                     choose a rank of at most {numerical_rank}",
                    r
                )));
            }
            Ok(r)
        }
        RankSelection::Energy(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Argument(format!(
                    "energy threshold must lie in (0, 1], got {e}"
                )));
            }
            let total: f64 = s.iter().map(|v| v * v).sum();
            if total == 0.0 {
                return Ok(0);
            }
            let mut acc = 0.0;
            for (i, v) in s.iter().enumerate() {
                acc += v * v;
                if acc / total >= e * (1.0 - 1e-12) {
                    return Ok((i + 1).min(numerical_rank));
                }
            }
            Ok(numerical_rank)
        }
    }
}

/// Unit norm, then rotate so the largest-magnitude entry is real positive.
fn normalize_mode(mode: &mut [Complex64]) {
    let norm = mode.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let pivot = mode
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, c)| if c.norm() > best.1 { (i, c.norm()) } else { best })
        .0;
    let phase = mode[pivot] / mode[pivot].norm();
    let scale = phase.conj() / norm;
    for c in mode.iter_mut() {
        *c *= scale;
    }
    mode[pivot].im = 0.0;
}

pub fn fit_dmd(panel: &Panel, selection: RankSelection) -> Result<DmdModel> {
    let n = panel.n_series();
    let t = panel.len();
    if t < 3 {
        return Err(Error::Argument(format!("DMD needs at least 3 snapshots, got {t}")));
    }
    let m = t - 1;
    let rows = panel.values();
    let x1 = Mat::from_fn(n, m, |i, j| rows[i][j]);
    let x2 = Mat::from_fn(n, m, |i, j| rows[i][j + 1]);

    let svd = linalg::thin_svd(&x1)?;
    let rank = select_rank(&svd.s, selection, (n, m))?;
    let total: f64 = svd.s.iter().map(|v| v * v).sum();
    let kept: f64 = svd.s[..rank].iter().map(|v| v * v).sum();
    let svd_energy = if total > 0.0 { kept / total } else { 1.0 };

    // X2 V_r Σ_r⁻¹
    let v_r = Mat::from_fn(m, rank, |i, j| svd.v[(i, j)]);
    let u_r = Mat::from_fn(n, rank, |i, j| svd.u[(i, j)]);
    let mut x2vs = &x2 * &v_r;
    for j in 0..rank {
        let inv = 1.0 / svd.s[j];
        for i in 0..n {
            x2vs[(i, j)] *= inv;
        }
    }
    let reduced = u_r.transpose() * &x2vs;
    let (mut eigenvalues, w) = linalg::eigen(&reduced)?;
    for l in eigenvalues.iter_mut() {
        // keeps ln(λ) on the +π side for negative real λ
        if l.im == 0.0 {
            l.im = 0.0;
        }
    }

    let exact = &linalg::to_complex(&x2vs) * &w;
    let projected = &linalg::to_complex(&u_r) * &w;
    let scale = svd.s.first().copied().unwrap_or(0.0);
    let mut modes = Vec::with_capacity(rank);
    for k in 0..rank {
        let mut mode: Vec<Complex64> = (0..n).map(|i| exact[(i, k)]).collect();
        let norm = mode.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        // exact modes vanish for λ = 0; fall back to the projected mode
        if eigenvalues[k].norm() <= f64::EPSILON * scale.max(1.0) || norm == 0.0 {
            mode = (0..n).map(|i| projected[(i, k)]).collect();
        }
        normalize_mode(&mut mode);
        modes.push(mode);
    }

    let phi = Mat::from_fn(n, rank, |i, j| modes[j][i]);
    let x0: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[0], 0.0)).collect();
    let amplitudes = linalg::lstsq(&phi, &x0);

    let dt = panel.dt();
    let omega = eigenvalues
        .iter()
        .map(|l| (l.norm() > 0.0).then(|| l.ln() / dt))
        .collect();

    log::debug!(
        "fit_dmd: N={n} T={t} rank={rank} energy={svd_energy:.6} sigma_1={scale:.4e}"
    );
    Ok(DmdModel {
        rank,
        eigenvalues,
        modes,
        amplitudes,
        omega,
        dt,
        svd_energy,
        singular_values: svd.s,
        n_series: n,
        n_snapshots: t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleDuration {
    Days(u64),
    Infinite,
}

impl CycleDuration {
    pub fn from_frequency(f: f64) -> Self {
        if f > 0.0 {
            CycleDuration::Days((1.0 / f).round() as u64)
        } else {
            CycleDuration::Infinite
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CycleDuration::Infinite)
    }
}

impl fmt::Display for CycleDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleDuration::Days(d) => write!(f, "{d}"),
            CycleDuration::Infinite => f.write_str("Inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    /// Index into the model's modes.
    pub mode: usize,
    /// Conjugate partner folded into this row.
    pub partner: Option<usize>,
    pub power: f64,
    /// Cycles per day.
    pub frequency: f64,
    pub duration: CycleDuration,
    /// `Re ω`, per day.
    pub growth_rate: f64,
    pub nyquist: bool,
    /// λ = 0: the mode is gone after one step and ω is undefined.
    pub decayed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub power_definition: PowerDefinition,
    /// One row per real mode or conjugate pair, in model order.
    pub rows: Vec<ModeRow>,
    /// Row indices by descending power; ties go to the lower frequency, then
    /// the lower mode index.
    pub rank_order: Vec<usize>,
}

impl ModeReport {
    /// Rows in rank order.
    pub fn ranked(&self) -> impl Iterator<Item = &ModeRow> {
        self.rank_order.iter().map(move |&i| &self.rows[i])
    }

    pub fn top(&self, k: usize) -> Vec<&ModeRow> {
        self.ranked().take(k).collect()
    }
}

/// Relative resolution at which two powers count as tied.
const POWER_TIE_RESOLUTION: f64 = 1e-12;

/// Row indices by descending power. Powers are compared relative to the
/// largest one at [`POWER_TIE_RESOLUTION`], so rescaling the panel cannot
/// reorder them; ties go to the lower frequency, then the lower mode index.
pub fn rank_rows(rows: &[ModeRow]) -> Vec<usize> {
    let max_power = rows.iter().map(|r| r.power).fold(0.0, f64::max);
    let key = |r: &ModeRow| -> u64 {
        if max_power > 0.0 {
            (r.power / max_power / POWER_TIE_RESOLUTION).round() as u64
        } else {
            0
        }
    };
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&rows[a], &rows[b]);
        key(rb)
            .cmp(&key(ra))
            .then(ra.frequency.total_cmp(&rb.frequency))
            .then(ra.mode.cmp(&rb.mode))
    });
    order
}

pub fn mode_report(model: &DmdModel, power: PowerDefinition) -> ModeReport {
    let mut rows = Vec::new();
    for i in 0..model.rank {
        let partner = model.conjugate_partner(i);
        // conjugate pairs are represented by their positive-frequency member
        if model.eigenvalues[i].im < 0.0 && partner.is_some() {
            continue;
        }
        let frequency = model.frequency(i);
        rows.push(ModeRow {
            mode: i,
            partner,
            power: model.power(i, power),
            frequency,
            duration: CycleDuration::from_frequency(frequency),
            growth_rate: model.growth_rate(i),
            nyquist: model.is_nyquist(i),
            decayed: model.is_decayed(i),
        });
    }
    let rank_order = rank_rows(&rows);
    ModeReport {
        power_definition: power,
        rows,
        rank_order,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDynamics {
    /// Days since the first snapshot.
    pub times: Vec<f64>,
    /// `traces[i]` is `b_i exp(ω_i t)`, or `None` for modes excluded as
    /// decayed in one step.
    pub traces: Vec<Option<Vec<Complex64>>>,
    pub excluded: Vec<usize>,
    /// Some time lies outside the fitted span.
    pub extrapolated: bool,
}

impl TemporalDynamics {
    /// Real trace of a report row: the mode plus its conjugate partner.
    pub fn combined(&self, row: &ModeRow) -> Option<Vec<f64>> {
        let own = self.traces[row.mode].as_ref()?;
        Some(match row.partner.and_then(|p| self.traces[p].as_ref()) {
            Some(other) => own.iter().zip(other).map(|(a, b)| (a + b).re).collect(),
            None => own.iter().map(|a| a.re).collect(),
        })
    }
}

fn outside_span(model: &DmdModel, times: &[f64]) -> bool {
    let span = model.span();
    times.iter().any(|&t| t < 0.0 || t > span + 1e-9 * span.max(1.0))
}

pub fn temporal_dynamics(model: &DmdModel, times: &[f64]) -> TemporalDynamics {
    let mut excluded = Vec::new();
    let traces = (0..model.rank)
        .map(|i| match model.omega[i] {
            Some(w) => Some(
                times
                    .iter()
                    .map(|&t| model.amplitudes[i] * (w * t).exp())
                    .collect(),
            ),
            None => {
                excluded.push(i);
                None
            }
        })
        .collect();
    if !excluded.is_empty() {
        log::warn!("modes {excluded:?} decay to zero in one step and are excluded from temporal traces");
    }
    let extrapolated = outside_span(model, times);
    if extrapolated {
        log::info!("temporal traces extrapolate beyond the fitted span");
    }
    TemporalDynamics {
        times: times.to_vec(),
        traces,
        excluded,
        extrapolated,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub times: Vec<f64>,
    /// One row per series.
    pub values: Vec<Vec<f64>>,
    /// Largest discarded imaginary part; near zero for real data.
    pub max_imag: f64,
    pub extrapolated: bool,
}

impl Reconstruction {
    /// ‖X − X̂‖_F / ‖X‖_F against the panel columns at the same times.
    pub fn relative_error(&self, reference: &[Vec<f64>]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (r, x) in reference.iter().zip(&self.values) {
            for (a, b) in r.iter().zip(x) {
                num += (a - b) * (a - b);
                den += a * a;
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// Attach ids and day labels to form a panel.
    pub fn into_panel(self, series_ids: Vec<String>, days: Vec<i64>) -> Result<Panel> {
        Panel::new(series_ids, days, self.values)
    }
}

/// `x(t) = Σ Φ_i b_i exp(ω_i t)`. Modes with λ = 0 contribute only at t = 0.
pub fn reconstruct(model: &DmdModel, times: &[f64]) -> Reconstruction {
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); times.len()]; model.n_series];
    for i in 0..model.rank {
        let b = model.amplitudes[i];
        for (k, &t) in times.iter().enumerate() {
            let coef = match model.omega[i] {
                Some(w) => b * (w * t).exp(),
                None if t == 0.0 => b,
                None => continue,
            };
            for (row, phi) in acc.iter_mut().zip(&model.modes[i]) {
                row[k] += phi * coef;
            }
        }
    }
    let max_imag = acc.iter().flatten().map(|c| c.im.abs()).fold(0.0, f64::max);
    Reconstruction {
        times: times.to_vec(),
        values: acc.iter().map(|r| r.iter().map(|c| c.re).collect()).collect(),
        max_imag,
        extrapolated: outside_span(model, times),
    }
}

/// Sample times `0, dt, ..., (T-1) dt` of the fitted panel.
pub fn sample_times(model: &DmdModel) -> Vec<f64> {
    (0..model.n_snapshots).map(|k| k as f64 * model.dt).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMagnitude {
    pub magnitude: f64,
    /// In (−π, π].
    pub phase: f64,
}

/// Element-wise magnitude and phase of one mode, in series order.
pub fn phase_magnitude(model: &DmdModel, index: usize) -> Result<Vec<PhaseMagnitude>> {
    let mode = model.modes.get(index).ok_or_else(|| {
        Error::Argument(format!(
            "mode index {index} out of range for {} modes",
            model.rank
        ))
    })?;
    Ok(mode
        .iter()
        .map(|c| {
            let mut phase = c.im.atan2(c.re);
            if phase <= -PI {
                phase = PI;
            }
            PhaseMagnitude {
                magnitude: c.norm(),
                phase,
            }
        })
        .collect())
}
