//! CSV and JSON renderings of analysis results, and the bundle manifest.
//!
//! Display tables are rounded: frequencies to 4 decimals, statistics to 2.
//! Plot-data CSVs and every JSON file carry full `f64` precision.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dmd::{DmdModel, ModeReport, PhaseMagnitude, TemporalDynamics};
use crate::error::{Error, Result};
use crate::ingest::{write_panel, Panel};
use crate::multifractal::MultifractalSpectrum;
use crate::stats::{JbResult, SeriesSummary};
use crate::wavelet::MraDecomposition;

pub const TOOL: &str = "modescope";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of the input file; `None` for synthetic input.
    pub input_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub id: String,
    pub summary: SeriesSummary,
    /// `None` when the series is too short or constant for the test.
    pub jb: Option<JbResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletResult {
    pub filter: String,
    pub levels: usize,
    /// One decomposition per series, in panel order.
    pub series: Vec<MraDecomposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpectrum {
    pub id: String,
    pub spectrum: MultifractalSpectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmdResult {
    pub model: DmdModel,
    pub report: ModeReport,
    /// Rows written to the mode table.
    pub top: usize,
    pub dynamics: TemporalDynamics,
    /// Spatial magnitude and phase of each of the top rows.
    pub spatial: Vec<Vec<PhaseMagnitude>>,
}

/// Everything one run produced. A `None` stage was disabled.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBundle {
    pub provenance: Provenance,
    pub panel: Panel,
    pub stats: Option<Vec<SeriesStats>>,
    pub wavelet: Option<WaveletResult>,
    pub multifractal: Option<Vec<SeriesSpectrum>>,
    pub dmd: Option<DmdResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactClass {
    Panel,
    Stats,
    Wavelet,
    Multifractal,
    Dmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Done,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the bundle directory, `/`-separated.
    pub path: String,
    pub class: ArtifactClass,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelInfo {
    pub series_ids: Vec<String>,
    pub len: usize,
    pub dt: f64,
    pub first: String,
    pub last: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub input_sha256: Option<String>,
    pub panel: PanelInfo,
    pub stages: BTreeMap<String, StageStatus>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn classes(&self) -> Vec<ArtifactClass> {
        let mut c: Vec<_> = self.files.iter().map(|f| f.class).collect();
        c.sort();
        c.dedup();
        c
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv sink>", io),
        other => Error::Validation(format!("csv write failed: {other:?}")),
    }
}

/// Fixed-point rendering without a negative zero.
pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn opt_fixed(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "NA".into(), |v| fixed(v, decimals))
}

/// `mode,daily_frequency,duration` for the `k` strongest rows. Mode numbers
/// are 1-based ranks.
pub fn emit_mode_table<W: Write>(report: &ModeReport, k: usize, sink: W) -> Result<()> {
    if k > report.rows.len() {
        return Err(Error::Argument(format!(
            "requested {k} modes but the report has {}",
            report.rows.len()
        )));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["mode", "daily_frequency", "duration"]).map_err(csv_err)?;
    for (rank, row) in report.top(k).into_iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            fixed(row.frequency, 4),
            row.duration.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// Long format `t,component,value` with components `x`, `A_J`, `D_1..D_J`.
pub fn emit_decomposition<W: Write>(series: &[f64], times: &[String], mra: &MraDecomposition, sink: W) -> Result<()> {
    if series.len() != mra.len() || times.len() != mra.len() {
        return Err(Error::Structure(format!(
            "decomposition of length {} does not match series of length {} with {} times",
            mra.len(),
            series.len(),
            times.len()
        )));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "component", "value"]).map_err(csv_err)?;
    let approx_name = format!("A_{}", mra.levels());
    let mut components: Vec<(String, &[f64])> = vec![("x".into(), series), (approx_name, &mra.approximation)];
    components.extend(
        mra.details
            .iter()
            .enumerate()
            .map(|(j, d)| (format!("D_{}", j + 1), d.as_slice())),
    );
    for (name, values) in &components {
        for (t, v) in times.iter().zip(values.iter()) {
            w.write_record([t.as_str(), name.as_str(), &v.to_string()]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// Table-2 style: `id,mean,median,min,max,std,skewness,kurtosis,jb_h,jb_p`.
/// Kurtosis is non-excess.
pub fn emit_stats<W: Write>(stats: &[SeriesStats], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "id", "mean", "median", "min", "max", "std", "skewness", "kurtosis", "jb_h", "jb_p",
    ])
    .map_err(csv_err)?;
    for s in stats {
        let m = &s.summary;
        let (h, p) = match &s.jb {
            Some(jb) => ((jb.h as u8).to_string(), fixed(jb.p_value, 2)),
            None => ("NA".into(), "NA".into()),
        };
        w.write_record([
            s.id.clone(),
            fixed(m.mean, 2),
            fixed(m.median, 2),
            fixed(m.min, 2),
            fixed(m.max, 2),
            fixed(m.std, 2),
            opt_fixed(m.skewness, 2),
            opt_fixed(m.kurtosis, 2),
            h,
            p,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// `p,b,slope,max_residual`.
pub fn emit_besov<W: Write>(spectrum: &MultifractalSpectrum, sink: W) -> Result<()> {
    let fit = &spectrum.besov;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["p", "b", "slope", "max_residual"]).map_err(csv_err)?;
    for i in 0..fit.p_grid.len() {
        w.write_record([
            fit.p_grid[i].to_string(),
            fit.b[i].to_string(),
            fit.slopes[i].to_string(),
            fit.residuals[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// `alpha,d,argmin_p`.
pub fn emit_spectrum<W: Write>(spectrum: &MultifractalSpectrum, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["alpha", "d", "argmin_p"]).map_err(csv_err)?;
    for pt in &spectrum.spectrum {
        w.write_record([pt.alpha.to_string(), pt.d.to_string(), pt.argmin_p.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// One verdict line per series: `id,concave,gap,fit_levels`.
pub fn emit_concavity<W: Write>(spectra: &[SeriesSpectrum], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "concave", "gap", "fit_levels"]).map_err(csv_err)?;
    for s in spectra {
        w.write_record([
            s.id.clone(),
            s.spectrum.concavity.concave.to_string(),
            s.spectrum.concavity.gap.to_string(),
            s.spectrum.fit_range().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// Element-wise magnitude and phase of the top modes:
/// `mode,id,magnitude,phase`. Feeds both the spatial bar charts and the
/// phase-magnitude scatter.
pub fn emit_spatial<W: Write>(result: &DmdResult, series_ids: &[String], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["mode", "id", "magnitude", "phase"]).map_err(csv_err)?;
    for (rank, entries) in result.spatial.iter().enumerate() {
        for (id, pm) in series_ids.iter().zip(entries) {
            w.write_record([
                (rank + 1).to_string(),
                id.clone(),
                pm.magnitude.to_string(),
                pm.phase.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

/// Real temporal traces of the top modes, conjugate pairs combined:
/// `t,mode,value`. Modes gone after one step are left out.
pub fn emit_temporal<W: Write>(result: &DmdResult, times: &[String], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "mode", "value"]).map_err(csv_err)?;
    for (rank, row) in result.report.top(result.top).into_iter().enumerate() {
        let Some(trace) = result.dynamics.combined(row) else {
            continue;
        };
        for (t, v) in times.iter().zip(trace) {
            w.write_record([t.clone(), (rank + 1).to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))
}

#[derive(Serialize)]
struct DmdJson<'a> {
    model: &'a DmdModel,
    report: &'a ModeReport,
    top: usize,
}

/// File name stem for a series id: index plus the id with anything outside
/// `[A-Za-z0-9._-]` replaced.
fn series_stem(index: usize, id: &str) -> String {
    let clean: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    format!("{:02}_{clean}", index + 1)
}

struct BundleWriter<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl BundleWriter<'_> {
    fn write(&mut self, rel: &str, class: ArtifactClass, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut bytes = Vec::new();
        render(&mut bytes)?;
        let path: PathBuf = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            class,
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, class: ArtifactClass, value: &T) -> Result<()> {
        self.write(rel, class, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)
                .map_err(|e| Error::Validation(format!("json encoding failed: {e}")))?;
            buf.push(b'\n');
            Ok(())
        })
    }
}

/// Writes every artifact of the bundle into `dir`, then `manifest.json`
/// listing each file with its SHA-256. Returns the manifest.
pub fn emit_bundle(bundle: &AnalysisBundle, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let panel = &bundle.panel;
    let ids = panel.series_ids();
    let times = panel.time_labels();
    let mut out = BundleWriter { dir, files: Vec::new() };
    let mut stages = BTreeMap::new();
    let mark = |stages: &mut BTreeMap<String, StageStatus>, name: &str, done: bool| {
        stages.insert(
            name.to_string(),
            if done { StageStatus::Done } else { StageStatus::Skipped },
        );
    };

    out.write("panel.csv", ArtifactClass::Panel, |buf| write_panel(panel, buf))?;

    mark(&mut stages, "stats", bundle.stats.is_some());
    if let Some(stats) = &bundle.stats {
        out.write("stats.csv", ArtifactClass::Stats, |buf| emit_stats(stats, buf))?;
        out.json("stats.json", ArtifactClass::Stats, stats)?;
    }

    mark(&mut stages, "wavelet", bundle.wavelet.is_some());
    if let Some(wavelet) = &bundle.wavelet {
        for (i, mra) in wavelet.series.iter().enumerate() {
            let rel = format!("wavelet/{}.csv", series_stem(i, &ids[i]));
            out.write(&rel, ArtifactClass::Wavelet, |buf| {
                emit_decomposition(panel.row(i), &times, mra, buf)
            })?;
        }
    }

    mark(&mut stages, "multifractal", bundle.multifractal.is_some());
    if let Some(spectra) = &bundle.multifractal {
        for (i, s) in spectra.iter().enumerate() {
            let stem = series_stem(i, &s.id);
            out.write(&format!("multifractal/{stem}_besov.csv"), ArtifactClass::Multifractal, |buf| {
                emit_besov(&s.spectrum, buf)
            })?;
            out.write(&format!("multifractal/{stem}_spectrum.csv"), ArtifactClass::Multifractal, |buf| {
                emit_spectrum(&s.spectrum, buf)
            })?;
        }
        out.write("multifractal/concavity.csv", ArtifactClass::Multifractal, |buf| {
            emit_concavity(spectra, buf)
        })?;
        out.json("multifractal.json", ArtifactClass::Multifractal, spectra)?;
    }

    mark(&mut stages, "dmd", bundle.dmd.is_some());
    if let Some(dmd) = &bundle.dmd {
        out.write("dmd/modes.csv", ArtifactClass::Dmd, |buf| emit_mode_table(&dmd.report, dmd.top, buf))?;
        out.write("dmd/spatial.csv", ArtifactClass::Dmd, |buf| emit_spatial(dmd, ids, buf))?;
        out.write("dmd/temporal.csv", ArtifactClass::Dmd, |buf| emit_temporal(dmd, &times, buf))?;
        out.json(
            "dmd.json",
            ArtifactClass::Dmd,
            &DmdJson {
                model: &dmd.model,
                report: &dmd.report,
                top: dmd.top,
            },
        )?;
    }

    let p = &bundle.provenance;
    let manifest = Manifest {
        tool: p.tool.clone(),
        version: p.version.clone(),
        config_hash: p.config_hash.clone(),
        seed: p.seed,
        input_sha256: p.input_sha256.clone(),
        panel: PanelInfo {
            series_ids: ids.to_vec(),
            len: panel.len(),
            dt: panel.dt(),
            first: times.first().cloned().unwrap_or_default(),
            last: times.last().cloned().unwrap_or_default(),
        },
        stages,
        files: out.files,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Validation(format!("json encoding failed: {e}")))?;
    text.push(b'\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
