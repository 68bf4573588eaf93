//! End-to-end run: input, the enabled stages in order, then a bundle.

use std::fs;

use log::{debug, info};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SynthPreset};
use crate::dmd::{fit_dmd, mode_report, phase_magnitude, sample_times, temporal_dynamics};
use crate::error::{Error, Result};
use crate::ingest::{load_panel, normalize, Panel};
use crate::multifractal::estimate_spectrum;
use crate::report::{AnalysisBundle, DmdResult, Provenance, SeriesSpectrum, SeriesStats, WaveletResult, TOOL};
use crate::stats::{jarque_bera, summarize};
use crate::synth::{gen_planted_cycles, preset_specs, PRICE_CYCLES, SALES_CYCLES};
use crate::wavelet::{dwt_forward_padded, mra_from_coefficients};

/// Reads or generates the input panel and applies the configured
/// normalization. Returns the SHA-256 of the input file when there is one.
pub fn load_input(config: &RunConfig) -> Result<(Panel, Option<String>)> {
    let input = &config.input;
    let (raw, digest) = match (&input.path, input.synth) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let panel = load_panel(bytes.as_slice(), &input.ingest())?;
            (panel, Some(hex::encode(Sha256::digest(&bytes))))
        }
        (None, Some(preset)) => {
            let rows: &[_] = match preset {
                SynthPreset::Price => &PRICE_CYCLES,
                SynthPreset::Sales => &SALES_CYCLES,
            };
            let seed = config.output.seed;
            let specs = preset_specs(rows, input.series, seed);
            (gen_planted_cycles(&specs, input.length, input.noise, seed)?, None)
        }
        (None, None) => return Err(Error::Config("no input configured".into())),
    };
    Ok((normalize(&raw, input.normalize), digest))
}

fn run_stats(panel: &Panel, alpha: f64) -> Result<Vec<SeriesStats>> {
    panel
        .series_ids()
        .iter()
        .zip(panel.values())
        .map(|(id, row)| {
            let summary = summarize(row)?;
            let jb = if summary.skewness.is_some() && row.len() >= 8 {
                Some(jarque_bera(row, alpha)?)
            } else {
                None
            };
            Ok(SeriesStats {
                id: id.clone(),
                summary,
                jb,
            })
        })
        .collect()
}

fn run_wavelet(panel: &Panel, config: &RunConfig) -> Result<WaveletResult> {
    let filter = config.filter()?;
    let w = &config.wavelet;
    let series = panel
        .values()
        .iter()
        .map(|row| {
            let coeffs = dwt_forward_padded(row, &filter, w.levels, w.padding)?;
            mra_from_coefficients(&coeffs, &filter)
        })
        .collect::<Result<_>>()?;
    Ok(WaveletResult {
        filter: filter.name().to_string(),
        levels: w.levels,
        series,
    })
}

fn run_multifractal(panel: &Panel, config: &RunConfig) -> Result<Vec<SeriesSpectrum>> {
    let filter = config.filter()?;
    let mf = config.multifractal_config()?;
    let w = &config.wavelet;
    panel
        .series_ids()
        .iter()
        .zip(panel.values())
        .map(|(id, row)| {
            let coeffs = dwt_forward_padded(row, &filter, w.levels, w.padding)?;
            let spectrum = estimate_spectrum(&coeffs, &mf).map_err(|e| match e {
                Error::Estimation(m) => Error::Estimation(format!("series `{id}`: {m}")),
                other => other,
            })?;
            Ok(SeriesSpectrum {
                id: id.clone(),
                spectrum,
            })
        })
        .collect()
}

fn run_dmd(panel: &Panel, config: &RunConfig) -> Result<DmdResult> {
    let model = fit_dmd(panel, config.rank_selection()?)?;
    let report = mode_report(&model, config.dmd.power);
    let top = config.dmd.top.min(report.rows.len());
    if top < config.dmd.top {
        info!("dmd: {} modes requested, {} available", config.dmd.top, top);
    }
    let dynamics = temporal_dynamics(&model, &sample_times(&model));
    let spatial = report
        .top(top)
        .into_iter()
        .map(|row| phase_magnitude(&model, row.mode))
        .collect::<Result<_>>()?;
    Ok(DmdResult {
        model,
        report,
        top,
        dynamics,
        spatial,
    })
}

/// Validates the config, then runs every enabled stage. The first failing
/// stage aborts the run with its name attached.
pub fn run(config: &RunConfig) -> Result<AnalysisBundle> {
    config.validate()?;
    let (panel, input_sha256) = load_input(config).map_err(Error::in_stage("ingest"))?;
    info!("panel: {} series x {} observations", panel.n_series(), panel.len());

    let stats = if config.stats.enabled {
        debug!("stage stats");
        Some(run_stats(&panel, config.stats.alpha).map_err(Error::in_stage("stats"))?)
    } else {
        None
    };
    let wavelet = if config.wavelet.enabled {
        debug!("stage wavelet");
        Some(run_wavelet(&panel, config).map_err(Error::in_stage("wavelet"))?)
    } else {
        None
    };
    let multifractal = if config.multifractal.enabled {
        debug!("stage multifractal");
        Some(run_multifractal(&panel, config).map_err(Error::in_stage("multifractal"))?)
    } else {
        None
    };
    let dmd = if config.dmd.enabled {
        debug!("stage dmd");
        Some(run_dmd(&panel, config).map_err(Error::in_stage("dmd"))?)
    } else {
        None
    };

    Ok(AnalysisBundle {
        provenance: Provenance {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seed: config.output.seed,
            input_sha256,
        },
        panel,
        stats,
        wavelet,
        multifractal,
        dmd,
    })
}
