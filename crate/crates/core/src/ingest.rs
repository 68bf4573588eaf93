//! Panel loading, validation and normalization.
//!
//! The on-disk contract is a UTF-8, comma-delimited table whose header is
//! `date,<id1>,...,<idN>`. The time column holds either integer day indices
//! or ISO-8601 calendar dates (`YYYY-MM-DD`), one row per observation, with
//! a constant spacing. Values use `.` as decimal point.

use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the time column was written in the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeFormat {
    #[default]
    DayIndex,
    IsoDate,
}

/// N series sampled on one uniform daily grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    series_ids: Vec<String>,
    times: Vec<i64>,
    values: Vec<Vec<f64>>,
    dt: i64,
    time_format: TimeFormat,
}

impl Panel {
    /// Builds a panel and checks every invariant: at least two columns,
    /// rows of equal length, strictly increasing times with constant spacing,
    /// finite values.
    pub fn new(series_ids: Vec<String>, times: Vec<i64>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_format(series_ids, times, values, TimeFormat::DayIndex)
    }

    /// Panel on the day grid `0..len` with generated ids `s1..sN`.
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self> {
        let len = values.first().map_or(0, Vec::len);
        let ids = (1..=values.len()).map(|i| format!("s{i}")).collect();
        Self::new(ids, (0..len as i64).collect(), values)
    }

    pub fn with_format(
        series_ids: Vec<String>,
        times: Vec<i64>,
        values: Vec<Vec<f64>>,
        time_format: TimeFormat,
    ) -> Result<Self> {
        if series_ids.is_empty() {
            return Err(Error::Validation("panel has no series".into()));
        }
        if series_ids.len() != values.len() {
            return Err(Error::Validation(format!(
                "{} series ids for {} value rows",
                series_ids.len(),
                values.len()
            )));
        }
        let len = times.len();
        if len < 2 {
            return Err(Error::Validation(format!(
                "panel needs at least 2 observations, got {len}"
            )));
        }
        for (id, row) in series_ids.iter().zip(&values) {
            if row.len() != len {
                return Err(Error::Validation(format!(
                    "series `{id}` has {} values, expected {len}",
                    row.len()
                )));
            }
            if let Some(pos) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "series `{id}` has a non-finite value at position {pos}"
                )));
            }
        }
        let dt = check_spacing(&times, |i| i + 1)?;
        Ok(Panel {
            series_ids,
            times,
            values,
            dt,
            time_format,
        })
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    /// One row per series.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    /// Number of series (N).
    pub fn n_series(&self) -> usize {
        self.values.len()
    }

    /// Number of observations (T).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sampling interval in days.
    pub fn dt(&self) -> f64 {
        self.dt as f64
    }

    pub fn time_format(&self) -> TimeFormat {
        self.time_format
    }

    /// Time stamps rendered the way they were read.
    pub fn time_labels(&self) -> Vec<String> {
        self.times.iter().map(|&d| format_time(d, self.time_format)).collect()
    }

    /// Same ids and times, new values. Used by the pure transforms below.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Panel> {
        let values = self.values.iter().map(|r| f(r)).collect();
        Panel::with_format(
            self.series_ids.clone(),
            self.times.clone(),
            values,
            self.time_format,
        )
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Panel> {
        self.map_rows(|r| r.iter().map(|v| v * factor).collect())
    }
}

/// Returns the constant spacing; `line_of` maps a time index to a source line
/// for error messages.
fn check_spacing(times: &[i64], line_of: impl Fn(usize) -> usize) -> Result<i64> {
    let dt = times[1] - times[0];
    if dt <= 0 {
        return Err(Error::Ordering {
            line: line_of(1),
            message: format!("time {} does not follow {}", times[1], times[0]),
        });
    }
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if step <= 0 {
            return Err(Error::Ordering {
                line: line_of(i + 1),
                message: format!("time {} does not follow {}", w[1], w[0]),
            });
        }
        if step != dt {
            return Err(Error::Ordering {
                line: line_of(i + 1),
                message: format!("spacing {step} differs from inferred interval {dt} (gap in the grid)"),
            });
        }
    }
    Ok(dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    ForwardFill,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(MissingPolicy::Reject),
            "forward-fill" | "ffill" => Ok(MissingPolicy::ForwardFill),
            other => Err(Error::Argument(format!("unknown missing-value policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    pub date_column: String,
    pub missing: MissingPolicy,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            date_column: "date".into(),
            missing: MissingPolicy::Reject,
        }
    }
}

const EPOCH_OFFSET: i64 = 719_163; // days from 0001-01-01 to 1970-01-01

fn parse_time(cell: &str, line: usize) -> Result<(i64, TimeFormat)> {
    let cell = cell.trim();
    if let Ok(day) = cell.parse::<i64>() {
        return Ok((day, TimeFormat::DayIndex));
    }
    NaiveDate::parse_from_str(cell, "%Y-%m-%d")
        .map(|d| (d.num_days_from_ce() as i64 - EPOCH_OFFSET, TimeFormat::IsoDate))
        .map_err(|_| Error::Parse {
            line,
            message: format!("`{cell}` is neither an integer day index nor a YYYY-MM-DD date"),
        })
}

fn format_time(day: i64, format: TimeFormat) -> String {
    match format {
        TimeFormat::DayIndex => day.to_string(),
        TimeFormat::IsoDate => i32::try_from(day + EPOCH_OFFSET)
            .ok()
            .and_then(NaiveDate::from_num_days_from_ce_opt)
            .map(|d| d.format("%Y-%m-%d").to_string())
            .unwrap_or_else(|| day.to_string()),
    }
}

/// Parses a numeric cell. `Ok(None)` marks a missing or non-finite value.
fn parse_cell(cell: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(_) => Err(Error::Parse {
            line,
            message: format!("column `{column}`: `{cell}` is not a number"),
        }),
    }
}

/// Reads a panel from delimited text.
pub fn load_panel<R: Read>(source: R, config: &IngestConfig) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .clone();
    let date_idx = header
        .iter()
        .position(|h| h.trim() == config.date_column)
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header has no `{}` column", config.date_column),
        })?;
    let ids: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != date_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if ids.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "header names no series".into(),
        });
    }
    if let Some(dup) = ids.iter().enumerate().find(|(i, id)| ids[..*i].contains(id)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("duplicate series id `{}`", dup.1),
        });
    }

    let width = header.len();
    let mut times = Vec::new();
    let mut lines = Vec::new();
    let mut format: Option<TimeFormat> = None;
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| csv_error(e, lines.last().map_or(2, |l| l + 1)))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let (day, row_format) = parse_time(&record[date_idx], line)?;
        match format {
            None => format = Some(row_format),
            Some(f) if f != row_format => {
                return Err(Error::Parse {
                    line,
                    message: "time column mixes day indices and calendar dates".into(),
                })
            }
            _ => {}
        }
        times.push(day);
        lines.push(line);
        let mut series = 0;
        for (col, cell) in record.iter().enumerate() {
            if col == date_idx {
                continue;
            }
            let value = match parse_cell(cell, line, &ids[series])? {
                Some(v) => v,
                None => match config.missing {
                    MissingPolicy::Reject => {
                        return Err(Error::Validation(format!(
                            "line {line}: missing or non-finite value in `{}`",
                            ids[series]
                        )))
                    }
                    MissingPolicy::ForwardFill => match rows[series].last() {
                        Some(prev) => *prev,
                        None => {
                            return Err(Error::Validation(format!(
                                "line {line}: `{}` starts with a missing value; nothing to forward-fill",
                                ids[series]
                            )))
                        }
                    },
                },
            };
            rows[series].push(value);
            series += 1;
        }
    }
    if times.len() < 2 {
        return Err(Error::Validation(format!(
            "panel needs at least 2 observations, got {}",
            times.len()
        )));
    }
    check_spacing(&times, |i| lines[i])?;
    Panel::with_format(ids, times, rows, format.unwrap_or_default())
}

fn csv_error(err: csv::Error, fallback_line: usize) -> Error {
    let line = err
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

/// Writes the panel in the same contract `load_panel` reads. Values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_panel<W: Write>(panel: &Panel, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
    let mut header = vec!["date".to_string()];
    header.extend(panel.series_ids.iter().cloned());
    writer.write_record(&header).map_err(io)?;
    for (t, &day) in panel.times.iter().enumerate() {
        let mut row = Vec::with_capacity(panel.n_series() + 1);
        row.push(format_time(day, panel.time_format));
        row.extend(panel.values.iter().map(|r| r[t].to_string()));
        writer.write_record(&row).map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| Error::Validation(format!("csv write failed: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMethod {
    #[default]
    Minmax,
    Zscore,
    None,
}

impl FromStr for NormalizeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(NormalizeMethod::Minmax),
            "zscore" => Ok(NormalizeMethod::Zscore),
            "none" => Ok(NormalizeMethod::None),
            other => Err(Error::Argument(format!(
                "unknown normalization `{other}` (expected minmax, zscore or none)"
            ))),
        }
    }
}

/// Per-series normalization. Constant series map to zeros under both
/// `minmax` and `zscore`. Standard deviations use the population convention.
pub fn normalize(panel: &Panel, method: NormalizeMethod) -> Panel {
    let out = panel.map_rows(|raw| {
        if method == NormalizeMethod::None {
            return raw.to_vec();
        }
        if raw.iter().all(|&v| v == raw[0]) {
            return vec![0.0; raw.len()];
        }
        // both transforms are scale-free; extreme rows are divided by their peak first
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let row: Vec<f64> = if !(1e-150..=1e150).contains(&peak) {
            raw.iter().map(|v| v / peak).collect()
        } else {
            raw.to_vec()
        };
        match method {
            NormalizeMethod::Minmax => {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let range = hi - lo;
                row.iter().map(|v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
            }
            _ => {
                let n = row.len() as f64;
                let mean = row.iter().sum::<f64>() / n;
                let std = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                if std > 0.0 {
                    row.iter().map(|v| (v - mean) / std).collect()
                } else {
                    vec![0.0; row.len()]
                }
            }
        }
    });
    // every transform above preserves shape and finiteness
    out.expect("normalization preserves panel invariants")
}

/// Offsets series `i` by `i * gap` for stacked plotting.
pub fn stack_for_plot(panel: &Panel, gap: f64) -> Result<Panel> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::Argument(format!("stack gap must be positive, got {gap}")));
    }
    offset_rows(panel, gap)
}

/// Inverse of [`stack_for_plot`].
pub fn unstack(panel: &Panel, gap: f64) -> Result<Panel> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::Argument(format!("stack gap must be positive, got {gap}")));
    }
    offset_rows(panel, -gap)
}

fn offset_rows(panel: &Panel, gap: f64) -> Result<Panel> {
    let mut index = 0usize;
    panel.map_rows(|row| {
        let offset = index as f64 * gap;
        index += 1;
        row.iter().map(|v| v + offset).collect()
    })
}
