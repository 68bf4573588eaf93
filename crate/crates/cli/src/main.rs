use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use modescope::config::{RunConfig, SynthPreset};
use modescope::dmd::PowerDefinition;
use modescope::ingest::{write_panel, MissingPolicy, NormalizeMethod};
use modescope::pipeline::run;
use modescope::report::{emit_bundle, emit_mode_table, emit_stats};
use modescope::synth::{gen_planted_cycles, parse_cycles, preset_specs, PRICE_CYCLES, SALES_CYCLES};
use modescope::wavelet::Padding;
use modescope::{Error, Result};

/// Wavelet multiresolution, multifractal spectra and dynamic mode
/// decomposition for panels of daily time series.
///
/// Log verbosity follows RUST_LOG (e.g. RUST_LOG=info).
#[derive(Parser)]
#[command(name = "modescope", version)]
struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics and Jarque-Bera test per series.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stats: StatsArgs,
    },
    /// Multiresolution decomposition of every series.
    Wavelet {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        wavelet: WaveletArgs,
    },
    /// Besov exponents and singularity spectrum per series.
    Mfspectrum {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        wavelet: WaveletArgs,
        #[command(flatten)]
        mf: MultifractalArgs,
    },
    /// Exact DMD with power-ranked mode table.
    Dmd {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        dmd: DmdArgs,
    },
    /// Write a synthetic panel as CSV (to stdout, or OUT/panel.csv).
    Synth {
        /// Planted-cycle preset.
        #[arg(long, value_parser = parse_preset, conflicts_with = "cycles")]
        preset: Option<SynthPreset>,
        /// TOML file of [[cycle]] tables.
        #[arg(long)]
        cycles: Option<PathBuf>,
        /// Number of series (presets only).
        #[arg(long, default_value_t = 16)]
        series: usize,
        #[arg(long, default_value_t = 1024)]
        length: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Every stage enabled in the configuration.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stats: StatsArgs,
        #[command(flatten)]
        wavelet: WaveletArgs,
        #[command(flatten)]
        mf: MultifractalArgs,
        #[command(flatten)]
        dmd: DmdArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Panel CSV: header `date,<id1>,...,<idN>`.
    input: Option<PathBuf>,
    /// Use a synthetic preset instead of a file.
    #[arg(long, value_parser = parse_preset, conflicts_with = "input")]
    synth: Option<SynthPreset>,
    #[arg(long, value_parser = parse_from_str::<NormalizeMethod>)]
    normalize: Option<NormalizeMethod>,
    #[arg(long, value_parser = parse_from_str::<MissingPolicy>)]
    missing: Option<MissingPolicy>,
    #[arg(long)]
    date_column: Option<String>,
    /// Synthetic panel: number of series.
    #[arg(long)]
    series: Option<usize>,
    /// Synthetic panel: number of observations.
    #[arg(long)]
    length: Option<usize>,
    /// Synthetic panel: Gaussian noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct StatsArgs {
    /// Significance level of the Jarque-Bera test.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct WaveletArgs {
    /// haar or db2.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_parser = parse_from_str::<Padding>)]
    padding: Option<Padding>,
}

#[derive(Args)]
struct MultifractalArgs {
    #[arg(long, allow_negative_numbers = true)]
    p_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_max: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha_max: Option<f64>,
    #[arg(long)]
    alpha_step: Option<f64>,
    /// Regression levels as first:last.
    #[arg(long)]
    fit_levels: Option<String>,
    #[arg(long)]
    concavity_tol: Option<f64>,
}

#[derive(Args)]
struct DmdArgs {
    #[arg(long, conflicts_with = "energy")]
    rank: Option<usize>,
    /// Keep the smallest rank reaching this fraction of Σσ².
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, value_parser = parse_from_str::<PowerDefinition>)]
    power: Option<PowerDefinition>,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<SynthPreset, String> {
    match s {
        "price" => Ok(SynthPreset::Price),
        "sales" => Ok(SynthPreset::Sales),
        other => Err(format!("unknown preset `{other}` (expected price or sales)")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl InputArgs {
    fn apply(self, c: &mut RunConfig) {
        if let Some(path) = self.input {
            c.input.path = Some(path);
            c.input.synth = None;
        }
        if let Some(preset) = self.synth {
            c.input.synth = Some(preset);
            c.input.path = None;
        }
        set(&mut c.input.normalize, self.normalize);
        set(&mut c.input.missing, self.missing);
        set(&mut c.input.date_column, self.date_column);
        set(&mut c.input.series, self.series);
        set(&mut c.input.length, self.length);
        set(&mut c.input.noise, self.noise);
    }
}

impl StatsArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.stats.alpha, self.alpha);
    }
}

impl WaveletArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.wavelet.filter, self.filter);
        set(&mut c.wavelet.levels, self.levels);
        set(&mut c.wavelet.padding, self.padding);
    }
}

impl MultifractalArgs {
    fn apply(self, c: &mut RunConfig) {
        let m = &mut c.multifractal;
        if self.p_min.is_some() {
            m.p_min = self.p_min;
        }
        if self.p_max.is_some() {
            m.p_max = self.p_max;
        }
        set(&mut m.p_step, self.p_step);
        set(&mut m.alpha_min, self.alpha_min);
        set(&mut m.alpha_max, self.alpha_max);
        set(&mut m.alpha_step, self.alpha_step);
        if self.fit_levels.is_some() {
            m.fit_levels = self.fit_levels;
        }
        set(&mut m.concavity_tol, self.concavity_tol);
    }
}

impl DmdArgs {
    fn apply(self, c: &mut RunConfig) {
        if self.rank.is_some() {
            c.dmd.rank = self.rank;
            c.dmd.energy = None;
        }
        if self.energy.is_some() {
            c.dmd.energy = self.energy;
            c.dmd.rank = None;
        }
        set(&mut c.dmd.top, self.top);
        set(&mut c.dmd.power, self.power);
    }
}

#[derive(Clone, Copy)]
enum Only {
    Stats,
    Wavelet,
    Multifractal,
    Dmd,
}

fn only(c: &mut RunConfig, stage: Only) {
    c.stats.enabled = matches!(stage, Only::Stats);
    c.wavelet.enabled = matches!(stage, Only::Wavelet);
    c.multifractal.enabled = matches!(stage, Only::Multifractal);
    c.dmd.enabled = matches!(stage, Only::Dmd);
}

fn analyse(config: &RunConfig, echo: Option<Only>) -> Result<()> {
    let bundle = run(config)?;
    let dir = &config.output.dir;
    let manifest = emit_bundle(&bundle, dir)?;
    info!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
    let stdout = io::stdout().lock();
    match echo {
        Some(Only::Stats) => emit_stats(bundle.stats.as_deref().unwrap_or_default(), stdout),
        Some(Only::Dmd) => match &bundle.dmd {
            Some(d) => emit_mode_table(&d.report, d.top, stdout),
            None => Ok(()),
        },
        _ => {
            let mut out = stdout;
            writeln!(out, "{}", dir.join(modescope::report::MANIFEST_FILE).display())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn synth(
    preset: Option<SynthPreset>,
    cycles: Option<&Path>,
    (series, length, noise): (usize, usize, f64),
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let specs = match (preset, cycles) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_cycles(&text)?
        }
        (Some(SynthPreset::Price), None) => preset_specs(&PRICE_CYCLES, series, seed),
        (Some(SynthPreset::Sales), None) => preset_specs(&SALES_CYCLES, series, seed),
        (None, None) => return Err(Error::Argument("synth needs --preset or --cycles".into())),
    };
    let panel = gen_planted_cycles(&specs, length, noise, seed)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join("panel.csv");
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_panel(&panel, io::BufWriter::new(file))
        }
        None => write_panel(&panel, io::stdout().lock()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut config.output.dir, cli.out.clone());
    set(&mut config.output.seed, cli.seed);

    let echo = match cli.command {
        Command::Synth {
            preset,
            cycles,
            series,
            length,
            noise,
        } => {
            let out = cli.out.as_deref();
            return synth(preset, cycles.as_deref(), (series, length, noise), config.output.seed, out);
        }
        Command::Stats { input, stats } => {
            input.apply(&mut config);
            stats.apply(&mut config);
            only(&mut config, Only::Stats);
            Some(Only::Stats)
        }
        Command::Wavelet { input, wavelet } => {
            input.apply(&mut config);
            wavelet.apply(&mut config);
            only(&mut config, Only::Wavelet);
            Some(Only::Wavelet)
        }
        Command::Mfspectrum { input, wavelet, mf } => {
            input.apply(&mut config);
            wavelet.apply(&mut config);
            mf.apply(&mut config);
            only(&mut config, Only::Multifractal);
            Some(Only::Multifractal)
        }
        Command::Dmd { input, dmd } => {
            input.apply(&mut config);
            dmd.apply(&mut config);
            only(&mut config, Only::Dmd);
            Some(Only::Dmd)
        }
        Command::Run {
            input,
            stats,
            wavelet,
            mf,
            dmd,
        } => {
            input.apply(&mut config);
            stats.apply(&mut config);
            wavelet.apply(&mut config);
            mf.apply(&mut config);
            dmd.apply(&mut config);
            None
        }
    };
    analyse(&config, echo)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
