//! Command-line front end: simulate, analyze, bandwidth, budget.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 invalid
//! configuration or arguments, 3 I/O or file-format failure, 4 frame
//! synchronization not locked.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ledqkd::bwmeter::{self, SweepDrive, SweepSource};
use ledqkd::config::{BandwidthConfig, BandwidthSource, LinkParams};
use ledqkd::emitter::EmitterModel;
use ledqkd::pipeline::{self, AnalyzeParams};
use ledqkd::postproc::write_plot_csv;
use ledqkd::rng::RandomStream;
use ledqkd::tagfile::TagStream;
use ledqkd::txchain::SymbolPattern;
use ledqkd::units::{mean_photons_per_symbol, photon_rate, MeanPhotonNumber, Wavelength};
use ledqkd::Error;

#[derive(Parser)]
#[command(name = "ledqkd", version, about = "BB84 link simulator and time-tag analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TagFormat {
    Binary,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a link run: writes time tags, the pattern CSV and a report
    Simulate {
        /// Link configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Time-tag output format
        #[arg(long, value_enum, default_value = "binary")]
        format: TagFormat,
    },
    /// Analyze a time-tag file against a pattern CSV
    Analyze {
        /// Time-tag file (QTT1 binary or channel,timestamp_ps CSV)
        tags: PathBuf,
        /// Pattern CSV exported by simulate
        pattern: PathBuf,
        /// Temporal filtering ratio (overrides config)
        #[arg(long)]
        filter_ratio: Option<f64>,
        /// Optional link configuration for sync/report knobs
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the double-click resolution stream (overrides config)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Swept-frequency electro-optic bandwidth measurement
    Bandwidth {
        /// Sweep configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Photon-budget headroom of the emitter at an operating point
    Budget {
        /// Drive current, mA
        #[arg(long)]
        current_ma: f64,
        /// Transmitter symbol rate, Hz
        #[arg(long)]
        symbol_rate: f64,
        /// Target mean photon number per symbol
        #[arg(long)]
        mu: f64,
        /// L-I table CSV (current_ma,power_w); defaults to the built-in model
        #[arg(long)]
        li_csv: Option<PathBuf>,
        /// Center wavelength, nm
        #[arg(long, default_value_t = 1547.0)]
        wavelength_nm: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::TagFormat(_) | Error::PatternFormat(_) => 3,
        Error::SyncNotLocked { .. } => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            format,
        } => cmd_simulate(&config, seed, &out, format),
        Command::Analyze {
            tags,
            pattern,
            filter_ratio,
            config,
            seed,
            out,
        } => cmd_analyze(&tags, &pattern, filter_ratio, config.as_deref(), seed, &out),
        Command::Bandwidth { config, seed, out } => cmd_bandwidth(&config, seed, &out),
        Command::Budget {
            current_ma,
            symbol_rate,
            mu,
            li_csv,
            wavelength_nm,
        } => cmd_budget(current_ma, symbol_rate, mu, li_csv.as_deref(), wavelength_nm),
    }
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    format: TagFormat,
) -> Result<ExitCode, Error> {
    let mut cfg = LinkParams::from_path(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    fs::create_dir_all(out)?;
    let sim = pipeline::simulate_link(&cfg)?;

    let tag_path = match format {
        TagFormat::Binary => {
            let p = out.join("tags.qtt");
            sim.tags.write_qtt_path(&p)?;
            p
        }
        TagFormat::Csv => {
            let p = out.join("tags.csv");
            sim.tags.write_csv_path(&p)?;
            p
        }
    };
    let pattern_path = out.join("pattern.csv");
    sim.pattern
        .write_csv(std::io::BufWriter::new(fs::File::create(&pattern_path)?))?;

    let mut rep = report::provenance("simulate", cfg.seed);
    rep.push_str(&report::link_echo(&cfg));
    rep.push_str(&format!(
        "\n[artifacts]\ntags = {}\npattern = {}\nevents = {}\nspan_s = {:.6}\n",
        tag_path.display(),
        pattern_path.display(),
        sim.tags.len(),
        sim.tags.span()
    ));
    fs::write(out.join("run_report.txt"), &rep)?;
    println!(
        "simulated {} symbols -> {} events ({})",
        sim.pattern.len(),
        sim.tags.len(),
        tag_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(
    tags_path: &Path,
    pattern_path: &Path,
    filter_ratio: Option<f64>,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<ExitCode, Error> {
    let cfg = config.map(LinkParams::from_path).transpose()?;
    let mut params = match &cfg {
        Some(c) => AnalyzeParams::from(c),
        None => AnalyzeParams {
            filter_ratio: 0.5,
            sync: Default::default(),
            double_click: Default::default(),
            plot_windows: 20,
            seed: 0,
        },
    };
    if let Some(r) = filter_ratio {
        params.filter_ratio = r;
    }
    if let Some(s) = seed {
        params.seed = s;
    }

    let tags = TagStream::read_path(tags_path)?;
    let pattern = SymbolPattern::read_csv(std::io::BufReader::new(fs::File::open(pattern_path)?))?;
    fs::create_dir_all(out)?;

    let analysis = pipeline::analyze_tags(&tags, &pattern, &params)?;

    let mut rep = report::provenance("analyze", params.seed);
    if let Some(c) = &cfg {
        rep.push_str(&report::link_echo(c));
    }
    rep.push_str(&format!("\nfilter_ratio = {}\n", params.filter_ratio));
    rep.push_str(&report::analysis_echo(&analysis));
    fs::write(out.join("qber_report.txt"), &rep)?;

    let csv_path = out.join("qber_windows.csv");
    write_plot_csv(
        &analysis.rows,
        std::io::BufWriter::new(fs::File::create(&csv_path)?),
    )?;

    if !analysis.sync.locked {
        eprintln!(
            "frame sync not locked (peak {:.3}); report written to {}",
            analysis.sync.correlation_peak,
            out.join("qber_report.txt").display()
        );
        return Ok(ExitCode::from(4));
    }
    match &analysis.report {
        Some(r) => println!(
            "locked at offset {}: qber_avg {:.4} ({} sifted), raw {:.1} b/s, secret {:.1} b/s",
            analysis.sync.frame_offset,
            r.qber_avg,
            r.sifted_count,
            r.raw_rate_bps,
            r.secret_rate_bps
        ),
        None => println!(
            "locked at offset {} but nothing sifted",
            analysis.sync.frame_offset
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bandwidth(config: &Path, seed: Option<u64>, out: &Path) -> Result<ExitCode, Error> {
    let mut cfg = BandwidthConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    fs::create_dir_all(out)?;

    let drive = SweepDrive {
        mean_rate_hz: cfg.mean_rate_hz,
        modulation_depth: cfg.modulation_depth,
        duration_s: cfg.duration_s,
        resolution_s: cfg.tagger_resolution_s,
        nbins: cfg.nbins,
    };
    let stream = RandomStream::new(cfg.seed, pipeline::lanes::BANDWIDTH);
    let points = match &cfg.source {
        BandwidthSource::Emitter { eo_cutoff_hz } => {
            let model = EmitterModel::new(
                vec![(0.0, 0.0), (46.0, 100e-12)],
                Wavelength::from_nanometers(1547.0).expect("valid"),
                *eo_cutoff_hz,
            )?;
            bwmeter::sweep_response(
                &cfg.frequencies_hz,
                &drive,
                SweepSource::Emitter(&model),
                &stream,
            )?
        }
        BandwidthSource::Flat => {
            bwmeter::sweep_response(&cfg.frequencies_hz, &drive, SweepSource::Flat, &stream)?
        }
        BandwidthSource::Files { paths } => {
            let streams: Vec<TagStream> = paths
                .iter()
                .map(TagStream::read_path)
                .collect::<Result<_, _>>()?;
            bwmeter::sweep_from_tags(&cfg.frequencies_hz, &streams, cfg.nbins)?
        }
    };

    let csv_path = out.join("sweep.csv");
    bwmeter::write_sweep_csv(
        &points,
        std::io::BufWriter::new(fs::File::create(&csv_path)?),
    )?;

    let cutoff = bwmeter::fit_cutoff(&points).map_err(|e| e.to_string());
    let mut rep = report::provenance("bandwidth", cfg.seed);
    rep.push_str(&report::bandwidth_echo(&cfg, &cutoff));
    fs::write(out.join("bandwidth_report.txt"), &rep)?;

    match cutoff {
        Ok(fc) => println!(
            "sweep written to {}; fitted cutoff {fc:.4e} Hz",
            csv_path.display()
        ),
        Err(msg) => println!(
            "sweep written to {}; no cutoff fitted: {msg}",
            csv_path.display()
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_budget(
    current_ma: f64,
    symbol_rate: f64,
    mu: f64,
    li_csv: Option<&Path>,
    wavelength_nm: f64,
) -> Result<ExitCode, Error> {
    let wavelength = Wavelength::from_nanometers(wavelength_nm)?;
    let model = match li_csv {
        Some(p) => EmitterModel::from_li_csv_path(p, wavelength, 10e6)?,
        None => EmitterModel::new(vec![(0.0, 0.0), (46.0, 100e-12)], wavelength, 10e6)?,
    };
    let mu_target = MeanPhotonNumber::new(mu)?;
    let power = model.li_power(current_ma)?;
    let rate = photon_rate(power, model.center_wavelength());
    let budget = model.excess_budget_db(current_ma, symbol_rate, mu_target)?;
    let mu_at_rate = mean_photons_per_symbol(power, model.center_wavelength(), symbol_rate)?;

    println!("current_ma = {current_ma}");
    println!("li_power_w = {:.6e}", power.watts());
    match power.dbm() {
        Ok(dbm) => println!("li_power_dbm = {dbm:.3}"),
        Err(_) => println!("li_power_dbm = -inf"),
    }
    println!("photon_rate_hz = {rate:.6e}");
    println!("symbol_rate_hz = {symbol_rate}");
    println!("mu_at_rate = {:.6}", mu_at_rate.value());
    println!("mu_target = {mu}");
    println!("excess_budget_db = {budget:.3}");
    Ok(ExitCode::SUCCESS)
}
