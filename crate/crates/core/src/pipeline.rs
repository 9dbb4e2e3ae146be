//! End-to-end scenario orchestration: simulate a full link run from a
//! [`LinkParams`], and analyze a tag stream against its pattern. The CLI
//! front end is a thin wrapper over these functions, so tests drive the
//! exact code paths the binary runs.

use crate::config::LinkParams;
use crate::error::Result;
use crate::postproc::{
    estimate_qber, frame_sync, sift_seeded, temporal_filter, windowed_rows, PlotRow, QberReport,
    SiftOutcome, SyncResult,
};
use crate::rng::RandomStream;
use crate::tagfile::TagStream;
use crate::txchain::{prepare_states, SymbolPattern};
use crate::units::MeanPhotonNumber;

/// Stream-id lanes of the master seed. Detection occupies a block of
/// five (signal plus one dark lane per channel); bandwidth sweeps use one
/// lane per point above `BANDWIDTH`.
pub mod lanes {
    pub const PATTERN: u64 = 1;
    pub const DETECTION: u64 = 16;
    pub const ANALYSIS: u64 = 32;
    pub const BANDWIDTH: u64 = 64;
}

/// Everything one simulated run produces.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub pattern: SymbolPattern,
    pub tags: TagStream,
}

/// Runs transmitter, channel and receiver for one frame. Deterministic
/// per `cfg.seed`.
pub fn simulate_link(cfg: &LinkParams) -> Result<SimulationOutput> {
    cfg.validate()?;
    let pattern = SymbolPattern::generate(
        cfg.frame.payload_len,
        cfg.frame.header_len,
        cfg.symbol_rate_hz,
        &RandomStream::new(cfg.seed, lanes::PATTERN),
    )?;
    let plan = prepare_states(&pattern, MeanPhotonNumber::new(cfg.mu_q)?, &cfg.channel);
    let tags = crate::detection::simulate_detections(
        &pattern,
        &plan,
        &cfg.detector,
        cfg.frame.start_offset_symbols,
        &RandomStream::new(cfg.seed, lanes::DETECTION),
    );
    Ok(SimulationOutput { pattern, tags })
}

/// Analysis products; `report` is present only when sync locked and at
/// least one record was sifted.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub sync: SyncResult,
    pub report: Option<QberReport>,
    pub rows: Vec<PlotRow>,
    pub input_events: usize,
    pub kept_events: usize,
    pub sift: Option<SiftOutcome>,
}

/// Post-processing knobs for [`analyze_tags`], defaulted from a
/// [`LinkParams`] or assembled directly by the CLI.
#[derive(Debug, Clone)]
pub struct AnalyzeParams {
    pub filter_ratio: f64,
    pub sync: crate::postproc::SyncParams,
    pub double_click: crate::detection::DoubleClickPolicy,
    pub plot_windows: usize,
    /// Seed of the double-click resolution stream.
    pub seed: u64,
}

impl From<&LinkParams> for AnalyzeParams {
    fn from(cfg: &LinkParams) -> Self {
        Self {
            filter_ratio: cfg.filter_ratio,
            sync: cfg.sync,
            double_click: cfg.report.double_click,
            plot_windows: cfg.report.plot_windows,
            seed: cfg.seed,
        }
    }
}

/// Runs the receiver pipeline: temporal filter → frame sync → sift →
/// QBER estimate → plot windows. Never errors on a sync miss; the caller
/// inspects `sync.locked`.
pub fn analyze_tags(
    tags: &TagStream,
    pattern: &SymbolPattern,
    params: &AnalyzeParams,
) -> Result<AnalysisOutput> {
    let period = pattern.period();
    let filtered = temporal_filter(tags, period, params.filter_ratio, params.sync.fold_bins)?;
    let sync = frame_sync(&filtered.tags, pattern, &params.sync)?;
    if !sync.locked {
        return Ok(AnalysisOutput {
            sync,
            report: None,
            rows: Vec::new(),
            input_events: tags.len(),
            kept_events: filtered.tags.len(),
            sift: None,
        });
    }
    let sift = sift_seeded(
        &filtered.tags,
        pattern,
        &sync,
        params.double_click,
        params.seed,
        lanes::ANALYSIS,
    );
    let duration = pattern.payload().len() as f64 * period;
    let report = estimate_qber(&sift.records, duration, params.filter_ratio).ok();
    let rows = windowed_rows(&sift.records, pattern, params.plot_windows);
    Ok(AnalysisOutput {
        sync,
        report,
        rows,
        input_events: tags.len(),
        kept_events: filtered.tags.len(),
        sift: Some(sift),
    })
}

/// Simulate-then-analyze with the run's own parameters.
pub fn run_link(cfg: &LinkParams) -> Result<(SimulationOutput, AnalysisOutput)> {
    let sim = simulate_link(cfg)?;
    let analysis = analyze_tags(&sim.tags, &sim.pattern, &AnalyzeParams::from(cfg))?;
    Ok((sim, analysis))
}
