//! Run configuration: the full link parameter set and the bandwidth-sweep
//! specification, both loadable from human-editable TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{DetectorParams, DoubleClickPolicy};
use crate::error::{Error, Result};
use crate::postproc::SyncParams;
use crate::txchain::ChannelParams;

/// Frame layout of one simulated run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameParams {
    /// Public synchronization header length, symbols.
    #[serde(default = "default_header_len")]
    pub header_len: usize,
    /// Random payload length, symbols.
    pub payload_len: usize,
    /// Dark lead-in before the frame starts, symbols. Exercises frame
    /// synchronization; the analyzer has to recover this offset.
    #[serde(default)]
    pub start_offset_symbols: u64,
}

fn default_header_len() -> usize {
    1024
}

/// Report/analysis knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportParams {
    /// Windows in the plot-data CSV.
    pub plot_windows: usize,
    /// Double-click resolution rule.
    pub double_click: DoubleClickPolicy,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            plot_windows: 20,
            double_click: DoubleClickPolicy::Random,
        }
    }
}

/// Complete parameter set of one simulated link run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    /// Master seed; every stochastic stage derives its stream from it.
    pub seed: u64,
    /// Symbol rate, Hz.
    pub symbol_rate_hz: f64,
    /// Mean photon number per symbol leaving Alice.
    pub mu_q: f64,
    /// Temporal filtering ratio ∈ (0, 1].
    pub filter_ratio: f64,
    pub frame: FrameParams,
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    #[serde(default)]
    pub sync: SyncParams,
    #[serde(default)]
    pub report: ReportParams,
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::config("symbol_rate_hz", "must be > 0"));
        }
        if !(self.mu_q >= 0.0) {
            return Err(Error::config("mu_q", "must be >= 0"));
        }
        if !(self.filter_ratio > 0.0 && self.filter_ratio <= 1.0) {
            return Err(Error::config("filter_ratio", "must be in (0, 1]"));
        }
        if self.frame.payload_len == 0 {
            return Err(Error::config("frame.payload_len", "must be > 0"));
        }
        if self.frame.header_len == 0 {
            return Err(Error::config("frame.header_len", "must be > 0"));
        }
        self.channel.validate()?;
        self.detector.validate()?;
        self.sync.validate()?;
        if self.report.plot_windows == 0 {
            return Err(Error::config("report.plot_windows", "must be > 0"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: LinkParams = toml::from_str(s)
            .map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("LinkParams serializes")
    }

    /// Symbol period, seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.symbol_rate_hz
    }

    /// Span of the payload, seconds; the reference duration for rates.
    pub fn payload_duration(&self) -> f64 {
        self.frame.payload_len as f64 * self.period()
    }
}

/// Light source feeding a bandwidth sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BandwidthSource {
    /// Single-pole emitter model with the given corner frequency.
    Emitter { eo_cutoff_hz: f64 },
    /// Frequency-flat source (no roll-off).
    Flat,
    /// Pre-recorded tag files, one per sweep frequency, in order.
    Files { paths: Vec<String> },
}

/// Bandwidth-measurement sweep specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthConfig {
    pub seed: u64,
    /// Swept modulation frequencies, Hz, sorted ascending.
    pub frequencies_hz: Vec<f64>,
    /// Mean photon detection rate of the simulated source, counts/s.
    pub mean_rate_hz: f64,
    /// Drive modulation depth m ∈ [0, 1].
    pub modulation_depth: f64,
    /// Tag acquisition time per sweep point, seconds.
    pub duration_s: f64,
    #[serde(default = "default_bw_bins")]
    pub nbins: usize,
    #[serde(default = "default_bw_resolution")]
    pub tagger_resolution_s: f64,
    pub source: BandwidthSource,
}

fn default_bw_bins() -> usize {
    64
}

fn default_bw_resolution() -> f64 {
    1e-12
}

impl BandwidthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frequencies_hz.len() < 3 {
            return Err(Error::config(
                "frequencies_hz",
                "need at least 3 sweep frequencies",
            ));
        }
        if !self
            .frequencies_hz
            .windows(2)
            .all(|w| w[0] > 0.0 && w[0] < w[1])
        {
            return Err(Error::config(
                "frequencies_hz",
                "must be positive and strictly ascending",
            ));
        }
        if !(self.mean_rate_hz > 0.0) {
            return Err(Error::config("mean_rate_hz", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.modulation_depth) {
            return Err(Error::config("modulation_depth", "must be in [0, 1]"));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::config("duration_s", "must be > 0"));
        }
        if self.nbins < 16 {
            return Err(Error::config("nbins", "must be >= 16"));
        }
        if let BandwidthSource::Emitter { eo_cutoff_hz } = self.source {
            if !(eo_cutoff_hz > 0.0) {
                return Err(Error::config("source.eo_cutoff_hz", "must be > 0"));
            }
        }
        if let BandwidthSource::Files { paths } = &self.source {
            if paths.len() != self.frequencies_hz.len() {
                return Err(Error::config(
                    "source.paths",
                    "need one tag file per sweep frequency",
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BandwidthConfig = toml::from_str(s)
            .map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Shared fixture for the statistical test suites.
#[doc(hidden)]
pub mod tests_support {
    use super::*;

    /// A mid-scale operating point: 1 MHz symbols, μ = 0.1, lossless.
    pub fn base_link() -> LinkParams {
        LinkParams {
            seed: 1,
            symbol_rate_hz: 1e6,
            mu_q: 0.1,
            filter_ratio: 0.5,
            frame: FrameParams {
                header_len: 1024,
                payload_len: 100_000,
                start_offset_symbols: 0,
            },
            channel: ChannelParams::default(),
            detector: DetectorParams::default(),
            sync: SyncParams::default(),
            report: ReportParams::default(),
        }
    }
}
