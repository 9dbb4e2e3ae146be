//! Plain-text key=value run reports.
//!
//! Every report echoes the full parameter set, with the assumption-backed
//! defaults (dead time, jitter, gate extinction, gate duty, EO cutoff)
//! called out explicitly so no hidden value influences a result.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use ledqkd::config::{BandwidthConfig, BandwidthSource, LinkParams};
use ledqkd::pipeline::AnalysisOutput;

pub fn provenance(command: &str, seed: u64) -> String {
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# ledqkd run report\ntool_version = {}\ncommand = {}\nseed = {}\ntimestamp_unix = {}\n",
        env!("CARGO_PKG_VERSION"),
        command,
        seed,
        ts
    )
}

pub fn link_echo(cfg: &LinkParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n[link]");
    let _ = writeln!(s, "symbol_rate_hz = {}", cfg.symbol_rate_hz);
    let _ = writeln!(s, "mu_q = {}", cfg.mu_q);
    let _ = writeln!(s, "filter_ratio = {}", cfg.filter_ratio);
    let _ = writeln!(s, "frame.header_len = {}", cfg.frame.header_len);
    let _ = writeln!(s, "frame.payload_len = {}", cfg.frame.payload_len);
    let _ = writeln!(
        s,
        "frame.start_offset_symbols = {}",
        cfg.frame.start_offset_symbols
    );
    let _ = writeln!(s, "channel.loss_db = {}", cfg.channel.loss_db);
    let _ = writeln!(
        s,
        "channel.misalignment_deg = {}",
        cfg.channel.misalignment_deg
    );
    let _ = writeln!(s, "detector.efficiency = {}", cfg.detector.efficiency);
    let _ = writeln!(s, "detector.dark_rate_hz = {}", cfg.detector.dark_rate_hz);
    let _ = writeln!(
        s,
        "detector.tagger_resolution_s = {}",
        cfg.detector.tagger_resolution_s
    );
    let _ = writeln!(s, "sync.search_depth = {}", cfg.sync.search_depth);
    let _ = writeln!(s, "sync.lock_threshold = {}", cfg.sync.lock_threshold);
    let _ = writeln!(s, "sync.min_clicks = {}", cfg.sync.min_clicks);
    s.push_str(&assumptions_echo(cfg));
    s
}

/// The defaulted-by-assumption parameters, echoed on every run.
pub fn assumptions_echo(cfg: &LinkParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n[assumptions]");
    let _ = writeln!(
        s,
        "detector.dead_time_s = {}  # ASSUMPTION: typical free-running InGaAs",
        cfg.detector.dead_time_s
    );
    let _ = writeln!(
        s,
        "detector.jitter_sigma_s = {}  # ASSUMPTION: no published jitter figure",
        cfg.detector.jitter_sigma_s
    );
    let _ = writeln!(
        s,
        "channel.gate_extinction_db = {}  # ASSUMPTION: typical MZM on/off ratio",
        cfg.channel.gate_extinction_db
    );
    let _ = writeln!(
        s,
        "channel.gate_duty = {}  # ASSUMPTION: gating waveform not published",
        cfg.channel.gate_duty
    );
    s
}

pub fn analysis_echo(out: &AnalysisOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n[sync]");
    let _ = writeln!(s, "locked = {}", out.sync.locked);
    let _ = writeln!(s, "frame_offset = {}", out.sync.frame_offset);
    let _ = writeln!(s, "clock_phase_s = {:.6e}", out.sync.clock_phase_s);
    let _ = writeln!(s, "correlation_peak = {:.4}", out.sync.correlation_peak);
    let _ = writeln!(s, "\n[events]");
    let _ = writeln!(s, "input = {}", out.input_events);
    let _ = writeln!(s, "after_filter = {}", out.kept_events);
    if let Some(sift) = &out.sift {
        let _ = writeln!(s, "detected_payload_symbols = {}", sift.detected_payload_symbols);
        let _ = writeln!(s, "double_click_windows = {}", sift.double_click_windows);
    }
    if let Some(r) = &out.report {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or("undefined".into());
        let _ = writeln!(s, "\n[qber]");
        let _ = writeln!(s, "qber_hv = {}", opt(r.qber_hv));
        let _ = writeln!(s, "qber_ad = {}", opt(r.qber_ad));
        let _ = writeln!(s, "qber_avg = {:.6}", r.qber_avg);
        let _ = writeln!(s, "qber_state_h = {}", opt(r.qber_state_h));
        let _ = writeln!(s, "qber_state_v = {}", opt(r.qber_state_v));
        let _ = writeln!(s, "sifted_count = {}", r.sifted_count);
        let _ = writeln!(s, "sifted_hv = {}", r.sifted_hv);
        let _ = writeln!(s, "sifted_ad = {}", r.sifted_ad);
        let _ = writeln!(s, "error_count = {}", r.error_count);
        let _ = writeln!(s, "\n[rates]  # over the payload span, bits/s");
        let _ = writeln!(s, "duration_s = {}", r.duration_s);
        let _ = writeln!(s, "raw_rate_bps = {:.3}  # total sifted", r.raw_rate_bps);
        let _ = writeln!(s, "rate_hv_bps = {:.3}  # sifted, HV basis", r.rate_hv_bps);
        let _ = writeln!(s, "rate_ad_bps = {:.3}  # sifted, AD basis", r.rate_ad_bps);
        let _ = writeln!(s, "secret_fraction = {:.6}", r.secret_fraction);
        let _ = writeln!(s, "secret_rate_bps = {:.3}", r.secret_rate_bps);
    }
    s
}

pub fn bandwidth_echo(cfg: &BandwidthConfig, cutoff: &Result<f64, String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\n[sweep]");
    let _ = writeln!(s, "frequencies = {:?}", cfg.frequencies_hz);
    let _ = writeln!(s, "mean_rate_hz = {}", cfg.mean_rate_hz);
    let _ = writeln!(s, "modulation_depth = {}", cfg.modulation_depth);
    let _ = writeln!(s, "duration_s = {}", cfg.duration_s);
    let _ = writeln!(s, "nbins = {}", cfg.nbins);
    match &cfg.source {
        BandwidthSource::Emitter { eo_cutoff_hz } => {
            let _ = writeln!(s, "source = emitter");
            let _ = writeln!(
                s,
                "source.eo_cutoff_hz = {eo_cutoff_hz}  # ASSUMPTION when defaulted: single-pole model"
            );
        }
        BandwidthSource::Flat => {
            let _ = writeln!(s, "source = flat");
        }
        BandwidthSource::Files { paths } => {
            let _ = writeln!(s, "source = files ({} streams)", paths.len());
        }
    }
    let _ = writeln!(s, "\n[result]");
    let _ = writeln!(
        s,
        "# response convention: 20*log10(contrast / contrast at lowest frequency)"
    );
    match cutoff {
        Ok(fc) => {
            let _ = writeln!(s, "fitted_cutoff_hz = {fc:.6e}");
        }
        Err(msg) => {
            let _ = writeln!(s, "fitted_cutoff_hz = none  # {msg}");
        }
    }
    s
}
