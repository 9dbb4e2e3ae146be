//! Receiver pipeline: arrival-phase folding, temporal filtering, frame
//! synchronization against the public header, basis sifting, and QBER /
//! key-rate estimation, plus the closed-form QBER oracle used to validate
//! the event-level simulation.

use rand::Rng;

use crate::config::LinkParams;
use crate::detection::{
    channel_mu, click_probability, resolve_window, DoubleClickPolicy, CHANNELS,
};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::tagfile::TagStream;
use crate::txchain::{emission_table, Basis, SymbolPattern};
use crate::units::{secret_fraction, MeanPhotonNumber};

/// Arrival-phase histogram of a tag stream folded modulo `period_s`.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub bins: Vec<u64>,
    pub total: u64,
    pub period_s: f64,
}

impl Histogram {
    /// An all-zero histogram flags an empty input stream.
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Bins each event's `timestamp mod period` into `nbins` equal slots.
/// Total count is preserved.
pub fn fold_histogram(tags: &TagStream, period_s: f64, nbins: usize) -> Result<Histogram> {
    if !(period_s > 0.0) {
        return Err(Error::InvalidPeriod(period_s));
    }
    if nbins < 8 {
        return Err(Error::TooFewBins { min: 8, got: nbins });
    }
    let mut bins = vec![0u64; nbins];
    // Phases within half a tick of the period boundary belong to phase 0;
    // this keeps events at exact period multiples out of the last bin
    // regardless of rounding direction.
    let wrap_guard = period_s - 0.5 * tags.resolution_s;
    for e in &tags.events {
        let mut phase = (e.ticks as f64 * tags.resolution_s).rem_euclid(period_s);
        if phase >= wrap_guard {
            phase = 0.0;
        }
        let b = ((phase / period_s) * nbins as f64) as usize;
        bins[b.min(nbins - 1)] += 1;
    }
    Ok(Histogram {
        total: bins.iter().sum(),
        bins,
        period_s,
    })
}

/// Circular centroid of the folded histogram: the phase of its fundamental
/// Fourier component, in seconds within `[0, period)`. `None` if empty.
///
/// For a symmetric arrival peak over a uniform background this estimator
/// is unbiased, independent of the peak's width.
pub fn peak_phase(hist: &Histogram) -> Option<f64> {
    if hist.is_empty() {
        return None;
    }
    let n = hist.bins.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (b, &c) in hist.bins.iter().enumerate() {
        let theta = std::f64::consts::TAU * (b as f64 + 0.5) / n;
        re += c as f64 * theta.cos();
        im += c as f64 * theta.sin();
    }
    let angle = im.atan2(re).rem_euclid(std::f64::consts::TAU);
    Some(angle / std::f64::consts::TAU * hist.period_s)
}

/// Result of [`temporal_filter`].
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub tags: TagStream,
    /// Estimated signal arrival phase, seconds within the period.
    pub peak_phase_s: Option<f64>,
    pub input_count: usize,
}

/// Keeps events whose arrival phase lies in a window of width
/// `ratio·period` centered circularly on the histogram peak phase.
/// Uniformly distributed (dark) events are retained at rate `ratio`;
/// events concentrated at the peak are retained completely.
pub fn temporal_filter(
    tags: &TagStream,
    period_s: f64,
    ratio: f64,
    fold_bins: usize,
) -> Result<FilterOutcome> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidFilterRatio(ratio));
    }
    let hist = fold_histogram(tags, period_s, fold_bins)?;
    let phase = peak_phase(&hist);
    if ratio == 1.0 || tags.is_empty() {
        return Ok(FilterOutcome {
            tags: tags.clone(),
            peak_phase_s: phase,
            input_count: tags.len(),
        });
    }
    let center = phase.expect("non-empty stream has a peak phase");
    let half_width = ratio * period_s / 2.0;
    let mut kept = TagStream::new(tags.resolution_s);
    for e in &tags.events {
        let p = (e.ticks as f64 * tags.resolution_s).rem_euclid(period_s);
        let mut d = (p - center).rem_euclid(period_s);
        if d > period_s / 2.0 {
            d -= period_s;
        }
        if d.abs() <= half_width {
            kept.events.push(*e);
        }
    }
    Ok(FilterOutcome {
        tags: kept,
        peak_phase_s: Some(center),
        input_count: tags.len(),
    })
}

/// Frame alignment between the tag stream and Alice's pattern.
#[derive(Debug, Clone, Copy)]
pub struct SyncResult {
    /// Symbol offset of the pattern start within the stream.
    pub frame_offset: usize,
    /// Sub-symbol clock offset, seconds in `[0, symbol period)`.
    pub clock_phase_s: f64,
    /// Best normalized header correlation, clamped to [0, 1].
    pub correlation_peak: f64,
    pub locked: bool,
}

/// Knobs of [`frame_sync`].
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncParams {
    /// Candidate frame offsets searched, symbols.
    pub search_depth: usize,
    /// Minimum correlation for a lock.
    pub lock_threshold: f64,
    /// Minimum H/V click count under the header window for a candidate
    /// offset to be eligible; keeps pure-noise streams from locking.
    pub min_clicks: u64,
    /// Bins of the phase-recovery histogram.
    pub fold_bins: usize,
}

impl Default for SyncParams {
    fn default() -> Self {
        Self {
            search_depth: 4096,
            lock_threshold: 0.6,
            min_clicks: 32,
            fold_bins: 64,
        }
    }
}

impl SyncParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_depth == 0 {
            return Err(Error::config("sync.search_depth", "must be > 0"));
        }
        if !(self.lock_threshold > 0.0 && self.lock_threshold <= 1.0) {
            return Err(Error::config("sync.lock_threshold", "must be in (0, 1]"));
        }
        if self.fold_bins < 8 {
            return Err(Error::config("sync.fold_bins", "must be >= 8"));
        }
        Ok(())
    }
}

/// Signed sub-symbol clock offset from the folded-peak phase, assuming
/// the emission gate is centered in the symbol window.
fn clock_offset(peak_phase_s: f64, period_s: f64) -> f64 {
    let delta = (peak_phase_s - period_s / 2.0).rem_euclid(period_s);
    if delta >= period_s / 2.0 {
        delta - period_s
    } else {
        delta
    }
}

fn signed_clock(sync_phase: f64, period_s: f64) -> f64 {
    if sync_phase < period_s / 2.0 {
        sync_phase
    } else {
        sync_phase - period_s
    }
}

/// Recovers the frame offset by correlating the per-symbol H/V occupancy
/// signature against the expected header signature.
///
/// Each symbol window contributes sign(+1 H, −1 V) of its H/V clicks; the
/// header template is +1 for bit 0 and −1 for bit 1. The score at offset
/// `k` is Σ template·signature / (clicks in window), the fraction of
/// header-consistent clicks; candidates need at least `min_clicks` clicks.
/// The argmax offset wins, ties broken by the smallest offset; `locked`
/// requires the peak to reach `lock_threshold`.
pub fn frame_sync(
    tags: &TagStream,
    pattern: &SymbolPattern,
    params: &SyncParams,
) -> Result<SyncResult> {
    params.validate()?;
    let period = pattern.period();
    let not_locked = SyncResult {
        frame_offset: 0,
        clock_phase_s: 0.0,
        correlation_peak: 0.0,
        locked: false,
    };
    if tags.is_empty() {
        return Ok(not_locked);
    }

    let hist = fold_histogram(tags, period, params.fold_bins)?;
    let phase = peak_phase(&hist).expect("non-empty");
    let delta = clock_offset(phase, period);

    // Per-symbol occupancy signature, bounded by the correlation reach.
    let header_len = pattern.header_len();
    let max_symbols = params.search_depth + pattern.len();
    let mut occ = vec![0i32; max_symbols];
    for e in &tags.events {
        let t = e.ticks as f64 * tags.resolution_s - delta;
        if t < 0.0 {
            continue;
        }
        let j = (t / period) as usize;
        if j >= max_symbols {
            continue;
        }
        match e.channel.code() {
            0 => occ[j] += 1, // H
            1 => occ[j] -= 1, // V
            _ => {}
        }
    }
    // The signature is sparse at single-photon rates; correlate over the
    // occupied symbols only.
    let nonzero: Vec<(usize, i8)> = occ
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(j, &v)| (j, v.signum() as i8))
        .collect();
    let template: Vec<i8> = pattern
        .header()
        .iter()
        .map(|s| if s.bit { -1 } else { 1 })
        .collect();

    let mut best_eligible: Option<(usize, f64)> = None;
    let mut best_any: (usize, f64) = (0, 0.0);
    let last_offset = max_symbols - header_len;
    let mut lo = 0usize;
    for k in 0..params.search_depth.min(last_offset + 1) {
        while lo < nonzero.len() && nonzero[lo].0 < k {
            lo += 1;
        }
        let mut net = 0i64;
        let mut n = 0u64;
        for &(pos, s) in &nonzero[lo..] {
            if pos >= k + header_len {
                break;
            }
            net += (s as i64) * (template[pos - k] as i64);
            n += 1;
        }
        if n == 0 {
            continue;
        }
        let score = net as f64 / n as f64;
        if score > best_any.1 {
            best_any = (k, score);
        }
        if n >= params.min_clicks {
            match best_eligible {
                Some((_, s)) if s >= score => {}
                _ => best_eligible = Some((k, score)),
            }
        }
    }

    let (offset, peak, eligible) = match best_eligible {
        Some((k, s)) => (k, s, true),
        None => (best_any.0, best_any.1, false),
    };
    Ok(SyncResult {
        frame_offset: offset,
        clock_phase_s: delta.rem_euclid(period),
        correlation_peak: peak.clamp(0.0, 1.0),
        locked: eligible && peak >= params.lock_threshold,
    })
}

/// One basis-matched symbol after sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedRecord {
    /// Index into the full pattern (header included in the numbering).
    pub symbol_index: u64,
    pub basis: Basis,
    pub alice_bit: bool,
    pub bob_bit: bool,
}

/// Sifting result plus the window statistics the rate estimates need.
#[derive(Debug, Clone)]
pub struct SiftOutcome {
    pub records: Vec<SiftedRecord>,
    /// Payload symbols with exactly one effective detection.
    pub detected_payload_symbols: u64,
    /// Windows where more than one channel clicked.
    pub double_click_windows: u64,
}

/// Assigns filtered events to symbol windows, applies the double-click
/// policy, and keeps payload symbols whose detection basis equals Alice's
/// preparation basis. Bob's bit is 0 for an H/D click, 1 for V/A.
pub fn sift<R: Rng>(
    tags: &TagStream,
    pattern: &SymbolPattern,
    sync: &SyncResult,
    policy: DoubleClickPolicy,
    rng: &mut R,
) -> SiftOutcome {
    let period = pattern.period();
    let delta = signed_clock(sync.clock_phase_s, period);
    let header_len = pattern.header_len() as u64;
    let pattern_len = pattern.len() as u64;

    let mut out = SiftOutcome {
        records: Vec::new(),
        detected_payload_symbols: 0,
        double_click_windows: 0,
    };

    let mut window: Vec<crate::detection::DetectionEvent> = Vec::new();
    let mut window_j: Option<u64> = None;
    let flush = |j: Option<u64>,
                 window: &mut Vec<crate::detection::DetectionEvent>,
                 out: &mut SiftOutcome,
                 rng: &mut R| {
        let Some(j) = j else {
            return;
        };
        if window.is_empty() {
            return;
        }
        let mut seen = [false; 4];
        let mut distinct = 0;
        for e in window.iter() {
            let c = e.channel.code() as usize;
            if !seen[c] {
                seen[c] = true;
                distinct += 1;
            }
        }
        if distinct > 1 {
            out.double_click_windows += 1;
        }
        let effective = resolve_window(window, policy, rng);
        window.clear();
        let Some(event) = effective else {
            return;
        };
        let Some(pos) = j.checked_sub(sync.frame_offset as u64) else {
            return;
        };
        if pos < header_len || pos >= pattern_len {
            return;
        }
        out.detected_payload_symbols += 1;
        let alice = pattern.symbols()[pos as usize];
        let bob_basis = event.channel.basis();
        if bob_basis == alice.basis {
            out.records.push(SiftedRecord {
                symbol_index: pos,
                basis: alice.basis,
                alice_bit: alice.bit,
                bob_bit: event.channel.bit(),
            });
        }
    };

    for e in &tags.events {
        let t = e.ticks as f64 * tags.resolution_s - delta;
        if t < 0.0 {
            continue;
        }
        let j = (t / period) as u64;
        if window_j != Some(j) {
            flush(window_j, &mut window, &mut out, rng);
            window_j = Some(j);
        }
        window.push(*e);
    }
    flush(window_j, &mut window, &mut out, rng);
    out
}

/// QBER and rate summary over a sifted stream.
#[derive(Debug, Clone)]
pub struct QberReport {
    /// Per-basis QBER; `None` when that basis has no sifted records.
    pub qber_hv: Option<f64>,
    pub qber_ad: Option<f64>,
    /// Sifted-count-weighted (pooled) average QBER.
    pub qber_avg: f64,
    /// Per transmitted state within the HV basis.
    pub qber_state_h: Option<f64>,
    pub qber_state_v: Option<f64>,
    pub sifted_hv: u64,
    pub sifted_ad: u64,
    pub sifted_count: u64,
    pub error_count: u64,
    /// Total sifted bit rate, bits/s.
    pub raw_rate_bps: f64,
    /// Per-basis sifted bit rates, bits/s.
    pub rate_hv_bps: f64,
    pub rate_ad_bps: f64,
    pub filter_ratio: f64,
    pub secret_fraction: f64,
    pub secret_rate_bps: f64,
    pub duration_s: f64,
}

/// Counts errors per basis and per transmitted H/V state, and derives the
/// rate figures. `duration_s` is the payload span the rates refer to.
/// Error counting is exact integer arithmetic until the final division.
pub fn estimate_qber(
    records: &[SiftedRecord],
    duration_s: f64,
    filter_ratio: f64,
) -> Result<QberReport> {
    if records.is_empty() {
        return Err(Error::EmptySift);
    }
    if !(duration_s > 0.0) {
        return Err(Error::InvalidPeriod(duration_s));
    }
    let mut count = [0u64; 2]; // HV, AD
    let mut errors = [0u64; 2];
    let mut state_count = [0u64; 2]; // alice H, alice V
    let mut state_errors = [0u64; 2];
    for r in records {
        let b = (r.basis == Basis::AD) as usize;
        count[b] += 1;
        let err = (r.alice_bit != r.bob_bit) as u64;
        errors[b] += err;
        if r.basis == Basis::HV {
            let s = r.alice_bit as usize;
            state_count[s] += 1;
            state_errors[s] += err;
        }
    }
    let ratio_of = |e: u64, c: u64| -> Option<f64> {
        (c > 0).then(|| e as f64 / c as f64)
    };
    let sifted_count = count[0] + count[1];
    let error_count = errors[0] + errors[1];
    let qber_avg = error_count as f64 / sifted_count as f64;
    let raw_rate_bps = sifted_count as f64 / duration_s;
    let sf = secret_fraction(qber_avg.min(0.5)).expect("clamped into domain");
    Ok(QberReport {
        qber_hv: ratio_of(errors[0], count[0]),
        qber_ad: ratio_of(errors[1], count[1]),
        qber_avg,
        qber_state_h: ratio_of(state_errors[0], state_count[0]),
        qber_state_v: ratio_of(state_errors[1], state_count[1]),
        sifted_hv: count[0],
        sifted_ad: count[1],
        sifted_count,
        error_count,
        raw_rate_bps,
        rate_hv_bps: count[0] as f64 / duration_s,
        rate_ad_bps: count[1] as f64 / duration_s,
        filter_ratio,
        secret_fraction: sf,
        secret_rate_bps: raw_rate_bps * sf,
        duration_s,
    })
}

/// One row of the per-window plot data mirroring the live QBER readout.
#[derive(Debug, Clone, Copy)]
pub struct PlotRow {
    pub time_bin: usize,
    pub qber_h: Option<f64>,
    pub qber_v: Option<f64>,
    pub qber_avg: Option<f64>,
    pub raw_rate_bps: f64,
}

/// Splits the payload into `n_windows` equal symbol ranges and reports
/// per-window QBER (per transmitted H/V state and pooled) and sifted rate.
pub fn windowed_rows(
    records: &[SiftedRecord],
    pattern: &SymbolPattern,
    n_windows: usize,
) -> Vec<PlotRow> {
    if n_windows == 0 {
        return Vec::new();
    }
    let payload_len = pattern.payload().len() as u64;
    let header_len = pattern.header_len() as u64;
    let width = payload_len.div_ceil(n_windows as u64).max(1);
    let window_duration = width as f64 * pattern.period();

    #[derive(Default, Clone, Copy)]
    struct Acc {
        count: u64,
        errors: u64,
        h_count: u64,
        h_err: u64,
        v_count: u64,
        v_err: u64,
    }
    let mut acc = vec![Acc::default(); n_windows];
    for r in records {
        let w = ((r.symbol_index - header_len) / width) as usize;
        let a = &mut acc[w.min(n_windows - 1)];
        let err = (r.alice_bit != r.bob_bit) as u64;
        a.count += 1;
        a.errors += err;
        if r.basis == Basis::HV {
            if r.alice_bit {
                a.v_count += 1;
                a.v_err += err;
            } else {
                a.h_count += 1;
                a.h_err += err;
            }
        }
    }
    acc.iter()
        .enumerate()
        .map(|(i, a)| PlotRow {
            time_bin: i,
            qber_h: (a.h_count > 0).then(|| a.h_err as f64 / a.h_count as f64),
            qber_v: (a.v_count > 0).then(|| a.v_err as f64 / a.v_count as f64),
            qber_avg: (a.count > 0).then(|| a.errors as f64 / a.count as f64),
            raw_rate_bps: a.count as f64 / window_duration,
        })
        .collect()
}

/// Writes plot rows as `time_bin,qber_h,qber_v,qber_avg,raw_rate` CSV.
/// Undefined QBER cells are left empty.
pub fn write_plot_csv<W: std::io::Write>(rows: &[PlotRow], mut w: W) -> Result<()> {
    writeln!(w, "time_bin,qber_h,qber_v,qber_avg,raw_rate")?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.4}",
            r.time_bin,
            fmt(r.qber_h),
            fmt(r.qber_v),
            fmt(r.qber_avg),
            r.raw_rate_bps
        )?;
    }
    Ok(())
}

/// Closed-form per-symbol statistics predicted from the link parameters,
/// with no event-level simulation. The independent oracle for testing
/// the simulator.
#[derive(Debug, Clone, Copy)]
pub struct PredictedStats {
    pub qber_avg: f64,
    pub qber_hv: f64,
    pub qber_ad: f64,
    /// Sifted records per transmitted payload symbol.
    pub sifted_per_symbol: f64,
    pub sifted_hv_per_symbol: f64,
    pub sifted_ad_per_symbol: f64,
    /// Per-basis sifted bit rates, bits/s.
    pub rate_hv_bps: f64,
    pub rate_ad_bps: f64,
    pub raw_rate_bps: f64,
}

/// Computes the exact sifting statistics implied by the module-level
/// formulas, by enumerating the 2⁴ channel click subsets.
///
/// Per transmitted state `s` (uniform over H/V/D/A) and channel `c`:
///
/// * kept signal mean  `η·μ_c·ρ` with `μ_c` from the analyzer projection
///   ([`channel_mu`]) and `ρ = min(1, ratio/duty)` the overlap of the
///   temporal-filter window with the centered emission gate,
/// * kept dark mean    `λ_d = dark_rate·ratio·T`,
/// * click probability `q_c = 1 − exp(−(η·μ_c·ρ + λ_d))` (independent
///   across channels by Poisson splitting).
///
/// Each click subset `S` occurs with probability Π q_c Π (1−q_c); the
/// double-click policy assigns the window to one clicking channel
/// (uniformly for `Random`, only singletons for `Discard`). A record is
/// sifted when the channel basis matches the state basis, and is an error
/// when the channel bit differs from the state bit.
///
/// Dead time and timing jitter are not modeled: dead time thins all
/// channels equally (QBER-neutral; see [`dead_time_rate_factor`] for the
/// rate impact) and jitter only leaks across symbol boundaries at a
/// `σ/T` scale far below these tolerances.
pub fn predicted_stats(link: &LinkParams) -> PredictedStats {
    let period = 1.0 / link.symbol_rate_hz;
    let eta = link.detector.efficiency;
    let rho = (link.filter_ratio / link.channel.gate_duty).min(1.0);
    let lambda_dark = link.detector.dark_rate_hz * link.filter_ratio * period;
    let policy = link.report.double_click;
    let table = emission_table(
        MeanPhotonNumber::new(link.mu_q).expect("validated"),
        &link.channel,
    );

    // sifted probability and error probability per basis [HV, AD]
    let mut sifted = [0.0f64; 2];
    let mut errors = [0.0f64; 2];
    for s in 0..4 {
        let state_basis = if s < 2 { Basis::HV } else { Basis::AD };
        let state_bit = s % 2 == 1;
        let q: [f64; 4] =
            channel_mu(&table[s]).map(|m| -(-(eta * m * rho + lambda_dark)).exp_m1());
        for mask in 1u32..16 {
            let mut p = 0.25; // uniform state prior
            for c in 0..4 {
                p *= if mask & (1 << c) != 0 { q[c] } else { 1.0 - q[c] };
            }
            if p == 0.0 {
                continue;
            }
            let k = mask.count_ones();
            let pick = match policy {
                DoubleClickPolicy::Random => 1.0 / k as f64,
                DoubleClickPolicy::Discard => {
                    if k == 1 {
                        1.0
                    } else {
                        continue;
                    }
                }
            };
            for c in 0..4 {
                if mask & (1 << c) == 0 {
                    continue;
                }
                let ch = CHANNELS[c];
                if ch.basis() != state_basis {
                    continue;
                }
                let b = (state_basis == Basis::AD) as usize;
                let w = p * pick;
                sifted[b] += w;
                if ch.bit() != state_bit {
                    errors[b] += w;
                }
            }
        }
    }

    let total = sifted[0] + sifted[1];
    let total_err = errors[0] + errors[1];
    let rate = link.symbol_rate_hz;
    PredictedStats {
        qber_avg: if total > 0.0 { total_err / total } else { f64::NAN },
        qber_hv: if sifted[0] > 0.0 {
            errors[0] / sifted[0]
        } else {
            f64::NAN
        },
        qber_ad: if sifted[1] > 0.0 {
            errors[1] / sifted[1]
        } else {
            f64::NAN
        },
        sifted_per_symbol: total,
        sifted_hv_per_symbol: sifted[0],
        sifted_ad_per_symbol: sifted[1],
        rate_hv_bps: sifted[0] * rate,
        rate_ad_bps: sifted[1] * rate,
        raw_rate_bps: total * rate,
    }
}

/// Closed-form pooled QBER prediction; NaN if no clicks are possible.
pub fn predicted_qber(link: &LinkParams) -> f64 {
    predicted_stats(link).qber_avg
}

/// First-order rate thinning from the non-paralyzable per-channel dead
/// time: `1/(1 + r_ch·τ)` with `r_ch` the raw (unfiltered) per-channel
/// click rate. All four channels see the same average rate for a uniform
/// pattern, so the factor applies uniformly and leaves QBER unchanged.
pub fn dead_time_rate_factor(link: &LinkParams) -> f64 {
    let tau = link.detector.dead_time_s;
    if tau <= 0.0 {
        return 1.0;
    }
    let eta = link.detector.efficiency;
    let table = emission_table(
        MeanPhotonNumber::new(link.mu_q).expect("validated"),
        &link.channel,
    );
    // average click probability of one channel over the four states
    let mut p_avg = 0.0;
    for s in 0..4 {
        let mu = channel_mu(&table[s]);
        p_avg += click_probability(eta, mu[0]) / 4.0;
    }
    let r_ch = link.symbol_rate_hz * p_avg + link.detector.dark_rate_hz;
    1.0 / (1.0 + r_ch * tau)
}

/// Convenience used by tests and the analyze pipeline: sift with a seeded
/// double-click stream derived from `seed`.
pub fn sift_seeded(
    tags: &TagStream,
    pattern: &SymbolPattern,
    sync: &SyncResult,
    policy: DoubleClickPolicy,
    seed: u64,
    lane: u64,
) -> SiftOutcome {
    let mut rng = RandomStream::new(seed, lane).rng();
    sift(tags, pattern, sync, policy, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests_support::base_link;
    use crate::detection::{Channel, DetectionEvent};
    use approx::assert_relative_eq;

    fn stream_of(times_s: &[f64], channel: Channel) -> TagStream {
        TagStream {
            resolution_s: 1e-12,
            events: times_s
                .iter()
                .map(|&t| DetectionEvent {
                    channel,
                    ticks: (t / 1e-12).round() as u64,
                })
                .collect(),
        }
    }

    fn uniform_stream(n: usize, span_s: f64, seed: u64) -> TagStream {
        use rand::Rng;
        let mut rng = RandomStream::new(seed, 0).rng();
        let mut events: Vec<DetectionEvent> = (0..n)
            .map(|_| DetectionEvent {
                channel: Channel::H,
                ticks: (rng.random::<f64>() * span_s / 1e-12) as u64,
            })
            .collect();
        events.sort_unstable_by_key(|e| e.ticks);
        TagStream {
            resolution_s: 1e-12,
            events,
        }
    }

    #[test]
    fn fold_multiples_land_in_bin_zero() {
        let period = 1e-6;
        let tags = stream_of(&[0.0, 1e-6, 5e-6, 42e-6], Channel::H);
        let h = fold_histogram(&tags, period, 16).unwrap();
        assert_eq!(h.bins[0], 4);
        assert_eq!(h.total, 4);
        assert!(h.bins[1..].iter().all(|&b| b == 0));
    }

    #[test]
    fn fold_uniform_is_flat() {
        let n = 100_000;
        let tags = uniform_stream(n, 1.0, 5);
        let h = fold_histogram(&tags, 1e-6, 20).unwrap();
        assert_eq!(h.total, n as u64);
        let expect = n as f64 / 20.0;
        let sigma = (expect * (1.0 - 1.0 / 20.0)).sqrt();
        for &b in &h.bins {
            assert!((b as f64 - expect).abs() < 3.5 * sigma, "bin {b}");
        }
    }

    #[test]
    fn fold_half_period_leaves_upper_half_empty() {
        use rand::Rng;
        let period = 1e-6;
        let mut rng = RandomStream::new(8, 0).rng();
        let times: Vec<f64> = (0..10_000)
            .map(|i| i as f64 * period + rng.random::<f64>() * period / 2.0)
            .collect();
        let tags = stream_of(&times, Channel::H);
        let h = fold_histogram(&tags, period, 16).unwrap();
        assert!(h.bins[8..].iter().all(|&b| b == 0));
        assert_eq!(h.total, 10_000);
    }

    #[test]
    fn fold_empty_is_flagged() {
        let tags = TagStream::new(1e-12);
        let h = fold_histogram(&tags, 1e-6, 8).unwrap();
        assert!(h.is_empty());
        assert!(h.bins.iter().all(|&b| b == 0));
    }

    #[test]
    fn fold_validates_args() {
        let tags = TagStream::new(1e-12);
        assert!(fold_histogram(&tags, 0.0, 16).is_err());
        assert!(fold_histogram(&tags, 1e-6, 4).is_err());
    }

    #[test]
    fn peak_phase_finds_point_mass() {
        let period = 1e-6;
        let times: Vec<f64> = (0..1000).map(|i| i as f64 * period + 0.3e-6).collect();
        let tags = stream_of(&times, Channel::H);
        let h = fold_histogram(&tags, period, 64).unwrap();
        let phase = peak_phase(&h).unwrap();
        assert_relative_eq!(phase, 0.3e-6, epsilon = period / 64.0);
    }

    #[test]
    fn filter_ratio_one_is_identity() {
        let tags = uniform_stream(10_000, 0.1, 3);
        let out = temporal_filter(&tags, 1e-6, 1.0, 64).unwrap();
        assert_eq!(out.tags, tags);
    }

    #[test]
    fn filter_keeps_ratio_of_uniform_events() {
        let n = 100_000;
        let tags = uniform_stream(n, 1.0, 7);
        for ratio in [0.25, 0.5, 0.75] {
            let out = temporal_filter(&tags, 1e-6, ratio, 64).unwrap();
            let kept = out.tags.len() as f64;
            let sigma = (n as f64 * ratio * (1.0 - ratio)).sqrt();
            assert!(
                (kept - ratio * n as f64).abs() < 3.5 * sigma,
                "ratio {ratio}: kept {kept}"
            );
        }
    }

    #[test]
    fn filter_keeps_point_mass_completely() {
        let period = 1e-6;
        let times: Vec<f64> = (0..5000).map(|i| i as f64 * period + 0.77e-6).collect();
        let tags = stream_of(&times, Channel::D);
        for ratio in [0.1, 0.5, 0.9] {
            let out = temporal_filter(&tags, period, ratio, 64).unwrap();
            assert_eq!(out.tags.len(), 5000, "ratio {ratio}");
        }
    }

    #[test]
    fn filter_empty_input_empty_output() {
        let tags = TagStream::new(1e-12);
        let out = temporal_filter(&tags, 1e-6, 0.5, 64).unwrap();
        assert!(out.tags.is_empty());
        assert!(temporal_filter(&tags, 1e-6, 0.0, 64).is_err());
        assert!(temporal_filter(&tags, 1e-6, 1.1, 64).is_err());
    }

    #[test]
    fn estimate_qber_exact_ratio() {
        let mut records = Vec::new();
        for i in 0..100u64 {
            records.push(SiftedRecord {
                symbol_index: i,
                basis: Basis::HV,
                alice_bit: false,
                bob_bit: i < 8, // 8 errors
            });
        }
        let r = estimate_qber(&records, 10.0, 0.5).unwrap();
        assert_eq!(r.qber_avg, 0.08);
        assert_eq!(r.qber_hv, Some(0.08));
        assert_eq!(r.qber_ad, None);
        assert_eq!(r.sifted_count, 100);
        assert_eq!(r.error_count, 8);
        assert_relative_eq!(r.raw_rate_bps, 10.0);
    }

    #[test]
    fn estimate_qber_error_free() {
        let records: Vec<SiftedRecord> = (0..50)
            .map(|i| SiftedRecord {
                symbol_index: i,
                basis: if i % 2 == 0 { Basis::HV } else { Basis::AD },
                alice_bit: true,
                bob_bit: true,
            })
            .collect();
        let r = estimate_qber(&records, 1.0, 1.0).unwrap();
        assert_eq!(r.qber_avg, 0.0);
        assert_eq!(r.secret_fraction, 1.0);
        assert_relative_eq!(r.secret_rate_bps, 50.0);
    }

    #[test]
    fn estimate_qber_rejects_empty() {
        assert!(matches!(
            estimate_qber(&[], 1.0, 0.5),
            Err(Error::EmptySift)
        ));
    }

    #[test]
    fn secret_rate_zero_above_threshold() {
        let records: Vec<SiftedRecord> = (0..1000)
            .map(|i| SiftedRecord {
                symbol_index: i,
                basis: Basis::HV,
                alice_bit: false,
                bob_bit: i % 8 == 0, // 12.5 % errors
            })
            .collect();
        let r = estimate_qber(&records, 1.0, 1.0).unwrap();
        assert!(r.qber_avg > 0.110028);
        assert_eq!(r.secret_fraction, 0.0);
        assert_eq!(r.secret_rate_bps, 0.0);
    }

    #[test]
    fn frame_sync_of_empty_stream_is_not_locked() {
        let pattern =
            SymbolPattern::generate(100, 32, 1e6, &RandomStream::new(1, 1)).unwrap();
        let sync = frame_sync(&TagStream::new(1e-12), &pattern, &SyncParams::default()).unwrap();
        assert!(!sync.locked);
        assert_eq!(sync.correlation_peak, 0.0);
    }

    #[test]
    fn predicted_qber_dark_dominated_is_half() {
        let mut link = base_link();
        link.mu_q = 0.0;
        assert_relative_eq!(predicted_qber(&link), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn predicted_qber_misalignment_follows_malus() {
        let mut link = base_link();
        link.detector.dark_rate_hz = 0.0;
        link.channel.misalignment_deg = 3.0;
        link.channel.gate_extinction_db = f64::INFINITY;
        // sin²(3°) = 0.0027391 with a small multi-click correction
        assert_relative_eq!(predicted_qber(&link), 0.0027391, epsilon = 2e-5);
    }

    #[test]
    fn predicted_qber_extinction_leakage() {
        let mut link = base_link();
        link.detector.dark_rate_hz = 0.0;
        link.channel.misalignment_deg = 0.0;
        link.channel.gate_extinction_db = 30.0;
        assert_relative_eq!(predicted_qber(&link), 0.000999, epsilon = 2e-5);
    }

    #[test]
    fn predicted_stats_basis_symmetry() {
        let link = base_link();
        let s = predicted_stats(&link);
        assert_relative_eq!(s.sifted_hv_per_symbol, s.sifted_ad_per_symbol, max_relative = 1e-9);
        assert_relative_eq!(s.qber_hv, s.qber_ad, max_relative = 1e-9);
    }
}
