//! Bob's physical layer: passive-basis polarization analyzer feeding four
//! free-running SPADs, producing a time-tagged click stream.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::tagfile::TagStream;
use crate::txchain::{malus_projection, Basis, Emission, EmissionPlan, PolarizationState, SymbolPattern};
use crate::units::MeanPhotonNumber;

/// Detector channel behind the polarization analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Channel {
    H = 0,
    V = 1,
    D = 2,
    A = 3,
}

pub const CHANNELS: [Channel; 4] = [Channel::H, Channel::V, Channel::D, Channel::A];

impl Channel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Channel::H),
            1 => Some(Channel::V),
            2 => Some(Channel::D),
            3 => Some(Channel::A),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::H => "H",
            Channel::V => "V",
            Channel::D => "D",
            Channel::A => "A",
        }
    }

    pub fn analyzer_angle_deg(self) -> f64 {
        match self {
            Channel::H => 0.0,
            Channel::V => 90.0,
            Channel::D => 45.0,
            Channel::A => 135.0,
        }
    }

    /// Measurement basis this channel belongs to.
    pub fn basis(self) -> Basis {
        match self {
            Channel::H | Channel::V => Basis::HV,
            Channel::D | Channel::A => Basis::AD,
        }
    }

    /// Key bit this channel announces: 0 for H/D, 1 for V/A.
    pub fn bit(self) -> bool {
        matches!(self, Channel::V | Channel::A)
    }
}

/// Free-running InGaAs SPAD bank parameters.
///
/// Dead time and timing jitter defaults are assumptions (typical values
/// for free-running InGaAs modules); efficiency and dark count rate are
/// the characterized figures for this receiver.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Quantum efficiency η ∈ [0, 1].
    pub efficiency: f64,
    /// Dark count rate per detector, counts/s.
    pub dark_rate_hz: f64,
    /// Per-channel dead time, seconds (assumption: 10 µs).
    #[serde(default = "default_dead_time")]
    pub dead_time_s: f64,
    /// Gaussian timing jitter σ, seconds (assumption: 100 ps).
    #[serde(default = "default_jitter")]
    pub jitter_sigma_s: f64,
    /// Time-tagger resolution, seconds per tick (default 1 ps).
    #[serde(default = "default_resolution")]
    pub tagger_resolution_s: f64,
}

fn default_dead_time() -> f64 {
    10e-6
}

fn default_jitter() -> f64 {
    100e-12
}

fn default_resolution() -> f64 {
    1e-12
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            dark_rate_hz: 560.0,
            dead_time_s: default_dead_time(),
            jitter_sigma_s: default_jitter(),
            tagger_resolution_s: default_resolution(),
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config("detector.efficiency", "must be in [0, 1]"));
        }
        if !(self.dark_rate_hz >= 0.0) {
            return Err(Error::config("detector.dark_rate_hz", "must be >= 0"));
        }
        if !(self.dead_time_s >= 0.0) {
            return Err(Error::config("detector.dead_time_s", "must be >= 0"));
        }
        if !(self.jitter_sigma_s >= 0.0) {
            return Err(Error::config("detector.jitter_sigma_s", "must be >= 0"));
        }
        if !(self.tagger_resolution_s > 0.0) {
            return Err(Error::config("detector.tagger_resolution_s", "must be > 0"));
        }
        let fs = self.tagger_resolution_s / 1e-15;
        if fs < 1.0 || (fs - fs.round()).abs() > 1e-6 * fs {
            return Err(Error::config(
                "detector.tagger_resolution_s",
                "must be a whole number of femtoseconds",
            ));
        }
        Ok(())
    }
}

/// One time-tagged SPAD click. Timestamps count tagger-resolution ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionEvent {
    pub channel: Channel,
    pub ticks: u64,
}

/// Click probability for a detector seeing Poissonian light:
/// `1 − exp(−η·μ)`.
pub fn click_probability(efficiency: f64, mu: f64) -> f64 {
    -(-efficiency * mu).exp_m1()
}

/// Per-channel mean photon numbers behind the passive analyzer.
///
/// The 50/50 basis splitter halves each component; within a basis the
/// Malus projection cos²Δ distributes it over the two ports. Both the
/// main component and the orthogonal gate leakage contribute.
pub fn channel_mu(emission: &Emission) -> [f64; 4] {
    let leak_angle = emission.angle_deg + 90.0;
    std::array::from_fn(|i| {
        let phi = CHANNELS[i].analyzer_angle_deg();
        0.5 * (emission.mu_main * malus_projection(emission.angle_deg - phi)
            + emission.mu_leak * malus_projection(leak_angle - phi))
    })
}

/// Click probability per channel for one symbol window carrying a pure
/// polarization state of mean photon number `mu`. Dark counts are handled
/// separately in [`simulate_detections`].
pub fn analyzer_probabilities(
    state: PolarizationState,
    mu: MeanPhotonNumber,
    params: &DetectorParams,
) -> [f64; 4] {
    let emission = Emission {
        angle_deg: state.angle_deg(),
        mu_main: mu.value(),
        mu_leak: 0.0,
    };
    channel_mu(&emission).map(|m| click_probability(params.efficiency, m))
}

/// Simulates the full receiver for one frame.
///
/// Per symbol and channel, signal clicks are drawn with probability
/// `1 − exp(−η·μ_c)` and placed uniformly inside the open gate window
/// (channel-count independence holds because Poisson splitting of the
/// incident light makes the four ports independent). Homogeneous Poisson
/// dark counts at `dark_rate_hz` are superimposed per channel over the
/// whole run. Every click gets Gaussian jitter, is quantized to the
/// tagger resolution, and per-channel dead time drops any click closer
/// than `dead_time_s` to the previously accepted one. The output is
/// merged and globally time-sorted.
///
/// The frame starts at symbol index `frame_start` (earlier time carries
/// dark counts only). Uses sub-stream lanes `0..=4` of `stream`.
pub fn simulate_detections(
    pattern: &SymbolPattern,
    plan: &EmissionPlan,
    params: &DetectorParams,
    frame_start: u64,
    stream: &RandomStream,
) -> TagStream {
    let res = params.tagger_resolution_s;
    let period = plan.period();
    let t_end = (frame_start + pattern.len() as u64) as f64 * period;
    let (gate_lo, _) = plan.gate_bounds_frac();
    let gate_width = plan.gate_duty() * period;

    let jitter = if params.jitter_sigma_s > 0.0 {
        Some(Normal::new(0.0, params.jitter_sigma_s).expect("valid sigma"))
    } else {
        None
    };

    let quantize = |t: f64| -> u64 {
        let ticks = (t / res).round();
        if ticks <= 0.0 {
            0
        } else {
            ticks as u64
        }
    };

    // Click probabilities for the four prepared states x four channels.
    let probs: [[f64; 4]; 4] = std::array::from_fn(|s| {
        channel_mu(&plan.states()[s]).map(|m| click_probability(params.efficiency, m))
    });

    let mut per_channel: [Vec<u64>; 4] = Default::default();

    // Signal clicks, one pass over the frame.
    let mut sig_rng = stream.offset(0).rng();
    for (i, sym) in pattern.symbols().iter().enumerate() {
        let p = &probs[sym.state_index()];
        let gate_start = (frame_start + i as u64) as f64 * period + gate_lo * period;
        for c in 0..4 {
            if p[c] <= 0.0 {
                continue;
            }
            if sig_rng.random::<f64>() < p[c] {
                let mut t = gate_start + sig_rng.random::<f64>() * gate_width;
                if let Some(j) = &jitter {
                    t += j.sample(&mut sig_rng);
                }
                per_channel[c].push(quantize(t));
            }
        }
    }

    // Dark counts, homogeneous Poisson per channel over [0, t_end).
    if params.dark_rate_hz > 0.0 {
        for c in 0..4 {
            let mut rng = stream.offset(1 + c as u64).rng();
            let mut t = 0.0;
            loop {
                let u: f64 = rng.random();
                t += -(1.0 - u).ln() / params.dark_rate_hz;
                if t >= t_end {
                    break;
                }
                let mut tj = t;
                if let Some(j) = &jitter {
                    tj += j.sample(&mut rng);
                }
                per_channel[c].push(quantize(tj));
            }
        }
    }

    // Per-channel ordering and dead-time enforcement.
    let dead_ticks = (params.dead_time_s / res).round() as u64;
    let mut events = Vec::new();
    for (c, ticks) in per_channel.iter_mut().enumerate() {
        ticks.sort_unstable();
        let channel = CHANNELS[c];
        let mut last: Option<u64> = None;
        for &t in ticks.iter() {
            if let Some(prev) = last {
                if dead_ticks > 0 && t - prev < dead_ticks {
                    continue;
                }
            }
            last = Some(t);
            events.push(DetectionEvent { channel, ticks: t });
        }
    }

    events.sort_unstable_by_key(|e| (e.ticks, e.channel.code()));
    TagStream {
        resolution_s: res,
        events,
    }
}

/// What to do when more than one channel clicks in a symbol window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoubleClickPolicy {
    /// Assign the symbol to one clicking channel uniformly at random
    /// (the security-conservative standard).
    Random,
    /// Drop the symbol.
    Discard,
}

impl Default for DoubleClickPolicy {
    fn default() -> Self {
        DoubleClickPolicy::Random
    }
}

/// Reduces the clicks of one symbol window to at most one effective
/// detection. Multiple clicks on the *same* channel count once.
pub fn resolve_window<R: Rng>(
    events: &[DetectionEvent],
    policy: DoubleClickPolicy,
    rng: &mut R,
) -> Option<DetectionEvent> {
    let mut first_by_channel: [Option<DetectionEvent>; 4] = [None; 4];
    let mut channels: Vec<usize> = Vec::with_capacity(2);
    for e in events {
        let c = e.channel.code() as usize;
        if first_by_channel[c].is_none() {
            first_by_channel[c] = Some(*e);
            channels.push(c);
        }
    }
    match channels.len() {
        0 => None,
        1 => first_by_channel[channels[0]],
        n => match policy {
            DoubleClickPolicy::Discard => None,
            DoubleClickPolicy::Random => first_by_channel[channels[rng.random_range(0..n)]],
        },
    }
}
