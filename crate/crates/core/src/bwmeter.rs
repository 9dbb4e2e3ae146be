//! Electro-optic bandwidth measurement at single-photon level: sinusoidal
//! drive synthesized as an inhomogeneous Poisson tag stream, modulation
//! contrast from the folded delay histogram, and single-pole cutoff fit.
//!
//! A source too dim for a network analyzer still reveals its frequency
//! response in photon statistics: fold the time tags modulo the drive
//! period and read the surviving modulation depth off the histogram.

use rand::Rng;

use crate::detection::{Channel, DetectionEvent};
use crate::emitter::EmitterModel;
use crate::error::{Error, Result};
use crate::postproc::fold_histogram;
use crate::real::{lit, Real};
use crate::rng::RandomStream;
use crate::tagfile::TagStream;

/// One point of a swept-frequency response measurement.
#[derive(Debug, Clone, Copy)]
pub struct ResponsePoint {
    pub frequency_hz: f64,
    /// Estimated modulation contrast m̂ at this frequency.
    pub contrast: f64,
    /// `20·log₁₀(m̂ / m̂_ref)`, referenced to the lowest valid frequency.
    pub response_db: f64,
    pub valid: bool,
}

/// Contrast estimate with its confidence flag.
#[derive(Debug, Clone, Copy)]
pub struct ContrastEstimate {
    pub m_hat: f64,
    pub tags_used: u64,
    /// Set when fewer than 1000 tags entered the estimate.
    pub low_confidence: bool,
}

/// Generates time tags of a source with intensity
/// `λ(t) = rate·(1 + m·sin(2πft))` by thinning a homogeneous Poisson
/// process at the peak rate. Exact for any m ∈ [0, 1].
pub fn synthesize_modulated_tags(
    mean_rate_hz: f64,
    depth: f64,
    frequency_hz: f64,
    duration_s: f64,
    resolution_s: f64,
    stream: &RandomStream,
) -> Result<TagStream> {
    if !(0.0..=1.0).contains(&depth) {
        return Err(Error::ProbabilityDomain(depth));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::InvalidRate(frequency_hz));
    }
    if !(mean_rate_hz > 0.0) {
        return Err(Error::InvalidRate(mean_rate_hz));
    }
    if !(duration_s > 0.0) {
        return Err(Error::InvalidPeriod(duration_s));
    }
    let peak = mean_rate_hz * (1.0 + depth);
    let mut rng = stream.rng();
    let mut tags = TagStream::new(resolution_s);
    let mut t = 0.0f64;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / peak;
        if t >= duration_s {
            break;
        }
        let intensity =
            mean_rate_hz * (1.0 + depth * (std::f64::consts::TAU * frequency_hz * t).sin());
        if rng.random::<f64>() * peak <= intensity {
            tags.events.push(DetectionEvent {
                channel: Channel::H,
                ticks: (t / resolution_s).round() as u64,
            });
        }
    }
    Ok(tags)
}

/// Modulation contrast of a folded histogram: the fundamental Fourier
/// component ratio `m̂ = 2·|H₁| / H₀`, corrected for the finite bin width
/// by `sinc(π/n)⁻¹`. Exactly 0 for a uniform histogram.
pub fn contrast_from_histogram<F: Real>(bins: &[u64]) -> F {
    let n = bins.len();
    let total: u64 = bins.iter().sum();
    if total == 0 || n == 0 {
        return F::zero();
    }
    let nf = lit::<F>(n as f64);
    let tau = lit::<F>(std::f64::consts::TAU);
    // Working against the mean makes a uniform histogram exactly zero
    // instead of leaving float residue from the large DC term.
    let mean = lit::<F>(total as f64) / nf;
    let (mut re, mut im) = (F::zero(), F::zero());
    for (b, &c) in bins.iter().enumerate() {
        let theta = tau * lit::<F>(b as f64) / nf;
        let c = lit::<F>(c as f64) - mean;
        re += c * theta.cos();
        im += c * theta.sin();
    }
    let fundamental = (re * re + im * im).sqrt();
    let raw = lit::<F>(2.0) * fundamental / lit::<F>(total as f64);
    let x = lit::<F>(std::f64::consts::PI) / nf;
    raw * x / x.sin()
}

/// Estimates the modulation depth of a tag stream driven at `frequency_hz`
/// by folding modulo the drive period into `nbins` and reading the
/// fundamental Fourier contrast.
pub fn contrast_estimate(
    tags: &TagStream,
    frequency_hz: f64,
    nbins: usize,
) -> Result<ContrastEstimate> {
    if nbins < 16 {
        return Err(Error::TooFewBins {
            min: 16,
            got: nbins,
        });
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::InvalidRate(frequency_hz));
    }
    let hist = fold_histogram(tags, 1.0 / frequency_hz, nbins)?;
    if hist.is_empty() {
        return Err(Error::NoSignal);
    }
    Ok(ContrastEstimate {
        m_hat: contrast_from_histogram::<f64>(&hist.bins),
        tags_used: hist.total,
        low_confidence: hist.total < 1000,
    })
}

/// Drive and acquisition settings shared by all sweep points.
#[derive(Debug, Clone, Copy)]
pub struct SweepDrive {
    pub mean_rate_hz: f64,
    pub modulation_depth: f64,
    pub duration_s: f64,
    pub resolution_s: f64,
    pub nbins: usize,
}

/// What shapes the modulation depth over frequency.
#[derive(Debug, Clone, Copy)]
pub enum SweepSource<'a> {
    /// Drive filtered by the emitter's electro-optic response.
    Emitter(&'a EmitterModel),
    /// Frequency-flat response.
    Flat,
}

/// Runs a simulated frequency sweep: per frequency, synthesize tags with
/// the source-filtered depth, estimate the contrast, and normalize the
/// response to the lowest valid frequency. A failing point is marked
/// invalid without aborting the sweep. Sweep point `i` draws from stream
/// lane `i`.
pub fn sweep_response(
    frequencies_hz: &[f64],
    drive: &SweepDrive,
    source: SweepSource,
    stream: &RandomStream,
) -> Result<Vec<ResponsePoint>> {
    validate_frequencies(frequencies_hz)?;
    let estimates = frequencies_hz.iter().enumerate().map(|(i, &f)| {
        let depth = drive.modulation_depth
            * match source {
                SweepSource::Emitter(model) => model.eo_response(f),
                SweepSource::Flat => 1.0,
            };
        synthesize_modulated_tags(
            drive.mean_rate_hz,
            depth,
            f,
            drive.duration_s,
            drive.resolution_s,
            &stream.offset(i as u64),
        )
        .and_then(|tags| contrast_estimate(&tags, f, drive.nbins))
        .map(|e| e.m_hat)
        .ok()
    });
    normalize_sweep(frequencies_hz, estimates.collect())
}

/// Builds the normalized response from pre-recorded tag streams, one per
/// frequency (the ingest path; channel field is ignored by the fold).
pub fn sweep_from_tags(
    frequencies_hz: &[f64],
    tag_streams: &[TagStream],
    nbins: usize,
) -> Result<Vec<ResponsePoint>> {
    validate_frequencies(frequencies_hz)?;
    if tag_streams.len() != frequencies_hz.len() {
        return Err(Error::InvalidSweep);
    }
    let estimates = frequencies_hz
        .iter()
        .zip(tag_streams)
        .map(|(&f, tags)| contrast_estimate(tags, f, nbins).map(|e| e.m_hat).ok());
    normalize_sweep(frequencies_hz, estimates.collect())
}

fn validate_frequencies(frequencies_hz: &[f64]) -> Result<()> {
    if frequencies_hz.len() < 3
        || !frequencies_hz
            .windows(2)
            .all(|w| w[0] > 0.0 && w[0] < w[1])
    {
        return Err(Error::InvalidSweep);
    }
    Ok(())
}

fn normalize_sweep(
    frequencies_hz: &[f64],
    contrasts: Vec<Option<f64>>,
) -> Result<Vec<ResponsePoint>> {
    let m_ref = contrasts
        .iter()
        .flatten()
        .copied()
        .find(|&m| m > 0.0)
        .ok_or(Error::NoSignal)?;
    let mut first = true;
    Ok(frequencies_hz
        .iter()
        .zip(contrasts)
        .map(|(&f, m)| match m {
            Some(m) if m > 0.0 => {
                let response_db = if first {
                    first = false;
                    0.0 // the reference point is 0 dB by construction
                } else {
                    20.0 * (m / m_ref).log10()
                };
                ResponsePoint {
                    frequency_hz: f,
                    contrast: m,
                    response_db,
                    valid: true,
                }
            }
            _ => ResponsePoint {
                frequency_hz: f,
                contrast: f64::NAN,
                response_db: f64::NAN,
                valid: false,
            },
        })
        .collect())
}

/// Least-squares fit of the single-pole magnitude response
/// `20·log₁₀(|H(f)|/|H(f_ref)|)`, `|H(f)| = 1/√(1+(f/fc)²)`, over the
/// valid points; returns the fitted corner frequency.
///
/// Requires at least 3 valid points and a −3 dB crossing inside the
/// sweep; otherwise the cutoff is out of range.
pub fn fit_cutoff(points: &[ResponsePoint]) -> Result<f64> {
    let valid: Vec<&ResponsePoint> = points.iter().filter(|p| p.valid).collect();
    if valid.len() < 3 {
        return Err(Error::InvalidSweep);
    }
    let min_db = valid.iter().map(|p| p.response_db).fold(f64::MAX, f64::min);
    if min_db > -3.0 {
        return Err(Error::CutoffOutOfRange);
    }
    let f_ref = valid[0].frequency_hz;
    let model_db = |f: f64, fc: f64| -> f64 {
        let h = |x: f64| 1.0 / (1.0 + (x / fc).powi(2)).sqrt();
        20.0 * (h(f) / h(f_ref)).log10()
    };
    let sse = |log_fc: f64| -> f64 {
        let fc = 10f64.powf(log_fc);
        valid
            .iter()
            .map(|p| {
                let r = p.response_db - model_db(p.frequency_hz, fc);
                r * r
            })
            .sum()
    };

    // Coarse scan over a generous corner range, then golden-section refine.
    let lo = valid[0].frequency_hz.log10() - 2.0;
    let hi = valid.last().unwrap().frequency_hz.log10() + 2.0;
    let steps = 400;
    let mut best = (lo, f64::MAX);
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let v = sse(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let step = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc_, mut fd) = (sse(c), sse(d));
    for _ in 0..80 {
        if fc_ < fd {
            b = d;
            d = c;
            fd = fc_;
            c = b - phi * (b - a);
            fc_ = sse(c);
        } else {
            a = c;
            c = d;
            fc_ = fd;
            d = a + phi * (b - a);
            fd = sse(d);
        }
    }
    Ok(10f64.powf((a + b) / 2.0))
}

/// Writes sweep points as `frequency_hz,contrast,response_db` CSV.
pub fn write_sweep_csv<W: std::io::Write>(points: &[ResponsePoint], mut w: W) -> Result<()> {
    writeln!(w, "frequency_hz,contrast,response_db")?;
    for p in points {
        if p.valid {
            writeln!(w, "{},{:.6},{:.4}", p.frequency_hz, p.contrast, p.response_db)?;
        } else {
            writeln!(w, "{},,", p.frequency_hz)?;
        }
    }
    Ok(())
}
