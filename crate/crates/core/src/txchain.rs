//! Alice plus channel: symbol pattern with synchronization header,
//! polarization state preparation via gated continuous-wave light,
//! attenuation to the target mean photon number, and channel
//! loss/misalignment.

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::{lit, Real};
use crate::rng::RandomStream;
use crate::units::MeanPhotonNumber;

/// Preparation/measurement basis of one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Rectilinear: bit 0 → H (0°), bit 1 → V (90°).
    HV,
    /// Diagonal: bit 0 → D (45°), bit 1 → A (135°).
    AD,
}

impl Basis {
    pub fn label(self) -> &'static str {
        match self {
            Basis::HV => "HV",
            Basis::AD => "AD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "HV" | "hv" => Some(Basis::HV),
            "AD" | "ad" => Some(Basis::AD),
            _ => None,
        }
    }
}

/// One transmitted symbol: basis choice plus key bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbol {
    pub basis: Basis,
    pub bit: bool,
}

impl Symbol {
    /// Index of the prepared state in H, V, D, A order.
    pub fn state_index(self) -> usize {
        match (self.basis, self.bit) {
            (Basis::HV, false) => 0,
            (Basis::HV, true) => 1,
            (Basis::AD, false) => 2,
            (Basis::AD, true) => 3,
        }
    }

    pub fn state(self) -> PolarizationState {
        PolarizationState::from_symbol(self)
    }
}

/// Linear polarization on the great circle, in degrees: H=0°, V=90°,
/// D=45°, A=135°. Arbitrary angles appear after channel rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState<F: Real = f64> {
    angle_deg: F,
}

impl<F: Real> PolarizationState<F> {
    pub fn from_degrees(angle_deg: F) -> Self {
        Self { angle_deg }
    }

    pub fn h() -> Self {
        Self::from_degrees(F::zero())
    }

    pub fn v() -> Self {
        Self::from_degrees(lit(90.0))
    }

    pub fn d() -> Self {
        Self::from_degrees(lit(45.0))
    }

    pub fn a() -> Self {
        Self::from_degrees(lit(135.0))
    }

    pub fn angle_deg(&self) -> F {
        self.angle_deg
    }

    /// Rotates the polarization frame by `by_deg`, folding into [0, 180).
    pub fn rotated(&self, by_deg: F) -> Self {
        let a = (self.angle_deg + by_deg) % lit(180.0);
        let a = if a < F::zero() { a + lit(180.0) } else { a };
        Self { angle_deg: a }
    }
}

impl PolarizationState<f64> {
    pub fn from_symbol(sym: Symbol) -> Self {
        match sym.state_index() {
            0 => Self::h(),
            1 => Self::v(),
            2 => Self::d(),
            3 => Self::a(),
            _ => unreachable!(),
        }
    }
}

/// Malus projection: transmitted intensity fraction `cos²Δ` for angle
/// difference Δ in degrees between polarization and analyzer axis.
/// Exact (1 and 0) at the cardinal angles, so an aligned orthogonal
/// channel sees strictly zero light.
pub fn malus_projection<F: Real>(delta_deg: F) -> F {
    let r = (delta_deg % lit(180.0)).abs();
    if r == F::zero() {
        return F::one();
    }
    if r == lit(90.0) {
        return F::zero();
    }
    let c = (r * lit(std::f64::consts::PI) / lit(180.0)).cos();
    c * c
}

/// Quantum channel plus optical-gate imperfections seen by one symbol.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Propagation loss Alice→Bob, dB ≥ 0.
    pub loss_db: f64,
    /// Static rotation of the linear-polarization frame, degrees.
    pub misalignment_deg: f64,
    /// MZM optical-gate on/off ratio, dB (assumption: 30 dB typical).
    /// `f64::INFINITY` models a perfect gate.
    #[serde(default = "default_gate_extinction")]
    pub gate_extinction_db: f64,
    /// Fraction of the symbol period the gate is open, centered in the
    /// window (assumption; the gating waveform is not published).
    #[serde(default = "default_gate_duty")]
    pub gate_duty: f64,
}

fn default_gate_extinction() -> f64 {
    30.0
}

fn default_gate_duty() -> f64 {
    0.2
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            loss_db: 0.0,
            misalignment_deg: 0.0,
            gate_extinction_db: default_gate_extinction(),
            gate_duty: default_gate_duty(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) {
            return Err(Error::config("channel.loss_db", "must be >= 0"));
        }
        if !self.misalignment_deg.is_finite() {
            return Err(Error::config("channel.misalignment_deg", "must be finite"));
        }
        if !(self.gate_extinction_db > 0.0) {
            return Err(Error::config("channel.gate_extinction_db", "must be > 0"));
        }
        if !(self.gate_duty > 0.0 && self.gate_duty <= 1.0) {
            return Err(Error::config("channel.gate_duty", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// Linear transmission `10^(−loss/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Off-state leakage fraction `10^(−extinction/10)`; 0 for a perfect gate.
    pub fn leakage(&self) -> f64 {
        if self.gate_extinction_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.gate_extinction_db / 10.0)
        }
    }
}

/// Alice's transmitted frame: public synchronization header followed by
/// the random payload. Header bases are fixed to HV; header bits come
/// from the fixed LFSR sequence in [`header_bits`], identically known to
/// both sides. Payload bases and bits are uniform i.i.d. draws from the
/// seeded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPattern {
    symbols: Vec<Symbol>,
    header_len: usize,
    symbol_rate_hz: f64,
}

/// Fixed public synchronization bit sequence: a maximal-length LFSR
/// (x¹⁶+x¹⁴+x¹³+x¹¹+1, init 0xACE1) truncated or cycled to `len` bits.
pub fn header_bits(len: usize) -> Vec<bool> {
    let mut lfsr: u16 = 0xACE1;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let bit = (lfsr ^ (lfsr >> 2) ^ (lfsr >> 3) ^ (lfsr >> 5)) & 1;
        lfsr = (lfsr >> 1) | (bit << 15);
        out.push(bit == 1);
    }
    out
}

impl SymbolPattern {
    /// Generates a frame of `header_len + n_payload` symbols.
    /// Deterministic for a fixed stream.
    pub fn generate(
        n_payload: usize,
        header_len: usize,
        symbol_rate_hz: f64,
        stream: &RandomStream,
    ) -> Result<Self> {
        if n_payload == 0 {
            return Err(Error::config("frame.payload_len", "must be > 0"));
        }
        if header_len == 0 {
            return Err(Error::config("frame.header_len", "must be > 0"));
        }
        if !(symbol_rate_hz > 0.0) {
            return Err(Error::InvalidRate(symbol_rate_hz));
        }
        let mut symbols = Vec::with_capacity(header_len + n_payload);
        for bit in header_bits(header_len) {
            symbols.push(Symbol {
                basis: Basis::HV,
                bit,
            });
        }
        let mut rng = stream.rng();
        for _ in 0..n_payload {
            let word: u64 = rng.random();
            symbols.push(Symbol {
                basis: if word & 1 == 0 { Basis::HV } else { Basis::AD },
                bit: word & 2 != 0,
            });
        }
        Ok(Self {
            symbols,
            header_len,
            symbol_rate_hz,
        })
    }

    pub fn from_parts(symbols: Vec<Symbol>, header_len: usize, symbol_rate_hz: f64) -> Self {
        Self {
            symbols,
            header_len,
            symbol_rate_hz,
        }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn header(&self) -> &[Symbol] {
        &self.symbols[..self.header_len]
    }

    pub fn payload(&self) -> &[Symbol] {
        &self.symbols[self.header_len..]
    }

    pub fn header_len(&self) -> usize {
        self.header_len
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_hz
    }

    /// Symbol period in seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.symbol_rate_hz
    }

    /// Emission window `[i·T, (i+1)·T)` of symbol `i`.
    pub fn symbol_window(&self, i: usize) -> (f64, f64) {
        let t = self.period();
        (i as f64 * t, (i + 1) as f64 * t)
    }

    /// Writes `symbol_index,basis,bit` rows with `#`-prefixed metadata
    /// (symbol rate, header length) so the file round-trips alone.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# ledqkd pattern v1")?;
        writeln!(w, "# symbol_rate_hz={}", self.symbol_rate_hz)?;
        writeln!(w, "# header_len={}", self.header_len)?;
        writeln!(w, "symbol_index,basis,bit")?;
        for (i, s) in self.symbols.iter().enumerate() {
            writeln!(w, "{},{},{}", i, s.basis.label(), s.bit as u8)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut symbol_rate_hz = None;
        let mut header_len = None;
        let mut symbols = Vec::new();
        let content = std::io::read_to_string(r)?;
        let mut saw_header_row = false;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("symbol_rate_hz=") {
                    symbol_rate_hz = v.trim().parse::<f64>().ok();
                } else if let Some(v) = meta.strip_prefix("header_len=") {
                    header_len = v.trim().parse::<usize>().ok();
                }
                continue;
            }
            if !saw_header_row {
                // column header row
                saw_header_row = true;
                continue;
            }
            let mut parts = line.split(',');
            let idx: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::PatternFormat(format!("bad index at line {lineno}")))?;
            if idx != symbols.len() {
                return Err(Error::PatternFormat(format!(
                    "non-contiguous symbol_index {idx} at line {lineno}"
                )));
            }
            let basis = parts
                .next()
                .and_then(|s| Basis::parse(s.trim()))
                .ok_or_else(|| Error::PatternFormat(format!("bad basis at line {lineno}")))?;
            let bit = match parts.next().map(str::trim) {
                Some("0") => false,
                Some("1") => true,
                _ => return Err(Error::PatternFormat(format!("bad bit at line {lineno}"))),
            };
            symbols.push(Symbol { basis, bit });
        }
        let symbol_rate_hz = symbol_rate_hz
            .ok_or_else(|| Error::PatternFormat("missing # symbol_rate_hz metadata".into()))?;
        let header_len = header_len
            .ok_or_else(|| Error::PatternFormat("missing # header_len metadata".into()))?;
        if header_len >= symbols.len() {
            return Err(Error::PatternFormat(
                "header_len covers the whole pattern".into(),
            ));
        }
        Ok(Self {
            symbols,
            header_len,
            symbol_rate_hz,
        })
    }
}

/// Mean-photon-number content of one symbol after attenuation, gate
/// leakage and the channel: the main component at `angle_deg` plus the
/// orthogonal bleed-through at `angle_deg + 90°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub angle_deg: f64,
    pub mu_main: f64,
    pub mu_leak: f64,
}

impl Emission {
    pub fn total_mu(&self) -> f64 {
        self.mu_main + self.mu_leak
    }
}

/// Per-symbol emission specification for a whole frame.
///
/// Only four distinct emissions exist (one per prepared state), so the
/// plan stores that table; `emission_for` resolves a symbol's spec.
#[derive(Debug, Clone)]
pub struct EmissionPlan {
    states: [Emission; 4],
    symbol_rate_hz: f64,
    gate_duty: f64,
}

/// Post-channel emission of each prepared state in H, V, D, A order:
/// attenuation to `mu_q`, gate off-state leakage into the orthogonal
/// polarization, channel loss, and misalignment rotation.
pub fn emission_table(mu_q: MeanPhotonNumber, ch: &ChannelParams) -> [Emission; 4] {
    let g = ch.transmission();
    let eps = ch.leakage();
    let mu = mu_q.value();
    let state_angle = [0.0, 90.0, 45.0, 135.0];
    std::array::from_fn(|i| Emission {
        angle_deg: PolarizationState::from_degrees(state_angle[i])
            .rotated(ch.misalignment_deg)
            .angle_deg(),
        mu_main: mu * g,
        mu_leak: mu * eps * g,
    })
}

/// Applies attenuation to `mu_q`, gate off-state leakage, channel loss and
/// misalignment rotation to each of the four prepared states.
///
/// Photon-number statistics per symbol are Poissonian with these means
/// (assumption: the broadband source has enormous mode count, so
/// per-symbol bunching is negligible).
pub fn prepare_states(
    pattern: &SymbolPattern,
    mu_q: MeanPhotonNumber,
    ch: &ChannelParams,
) -> EmissionPlan {
    EmissionPlan {
        states: emission_table(mu_q, ch),
        symbol_rate_hz: pattern.symbol_rate_hz(),
        gate_duty: ch.gate_duty,
    }
}

impl EmissionPlan {
    pub fn emission(&self, sym: Symbol) -> &Emission {
        &self.states[sym.state_index()]
    }

    pub fn states(&self) -> &[Emission; 4] {
        &self.states
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_hz
    }

    pub fn period(&self) -> f64 {
        1.0 / self.symbol_rate_hz
    }

    pub fn gate_duty(&self) -> f64 {
        self.gate_duty
    }

    /// Gate-open interval within a symbol period, as phase fractions.
    /// The gate is centered: `[(1−d)/2, (1+d)/2)·T`.
    pub fn gate_bounds_frac(&self) -> (f64, f64) {
        let lo = (1.0 - self.gate_duty) / 2.0;
        (lo, lo + self.gate_duty)
    }
}
