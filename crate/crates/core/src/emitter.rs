//! Parametric model of the forward-biased PIN light emitter: L–I curve,
//! emission wavelength, electro-optic frequency response, and the photon
//! budget headroom against a QKD operating point.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::{as_f64, lit, Real};
use crate::units::{photon_rate, MeanPhotonNumber, OpticalPower, Wavelength};

/// LED-like emitter described by an L–I sample table, a center wavelength
/// and a single-pole electro-optic corner frequency.
///
/// The default table is anchored at (0 mA, 0 W) and (46 mA, 100 pW); the
/// full measured curve can be substituted from CSV. The single-pole
/// response and its 10 MHz default corner are modeling assumptions (the
/// qualitative constraint is only that the corner sits far below the
/// symbol rate); both are echoed as such in run reports.
#[derive(Debug, Clone)]
pub struct EmitterModel<F: Real = f64> {
    li_table: Vec<(F, OpticalPower<F>)>,
    center_wavelength: Wavelength<F>,
    eo_cutoff_hz: F,
}

/// Default corner frequency of the electro-optic response, Hz (assumption).
pub const DEFAULT_EO_CUTOFF_HZ: f64 = 10e6;

impl EmitterModel<f64> {
    /// The emitter with published anchors: 100 pW at 46 mA, peak 1547 nm.
    pub fn default_model() -> Self {
        Self::new(
            vec![(0.0, 0.0), (46.0, 100e-12)],
            Wavelength::from_nanometers(1547.0).unwrap(),
            DEFAULT_EO_CUTOFF_HZ,
        )
        .expect("default table is valid")
    }

    /// Loads an L–I table from two-column CSV `current_ma,power_w`.
    /// A header row is required.
    pub fn from_li_csv<R: Read>(
        reader: R,
        center_wavelength: Wavelength,
        eo_cutoff_hz: f64,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::InvalidLiTable(
                "expected two columns: current_ma,power_w".into(),
            ));
        }
        let mut table = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let current: f64 = rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidLiTable(format!("bad current in row {rec:?}")))?;
            let power: f64 = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidLiTable(format!("bad power in row {rec:?}")))?;
            table.push((current, power));
        }
        Self::new(table, center_wavelength, eo_cutoff_hz)
    }

    pub fn from_li_csv_path<P: AsRef<Path>>(
        path: P,
        center_wavelength: Wavelength,
        eo_cutoff_hz: f64,
    ) -> Result<Self> {
        Self::from_li_csv(std::fs::File::open(path)?, center_wavelength, eo_cutoff_hz)
    }
}

impl<F: Real> EmitterModel<F> {
    /// Builds a model from raw (mA, W) samples. Currents must be strictly
    /// increasing and powers non-negative and non-decreasing (LED-like,
    /// no threshold kink).
    pub fn new(
        li_table: Vec<(F, F)>,
        center_wavelength: Wavelength<F>,
        eo_cutoff_hz: F,
    ) -> Result<Self> {
        if li_table.len() < 2 {
            return Err(Error::InvalidLiTable("need at least two samples".into()));
        }
        if !(eo_cutoff_hz > F::zero()) {
            return Err(Error::InvalidRate(as_f64(eo_cutoff_hz)));
        }
        let mut table = Vec::with_capacity(li_table.len());
        for (i, &(current, power)) in li_table.iter().enumerate() {
            if i > 0 {
                let (prev_i, prev_p) = (li_table[i - 1].0, li_table[i - 1].1);
                if !(current > prev_i) {
                    return Err(Error::InvalidLiTable(format!(
                        "currents must be strictly increasing at row {i}"
                    )));
                }
                if power < prev_p {
                    return Err(Error::InvalidLiTable(format!(
                        "powers must be non-decreasing at row {i}"
                    )));
                }
            }
            table.push((current, OpticalPower::from_watts(power)?));
        }
        Ok(Self {
            li_table: table,
            center_wavelength,
            eo_cutoff_hz,
        })
    }

    pub fn center_wavelength(&self) -> Wavelength<F> {
        self.center_wavelength
    }

    pub fn eo_cutoff_hz(&self) -> F {
        self.eo_cutoff_hz
    }

    /// Highest current covered by the L–I table, mA.
    pub fn max_current_ma(&self) -> F {
        self.li_table.last().expect("non-empty table").0
    }

    /// Emitted optical power at the given drive current, by piecewise
    /// linear interpolation over the L–I table. Exact at table nodes.
    pub fn li_power(&self, current_ma: F) -> Result<OpticalPower<F>> {
        let max = self.max_current_ma();
        if !(current_ma >= self.li_table[0].0 && current_ma <= max) {
            return Err(Error::CurrentOutOfRange {
                current: as_f64(current_ma),
                max: as_f64(max),
            });
        }
        let idx = self
            .li_table
            .windows(2)
            .position(|w| current_ma <= w[1].0)
            .expect("current within table range");
        let (x0, p0) = self.li_table[idx];
        let (x1, p1) = self.li_table[idx + 1];
        let frac = (current_ma - x0) / (x1 - x0);
        let watts = p0.watts() + frac * (p1.watts() - p0.watts());
        OpticalPower::from_watts(watts)
    }

    /// Headroom of the emitted photon flux over the flux a QKD transmitter
    /// consumes at `symbol_rate` and mean photon number `mu_target`:
    /// `10·log₁₀(rate_emitted / (μ·R))` in dB.
    pub fn excess_budget_db(
        &self,
        current_ma: F,
        symbol_rate_hz: F,
        mu_target: MeanPhotonNumber<F>,
    ) -> Result<F> {
        if !(symbol_rate_hz > F::zero()) {
            return Err(Error::InvalidRate(as_f64(symbol_rate_hz)));
        }
        if !(mu_target.value() > F::zero()) {
            return Err(Error::NegativeMeanPhotons(as_f64(mu_target.value())));
        }
        let emitted = photon_rate(self.li_power(current_ma)?, self.center_wavelength);
        if emitted == F::zero() {
            return Err(Error::NoEmission);
        }
        let consumed = mu_target.value() * symbol_rate_hz;
        Ok(lit::<F>(10.0) * (emitted / consumed).log10())
    }

    /// First-order low-pass electro-optic response `1/√(1+(f/fc)²)`.
    pub fn eo_response(&self, f_hz: F) -> F {
        debug_assert!(f_hz >= F::zero());
        let x = f_hz / self.eo_cutoff_hz;
        (F::one() + x * x).sqrt().recip()
    }
}

/// Sinusoidal direct-modulation drive around a DC operating point.
#[derive(Debug, Clone, Copy)]
pub struct DriveWaveform<F: Real = f64> {
    /// DC operating point as a mean photon emission rate, photons/s.
    pub bias_rate: F,
    /// Modulation depth m ∈ [0, 1].
    pub modulation_depth: F,
    /// Drive frequency, Hz.
    pub frequency_hz: F,
}

impl<F: Real> DriveWaveform<F> {
    pub fn new(bias_rate: F, modulation_depth: F, frequency_hz: F) -> Result<Self> {
        if !(modulation_depth >= F::zero() && modulation_depth <= F::one()) {
            return Err(Error::ProbabilityDomain(as_f64(modulation_depth)));
        }
        if !(frequency_hz > F::zero()) {
            return Err(Error::InvalidRate(as_f64(frequency_hz)));
        }
        if bias_rate < F::zero() {
            return Err(Error::InvalidRate(as_f64(bias_rate)));
        }
        Ok(Self {
            bias_rate,
            modulation_depth,
            frequency_hz,
        })
    }
}

/// Instantaneous photon emission rate of the directly modulated emitter,
/// `R(t) = bias·(1 + m·|H(f)|·sin(2πft))`; never negative for m ≤ 1.
pub fn modulated_rate<F: Real>(waveform: &DriveWaveform<F>, model: &EmitterModel<F>, t: F) -> F {
    let response = model.eo_response(waveform.frequency_hz);
    let phase = lit::<F>(std::f64::consts::TAU) * waveform.frequency_hz * t;
    let rate = waveform.bias_rate
        * (F::one() + waveform.modulation_depth * response * phase.sin());
    rate.max(F::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mean_photons_per_symbol;
    use approx::assert_relative_eq;

    #[test]
    fn li_power_anchors() {
        let m = EmitterModel::default_model();
        assert_relative_eq!(
            m.li_power(46.0).unwrap().watts(),
            100e-12,
            max_relative = 1e-12
        );
        assert_eq!(m.li_power(0.0).unwrap().watts(), 0.0);
        // linear interpolation oracle at the midpoint
        assert_relative_eq!(
            m.li_power(23.0).unwrap().watts(),
            50e-12,
            max_relative = 1e-12
        );
    }

    #[test]
    fn li_power_out_of_range() {
        let m = EmitterModel::default_model();
        assert!(m.li_power(-1.0).is_err());
        assert!(m.li_power(46.1).is_err());
    }

    #[test]
    fn excess_budget_anchor() {
        // Emitted flux at 100 pW / 1547 nm is 7.788e8 photons/s; a 1 GHz
        // transmitter at μ = 0.1 consumes 1e8 photons/s: +8.914 dB headroom.
        let m = EmitterModel::default_model();
        let mu = MeanPhotonNumber::new(0.1).unwrap();
        let b = m.excess_budget_db(46.0, 1e9, mu).unwrap();
        assert_relative_eq!(b, 8.914, epsilon = 1e-3);
        let b100 = m.excess_budget_db(46.0, 100e6, mu).unwrap();
        assert_relative_eq!(b100, 18.914, epsilon = 1e-3);
    }

    #[test]
    fn excess_budget_zero_at_exact_match() {
        let m = EmitterModel::default_model();
        let rate = photon_rate(m.li_power(46.0).unwrap(), m.center_wavelength());
        let mu = mean_photons_per_symbol(m.li_power(46.0).unwrap(), m.center_wavelength(), 1e9)
            .unwrap();
        assert!(rate > 0.0);
        let b = m.excess_budget_db(46.0, 1e9, mu).unwrap();
        assert!(b.abs() < 1e-9);
    }

    #[test]
    fn excess_budget_rate_shift_property() {
        let m = EmitterModel::default_model();
        let mu = MeanPhotonNumber::new(0.1).unwrap();
        for &rate in &[1e6, 1e8, 1e9] {
            let a = m.excess_budget_db(46.0, rate, mu).unwrap();
            let b = m.excess_budget_db(46.0, rate / 10.0, mu).unwrap();
            assert_relative_eq!(b, a + 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_emission_is_error() {
        let m = EmitterModel::default_model();
        let mu = MeanPhotonNumber::new(0.1).unwrap();
        assert!(matches!(
            m.excess_budget_db(0.0, 1e9, mu),
            Err(Error::NoEmission)
        ));
    }

    #[test]
    fn eo_response_shape() {
        let m = EmitterModel::default_model();
        assert_eq!(m.eo_response(0.0), 1.0);
        // −3 dB point is 1/√2 of the DC response
        assert_relative_eq!(
            m.eo_response(10e6),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-5
        );
        assert_relative_eq!(m.eo_response(100e6), 0.09950, epsilon = 1e-5);
        // −3.01 dB at the corner
        let db = 20.0 * m.eo_response(10e6).log10();
        assert_relative_eq!(db, -3.01, epsilon = 0.01);
        // monotone non-increasing
        let mut prev = 1.0;
        for i in 0..100 {
            let r = m.eo_response(10f64.powf(4.0 + 0.05 * i as f64));
            assert!(r <= prev + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn modulated_rate_examples() {
        let m = EmitterModel::default_model();
        let flat = DriveWaveform::new(1e6, 0.0, 100e6).unwrap();
        assert_eq!(modulated_rate(&flat, &m, 0.123), 1e6);

        // far below the corner H ≈ 1, so the sine peak doubles the rate
        let slow = DriveWaveform::new(1e6, 1.0, 1e3).unwrap();
        let peak = modulated_rate(&slow, &m, 0.25e-3);
        assert_relative_eq!(peak, 2e6, max_relative = 0.01);

        // the average over one period is the bias rate
        let w = DriveWaveform::new(1e6, 0.8, 1e6).unwrap();
        let n = 10_000;
        let period = 1.0 / w.frequency_hz;
        let mean: f64 = (0..n)
            .map(|i| modulated_rate(&w, &m, period * i as f64 / n as f64))
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(mean, 1e6, max_relative = 1e-6);

        // never negative anywhere in the cycle at full depth
        let full = DriveWaveform::new(1e6, 1.0, 1e5).unwrap();
        for i in 0..1000 {
            let t = i as f64 / 1e8;
            assert!(modulated_rate(&full, &m, t) >= 0.0);
        }
    }

    #[test]
    fn csv_load_and_validation() {
        let csv = "current_ma,power_w\n0,0\n10,2e-11\n46,1e-10\n";
        let m = EmitterModel::from_li_csv(
            csv.as_bytes(),
            Wavelength::from_nanometers(1547.0).unwrap(),
            10e6,
        )
        .unwrap();
        assert_relative_eq!(m.li_power(10.0).unwrap().watts(), 2e-11);
        assert_eq!(m.max_current_ma(), 46.0);

        let bad = "current_ma,power_w\n10,2e-11\n5,1e-11\n";
        assert!(EmitterModel::from_li_csv(
            bad.as_bytes(),
            Wavelength::from_nanometers(1547.0).unwrap(),
            10e6
        )
        .is_err());

        let decreasing_power = "current_ma,power_w\n0,1e-11\n10,5e-12\n";
        assert!(EmitterModel::from_li_csv(
            decreasing_power.as_bytes(),
            Wavelength::from_nanometers(1547.0).unwrap(),
            10e6
        )
        .is_err());
    }

    #[test]
    fn li_monotone_under_interpolation() {
        let m = EmitterModel::new(
            vec![(0.0, 0.0), (5.0, 1e-12), (20.0, 4e-11), (46.0, 1e-10)],
            Wavelength::from_nanometers(1547.0).unwrap(),
            10e6,
        )
        .unwrap();
        let mut prev = -1.0;
        for i in 0..=460 {
            let w = m.li_power(i as f64 / 10.0).unwrap().watts();
            assert!(w >= prev);
            prev = w;
        }
    }
}
