//! Unit-safe photonics arithmetic: power and photon-number conversions,
//! binary entropy and the asymptotic BB84 secret fraction.
//!
//! All quantities are newtypes over a [`Real`] scalar so that the same
//! formulas run at `f32` or `f64`; the simulation pipeline uses the `f64`
//! aliases exported from the crate root.

use crate::error::{Error, Result};
use crate::real::{as_f64, lit, Real};

/// Planck constant times speed of light, J·m (CODATA-rounded).
///
/// Fixed here so every derived number in the test oracles is reproducible.
pub const HC: f64 = 1.98645e-25;

/// Optical power, stored in watts, always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OpticalPower<F: Real = f64> {
    watts: F,
}

impl<F: Real> OpticalPower<F> {
    /// Wraps a power in watts. Negative values are rejected.
    pub fn from_watts(watts: F) -> Result<Self> {
        if watts < F::zero() || !watts.is_finite() {
            return Err(Error::NegativePower(as_f64(watts)));
        }
        Ok(Self { watts })
    }

    pub fn zero() -> Self {
        Self { watts: F::zero() }
    }

    /// Converts from dBm: `1e-3 * 10^(dbm/10)` watts. Total on finite input.
    pub fn from_dbm(dbm: F) -> Self {
        assert!(dbm.is_finite(), "dBm value must be finite");
        Self {
            watts: lit::<F>(1e-3) * lit::<F>(10.0).powf(dbm / lit(10.0)),
        }
    }

    pub fn watts(&self) -> F {
        self.watts
    }

    /// Power in dBm. Undefined (error) at exactly 0 W.
    pub fn dbm(&self) -> Result<F> {
        if self.watts == F::zero() {
            return Err(Error::ZeroPowerDbm);
        }
        Ok(lit::<F>(10.0) * (self.watts / lit(1e-3)).log10())
    }
}

/// Vacuum wavelength in meters, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavelength<F: Real = f64> {
    meters: F,
}

impl<F: Real> Wavelength<F> {
    pub fn from_meters(meters: F) -> Result<Self> {
        if !(meters > F::zero()) || !meters.is_finite() {
            return Err(Error::InvalidWavelength(as_f64(meters)));
        }
        Ok(Self { meters })
    }

    pub fn from_nanometers(nm: F) -> Result<Self> {
        Self::from_meters(nm * lit(1e-9))
    }

    pub fn meters(&self) -> F {
        self.meters
    }

    /// Photon energy `hc/λ` in joules; positive by construction.
    pub fn photon_energy(&self) -> F {
        lit::<F>(HC) / self.meters
    }
}

/// Mean photon number per symbol, non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MeanPhotonNumber<F: Real = f64> {
    value: F,
}

impl<F: Real> MeanPhotonNumber<F> {
    pub fn new(value: F) -> Result<Self> {
        if value < F::zero() || !value.is_finite() {
            return Err(Error::NegativeMeanPhotons(as_f64(value)));
        }
        Ok(Self { value })
    }

    pub fn value(&self) -> F {
        self.value
    }
}

/// dBm → watts conversion as a free function: `1e-3 · 10^(p/10)`.
pub fn dbm_to_watts<F: Real>(dbm: F) -> OpticalPower<F> {
    OpticalPower::from_dbm(dbm)
}

/// Photon flux `p / (hc/λ)` in photons per second.
///
/// Invalid wavelengths are unrepresentable: [`Wavelength`] enforces λ > 0
/// at construction, so this operation is total.
pub fn photon_rate<F: Real>(power: OpticalPower<F>, lambda: Wavelength<F>) -> F {
    power.watts() / lambda.photon_energy()
}

/// Inverse of [`photon_rate`]: the optical power carrying `rate` photons/s.
pub fn power_from_rate<F: Real>(rate: F, lambda: Wavelength<F>) -> Result<OpticalPower<F>> {
    OpticalPower::from_watts(rate * lambda.photon_energy())
}

/// Mean photon number per symbol at the given symbol rate.
pub fn mean_photons_per_symbol<F: Real>(
    power: OpticalPower<F>,
    lambda: Wavelength<F>,
    symbol_rate: F,
) -> Result<MeanPhotonNumber<F>> {
    if !(symbol_rate > F::zero()) || !symbol_rate.is_finite() {
        return Err(Error::InvalidRate(as_f64(symbol_rate)));
    }
    MeanPhotonNumber::new(photon_rate(power, lambda) / symbol_rate)
}

/// Binary entropy `h(x) = −x·log₂x − (1−x)·log₂(1−x)` in bits.
///
/// `h(0)` and `h(1)` are 0 by continuity.
pub fn binary_entropy<F: Real>(x: F) -> Result<F> {
    if !(x >= F::zero() && x <= F::one()) {
        return Err(Error::ProbabilityDomain(as_f64(x)));
    }
    if x == F::zero() || x == F::one() {
        return Ok(F::zero());
    }
    let one = F::one();
    Ok(-(x * x.log2()) - (one - x) * (one - x).log2())
}

/// Asymptotic one-way BB84 secret fraction `max(0, 1 − 2·h(q))`.
///
/// Negative rates mean "no key" and are clamped to zero; the clamp root
/// sits at q ≈ 0.110028, the usual 11 % abort threshold.
pub fn secret_fraction<F: Real>(q: F) -> Result<F> {
    if !(q >= F::zero() && q <= lit(0.5)) {
        return Err(Error::QberDomain(as_f64(q)));
    }
    let raw = F::one() - lit::<F>(2.0) * binary_entropy(q)?;
    Ok(raw.max(F::zero()))
}

/// QBER at which the secret fraction reaches zero, found by bisecting
/// `1 − 2·h(q)` on (0, 0.5) to 1e-6 absolute.
pub fn qber_threshold<F: Real>() -> F {
    let mut lo = lit::<F>(1e-9);
    let mut hi = lit::<F>(0.5) - lit(1e-9);
    let tol = lit::<F>(1e-6);
    while hi - lo > tol {
        let mid = (lo + hi) / lit(2.0);
        let rate = F::one() - lit::<F>(2.0) * binary_entropy(mid).expect("mid in domain");
        if rate > F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / lit(2.0)
}
