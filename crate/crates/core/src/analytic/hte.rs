//! Second-order high-temperature expansion in `τ = tanh(βJ)`.
//!
//! Writing `e^{-igtZ_n} = cosⁿ(gt) Π (1 - i T σ_m)` with `T = tan(gt)` and
//! keeping bond products up to `τ²`,
//!
//! ```text
//! r = cosⁿ(gt) [1 - τ T² K12 - τ² T² (K22 + K23) + τ² T⁴ K24]
//! ```
//!
//! The expansion is real, so `Im r = 0` identically.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{BondCounts, ThermoParams};
use crate::spectrum::Decoherence;
use crate::{Error, Result};

/// Default upper end of `βJ` beyond which results are flagged as extrapolated.
pub const DEFAULT_GUARD: f64 = 0.25;

/// Grid points closer than this (in `gt`) to a pole of `tan(gt)` are rejected.
pub const POLE_EXCLUSION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HteModel {
    pub params: ThermoParams,
    pub counts: BondCounts,
    pub cluster_size: usize,
    guard: f64,
}

impl HteModel {
    pub fn new(params: ThermoParams, counts: BondCounts, cluster_size: usize) -> Result<Self> {
        params.validate()?;
        if params.field != 0.0 {
            return Err(Error::FieldNotSupported);
        }
        Ok(HteModel {
            params,
            counts,
            cluster_size,
            guard: DEFAULT_GUARD,
        })
    }

    pub fn with_guard(self, guard: f64) -> Self {
        HteModel { guard, ..self }
    }

    /// `βJ` exceeds the validity guard.
    pub fn extrapolated(&self) -> bool {
        self.params.beta * self.params.coupling > self.guard
    }

    /// `(cos gt, tan gt)`, rejecting times on a pole.
    fn trig(&self, t: f64) -> Result<(f64, f64)> {
        let gt = self.params.probe_rate * t;
        let off = num_traits::Euclid::rem_euclid(&(gt - core::f64::consts::FRAC_PI_2), &core::f64::consts::PI);
        if off < POLE_EXCLUSION || core::f64::consts::PI - off < POLE_EXCLUSION {
            return Err(Error::TangentPole(t));
        }
        Ok((gt.cos(), gt.tan()))
    }

    /// High-temperature QFI in the compact form obtained with `tanh βJ ≈ βJ`:
    ///
    /// ```text
    /// F = J² Λ² T⁴ cos²ⁿ / (1 - [Jβ Λ T² - 1]² cos²ⁿ)
    /// Λ = K12 + 2Jβ (K22 + K23 - K24 T²)
    /// ```
    ///
    /// Fails with [`Error::OutsideDomain`] when the denominator is not positive.
    pub fn compact_qfi(&self, t: f64) -> Result<f64> {
        let (c, tan) = self.trig(t)?;
        let j = self.params.coupling;
        let jb = j * self.params.beta;
        let k = &self.counts;
        let t2 = tan * tan;
        let lambda = k.intra as f64 + 2.0 * jb * ((k.bridged + k.adjacent) as f64 - k.disjoint as f64 * t2);
        let c2n = c.powi(2 * self.cluster_size as i32);
        let numerator = j * j * lambda * lambda * t2 * t2 * c2n;
        if numerator == 0.0 {
            return Ok(0.0);
        }
        let shifted = jb * lambda * t2 - 1.0;
        let denominator = 1.0 - shifted * shifted * c2n;
        if !(denominator > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok(numerator / denominator)
    }
}

impl Decoherence for HteModel {
    fn factor(&self, t: f64) -> Result<(Complex64, Complex64)> {
        let (c, tan) = self.trig(t)?;
        let k = &self.counts;
        let tau = (self.params.beta * self.params.coupling).tanh();
        let t2 = tan * tan;
        let pair = (k.bridged + k.adjacent) as f64;
        let k12 = k.intra as f64;
        let k24 = k.disjoint as f64;
        let cn = c.powi(self.cluster_size as i32);
        let bracket = 1.0 - tau * t2 * k12 - tau * tau * t2 * pair + tau * tau * t2 * t2 * k24;
        // ∂_β τ = J (1 - τ²)
        let dtau = self.params.coupling * (1.0 - tau * tau);
        let dbracket = dtau * (-t2 * k12 - 2.0 * tau * t2 * pair + 2.0 * tau * t2 * t2 * k24);
        Ok((Complex64::new(cn * bracket, 0.0), Complex64::new(cn * dbracket, 0.0)))
    }

    fn rate(&self) -> f64 {
        self.params.probe_rate
    }

    /// `r` is real and symmetric about `gt = π/2`, where `tan` has its pole.
    fn time_window(&self) -> f64 {
        0.999 * core::f64::consts::FRAC_PI_2 / self.params.probe_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts() -> BondCounts {
        BondCounts {
            bonds: 800,
            intra: 16,
            bridged: 8,
            adjacent: 34,
            disjoint: 86,
        }
    }

    #[test]
    fn infinite_temperature() {
        let m = HteModel::new(ThermoParams::new(0.25, 0.0, 0.1), counts(), 13).unwrap();
        for t in [0.0, 1.0, 7.0] {
            let (r, dr) = m.factor(t).unwrap();
            assert!((r.re - (0.1 * t).cos().powi(13)).abs() < 1e-15);
            let expect = -(0.1 * t).tan().powi(2) * (0.1 * t).cos().powi(13) * 0.25 * 16.0;
            assert!((dr.re - expect).abs() < 1e-15);
            assert_eq!(r.im, 0.0);
        }
    }

    #[test]
    fn pole_rejected() {
        let m = HteModel::new(ThermoParams::new(0.25, 0.1, 1.0), counts(), 13).unwrap();
        let t = core::f64::consts::FRAC_PI_2;
        assert_eq!(m.factor(t), Err(Error::TangentPole(t)));
        assert!(m.factor(t + 1e-3).is_ok());
    }

    #[test]
    fn compact_form_vanishes_at_zero() {
        let m = HteModel::new(ThermoParams::new(0.25, 0.2, 0.1), counts(), 13).unwrap();
        assert_eq!(m.compact_qfi(0.0).unwrap(), 0.0);
        assert!(!m.extrapolated());
        assert!(m.with_guard(0.01).extrapolated());
    }
}
