//! Decoherence factors as characteristic functions.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::probe::DecoherenceSeries;
use crate::sum::CompensatedSum;
use crate::{Error, Result};

/// Anything that yields the decoherence factor `r(t, β)` and its
/// inverse-temperature derivative `∂_β r(t, β)` at a time `t`.
pub trait Decoherence {
    fn factor(&self, t: f64) -> Result<(Complex64, Complex64)>;

    /// Probe coupling rate `g`; sets the natural time unit.
    fn rate(&self) -> f64;

    /// Longest interrogation time worth scanning. Beyond it the QFI repeats
    /// or the model stops being meaningful.
    fn time_window(&self) -> f64 {
        core::f64::consts::PI / self.rate()
    }

    /// Samples the factor on a time grid. Analytic sources carry zero errors.
    fn series(&self, times: &[f64]) -> Result<DecoherenceSeries> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut r = Vec::with_capacity(times.len());
        let mut dr = Vec::with_capacity(times.len());
        for &t in times {
            let (a, b) = self.factor(t)?;
            r.push(a);
            dr.push(b);
        }
        Ok(DecoherenceSeries::exact(times.to_vec(), r, dr))
    }
}

/// Distribution of an integer-valued coupled charge `Z` (cluster
/// magnetization, or total magnetization for the Curie-Weiss model),
/// together with the energy-weighted companion `Σ_{b: Z(b)=z} E(b) p(b)`.
///
/// Then `r(t) = Σ_z p_z e^{-i g t z}` and, differentiating the Gibbs
/// weights, `∂_β r(t) = -Σ_z A_z e^{-i g t z} + ⟨H⟩ r(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeSpectrum {
    rate: f64,
    /// Charge of entry 0; entries step by one.
    min_charge: i64,
    prob: Vec<f64>,
    energy_weighted: Vec<f64>,
    mean_energy: f64,
}

impl ChargeSpectrum {
    /// Spectrum over charges `-max_charge ..= max_charge`.
    pub fn new(rate: f64, max_charge: i64, prob: Vec<f64>, energy_weighted: Vec<f64>, mean_energy: f64) -> Self {
        assert_eq!(prob.len(), (2 * max_charge + 1) as usize);
        assert_eq!(energy_weighted.len(), prob.len());
        ChargeSpectrum {
            rate,
            min_charge: -max_charge,
            prob,
            energy_weighted,
            mean_energy,
        }
    }

    pub fn max_charge(&self) -> i64 {
        -self.min_charge
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn energy_weighted(&self) -> &[f64] {
        &self.energy_weighted
    }

    pub fn mean_energy(&self) -> f64 {
        self.mean_energy
    }

    /// `⟨Z⟩`.
    pub fn mean_charge(&self) -> f64 {
        crate::sum::sum(
            self.prob
                .iter()
                .enumerate()
                .map(|(k, &p)| p * (k as i64 + self.min_charge) as f64),
        )
    }

    /// `Σ_z w_z e^{-i g t z}`, pairing `±z` so that a mirror-symmetric
    /// weight vector gives an imaginary part of exactly zero.
    fn transform(&self, weights: &[f64], t: f64) -> Complex64 {
        let zmax = self.max_charge();
        let centre = zmax as usize;
        let phase = self.rate * t;
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(weights[centre]);
        for z in 1..=zmax {
            let (s, c) = (phase * z as f64).sin_cos();
            let plus = weights[centre + z as usize];
            let minus = weights[centre - z as usize];
            re.add((plus + minus) * c);
            // e^{-iθz}: the +z term contributes -sin, the -z term +sin
            im.add((minus - plus) * s);
        }
        Complex64::new(re.value(), im.value())
    }
}

impl Decoherence for ChargeSpectrum {
    fn factor(&self, t: f64) -> Result<(Complex64, Complex64)> {
        let r = self.transform(&self.prob, t);
        let a = self.transform(&self.energy_weighted, t);
        Ok((r, -a + r * self.mean_energy))
    }

    fn rate(&self) -> f64 {
        self.rate
    }

    /// `r` is `2π/g`-periodic, and `F(π/g - t) = F(t)` once all charges share
    /// one parity, so the window halves to `π/(2g)` in that case.
    fn time_window(&self) -> f64 {
        let period = core::f64::consts::PI / self.rate;
        let mut parities = self
            .prob
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, _)| (k as i64 + self.min_charge).rem_euclid(2));
        let first = parities.next();
        if parities.all(|q| Some(q) == first) {
            0.5 * period
        } else {
            period
        }
    }
}
