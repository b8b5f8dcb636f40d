//! Exact Gibbs state by exhaustive enumeration of all `2^N` configurations.
//!
//! Configurations are indexed by the integer whose bit `i` is `b_i`. They
//! are visited in Gray-code order, so consecutive configurations differ in
//! one spin and the bond sum updates in `O(1)`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{ClusterSpec, Lattice, ThermoParams};
use crate::marginal::ClusterMarginal;
use crate::probe::DecoherenceSeries;
use crate::spectrum::{ChargeSpectrum, Decoherence};
use crate::sum::CompensatedSum;
use crate::{Error, Result};

/// Default hard cap on the number of enumerated spins.
pub const ENUMERATION_CAP: usize = 24;

/// Gibbs distribution of a small lattice, held as per-configuration bond
/// sums and magnetizations so any Boltzmann-weighted average is one pass.
#[derive(Clone, Debug)]
pub struct ExactGibbs {
    sites: usize,
    params: ThermoParams,
    bond_sum: Vec<i8>,
    magnetization: Vec<i8>,
    log_z: f64,
    mean_energy: f64,
}

/// Enumerates the Gibbs state of `lattice` with the default spin cap.
pub fn enumerate_gibbs(lattice: &Lattice, params: &ThermoParams) -> Result<ExactGibbs> {
    enumerate_gibbs_capped(lattice, params, ENUMERATION_CAP)
}

pub fn enumerate_gibbs_capped(lattice: &Lattice, params: &ThermoParams, cap: usize) -> Result<ExactGibbs> {
    params.validate()?;
    let sites = lattice.num_sites();
    let cap = cap.min(ENUMERATION_CAP);
    if sites > cap {
        return Err(Error::EnumerationTooLarge { sites, cap });
    }
    let count = 1usize << sites;
    let mut bond_sum = vec![0i8; count];
    let mut magnetization = vec![0i8; count];

    let mut bits = vec![0u8; sites];
    let mut bonds = lattice.bond_sum_unchecked(&bits);
    let mut mag = sites as i64;
    let mut index = 0usize;
    bond_sum[0] = bonds as i8;
    magnetization[0] = mag as i8;
    for k in 1..count {
        let site = k.trailing_zeros() as usize;
        // Flipping σ changes Σσσ by -2σ Σ_nb σ_nb and M by -2σ.
        let s = 1 - 2 * bits[site] as i64;
        bonds -= 2 * s * lattice.local_field_sum(&bits, site) as i64;
        mag -= 2 * s;
        bits[site] ^= 1;
        index ^= 1 << site;
        bond_sum[index] = bonds as i8;
        magnetization[index] = mag as i8;
    }

    let mut gibbs = ExactGibbs {
        sites,
        params: *params,
        bond_sum,
        magnetization,
        log_z: 0.0,
        mean_energy: 0.0,
    };
    let max_lw = (0..count).map(|i| gibbs.log_weight(i)).fold(f64::NEG_INFINITY, f64::max);
    let mut z = CompensatedSum::new();
    let mut ez = CompensatedSum::new();
    for i in 0..count {
        let w = (gibbs.log_weight(i) - max_lw).exp();
        z.add(w);
        ez.add(w * gibbs.energy(i));
    }
    gibbs.log_z = max_lw + z.value().ln();
    gibbs.mean_energy = ez.value() / z.value();
    Ok(gibbs)
}

impl ExactGibbs {
    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn params(&self) -> &ThermoParams {
        &self.params
    }

    pub fn num_configs(&self) -> usize {
        self.bond_sum.len()
    }

    /// `ln Z`, finite for every `β ≥ 0`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `Z` itself; overflows to infinity for large `β N J`.
    pub fn partition_function(&self) -> f64 {
        self.log_z.exp()
    }

    /// `⟨H⟩`.
    pub fn mean_energy(&self) -> f64 {
        self.mean_energy
    }

    /// `E(b)` of the configuration with the given index.
    #[inline]
    pub fn energy(&self, index: usize) -> f64 {
        -self.params.coupling * self.bond_sum[index] as f64 - self.params.field * self.magnetization[index] as f64
    }

    #[inline]
    fn log_weight(&self, index: usize) -> f64 {
        -self.params.beta * self.energy(index)
    }

    /// `p(b) = e^{-βE(b)} / Z`.
    #[inline]
    pub fn probability(&self, index: usize) -> f64 {
        (self.log_weight(index) - self.log_z).exp()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.num_configs()).map(|i| self.probability(i)).collect()
    }

    /// Total magnetization of the configuration with the given index.
    pub fn magnetization(&self, index: usize) -> i64 {
        self.magnetization[index] as i64
    }

    fn cluster_mask(&self, cluster: &ClusterSpec) -> Result<u64> {
        let mut mask = 0u64;
        for &s in cluster.sites() {
            if s as usize >= self.sites {
                return Err(Error::SiteOutOfRange {
                    site: s as usize,
                    sites: self.sites,
                });
            }
            mask |= 1 << s;
        }
        Ok(mask)
    }
}

/// Distribution of the cluster charge `Z_n` with its energy-weighted companion.
pub fn exact_spectrum(gibbs: &ExactGibbs, cluster: &ClusterSpec) -> Result<ChargeSpectrum> {
    let mask = gibbs.cluster_mask(cluster)?;
    let n = cluster.len();
    let mut prob = vec![CompensatedSum::new(); 2 * n + 1];
    let mut weighted = vec![CompensatedSum::new(); 2 * n + 1];
    for i in 0..gibbs.num_configs() {
        let down = (i as u64 & mask).count_ones() as usize;
        // Z_n = n - 2 down, stored at offset Z_n + n
        let slot = 2 * (n - down);
        let p = gibbs.probability(i);
        prob[slot].add(p);
        weighted[slot].add(p * gibbs.energy(i));
    }
    Ok(ChargeSpectrum::new(
        gibbs.params.probe_rate,
        n as i64,
        prob.iter().map(|s| s.value()).collect(),
        weighted.iter().map(|s| s.value()).collect(),
        gibbs.mean_energy,
    ))
}

/// `r(t)` and `∂_β r(t)` for a cluster, exact on every grid time.
pub fn exact_decoherence(gibbs: &ExactGibbs, cluster: &ClusterSpec, times: &[f64]) -> Result<DecoherenceSeries> {
    exact_spectrum(gibbs, cluster)?.series(times)
}

/// Marginal `p_n(b′)` over the cluster sites and its energy-weighted companion.
pub fn exact_cluster_marginal(gibbs: &ExactGibbs, cluster: &ClusterSpec) -> Result<ClusterMarginal> {
    gibbs.cluster_mask(cluster)?;
    let n = cluster.len();
    let mut prob = vec![CompensatedSum::new(); 1 << n];
    let mut weighted = vec![CompensatedSum::new(); 1 << n];
    for i in 0..gibbs.num_configs() {
        let key = cluster
            .sites()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &s)| acc | (((i >> s) & 1) << k));
        let p = gibbs.probability(i);
        prob[key].add(p);
        weighted[key].add(p * gibbs.energy(i));
    }
    let mut marginal = ClusterMarginal::new(n);
    for key in 0..(1 << n) {
        marginal.add(key as u64, prob[key].value(), weighted[key].value());
    }
    Ok(marginal)
}
