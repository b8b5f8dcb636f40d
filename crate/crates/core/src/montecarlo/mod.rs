//! Thermal sampling of the zero-field square lattice.
//!
//! A [`Sampler`] runs one Markov chain (Metropolis or Wolff) and records,
//! per block of measurements, integer histograms of the cluster charges,
//! the cluster configurations and the total bond sum. All estimators are
//! functions of these histograms:
//!
//! * `r̂(t)` is the empirical characteristic function of `Z_n`,
//! * `∂̂_β r(t) = -⟨E e^{-igtZ_n}⟩ + ⟨E⟩ r̂(t)` (the covariance estimator
//!   obtained by differentiating the Gibbs weights),
//! * the local Fisher information is evaluated on the empirical marginal.
//!
//! Standard errors come from a delete-one-block jackknife, which also
//! covers nonlinear functionals such as the QFI and its maximum over time.

mod accumulate;
pub mod checkpoint;
mod update;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use accumulate::{BlockCounts, ClusterCounts, MarginalCounts, DENSE_MARGINAL_LIMIT};
pub use update::{metropolis_sweep, wolff_add_probability, wolff_step};

use crate::lattice::{ClusterSpec, Lattice, ThermoParams};
use crate::marginal::ClusterMarginal;
use crate::probe::{optimize_qfi, qfi_from_r, DecoherenceSeries, QfiCurve};
use crate::spectrum::{ChargeSpectrum, Decoherence};
use crate::{onsager_beta_c, Error, Estimate, Result};
use update::{metropolis_sweep_bits, wolff_step_bits, AcceptanceTable, WolffScratch};

/// Default number of jackknife blocks.
pub const DEFAULT_BLOCKS: usize = 32;

/// Default largest cluster whose configuration marginal is recorded.
pub const DEFAULT_MARGINAL_CAP: usize = 13;

/// Within this relative distance of `β_c` the automatic choice is Wolff.
pub const WOLFF_WINDOW: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Sequential single-spin sweeps. Periodic at `β = 0`, where every
    /// proposal is accepted, so that case is rejected.
    Metropolis,
    Wolff,
    /// Wolff when `|β/β_c - 1| < 0.2` or `β = 0`, Metropolis otherwise.
    Auto,
}

impl Algorithm {
    /// Replaces `Auto` by a concrete choice for these parameters.
    pub fn resolve(self, params: &ThermoParams) -> Algorithm {
        match self {
            Algorithm::Auto if params.beta * params.coupling == 0.0 => Algorithm::Wolff,
            Algorithm::Auto => {
                let ratio = params.beta / onsager_beta_c(params.coupling);
                if (ratio - 1.0).abs() < WOLFF_WINDOW {
                    Algorithm::Wolff
                } else {
                    Algorithm::Metropolis
                }
            }
            other => other,
        }
    }
}

/// Chain settings.
///
/// `sweeps` counts every sweep including the `burn_in` ones; a measurement
/// is taken every `thinning` sweeps after burn-in.
///
/// For Wolff, a sweep is a fixed number of cluster flips that together flip
/// about `N` spins on average. The count is calibrated from the mean cluster
/// size over the burn-in sweeps (which flip until at least `N` spins have
/// turned) and then frozen: stopping at a spin-count threshold would tie the
/// measurement times to the cluster sizes and bias every estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    /// ChaCha stream; independent chains share a seed and differ here.
    pub stream: u64,
    /// Record every sample together with its global spin flip.
    pub symmetrize: bool,
    pub blocks: usize,
    pub marginal_cap: usize,
}

impl SamplerConfig {
    /// `sweeps` total sweeps with a tenth of them as burn-in.
    pub fn new(sweeps: u64, seed: u64) -> Self {
        SamplerConfig {
            algorithm: Algorithm::Auto,
            sweeps,
            burn_in: sweeps / 10,
            thinning: 1,
            seed,
            stream: 0,
            symmetrize: false,
            blocks: DEFAULT_BLOCKS,
            marginal_cap: DEFAULT_MARGINAL_CAP,
        }
    }

    pub fn with_algorithm(self, algorithm: Algorithm) -> Self {
        SamplerConfig { algorithm, ..self }
    }

    pub fn with_burn_in(self, burn_in: u64) -> Self {
        SamplerConfig { burn_in, ..self }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        SamplerConfig { stream, ..self }
    }

    pub fn with_symmetrize(self, symmetrize: bool) -> Self {
        SamplerConfig { symmetrize, ..self }
    }

    pub fn with_blocks(self, blocks: usize) -> Self {
        SamplerConfig { blocks, ..self }
    }

    pub fn with_marginal_cap(self, marginal_cap: usize) -> Self {
        SamplerConfig { marginal_cap, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter("sweeps must be positive"));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1"));
        }
        if self.blocks == 0 {
            return Err(Error::InvalidParameter("at least one block is required"));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::BurnInTooLong {
                burn_in: self.burn_in,
                sweeps: self.sweeps,
            });
        }
        if self.measurements() == 0 {
            return Err(Error::NoMeasurements);
        }
        Ok(())
    }

    /// Number of measured sweeps.
    pub fn measurements(&self) -> u64 {
        (self.sweeps - self.burn_in.min(self.sweeps)) / self.thinning.max(1)
    }

    /// Blocks actually used: never more than there are measurements.
    pub fn effective_blocks(&self) -> usize {
        (self.blocks as u64).min(self.measurements()).max(1) as usize
    }
}

/// A resumable Markov chain on the lattice.
#[derive(Clone, Debug)]
pub struct Sampler {
    lattice: Lattice,
    clusters: Vec<ClusterSpec>,
    params: ThermoParams,
    config: SamplerConfig,
    rng: ChaCha8Rng,
    bits: Vec<u8>,
    bonds: i64,
    magnetization: i64,
    sweeps_done: u64,
    measurements_done: u64,
    wolff: WolffCalibration,
    blocks: Vec<BlockCounts>,
    table: AcceptanceTable,
    p_add: f64,
    scratch: WolffScratch,
}

impl Sampler {
    /// Starts a chain from the all-up configuration.
    pub fn new(lattice: &Lattice, clusters: &[ClusterSpec], params: &ThermoParams, config: &SamplerConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        if params.field != 0.0 {
            return Err(Error::FieldNotSupported);
        }
        for c in clusters {
            if let Some(&s) = c.sites().iter().find(|&&s| s as usize >= lattice.num_sites()) {
                return Err(Error::SiteOutOfRange {
                    site: s as usize,
                    sites: lattice.num_sites(),
                });
            }
        }
        let mut config = *config;
        config.algorithm = config.algorithm.resolve(params);
        if config.algorithm == Algorithm::Metropolis && params.beta * params.coupling == 0.0 {
            return Err(Error::InvalidParameter("Metropolis sweeps are periodic at β = 0; use Wolff"));
        }
        let sizes: Vec<usize> = clusters.iter().map(|c| c.len()).collect();
        let blocks = (0..config.effective_blocks())
            .map(|_| BlockCounts::new(lattice.num_sites(), &sizes, config.marginal_cap))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(config.stream);
        let bits = vec![0u8; lattice.num_sites()];
        Ok(Sampler {
            bonds: lattice.bond_sum_unchecked(&bits),
            magnetization: lattice.num_sites() as i64,
            lattice: lattice.clone(),
            clusters: clusters.to_vec(),
            params: *params,
            config,
            rng,
            bits,
            sweeps_done: 0,
            measurements_done: 0,
            wolff: WolffCalibration::default(),
            blocks,
            table: AcceptanceTable::new(params),
            p_add: wolff_add_probability(params),
            scratch: WolffScratch::default(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn is_done(&self) -> bool {
        self.sweeps_done >= self.config.sweeps
    }

    /// Runs up to `max_sweeps` more sweeps; returns `true` once the chain is complete.
    pub fn advance(&mut self, max_sweeps: u64) -> bool {
        let stop = self.config.sweeps.min(self.sweeps_done.saturating_add(max_sweeps));
        while self.sweeps_done < stop {
            self.sweep();
            self.sweeps_done += 1;
            if self.sweeps_done > self.config.burn_in && (self.sweeps_done - self.config.burn_in) % self.config.thinning == 0 {
                self.measure();
            }
        }
        self.is_done()
    }

    fn sweep(&mut self) {
        match self.config.algorithm {
            Algorithm::Wolff => {
                let n = self.bits.len();
                let step = |s: &mut Self| wolff_step_bits(&s.lattice, &mut s.bits, s.p_add, &mut s.scratch, &mut s.rng);
                if self.wolff.steps_per_sweep == 0 {
                    let mut flipped = 0;
                    while flipped < n {
                        flipped += step(self);
                        self.wolff.steps += 1;
                    }
                    self.wolff.flipped += flipped as u64;
                    if self.sweeps_done + 1 >= self.config.burn_in.max(1) {
                        self.wolff.freeze(n);
                    }
                } else {
                    for _ in 0..self.wolff.steps_per_sweep {
                        step(self);
                    }
                }
                self.bonds = self.lattice.bond_sum_unchecked(&self.bits);
                let down = self.bits.iter().map(|&b| b as i64).sum::<i64>();
                self.magnetization = n as i64 - 2 * down;
            }
            _ => {
                let (db, dm) = metropolis_sweep_bits(&self.lattice, &mut self.bits, &self.table, &mut self.rng);
                self.bonds += db;
                self.magnetization += dm;
            }
        }
    }

    fn measure(&mut self) {
        let total = self.config.measurements();
        if self.measurements_done >= total {
            return;
        }
        let block = (self.measurements_done as u128 * self.blocks.len() as u128 / total as u128) as usize;
        let acc = &mut self.blocks[block];
        acc.record_global(self.bonds, self.magnetization);
        if self.config.symmetrize {
            acc.record_global(self.bonds, -self.magnetization);
        }
        for (c, counts) in self.clusters.iter().zip(acc.clusters.iter_mut()) {
            let z = c.magnetization_of(&self.bits);
            let key = if counts.marginal.is_some() { c.key_of(&self.bits) } else { 0 };
            counts.record(z, key, self.bonds);
            if self.config.symmetrize {
                counts.record(-z, key ^ c.key_mask(), self.bonds);
            }
        }
        self.measurements_done += 1;
    }

    /// Runs the chain to completion.
    pub fn run(mut self) -> SampleStats {
        self.advance(u64::MAX);
        self.finish()
    }

    /// Statistics of everything measured so far.
    pub fn finish(self) -> SampleStats {
        SampleStats::from_blocks(self.params, self.clusters.iter().map(|c| c.len()).collect(), self.blocks, self.config)
    }

    /// Snapshot from which [`Sampler::restore`] continues bit-identically.
    pub fn state(&self) -> checkpoint::SamplerState {
        checkpoint::SamplerState {
            config: self.config,
            params: self.params,
            side: self.lattice.side(),
            clusters: self.clusters.iter().map(|c| (c.center(), c.radius())).collect(),
            bits: self.bits.clone(),
            sweeps_done: self.sweeps_done,
            measurements_done: self.measurements_done,
            wolff: self.wolff,
            rng_seed: self.rng.get_seed(),
            rng_stream: self.rng.get_stream(),
            rng_word_pos: self.rng.get_word_pos(),
            blocks: self.blocks.clone(),
        }
    }

    /// Rebuilds a chain from a snapshot. The lattice, clusters and parameters
    /// must be the ones the snapshot was taken with.
    pub fn restore(
        lattice: &Lattice,
        clusters: &[ClusterSpec],
        params: &ThermoParams,
        state: checkpoint::SamplerState,
    ) -> Result<Self> {
        let same_clusters = state.clusters.len() == clusters.len()
            && state
                .clusters
                .iter()
                .zip(clusters)
                .all(|(&(center, radius), c)| center == c.center() && radius == c.radius());
        if state.side != lattice.side()
            || !same_clusters
            || state.params != *params
            || state.bits.len() != lattice.num_sites()
            || state.blocks.len() != state.config.effective_blocks()
            || state
                .blocks
                .iter()
                .any(|b| b.sites() != lattice.num_sites() || b.clusters.iter().zip(clusters).any(|(a, c)| a.n != c.len()))
        {
            return Err(Error::StateMismatch);
        }
        let mut sampler = Sampler::new(lattice, clusters, params, &state.config)?;
        let mut rng = ChaCha8Rng::from_seed(state.rng_seed);
        rng.set_stream(state.rng_stream);
        rng.set_word_pos(state.rng_word_pos);
        sampler.rng = rng;
        sampler.bonds = lattice.bond_sum_unchecked(&state.bits);
        sampler.magnetization = lattice.num_sites() as i64 - 2 * state.bits.iter().map(|&b| b as i64).sum::<i64>();
        sampler.bits = state.bits;
        sampler.sweeps_done = state.sweeps_done;
        sampler.measurements_done = state.measurements_done;
        sampler.wolff = state.wolff;
        sampler.blocks = state.blocks;
        Ok(sampler)
    }
}

/// Cluster flips per Wolff sweep, with the burn-in tallies that fix it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WolffCalibration {
    /// Cluster flips and flipped spins seen while calibrating.
    pub steps: u64,
    pub flipped: u64,
    /// Zero until calibration ends.
    pub steps_per_sweep: u64,
}

impl WolffCalibration {
    fn freeze(&mut self, sites: usize) {
        let per_sweep = (sites as f64 * self.steps as f64 / self.flipped as f64).round();
        self.steps_per_sweep = (per_sweep as u64).max(1);
    }
}

/// Runs one chain to completion.
pub fn run_sampler(
    lattice: &Lattice,
    clusters: &[ClusterSpec],
    params: &ThermoParams,
    config: &SamplerConfig,
) -> Result<SampleStats> {
    Ok(Sampler::new(lattice, clusters, params, config)?.run())
}

/// Which configuration marginals a jackknife replicate carries.
#[derive(Clone, Copy)]
enum Marginals {
    All,
    None,
    Only(usize),
}

impl Marginals {
    fn apply(self, counts: &BlockCounts) -> BlockCounts {
        let all = matches!(self, Marginals::All);
        BlockCounts {
            samples: counts.samples,
            bond_sum: counts.bond_sum,
            bond_sq: counts.bond_sq,
            magnetization: counts.magnetization.clone(),
            clusters: counts
                .clusters
                .iter()
                .enumerate()
                .map(|(i, c)| ClusterCounts {
                    n: c.n,
                    charge: c.charge.clone(),
                    charge_bonds: c.charge_bonds.clone(),
                    marginal: if all || matches!(self, Marginals::Only(k) if k == i) { c.marginal.clone() } else { None },
                })
                .collect(),
        }
    }
}

/// Local Fisher information estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFi {
    pub value: Estimate,
    pub occupied: usize,
    /// More occupied cluster configurations than `samples / 100`.
    pub undersampled: bool,
}

/// Block histograms of a finished (or partial) chain with the estimators built on them.
#[derive(Clone, Debug)]
pub struct SampleStats {
    params: ThermoParams,
    config: SamplerConfig,
    cluster_sizes: Vec<usize>,
    blocks: Vec<BlockCounts>,
    total: BlockCounts,
}

impl SampleStats {
    pub fn from_blocks(params: ThermoParams, cluster_sizes: Vec<usize>, blocks: Vec<BlockCounts>, config: SamplerConfig) -> Self {
        let mut total = blocks[0].clone();
        for b in &blocks[1..] {
            total.merge(b);
        }
        SampleStats {
            params,
            config,
            cluster_sizes,
            blocks,
            total,
        }
    }

    pub fn params(&self) -> &ThermoParams {
        &self.params
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    pub fn blocks(&self) -> &[BlockCounts] {
        &self.blocks
    }

    pub fn totals(&self) -> &BlockCounts {
        &self.total
    }

    /// Recorded samples (twice the measurements when symmetrized).
    pub fn samples_used(&self) -> u64 {
        self.total.samples
    }

    /// Merges adjacent blocks `factor` at a time (a trailing remainder joins the last block).
    pub fn rebinned(&self, factor: usize) -> SampleStats {
        assert!(factor >= 1);
        let mut merged: Vec<BlockCounts> = Vec::new();
        for chunk in self.blocks.chunks(factor) {
            let mut b = chunk[0].clone();
            for c in &chunk[1..] {
                b.merge(c);
            }
            if chunk.len() < factor && !merged.is_empty() {
                merged.last_mut().unwrap().merge(&b);
            } else {
                merged.push(b);
            }
        }
        SampleStats::from_blocks(self.params, self.cluster_sizes.clone(), merged, self.config)
    }

    /// Full-sample value of `f` and its delete-one-block jackknife error,
    /// componentwise. Errors are `NaN` with fewer than two blocks.
    pub fn jackknife<F>(&self, f: F) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: Fn(&BlockCounts) -> Result<Vec<f64>>,
    {
        self.jackknife_keeping(Marginals::All, f)
    }

    /// The jackknife over copies that carry only the marginals `f` reads;
    /// the sparse ones can be far larger than everything else.
    fn jackknife_keeping<F>(&self, keep: Marginals, f: F) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: Fn(&BlockCounts) -> Result<Vec<f64>>,
    {
        let full = f(&self.total)?;
        let b = self.blocks.len();
        if b < 2 {
            return Ok((full.clone(), vec![f64::NAN; full.len()]));
        }
        let total = keep.apply(&self.total);
        let mut replicates = Vec::with_capacity(b);
        for block in &self.blocks {
            let mut loo = total.clone();
            loo.subtract(&keep.apply(block));
            replicates.push(f(&loo)?);
        }
        let bf = b as f64;
        let se = (0..full.len())
            .map(|k| {
                let mean = replicates.iter().map(|r| r[k]).sum::<f64>() / bf;
                let ss = replicates.iter().map(|r| (r[k] - mean) * (r[k] - mean)).sum::<f64>();
                ((bf - 1.0) / bf * ss).sqrt()
            })
            .collect();
        Ok((full, se))
    }

    fn check_cluster(&self, cluster: usize) -> Result<()> {
        if cluster >= self.cluster_sizes.len() {
            return Err(Error::InvalidParameter("cluster index out of range"));
        }
        Ok(())
    }

    fn spectrum_of(&self, counts: &BlockCounts, cluster: usize) -> ChargeSpectrum {
        let c = &counts.clusters[cluster];
        let total = counts.samples as f64;
        let j = self.params.coupling;
        ChargeSpectrum::new(
            self.params.probe_rate,
            c.n as i64,
            c.charge.iter().map(|&k| k as f64 / total).collect(),
            c.charge_bonds.iter().map(|&b| -j * b as f64 / total).collect(),
            -j * counts.bond_sum as f64 / total,
        )
    }

    /// Empirical charge spectrum of a cluster (full sample).
    pub fn spectrum(&self, cluster: usize) -> Result<ChargeSpectrum> {
        self.check_cluster(cluster)?;
        Ok(self.spectrum_of(&self.total, cluster))
    }

    /// `⟨H⟩` with its jackknife error.
    pub fn mean_energy(&self) -> Result<Estimate> {
        let j = self.params.coupling;
        let (v, e) = self.jackknife_keeping(Marginals::None, |c| Ok(vec![-j * c.bond_sum as f64 / c.samples as f64]))?;
        Ok(Estimate {
            value: v[0],
            std_error: e[0],
        })
    }

    /// Histogram of the total magnetization over recorded samples.
    pub fn magnetization_histogram(&self) -> BTreeMap<i64, u64> {
        let n = self.total.sites() as i64;
        self.total
            .magnetization
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k as i64 - n, c))
            .collect()
    }

    /// `r̂(t)` and `∂̂_β r(t)` with componentwise jackknife errors.
    pub fn decoherence(&self, cluster: usize, times: &[f64]) -> Result<DecoherenceSeries> {
        self.check_cluster(cluster)?;
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let (v, e) = self.jackknife_keeping(Marginals::None, |c| {
            let spec = self.spectrum_of(c, cluster);
            let mut out = Vec::with_capacity(4 * times.len());
            for &t in times {
                let (r, dr) = spec.factor(t)?;
                out.extend_from_slice(&[r.re, r.im, dr.re, dr.im]);
            }
            Ok(out)
        })?;
        let pick = |src: &[f64], k: usize, off: usize| Complex64::new(src[4 * k + off], src[4 * k + off + 1]);
        let n = times.len();
        Ok(DecoherenceSeries {
            times: times.to_vec(),
            r: (0..n).map(|k| pick(&v, k, 0)).collect(),
            dr: (0..n).map(|k| pick(&v, k, 2)).collect(),
            r_err: (0..n).map(|k| pick(&e, k, 0)).collect(),
            dr_err: (0..n).map(|k| pick(&e, k, 2)).collect(),
        })
    }

    /// QFI curve with grid scan and refinement on the full-sample spectrum.
    ///
    /// Errors on every grid value and on the optimum come from the jackknife
    /// over whole QFI evaluations, which keeps the strong correlation
    /// between `r̂` and `∂̂_β r`.
    pub fn qfi(&self, cluster: usize, times: &[f64]) -> Result<QfiCurve> {
        self.check_cluster(cluster)?;
        let mut curve = optimize_qfi(&self.spectrum_of(&self.total, cluster), times)?;
        let n = times.len();
        let (_, e) = self.jackknife_keeping(Marginals::None, |c| {
            let spec = self.spectrum_of(c, cluster);
            let mut out = Vec::with_capacity(n + 1);
            for &t in times {
                let (r, dr) = spec.factor(t)?;
                out.push(qfi_from_r(r, dr));
            }
            out.push(optimize_qfi(&spec, times)?.qfi_opt);
            Ok(out)
        })?;
        curve.qfi_err = e[..n].to_vec();
        curve.qfi_opt_err = e[n];
        Ok(curve)
    }

    /// Empirical cluster marginal, normalized.
    pub fn cluster_marginal(&self, cluster: usize) -> Result<ClusterMarginal> {
        self.check_cluster(cluster)?;
        self.marginal_of(&self.total, cluster)
    }

    fn marginal_of(&self, counts: &BlockCounts, cluster: usize) -> Result<ClusterMarginal> {
        let c = &counts.clusters[cluster];
        let table = c.marginal.as_ref().ok_or(Error::MarginalMissing)?;
        let total = counts.samples as f64;
        let j = self.params.coupling;
        let mut m = ClusterMarginal::new(c.n);
        for (key, count, bonds) in table.iter() {
            m.add(key, count as f64 / total, -j * bonds as f64 / total);
        }
        Ok(m)
    }

    /// Fisher information of reading out the cluster configuration.
    pub fn local_fi(&self, cluster: usize) -> Result<LocalFi> {
        self.check_cluster(cluster)?;
        let (v, e) = self.jackknife_keeping(Marginals::Only(cluster), |c| Ok(vec![self.marginal_of(c, cluster)?.local_fisher_information()]))?;
        let occupied = self.marginal_of(&self.total, cluster)?.occupied();
        Ok(LocalFi {
            value: Estimate {
                value: v[0],
                std_error: e[0],
            },
            occupied,
            undersampled: occupied as u64 > self.samples_used() / 100,
        })
    }
}

impl SampleStats {
    /// Ratio of the optimal probe QFI to the local Fisher information, with a
    /// jackknife error that keeps the correlation between the two.
    pub fn information_ratio(&self, cluster: usize, times: &[f64]) -> Result<Estimate> {
        self.check_cluster(cluster)?;
        let (v, e) = self.jackknife_keeping(Marginals::Only(cluster), |c| {
            let qfi = optimize_qfi(&self.spectrum_of(c, cluster), times)?.qfi_opt;
            Ok(vec![qfi / self.marginal_of(c, cluster)?.local_fisher_information()])
        })?;
        Ok(Estimate {
            value: v[0],
            std_error: e[0],
        })
    }
}

/// `∂_β r` by a centred finite difference between two chains at `β ± δβ`
/// that share seed and stream (common random numbers). Returns the
/// derivative on the grid with componentwise jackknife errors over paired blocks.
pub fn finite_difference_derivative(
    lattice: &Lattice,
    cluster: &ClusterSpec,
    params: &ThermoParams,
    config: &SamplerConfig,
    times: &[f64],
    delta_beta: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !(delta_beta > 0.0) || delta_beta >= params.beta {
        return Err(Error::InvalidParameter("finite-difference step must lie in (0, β)"));
    }
    // fix the algorithm so both chains use the same update
    let config = SamplerConfig {
        algorithm: config.algorithm.resolve(params),
        ..*config
    };
    let clusters = [cluster.clone()];
    let up = run_sampler(lattice, &clusters, &params.with_beta(params.beta + delta_beta), &config)?;
    let down = run_sampler(lattice, &clusters, &params.with_beta(params.beta - delta_beta), &config)?;
    let estimate = |a: &BlockCounts, b: &BlockCounts| -> Result<Vec<f64>> {
        let sa = up.spectrum_of(a, 0);
        let sb = down.spectrum_of(b, 0);
        let mut out = Vec::with_capacity(2 * times.len());
        for &t in times {
            let d = (sa.factor(t)?.0 - sb.factor(t)?.0) / (2.0 * delta_beta);
            out.extend_from_slice(&[d.re, d.im]);
        }
        Ok(out)
    };
    let full = estimate(&up.total, &down.total)?;
    let nb = up.blocks.len();
    let mut reps = Vec::with_capacity(nb);
    for k in 0..nb {
        let mut a = up.total.clone();
        a.subtract(&up.blocks[k]);
        let mut b = down.total.clone();
        b.subtract(&down.blocks[k]);
        reps.push(estimate(&a, &b)?);
    }
    let bf = nb as f64;
    let se: Vec<f64> = (0..full.len())
        .map(|k| {
            if nb < 2 {
                return f64::NAN;
            }
            let mean = reps.iter().map(|r| r[k]).sum::<f64>() / bf;
            ((bf - 1.0) / bf * reps.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>()).sqrt()
        })
        .collect();
    let to_complex = |v: &[f64]| v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok((to_complex(&full), to_complex(&se)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Lattice, Vec<ClusterSpec>) {
        let lat = Lattice::new(4).unwrap();
        let clusters = vec![
            ClusterSpec::centered(&lat, 0.0).unwrap(),
            ClusterSpec::centered(&lat, 1.0).unwrap(),
        ];
        (lat, clusters)
    }

    #[test]
    fn config_validation() {
        let c = SamplerConfig::new(10, 0).with_burn_in(10);
        assert_eq!(c.validate(), Err(Error::BurnInTooLong { burn_in: 10, sweeps: 10 }));
        assert!(SamplerConfig::new(0, 0).validate().is_err());
        let c = SamplerConfig {
            thinning: 20,
            ..SamplerConfig::new(10, 0)
        };
        assert_eq!(c.validate(), Err(Error::NoMeasurements));
        assert_eq!(SamplerConfig::new(10, 0).effective_blocks(), 9);
    }

    #[test]
    fn auto_algorithm() {
        let p = ThermoParams::default();
        assert_eq!(Algorithm::Auto.resolve(&p), Algorithm::Wolff);
        assert_eq!(Algorithm::Auto.resolve(&p.with_beta(p.beta * 1.4)), Algorithm::Metropolis);
        assert_eq!(Algorithm::Auto.resolve(&p.with_beta(p.beta * 0.7)), Algorithm::Metropolis);
        assert_eq!(Algorithm::Auto.resolve(&p.with_beta(0.0)), Algorithm::Wolff);
    }

    #[test]
    fn seed_determinism() {
        let (lat, clusters) = setup();
        let p = ThermoParams::new(1.0, 0.44, 0.4);
        for alg in [Algorithm::Metropolis, Algorithm::Wolff] {
            let cfg = SamplerConfig::new(2000, 9).with_algorithm(alg);
            let a = run_sampler(&lat, &clusters, &p, &cfg).unwrap();
            let b = run_sampler(&lat, &clusters, &p, &cfg).unwrap();
            assert_eq!(a.blocks(), b.blocks());
        }
    }

    #[test]
    fn symmetrized_phase_vanishes() {
        let (lat, clusters) = setup();
        let p = ThermoParams::new(1.0, 0.6, 0.4);
        let cfg = SamplerConfig::new(500, 1).with_symmetrize(true);
        let stats = run_sampler(&lat, &clusters, &p, &cfg).unwrap();
        let series = stats.decoherence(1, &[0.0, 0.5, 1.3, 2.9]).unwrap();
        assert!(series.r.iter().all(|r| r.im == 0.0));
        assert!(series.dr[0].norm() < 1e-12);
        assert_eq!(stats.samples_used(), 2 * 450);
    }

    #[test]
    fn marginal_counts_sum_to_samples() {
        let (lat, clusters) = setup();
        let p = ThermoParams::new(1.0, 0.3, 0.4);
        let stats = run_sampler(&lat, &clusters, &p, &SamplerConfig::new(300, 5)).unwrap();
        let total: u64 = stats.totals().clusters[1].marginal.as_ref().unwrap().iter().map(|e| e.1).sum();
        assert_eq!(total, stats.samples_used());
        let m = stats.cluster_marginal(1).unwrap();
        assert!((m.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resume_is_bit_identical() {
        let (lat, clusters) = setup();
        let p = ThermoParams::new(1.0, 0.44, 0.4);
        for alg in [Algorithm::Metropolis, Algorithm::Wolff] {
            let cfg = SamplerConfig::new(1000, 77).with_algorithm(alg).with_stream(3);
            let straight = run_sampler(&lat, &clusters, &p, &cfg).unwrap();
            let mut first = Sampler::new(&lat, &clusters, &p, &cfg).unwrap();
            first.advance(437);
            let state = first.state();
            let resumed = Sampler::restore(&lat, &clusters, &p, state).unwrap().run();
            assert_eq!(straight.blocks(), resumed.blocks());
        }
    }

    #[test]
    fn restore_rejects_other_lattice() {
        let (lat, clusters) = setup();
        let p = ThermoParams::new(1.0, 0.44, 0.4);
        let s = Sampler::new(&lat, &clusters, &p, &SamplerConfig::new(10, 0)).unwrap();
        let other = Lattice::new(5).unwrap();
        let oc = vec![ClusterSpec::centered(&other, 0.0).unwrap(), ClusterSpec::centered(&other, 1.0).unwrap()];
        assert_eq!(Sampler::restore(&other, &oc, &p, s.state()).unwrap_err(), Error::StateMismatch);
    }
}
