//! Periodic square lattice, spin configurations and probe clusters.
//!
//! Sites are numbered row-major: site `row * L + col`. A configuration is a
//! binary array `b` with `σ_z = 1 - 2b`, so `b = 0` is spin up.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Nearest neighbours per site on the square lattice.
pub const COORDINATION: usize = 4;

/// Physical parameters shared by every model.
///
/// Energies (`coupling`, `field`) share one arbitrary unit, `beta` is its
/// inverse. `probe_rate` is the probe-cluster coupling `g` and enters only
/// through the dimensionless `g t`. `probe_frequency` is a pure phase and
/// drops out of `|r|` and of every Fisher information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoParams {
    pub coupling: f64,
    pub field: f64,
    pub beta: f64,
    pub probe_rate: f64,
    pub probe_frequency: f64,
}

impl ThermoParams {
    /// Zero-field parameters with the given coupling, inverse temperature and probe rate.
    pub fn new(coupling: f64, beta: f64, probe_rate: f64) -> Self {
        ThermoParams {
            coupling,
            field: 0.0,
            beta,
            probe_rate,
            probe_frequency: 0.0,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        ThermoParams { beta, ..self }
    }

    pub fn with_field(self, field: f64) -> Self {
        ThermoParams { field, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling > 0.0) || !self.coupling.is_finite() {
            return Err(Error::InvalidParameter("coupling must be positive"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite and non-negative"));
        }
        if !self.field.is_finite() || !self.probe_rate.is_finite() || !self.probe_frequency.is_finite() {
            return Err(Error::InvalidParameter("parameters must be finite"));
        }
        Ok(())
    }
}

impl Default for ThermoParams {
    /// `J = 1/4` and `g = 0.4 J`; `β` at the Onsager critical point.
    fn default() -> Self {
        let coupling = 0.25;
        ThermoParams::new(coupling, crate::onsager_beta_c(coupling), 0.4 * coupling)
    }
}

/// One spin configuration as a binary array.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    bits: Vec<u8>,
}

impl SpinConfig {
    /// All spins up (`b = 0`).
    pub fn aligned(sites: usize) -> Self {
        SpinConfig { bits: vec![0; sites] }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("configuration bits must be 0 or 1"));
        }
        Ok(SpinConfig { bits })
    }

    /// Configuration whose bit `i` is bit `i` of `index`.
    pub fn from_index(sites: usize, index: u64) -> Self {
        assert!(sites <= 64);
        SpinConfig {
            bits: (0..sites).map(|i| ((index >> i) & 1) as u8).collect(),
        }
    }

    /// Inverse of [`SpinConfig::from_index`]; only meaningful for up to 64 sites.
    pub fn index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn bit(&self, site: usize) -> u8 {
        self.bits[site]
    }

    /// `σ_z` eigenvalue of a site.
    #[inline]
    pub fn spin(&self, site: usize) -> i32 {
        1 - 2 * self.bits[site] as i32
    }

    #[inline]
    pub fn flip(&mut self, site: usize) {
        self.bits[site] ^= 1;
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        SpinConfig {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `M = Σ_i (1 - 2 b_i)`.
    pub fn magnetization(&self) -> i64 {
        let down = self.bits.iter().map(|&b| b as i64).sum::<i64>();
        self.bits.len() as i64 - 2 * down
    }
}

/// `L × L` square lattice with periodic boundaries.
///
/// Each site owns the bonds to its right and lower neighbour, so there are
/// exactly `2 L²` bonds. On `L = 2` the wrap-around produces two distinct
/// bonds between the same pair of sites; both are kept.
#[derive(Clone, Debug)]
pub struct Lattice {
    side: usize,
    neighbors: Vec<[u32; COORDINATION]>,
    bonds: Vec<(u32, u32)>,
}

impl Lattice {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::LatticeTooSmall(side));
        }
        let n = side * side;
        let site = |r: usize, c: usize| ((r % side) * side + (c % side)) as u32;
        let mut neighbors = Vec::with_capacity(n);
        let mut bonds = Vec::with_capacity(2 * n);
        for r in 0..side {
            for c in 0..side {
                // right, down, left, up
                neighbors.push([
                    site(r, c + 1),
                    site(r + 1, c),
                    site(r, c + side - 1),
                    site(r + side - 1, c),
                ]);
                let me = site(r, c);
                bonds.push((me, site(r, c + 1)));
                bonds.push((me, site(r + 1, c)));
            }
        }
        Ok(Lattice {
            side,
            neighbors,
            bonds,
        })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.side * self.side
    }

    #[inline]
    pub fn neighbors(&self, site: usize) -> &[u32; COORDINATION] {
        &self.neighbors[site]
    }

    pub fn bonds(&self) -> &[(u32, u32)] {
        &self.bonds
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.side, site % self.side)
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        (row % self.side) * self.side + col % self.side
    }

    /// Squared minimum-image distance between two sites.
    pub fn distance_sq(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let wrap = |x: usize, y: usize| {
            let d = x.abs_diff(y);
            d.min(self.side - d)
        };
        let dr = wrap(ra, rb);
        let dc = wrap(ca, cb);
        dr * dr + dc * dc
    }

    fn check(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.num_sites() {
            return Err(Error::ConfigLength {
                expected: self.num_sites(),
                actual: config.len(),
            });
        }
        Ok(())
    }

    /// `Σ_⟨ij⟩ σ_i σ_j` over all bonds.
    pub fn bond_sum(&self, config: &SpinConfig) -> Result<i64> {
        self.check(config)?;
        Ok(self.bond_sum_unchecked(config.bits()))
    }

    #[inline]
    pub(crate) fn bond_sum_unchecked(&self, bits: &[u8]) -> i64 {
        // σ_i σ_j = 1 - 2 (b_i xor b_j)
        let anti = self
            .bonds
            .iter()
            .map(|&(i, j)| (bits[i as usize] ^ bits[j as usize]) as i64)
            .sum::<i64>();
        self.bonds.len() as i64 - 2 * anti
    }

    /// `H = -J Σ_⟨ij⟩ σ_i σ_j - h Σ_i σ_i`.
    pub fn energy(&self, config: &SpinConfig, params: &ThermoParams) -> Result<f64> {
        let bonds = self.bond_sum(config)?;
        Ok(-params.coupling * bonds as f64 - params.field * config.magnetization() as f64)
    }

    /// Sum of the neighbouring spins of `site`.
    #[inline]
    pub(crate) fn local_field_sum(&self, bits: &[u8], site: usize) -> i32 {
        let down = self.neighbors[site]
            .iter()
            .map(|&j| bits[j as usize] as i32)
            .sum::<i32>();
        COORDINATION as i32 - 2 * down
    }

    /// Energy change when the spin at `site` is flipped.
    pub fn delta_energy(&self, config: &SpinConfig, site: usize, params: &ThermoParams) -> Result<f64> {
        self.check(config)?;
        if site >= self.num_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.num_sites(),
            });
        }
        let s = config.spin(site) as f64;
        let nsum = self.local_field_sum(config.bits(), site) as f64;
        Ok(2.0 * s * (params.coupling * nsum + params.field))
    }

    /// Energy in the binary representation, `(2h + 8J) Σ b_i + 2 b·Γ b` with
    /// `Γ_ij = -J` on bonds, measured from the all-up reference
    /// `-J K - h N`. Written out for `q = 4`.
    ///
    /// The frequently quoted form with `-2 b·Γ b` has the wrong sign of the
    /// quadratic term; expanding `-J σ_i σ_j` with `σ = 1 - 2b` gives `+2`.
    pub fn binary_energy(&self, config: &SpinConfig, params: &ThermoParams) -> Result<f64> {
        self.check(config)?;
        let bits = config.bits();
        let down = bits.iter().map(|&b| b as f64).sum::<f64>();
        // b·Γb counts every bond twice (Γ is symmetric).
        let both_down = self
            .bonds
            .iter()
            .filter(|&&(i, j)| bits[i as usize] == 1 && bits[j as usize] == 1)
            .count() as f64;
        let quadratic = -2.0 * params.coupling * both_down;
        Ok((2.0 * params.field + 8.0 * params.coupling) * down + 2.0 * quadratic)
    }

    /// Pair-bond combinatorics of a cluster, as used by the second-order
    /// high-temperature expansion.
    pub fn bond_counts(&self, cluster: &ClusterSpec) -> Result<BondCounts> {
        if 2.0 * cluster.radius() >= self.side as f64 {
            return Err(Error::ClusterWraps {
                radius: cluster.radius(),
                side: self.side,
            });
        }
        let mut inside = vec![false; self.num_sites()];
        for &s in cluster.sites() {
            inside[s as usize] = true;
        }
        // For inside sites: intra-cluster degree. For outside sites: bonds into the cluster.
        let mut degree = vec![0u64; self.num_sites()];
        let mut intra = 0u64;
        for &(i, j) in &self.bonds {
            let (i, j) = (i as usize, j as usize);
            match (inside[i], inside[j]) {
                (true, true) => {
                    intra += 1;
                    degree[i] += 1;
                    degree[j] += 1;
                }
                (true, false) => degree[j] += 1,
                (false, true) => degree[i] += 1,
                (false, false) => {}
            }
        }
        let pairs = |d: u64| d * d.saturating_sub(1) / 2;
        let mut adjacent = 0;
        let mut bridged = 0;
        for (site, &d) in degree.iter().enumerate() {
            if inside[site] {
                adjacent += pairs(d);
            } else {
                bridged += pairs(d);
            }
        }
        Ok(BondCounts {
            bonds: self.bonds.len() as u64,
            intra,
            bridged,
            adjacent,
            disjoint: pairs(intra) - adjacent,
        })
    }
}

/// Disk-shaped cluster of lattice sites coupled to the probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpec {
    center: usize,
    radius: f64,
    sites: Vec<u32>,
}

impl ClusterSpec {
    /// All sites within minimum-image Euclidean distance `radius` of `center`,
    /// in ascending site order.
    pub fn disk(lattice: &Lattice, center: usize, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidRadius(radius));
        }
        if center >= lattice.num_sites() {
            return Err(Error::SiteOutOfRange {
                site: center,
                sites: lattice.num_sites(),
            });
        }
        let limit = radius * radius + 1e-9;
        let sites: Vec<u32> = (0..lattice.num_sites())
            .filter(|&s| lattice.distance_sq(center, s) as f64 <= limit)
            .map(|s| s as u32)
            .collect();
        if sites.len() > 64 {
            return Err(Error::ClusterTooLarge(sites.len()));
        }
        Ok(ClusterSpec {
            center,
            radius,
            sites,
        })
    }

    /// Smallest disk around `center` holding exactly `size` sites.
    pub fn with_size(lattice: &Lattice, center: usize, size: usize) -> Result<Self> {
        let radius = disk_radius_for_size(size).ok_or(Error::NoClusterOfSize(size))?;
        let cluster = Self::disk(lattice, center, radius)?;
        if cluster.len() != size {
            return Err(Error::NoClusterOfSize(size));
        }
        Ok(cluster)
    }

    /// Disk centred in the middle of the lattice.
    pub fn centered(lattice: &Lattice, radius: f64) -> Result<Self> {
        let mid = lattice.side() / 2;
        Self::disk(lattice, lattice.site(mid, mid), radius)
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sites(&self) -> &[u32] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Mask with the low `n` bits set.
    pub fn key_mask(&self) -> u64 {
        if self.sites.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.sites.len()) - 1
        }
    }

    /// `Z_n = Σ_{i ∈ C} (1 - 2 b_i)`.
    pub fn magnetization(&self, config: &SpinConfig) -> i64 {
        self.magnetization_of(config.bits())
    }

    #[inline]
    pub(crate) fn magnetization_of(&self, bits: &[u8]) -> i64 {
        let down = self.sites.iter().map(|&s| bits[s as usize] as i64).sum::<i64>();
        self.sites.len() as i64 - 2 * down
    }

    /// Cluster configuration `b'` packed as bit `k` = `b` of the `k`-th cluster site.
    pub fn key(&self, config: &SpinConfig) -> u64 {
        self.key_of(config.bits())
    }

    #[inline]
    pub(crate) fn key_of(&self, bits: &[u8]) -> u64 {
        self.sites
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &s)| acc | ((bits[s as usize] as u64) << k))
    }
}

/// Radius of the smallest disk on an infinite square lattice holding exactly
/// `size` sites, if such a disk exists (1, 5, 9, 13, 21, 25, 29, 37, ...).
pub fn disk_radius_for_size(size: usize) -> Option<f64> {
    if size == 0 {
        return None;
    }
    let mut count = 0usize;
    let mut d2 = 0usize;
    while count < size {
        let shell = lattice_points_on_circle(d2);
        count += shell;
        if count == size {
            return Some((d2 as f64).sqrt());
        }
        d2 += 1;
    }
    None
}

fn lattice_points_on_circle(d2: usize) -> usize {
    let r = (d2 as f64).sqrt() as i64 + 1;
    let mut count = 0;
    for a in -r..=r {
        for b in -r..=r {
            if (a * a + b * b) as usize == d2 {
                count += 1;
            }
        }
    }
    count
}

/// Pair-bond counts of a cluster.
///
/// A *doublet* is an unordered pair of distinct bonds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BondCounts {
    /// All bonds of the lattice (`2N` for the periodic square lattice).
    pub bonds: u64,
    /// Bonds with both ends inside the cluster.
    pub intra: u64,
    /// Doublets joining two distinct cluster spins through one shared spin outside.
    pub bridged: u64,
    /// Doublets of intra-cluster bonds sharing exactly one spin.
    pub adjacent: u64,
    /// Doublets of intra-cluster bonds sharing no spin.
    pub disjoint: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ThermoParams {
        ThermoParams::new(1.0, 0.3, 0.1)
    }

    #[test]
    fn rejects_tiny_lattice() {
        assert_eq!(Lattice::new(1).unwrap_err(), Error::LatticeTooSmall(1));
        assert!(Lattice::new(0).is_err());
    }

    #[test]
    fn bond_totals() {
        for (side, bonds) in [(2, 8), (4, 32), (20, 800)] {
            let lat = Lattice::new(side).unwrap();
            assert_eq!(lat.bonds().len(), bonds);
            let mut appearances = vec![0; lat.num_sites()];
            for &(i, j) in lat.bonds() {
                appearances[i as usize] += 1;
                appearances[j as usize] += 1;
            }
            assert!(appearances.iter().all(|&a| a == COORDINATION));
        }
    }

    #[test]
    fn two_by_two_keeps_double_bonds() {
        let lat = Lattice::new(2).unwrap();
        let pair = lat.bonds().iter().filter(|&&(i, j)| (i, j) == (0, 1) || (i, j) == (1, 0)).count();
        assert_eq!(pair, 2);
        assert_eq!(lat.neighbors(0), &[1, 2, 1, 2]);
    }

    #[test]
    fn reference_energies() {
        let lat = Lattice::new(4).unwrap();
        let p = params();
        let up = SpinConfig::aligned(16);
        assert_eq!(lat.energy(&up, &p).unwrap(), -32.0);
        let checker = SpinConfig::from_bits((0..16).map(|s| ((s / 4 + s % 4) % 2) as u8).collect()).unwrap();
        assert_eq!(lat.energy(&checker, &p).unwrap(), 32.0);
        let mut one = up.clone();
        one.flip(5);
        assert_eq!(lat.energy(&one, &p).unwrap(), -32.0 + 8.0);
        assert_eq!(lat.delta_energy(&up, 7, &p).unwrap(), 8.0);
    }

    #[test]
    fn balanced_neighbourhood_costs_nothing() {
        let lat = Lattice::new(4).unwrap();
        let mut cfg = SpinConfig::aligned(16);
        let site = lat.site(1, 1);
        let [right, down, _, _] = *lat.neighbors(site);
        cfg.flip(right as usize);
        cfg.flip(down as usize);
        assert_eq!(lat.delta_energy(&cfg, site, &params()).unwrap(), 0.0);
    }

    #[test]
    fn config_length_checked() {
        let lat = Lattice::new(4).unwrap();
        let err = lat.energy(&SpinConfig::aligned(9), &params()).unwrap_err();
        assert_eq!(err, Error::ConfigLength { expected: 16, actual: 9 });
        assert!(lat.delta_energy(&SpinConfig::aligned(16), 16, &params()).is_err());
    }

    #[test]
    fn disk_sizes() {
        let lat = Lattice::new(20).unwrap();
        let radii = [0.0, 1.0, 2f64.sqrt(), 2.0, 5f64.sqrt(), 8f64.sqrt()];
        let sizes: Vec<usize> = radii
            .iter()
            .map(|&r| ClusterSpec::centered(&lat, r).unwrap().len())
            .collect();
        assert_eq!(sizes, [1, 5, 9, 13, 21, 25]);
        for n in [1, 5, 9, 13, 21, 25, 29, 37] {
            assert_eq!(ClusterSpec::with_size(&lat, 0, n).unwrap().len(), n);
        }
        assert_eq!(ClusterSpec::with_size(&lat, 0, 7).unwrap_err(), Error::NoClusterOfSize(7));
    }

    #[test]
    fn cluster_magnetization_extremes() {
        let lat = Lattice::new(8).unwrap();
        let c = ClusterSpec::centered(&lat, 2.0).unwrap();
        let up = SpinConfig::aligned(64);
        assert_eq!(c.magnetization(&up), 13);
        assert_eq!(c.magnetization(&up.flipped()), -13);
        assert_eq!(c.key(&up), 0);
        assert_eq!(c.key(&up.flipped()), c.key_mask());
    }

    #[test]
    fn minimum_image_wraps() {
        let lat = Lattice::new(6).unwrap();
        let c = ClusterSpec::disk(&lat, 0, 1.0).unwrap();
        let mut sites = c.sites().to_vec();
        sites.sort();
        assert_eq!(sites, [0, 1, 5, 6, 30]);
    }

    #[test]
    fn radius_two_disk_counts() {
        let lat = Lattice::new(20).unwrap();
        let c = ClusterSpec::centered(&lat, 2.0).unwrap();
        let k = lat.bond_counts(&c).unwrap();
        assert_eq!((k.intra, k.bridged, k.adjacent, k.disjoint), (16, 8, 34, 86));
        assert_eq!(k.bonds, 800);
    }

    #[test]
    fn single_site_counts_vanish() {
        let lat = Lattice::new(6).unwrap();
        let c = ClusterSpec::disk(&lat, 3, 0.0).unwrap();
        let k = lat.bond_counts(&c).unwrap();
        assert_eq!((k.intra, k.bridged, k.adjacent, k.disjoint), (0, 0, 0, 0));
    }

    #[test]
    fn wrapping_cluster_rejected() {
        let lat = Lattice::new(4).unwrap();
        let c = ClusterSpec::disk(&lat, 0, 2.0).unwrap();
        assert!(matches!(lat.bond_counts(&c), Err(Error::ClusterWraps { .. })));
    }

    #[test]
    fn binary_energy_matches_hamiltonian_up_to_offset() {
        let lat = Lattice::new(4).unwrap();
        let p = ThermoParams::new(0.7, 1.0, 0.1).with_field(0.3);
        let offset = -p.coupling * 32.0 - p.field * 16.0;
        for idx in [0u64, 1, 0b1011, 0xBEEF, 0xFFFF] {
            let cfg = SpinConfig::from_index(16, idx);
            let direct = lat.energy(&cfg, &p).unwrap();
            let binary = lat.binary_energy(&cfg, &p).unwrap();
            assert!((direct - offset - binary).abs() < 1e-12);
        }
    }
}
