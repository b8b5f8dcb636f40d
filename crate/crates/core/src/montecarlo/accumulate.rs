//! Integer accumulators. Energies enter as bond sums `B = Σσσ` (so `E = -J B`
//! at zero field), which keeps every running sum exact and makes blocks
//! merge associatively and bit-reproducibly.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Marginals up to this cluster size use dense `2^n` tables.
pub const DENSE_MARGINAL_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarginalCounts {
    /// Indexed by key: `(count, Σ B)`.
    Dense(Vec<(u64, i64)>),
    Sparse(BTreeMap<u64, (u64, i64)>),
}

impl MarginalCounts {
    pub fn new(n: usize) -> Self {
        if n <= DENSE_MARGINAL_LIMIT {
            MarginalCounts::Dense(vec![(0, 0); 1 << n])
        } else {
            MarginalCounts::Sparse(BTreeMap::new())
        }
    }

    #[inline]
    fn record(&mut self, key: u64, bonds: i64) {
        let slot = match self {
            MarginalCounts::Dense(v) => &mut v[key as usize],
            MarginalCounts::Sparse(m) => m.entry(key).or_insert((0, 0)),
        };
        slot.0 += 1;
        slot.1 += bonds;
    }

    /// Occupied keys in ascending order as `(key, count, Σ B)`.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (u64, u64, i64)> + '_> {
        match self {
            MarginalCounts::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, e)| e.0 > 0)
                    .map(|(k, e)| (k as u64, e.0, e.1)),
            ),
            MarginalCounts::Sparse(m) => Box::new(m.iter().filter(|(_, e)| e.0 > 0).map(|(&k, e)| (k, e.0, e.1))),
        }
    }

    fn combine(&mut self, other: &MarginalCounts, sign: i64) {
        match (self, other) {
            (MarginalCounts::Dense(a), MarginalCounts::Dense(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 = apply(x.0, y.0, sign);
                    x.1 += sign * y.1;
                }
            }
            (MarginalCounts::Sparse(a), MarginalCounts::Sparse(b)) => {
                for (&k, y) in b {
                    let x = a.entry(k).or_insert((0, 0));
                    x.0 = apply(x.0, y.0, sign);
                    x.1 += sign * y.1;
                }
                a.retain(|_, e| e.0 > 0);
            }
            _ => panic!("mismatched marginal layouts"),
        }
    }
}

#[inline]
fn apply(x: u64, y: u64, sign: i64) -> u64 {
    if sign > 0 {
        x + y
    } else {
        x - y
    }
}

/// Per-cluster sums: charge histogram with bond sums, and optionally the
/// configuration marginal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterCounts {
    pub n: usize,
    /// Indexed by `Z_n + n`.
    pub charge: Vec<u64>,
    pub charge_bonds: Vec<i64>,
    pub marginal: Option<MarginalCounts>,
}

impl ClusterCounts {
    pub fn new(n: usize, with_marginal: bool) -> Self {
        ClusterCounts {
            n,
            charge: vec![0; 2 * n + 1],
            charge_bonds: vec![0; 2 * n + 1],
            marginal: with_marginal.then(|| MarginalCounts::new(n)),
        }
    }

    #[inline]
    pub(crate) fn record(&mut self, charge: i64, key: u64, bonds: i64) {
        let slot = (charge + self.n as i64) as usize;
        self.charge[slot] += 1;
        self.charge_bonds[slot] += bonds;
        if let Some(m) = &mut self.marginal {
            m.record(key, bonds);
        }
    }

    fn combine(&mut self, other: &ClusterCounts, sign: i64) {
        assert_eq!(self.n, other.n);
        for (x, &y) in self.charge.iter_mut().zip(&other.charge) {
            *x = apply(*x, y, sign);
        }
        for (x, &y) in self.charge_bonds.iter_mut().zip(&other.charge_bonds) {
            *x += sign * y;
        }
        match (&mut self.marginal, &other.marginal) {
            (Some(a), Some(b)) => a.combine(b, sign),
            (None, None) => {}
            _ => panic!("mismatched marginal settings"),
        }
    }
}

/// Everything recorded in one block of measurements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    pub samples: u64,
    pub bond_sum: i64,
    pub bond_sq: i128,
    /// Total magnetization histogram, indexed by `M + N`.
    pub magnetization: Vec<u64>,
    pub clusters: Vec<ClusterCounts>,
}

impl BlockCounts {
    pub fn new(sites: usize, cluster_sizes: &[usize], marginal_cap: usize) -> Self {
        BlockCounts {
            samples: 0,
            bond_sum: 0,
            bond_sq: 0,
            magnetization: vec![0; 2 * sites + 1],
            clusters: cluster_sizes.iter().map(|&n| ClusterCounts::new(n, n <= marginal_cap)).collect(),
        }
    }

    pub fn sites(&self) -> usize {
        (self.magnetization.len() - 1) / 2
    }

    #[inline]
    pub(crate) fn record_global(&mut self, bonds: i64, magnetization: i64) {
        self.samples += 1;
        self.bond_sum += bonds;
        self.bond_sq += (bonds as i128) * (bonds as i128);
        let offset = self.sites() as i64;
        self.magnetization[(magnetization + offset) as usize] += 1;
    }

    /// Adds another block in place.
    pub fn merge(&mut self, other: &BlockCounts) {
        self.combine(other, 1);
    }

    /// Removes a block previously merged in (leave-one-out totals).
    pub fn subtract(&mut self, other: &BlockCounts) {
        self.combine(other, -1);
    }

    fn combine(&mut self, other: &BlockCounts, sign: i64) {
        assert_eq!(self.magnetization.len(), other.magnetization.len());
        assert_eq!(self.clusters.len(), other.clusters.len());
        self.samples = apply(self.samples, other.samples, sign);
        self.bond_sum += sign * other.bond_sum;
        self.bond_sq += sign as i128 * other.bond_sq;
        for (x, &y) in self.magnetization.iter_mut().zip(&other.magnetization) {
            *x = apply(*x, y, sign);
        }
        for (a, b) in self.clusters.iter_mut().zip(&other.clusters) {
            a.combine(b, sign);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_then_subtract_roundtrips() {
        let mut a = BlockCounts::new(4, &[1, 17], 20);
        let mut b = a.clone();
        a.record_global(3, 2);
        a.clusters[0].record(1, 0, 3);
        a.clusters[1].record(-1, 5, 3);
        b.record_global(-1, -4);
        b.clusters[0].record(-1, 1, -1);
        b.clusters[1].record(3, 9, -1);
        let before = a.clone();
        a.merge(&b);
        assert_eq!(a.samples, 2);
        assert_eq!(a.bond_sq, 10);
        a.subtract(&b);
        assert_eq!(a, before);
    }

    #[test]
    fn dense_and_sparse_iterate_in_key_order() {
        let mut d = MarginalCounts::new(3);
        let mut s = MarginalCounts::Sparse(BTreeMap::new());
        for (k, b) in [(5, 1), (2, -3), (5, 2)] {
            d.record(k, b);
            s.record(k, b);
        }
        let dv: Vec<_> = d.iter().collect();
        let sv: Vec<_> = s.iter().collect();
        assert_eq!(dv, [(2, 1, -3), (5, 2, 3)]);
        assert_eq!(dv, sv);
    }
}
