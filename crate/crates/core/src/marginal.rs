//! Cluster marginals and the Fisher information of a direct local readout.

use alloc::collections::BTreeMap;

use crate::sum::CompensatedSum;

/// Sparse table over cluster configurations `b′` (bit `k` of the key is
/// the occupation of the `k`-th cluster site):
/// `p_n(b′) = Σ_{b″} p(b′, b″)` and `A(b′) = Σ_{b″} E(b) p(b)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterMarginal {
    n: usize,
    entries: BTreeMap<u64, (f64, f64)>,
}

impl ClusterMarginal {
    pub fn new(n: usize) -> Self {
        assert!(n <= 64);
        ClusterMarginal {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn cluster_size(&self) -> usize {
        self.n
    }

    /// Adds probability mass and energy-weighted mass to a key.
    pub fn add(&mut self, key: u64, prob: f64, energy_weighted: f64) {
        debug_assert!(self.n == 64 || key >> self.n == 0);
        let e = self.entries.entry(key).or_insert((0.0, 0.0));
        e.0 += prob;
        e.1 += energy_weighted;
    }

    pub fn get(&self, key: u64) -> Option<(f64, f64)> {
        self.entries.get(&key).copied()
    }

    /// Occupied keys in ascending order with `(p, A)`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.entries.iter().map(|(&k, &(p, a))| (k, p, a))
    }

    pub fn occupied(&self) -> usize {
        self.entries.len()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.values().map(|e| e.0).sum::<CompensatedSum>().value()
    }

    /// `Σ A(b′) = ⟨H⟩`.
    pub fn total_energy_weighted(&self) -> f64 {
        self.entries.values().map(|e| e.1).sum::<CompensatedSum>().value()
    }

    /// Rescales so that the probabilities sum to one.
    pub fn normalize(&mut self) {
        let total = self.total_probability();
        if total > 0.0 {
            for e in self.entries.values_mut() {
                e.0 /= total;
                e.1 /= total;
            }
        }
    }

    /// Fisher information on `β` of measuring the cluster configuration,
    /// `Σ_{b′} (∂_β p_n)² / p_n` with `∂_β p_n = ⟨H⟩ p_n − A`.
    ///
    /// Expanding the square gives `Σ A²/p − ⟨H⟩²`; the centred form used
    /// here avoids cancelling two large numbers.
    pub fn local_fisher_information(&self) -> f64 {
        let mean_energy = self.total_energy_weighted();
        let mut acc = CompensatedSum::new();
        for &(p, a) in self.entries.values() {
            if p > 0.0 {
                let d = a - mean_energy * p;
                acc.add(d * d / p);
            }
        }
        acc.value().max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_fisher_information() {
        // p(0) = q, E = ±1 on the two keys, so ∂p = -(E - ⟨E⟩) p
        let q: f64 = 0.3;
        let mut m = ClusterMarginal::new(1);
        m.add(0, q, q * 1.0);
        m.add(1, 1.0 - q, (1.0 - q) * -1.0);
        let mean = q - (1.0 - q);
        let dq = -(1.0 - mean) * q;
        let expect = dq * dq / q + dq * dq / (1.0 - q);
        assert!((m.local_fisher_information() - expect).abs() < 1e-14);
        let expanded = q * q / q + (1.0 - q) * (1.0 - q) / (1.0 - q) - mean * mean;
        assert!((m.local_fisher_information() - expanded).abs() < 1e-14);
    }

    #[test]
    fn normalization() {
        let mut m = ClusterMarginal::new(2);
        m.add(3, 2.0, 4.0);
        m.add(1, 6.0, -2.0);
        m.normalize();
        assert!((m.total_probability() - 1.0).abs() < 1e-15);
        assert_eq!(m.get(3), Some((0.25, 0.5)));
        assert_eq!(m.iter().map(|e| e.0).collect::<alloc::vec::Vec<_>>(), [1, 3]);
    }
}
