//! Phase thermometry of a finite two-dimensional Ising lattice.
//!
//! A single qubit probe couples through `σ_z ⊗ Z_n` to a cluster of `n`
//! lattice spins and dephases. Its decoherence factor
//! `r(t, β) = ⟨exp(-i g t Z_n)⟩` carries information about the lattice
//! temperature; this crate computes that factor and its `β`-derivative
//! from several sources and turns them into quantum Fisher information:
//!
//! * [`enumerate`]: exact Gibbs state by brute force (up to 24 spins),
//! * [`montecarlo`]: Metropolis and Wolff sampling for larger lattices,
//! * [`analytic`]: Curie-Weiss, mean-field and high-temperature models,
//! * [`probe`]: the qubit side (QFI functional, SLD cross-check, time
//!   optimisation).
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and
//! threading live in the `thermoprobe` companion crate.

#![no_std]

extern crate alloc;

pub mod analytic;
pub mod enumerate;
pub mod fit;
pub mod lattice;
pub mod marginal;
pub mod montecarlo;
pub mod probe;
pub mod search;
pub mod spectrum;
pub mod sum;

mod error;

pub use error::Error;
pub use lattice::{BondCounts, ClusterSpec, Lattice, SpinConfig, ThermoParams};
pub use marginal::ClusterMarginal;
pub use probe::{DecoherenceSeries, ProbeState, QfiCurve};
pub use spectrum::{ChargeSpectrum, Decoherence};

pub use num_complex::Complex64;

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Exact critical inverse temperature of the infinite square lattice,
/// `ln(1 + √2) / (2J)`.
pub fn onsager_beta_c(coupling: f64) -> f64 {
    #[allow(unused_imports)] // shadowed by inherent methods when std is linked
    use num_traits::Float;
    (1.0 + core::f64::consts::SQRT_2).ln() / (2.0 * coupling)
}

/// A value with its one-sigma statistical error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
        }
    }

    /// Number of standard errors separating `self` from `reference`.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}
