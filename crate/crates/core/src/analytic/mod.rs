//! Closed-form models: Curie-Weiss, mean-field theory and the
//! high-temperature expansion. Each implements [`Decoherence`](crate::Decoherence),
//! so its QFI goes through the same functional as the sampled data.

pub mod cw;
pub mod hte;
pub mod mft;

pub use cw::{cw_exact_finite_n, cw_finite, cw_local_fi, cw_qfi, cw_saddle_point, CwBranch, CwSolution, DecayTime};
pub use hte::HteModel;
pub use mft::{mft_solve, MftDecoherence, MftSolution};
