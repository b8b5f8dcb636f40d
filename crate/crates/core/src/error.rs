use thiserror::Error;

/// Errors raised by the thermometry library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice side must be at least 2, got {0}")]
    LatticeTooSmall(usize),
    #[error("configuration has {actual} spins, lattice has {expected}")]
    ConfigLength { expected: usize, actual: usize },
    #[error("site {site} is outside a lattice of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("cluster radius {0} is invalid")]
    InvalidRadius(f64),
    #[error("no disk cluster has exactly {0} sites")]
    NoClusterOfSize(usize),
    #[error("cluster of radius {radius} wraps onto itself on a lattice of side {side}")]
    ClusterWraps { radius: f64, side: usize },
    #[error("cluster of {0} spins is too large for a bit key (max 64)")]
    ClusterTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("exhaustive enumeration of {sites} spins exceeds the cap of {cap}")]
    EnumerationTooLarge { sites: usize, cap: usize },
    #[error("Curie-Weiss sum over {0} spins exceeds the supported size")]
    TooManySpins(usize),
    #[error("the Wolff update requires zero field")]
    FieldNotSupported,
    #[error("burn-in ({burn_in}) must be smaller than the total number of sweeps ({sweeps})")]
    BurnInTooLong { burn_in: u64, sweeps: u64 },
    #[error("no measurements would be taken with this sampler configuration")]
    NoMeasurements,
    #[error("empty time grid")]
    EmptyGrid,
    #[error("saddle-point iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("evaluation at the critical point is singular")]
    Critical,
    #[error("expansion evaluated outside its domain of validity")]
    OutsideDomain,
    #[error("time {0} sits on a pole of tan(gt)")]
    TangentPole(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("not enough points for a fit: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("cluster marginal was not recorded for this cluster")]
    MarginalMissing,
    #[error("sampler state does not match the lattice or clusters it is restored into")]
    StateMismatch,
}
