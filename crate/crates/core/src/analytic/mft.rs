//! Mean-field theory of the square lattice: independent spins in the
//! effective field `J q m0`, with `m0 = tanh(J q m0 β)`.
//!
//! The decoherence factor of an `n`-spin cluster is the product form
//! `r = [1 - p1 (1 - e^{-igt})]^n`, which counts flipped spins (`Σb`)
//! rather than `Z_n`; only the time axis and a phase differ.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{ThermoParams, COORDINATION};
use crate::spectrum::Decoherence;
use crate::{Error, Result};

/// Mean-field self-consistent solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MftSolution {
    pub params: ThermoParams,
    pub coordination: usize,
    pub m0: f64,
    /// `∂_β m0`; infinite exactly at the mean-field critical point.
    pub dm_dbeta: f64,
    /// Single-spin excitation probability `1/(1 + e^{2Jq m0 β})`.
    pub p1: f64,
    /// `∂_β p1`.
    pub dp1_dbeta: f64,
    /// `Jqβ = 1`.
    pub critical: bool,
}

/// Positive-branch solution of the self-consistency equation (`q = 4`).
pub fn mft_solve(params: &ThermoParams) -> Result<MftSolution> {
    params.validate()?;
    if params.field != 0.0 {
        return Err(Error::FieldNotSupported);
    }
    let q = COORDINATION as f64;
    let k = params.coupling * q * params.beta;
    let critical = k == 1.0;
    let m0 = if k <= 1.0 { 0.0 } else { positive_root(k) };
    let one_minus = 1.0 - m0 * m0;
    let dm_dbeta = if critical {
        f64::INFINITY
    } else if m0 == 0.0 {
        0.0
    } else {
        one_minus * params.coupling * q * m0 / (1.0 - one_minus * k)
    };
    let x = 2.0 * k * m0;
    let p1 = 1.0 / (1.0 + x.exp());
    // ∂_β (2Jq m0 β) = 2Jq (m0 + β ∂m0)
    let dp1_dbeta = if critical {
        f64::NAN
    } else {
        -p1 * (1.0 - p1) * 2.0 * params.coupling * q * (m0 + params.beta * dm_dbeta)
    };
    Ok(MftSolution {
        params: *params,
        coordination: COORDINATION,
        m0,
        dm_dbeta,
        p1,
        dp1_dbeta,
        critical,
    })
}

/// Root of `tanh(k m) = m` in `(0, 1]` for `k > 1`, by bisection on the
/// sign change (robust right at the bifurcation, where Newton crawls).
fn positive_root(k: f64) -> f64 {
    let f = |m: f64| (k * m).tanh() - m;
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0f64);
    if f(hi) >= 0.0 {
        return 1.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish from the bracket
    let mut m = 0.5 * (lo + hi);
    for _ in 0..3 {
        let th = (k * m).tanh();
        let slope = k * (1.0 - th * th) - 1.0;
        let next = m - (th - m) / slope;
        if next > 0.0 && next <= 1.0 {
            m = next;
        }
    }
    m
}

/// Mean-field decoherence of an `n`-spin cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MftDecoherence {
    pub solution: MftSolution,
    pub cluster_size: usize,
}

impl MftDecoherence {
    pub fn new(solution: MftSolution, cluster_size: usize) -> Self {
        MftDecoherence {
            solution,
            cluster_size,
        }
    }

    /// The exponential approximation `exp(-n p1 (1 - e^{-igt}))`, valid for
    /// small `p1` (deep in the ordered phase).
    pub fn exponential_approximation(&self, t: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let u = one - Complex64::from_polar(1.0, -self.solution.params.probe_rate * t);
        (-u * (self.cluster_size as f64 * self.solution.p1)).exp()
    }
}

impl Decoherence for MftDecoherence {
    fn factor(&self, t: f64) -> Result<(Complex64, Complex64)> {
        if self.solution.critical {
            return Err(Error::Critical);
        }
        let one = Complex64::new(1.0, 0.0);
        let u = one - Complex64::from_polar(1.0, -self.solution.params.probe_rate * t);
        let base = one - u * self.solution.p1;
        let n = self.cluster_size as i32;
        if n == 0 {
            return Ok((one, Complex64::new(0.0, 0.0)));
        }
        let r = base.powi(n);
        let dr = base.powi(n - 1) * (-u * self.solution.dp1_dbeta) * n as f64;
        Ok((r, dr))
    }

    fn rate(&self) -> f64 {
        self.solution.params.probe_rate
    }

    /// One period of `r`. The QFI is symmetric about `gt = π`, which keeps
    /// a maximum there off the edge of the grid.
    fn time_window(&self) -> f64 {
        core::f64::consts::TAU / self.solution.params.probe_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(jb: f64) -> ThermoParams {
        ThermoParams::new(1.0, jb, 0.1)
    }

    #[test]
    fn paramagnetic_is_uniform() {
        let sol = mft_solve(&params(0.2)).unwrap();
        assert_eq!(sol.m0, 0.0);
        assert_eq!(sol.p1, 0.5);
        assert_eq!(sol.dp1_dbeta, 0.0);
        assert!(!sol.critical);
    }

    #[test]
    fn critical_flag() {
        let sol = mft_solve(&params(0.25)).unwrap();
        assert_eq!(sol.m0, 0.0);
        assert!(sol.critical);
        let model = MftDecoherence::new(sol, 5);
        assert_eq!(model.factor(1.0), Err(Error::Critical));
    }

    #[test]
    fn ordered_root() {
        for jb in [0.2501, 0.3, 0.5, 2.0] {
            let sol = mft_solve(&params(jb)).unwrap();
            assert!(sol.m0 > 0.0);
            assert!(((4.0 * jb * sol.m0).tanh() - sol.m0).abs() < 1e-12);
            assert!(sol.p1 > 0.0 && sol.p1 <= 0.5);
        }
    }

    #[test]
    fn infinite_temperature_modulus() {
        let model = MftDecoherence::new(mft_solve(&params(0.0)).unwrap(), 5);
        for t in [0.5, 3.0, 20.0] {
            let (r, dr) = model.factor(t).unwrap();
            assert!((r.norm() - (0.05 * t).cos().abs().powi(5)).abs() < 1e-14);
            assert_eq!(dr.norm(), 0.0);
        }
    }

    #[test]
    fn rejects_field() {
        assert_eq!(mft_solve(&params(0.3).with_field(0.1)), Err(Error::FieldNotSupported));
    }
}
