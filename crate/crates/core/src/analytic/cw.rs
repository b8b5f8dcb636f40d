//! Curie-Weiss model: `N` spins on a complete graph,
//! `H = -(J/2N) M² - h M` with `M = Σσ`.
//!
//! Two routes to the decoherence factor of a probe coupled to all spins:
//! the exact binomial sum over `M` for finite `N`, and the saddle-point
//! form `r = exp(-i g̃ t m0 - (g̃ t)² / (2 N f″(m0)))` with `g̃ = g N`.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::ThermoParams;
use crate::probe::DecoherenceSeries;
use crate::spectrum::{ChargeSpectrum, Decoherence};
use crate::sum::CompensatedSum;
use crate::{Error, Result};

/// Largest spin count accepted by the finite-`N` sum.
pub const MAX_SPINS: usize = 10_000;

/// `f″` below this is treated as the critical point.
pub const CRITICAL_CURVATURE: f64 = 1e-10;

const MAX_NEWTON: usize = 200;

/// Coherence time with its two degenerate limits kept out of floating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayTime {
    Finite(f64),
    /// `f″ = 0`: at the critical point the Gaussian width collapses.
    Vanishing,
    /// `m0 = 1` to machine precision: the frozen lattice does not dephase the probe.
    Unbounded,
}

impl DecayTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            DecayTime::Finite(t) => Some(t),
            _ => None,
        }
    }
}

/// Saddle point of the Curie-Weiss free energy and what follows from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwSolution {
    pub params: ThermoParams,
    pub spins: usize,
    /// Magnetization density solving `tanh(Jβm + hβ) = m`.
    pub m0: f64,
    /// `f″(m0) = 1/(1 - m0²) - Jβ`.
    pub f_pp: f64,
    /// `∂_β m0` by implicit differentiation.
    pub dm_dbeta: f64,
    /// `∂_β f″(m0)`, total derivative through `m0`.
    pub dfpp_dbeta: f64,
    /// `1 - Jβ`.
    pub epsilon: f64,
    /// `g N`.
    pub g_tilde: f64,
    pub tau: DecayTime,
}

/// Solves the saddle-point equation by Newton iteration.
///
/// Starts from `√max(0, -3ε) + 10⁻³` (mirrored for `h < 0`). At zero field
/// and `Jβ ≤ 1` the paramagnetic root `m0 = 0` is returned directly; above
/// it the positive branch is selected.
pub fn cw_saddle_point(params: &ThermoParams, spins: usize) -> Result<CwSolution> {
    params.validate()?;
    if spins == 0 {
        return Err(Error::InvalidParameter("Curie-Weiss model needs at least one spin"));
    }
    let (j, h, beta) = (params.coupling, params.field, params.beta);
    let epsilon = 1.0 - j * beta;
    let m0 = if h == 0.0 && epsilon >= 0.0 {
        0.0
    } else {
        let sign = if h < 0.0 { -1.0 } else { 1.0 };
        sign * newton_magnetization(j * beta, sign * h * beta, (-3.0 * epsilon).max(0.0).sqrt() + 1e-3)?
    };
    let one_minus = 1.0 - m0 * m0;
    let f_pp = if one_minus > 0.0 {
        1.0 / one_minus - j * beta
    } else {
        f64::INFINITY
    };
    let dm_dbeta = if f_pp.is_infinite() {
        0.0
    } else {
        (j * m0 + h) / f_pp
    };
    let dfpp_dbeta = if f_pp.is_infinite() {
        f64::INFINITY
    } else {
        2.0 * m0 * dm_dbeta / (one_minus * one_minus) - j
    };
    let g_tilde = params.probe_rate * spins as f64;
    let tau = if f_pp.is_infinite() {
        DecayTime::Unbounded
    } else if f_pp < CRITICAL_CURVATURE {
        DecayTime::Vanishing
    } else {
        DecayTime::Finite((spins as f64 * f_pp).sqrt() / g_tilde)
    };
    Ok(CwSolution {
        params: *params,
        spins,
        m0,
        f_pp,
        dm_dbeta,
        dfpp_dbeta,
        epsilon,
        g_tilde,
        tau,
    })
}

/// Root of `tanh(a m + b) = m` on `(0, 1]` for `b ≥ 0`, Newton from `start`
/// with a bisection fallback whenever a step leaves the bracket.
fn newton_magnetization(a: f64, b: f64, start: f64) -> Result<f64> {
    let residual = |m: f64| (a * m + b).tanh() - m;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if b == 0.0 {
        // exclude the unstable root at zero
        lo = f64::MIN_POSITIVE;
    }
    let mut m = start.min(1.0);
    for _ in 0..MAX_NEWTON {
        let th = (a * m + b).tanh();
        let f = th - m;
        if f == 0.0 {
            return Ok(m);
        }
        if f > 0.0 {
            lo = lo.max(m);
        } else {
            hi = hi.min(m);
        }
        let slope = a * (1.0 - th * th) - 1.0;
        let mut next = m - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - m).abs();
        m = next;
        if step <= 4.0 * f64::EPSILON * m {
            break;
        }
    }
    if residual(m).abs() < 1e-12 {
        Ok(m)
    } else {
        Err(Error::NoConvergence(MAX_NEWTON))
    }
}

impl CwSolution {
    /// Exponent `t²/τ²` of `|r|²`.
    fn x(&self, t: f64) -> f64 {
        let gt = self.g_tilde * t;
        gt * gt / (self.spins as f64 * self.f_pp)
    }

    fn require_regular(&self) -> Result<()> {
        if !(self.f_pp >= CRITICAL_CURVATURE) {
            return Err(Error::Critical);
        }
        Ok(())
    }
}

impl Decoherence for CwSolution {
    fn factor(&self, t: f64) -> Result<(Complex64, Complex64)> {
        if self.f_pp.is_infinite() {
            return Ok((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        self.require_regular()?;
        let x = self.x(t);
        let phase = self.g_tilde * t * self.m0;
        let r = Complex64::from_polar((-0.5 * x).exp(), -phase);
        // ∂_β ln r = x ∂f″ / (2 f″) - i g̃ t ∂m0
        let a = x * self.dfpp_dbeta / (2.0 * self.f_pp);
        let b = self.g_tilde * t * self.dm_dbeta;
        Ok((r, r * Complex64::new(a, -b)))
    }

    fn rate(&self) -> f64 {
        self.params.probe_rate
    }

    /// Ten coherence times; the Gaussian envelope is gone long before.
    fn time_window(&self) -> f64 {
        match self.tau {
            DecayTime::Finite(tau) => 10.0 * tau,
            _ => core::f64::consts::PI / self.params.probe_rate,
        }
    }
}

/// Thermodynamic-limit QFI at time `t`:
/// `a²/(e^x - 1) + b² e^{-x}` with `x = t²/τ²`, `a = x ∂_βf″/(2f″)` and
/// `b = g̃ t ∂_β m0`.
///
/// At zero field this is
/// `(J²/4) [(1-m0²)² f″ - 2m0²]² / ((1-m0²)⁴ f″⁴) · x²/(e^x - 1) + N J² m0²/f″ · x e^{-x}`.
pub fn cw_qfi(sol: &CwSolution, t: f64) -> Result<f64> {
    sol.require_regular()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let x = sol.x(t);
    let a = x * sol.dfpp_dbeta / (2.0 * sol.f_pp);
    let b = sol.g_tilde * t * sol.dm_dbeta;
    Ok(a * a / x.exp_m1() + b * b * (-x).exp())
}

/// `S(x) = x²/(e^x - 1)`.
pub fn s_function(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x / x.exp_m1()
    }
}

/// Fisher information of reading out one spin, `(∂_β m0)² / (1 - m0²)`.
pub fn cw_local_fi(sol: &CwSolution) -> f64 {
    let one_minus = 1.0 - sol.m0 * sol.m0;
    if one_minus <= 0.0 {
        return 0.0;
    }
    sol.dm_dbeta * sol.dm_dbeta / one_minus
}

/// Which magnetization sectors enter the finite-`N` sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CwBranch {
    /// The full Gibbs sum over `-N ≤ M ≤ N`.
    #[default]
    Symmetric,
    /// Only `M > 0`, with `M = 0` at half weight: the symmetry-broken state
    /// that the positive saddle describes.
    Positive,
}

/// Exact finite-`N` Curie-Weiss decoherence factor as a charge spectrum over `M`.
pub fn cw_finite(params: &ThermoParams, spins: usize, branch: CwBranch) -> Result<ChargeSpectrum> {
    params.validate()?;
    if spins == 0 {
        return Err(Error::InvalidParameter("Curie-Weiss model needs at least one spin"));
    }
    if spins > MAX_SPINS {
        return Err(Error::TooManySpins(spins));
    }
    let nf = spins as f64;
    let (j, h, beta) = (params.coupling, params.field, params.beta);
    let energy = |m: f64| -(j / (2.0 * nf)) * m * m - h * m;

    // ln C(N, k), k = number of down spins, by running sums
    let mut log_binom = Vec::with_capacity(spins + 1);
    let mut acc = CompensatedSum::new();
    log_binom.push(0.0);
    for k in 0..spins {
        acc.add(((spins - k) as f64).ln() - ((k + 1) as f64).ln());
        log_binom.push(acc.value());
    }

    let mut log_w = Vec::with_capacity(spins + 1);
    for (k, &lb) in log_binom.iter().enumerate() {
        let m = spins as f64 - 2.0 * k as f64;
        let half = branch == CwBranch::Positive && 2 * k == spins;
        let excluded = branch == CwBranch::Positive && 2 * k > spins;
        log_w.push(if excluded {
            f64::NEG_INFINITY
        } else {
            lb - beta * energy(m) + if half { -core::f64::consts::LN_2 } else { 0.0 }
        });
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = log_w.iter().map(|&lw| (lw - max).exp()).sum::<CompensatedSum>().value();

    let width = 2 * spins + 1;
    let mut prob = alloc::vec![0.0; width];
    let mut weighted = alloc::vec![0.0; width];
    let mut mean = CompensatedSum::new();
    for (k, &lw) in log_w.iter().enumerate() {
        let m = spins as i64 - 2 * k as i64;
        let p = (lw - max).exp() / z;
        let slot = (m + spins as i64) as usize;
        prob[slot] = p;
        weighted[slot] = p * energy(m as f64);
        mean.add(weighted[slot]);
    }
    Ok(ChargeSpectrum::new(params.probe_rate, spins as i64, prob, weighted, mean.value()))
}

/// Finite-`N` decoherence series on a time grid.
pub fn cw_exact_finite_n(params: &ThermoParams, spins: usize, branch: CwBranch, times: &[f64]) -> Result<DecoherenceSeries> {
    cw_finite(params, spins, branch)?.series(times)
}
