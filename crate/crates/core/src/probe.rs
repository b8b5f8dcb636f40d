//! The qubit probe: pure dephasing, free induction decay, and the quantum
//! Fisher information on `β` carried by the dephased state.
//!
//! With the probe prepared in `|+⟩` the state at time `t` is
//! `ρ = ½ [[1, r], [r*, 1]]` (in the frame rotating with `ω_p`), and its QFI is
//!
//! ```text
//! F_β(t) = (4|∂r|² + [r*∂r - r∂r*]²) / (4 (1 - |r|²))
//!        = (|∂r|² - Im(r*∂r)²) / (1 - |r|²)
//! ```

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::search::{argmax, bisect, golden_section_max};
use crate::spectrum::Decoherence;
use crate::{Error, Estimate, Result};

/// `|r|²` may exceed one by this much before the input is rejected.
pub const COHERENCE_TOLERANCE: f64 = 1e-9;

/// Below this value of `1 - |r|²` the QFI is treated as the `0/0` limit.
const SINGULAR_GAP: f64 = 1e-12;

/// Default number of points of an automatic time grid.
pub const DEFAULT_GRID_POINTS: usize = 400;

/// 2×2 complex matrix, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Qubit state `[[p, c], [c*, 1 - p]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeState {
    pub population: f64,
    pub coherence: Complex64,
}

impl ProbeState {
    pub fn new(population: f64, coherence: Complex64) -> Result<Self> {
        if !(0.0..=1.0).contains(&population) {
            return Err(Error::InvalidParameter("population must lie in [0, 1]"));
        }
        if coherence.norm_sqr() > population * (1.0 - population) + 1e-15 {
            return Err(Error::InvalidParameter("coherence too large for a positive state"));
        }
        Ok(ProbeState {
            population,
            coherence,
        })
    }

    /// `|+⟩⟨+|`.
    pub fn plus() -> Self {
        ProbeState {
            population: 0.5,
            coherence: Complex64::new(0.5, 0.0),
        }
    }

    pub fn density_matrix(&self) -> Matrix2 {
        [
            [Complex64::new(self.population, 0.0), self.coherence],
            [self.coherence.conj(), Complex64::new(1.0 - self.population, 0.0)],
        ]
    }
}

/// Pure dephasing: populations stay, the coherence picks up `e^{-iω_p t} r`.
pub fn evolve_probe(initial: &ProbeState, r: Complex64, probe_frequency: f64, t: f64) -> ProbeState {
    let rotation = Complex64::from_polar(1.0, -probe_frequency * t);
    ProbeState {
        population: initial.population,
        coherence: initial.coherence * rotation * r,
    }
}

/// Free induction decay `tr{σ_x ρ(t)}` of a probe started in `|+⟩`, read
/// out in the rotating frame: `Re r`.
pub fn fid(r: Complex64) -> f64 {
    r.re
}

/// QFI of the dephased `|+⟩` probe with respect to `β`.
///
/// Returns `NaN` when `|r| > 1` beyond [`COHERENCE_TOLERANCE`], which only
/// happens for a broken estimator or an expansion outside its domain. At
/// `|r| = 1` the `0/0` limit is reported as zero; [`qfi_curve`] replaces such
/// points at `t > 0` by extrapolation.
pub fn qfi_from_r(r: Complex64, dr: Complex64) -> f64 {
    let r2 = r.norm_sqr();
    if !(r2 <= 1.0 + COHERENCE_TOLERANCE) || !dr.re.is_finite() || !dr.im.is_finite() {
        return f64::NAN;
    }
    let gap = 1.0 - r2;
    if gap <= SINGULAR_GAP {
        return 0.0;
    }
    let phase = (r.conj() * dr).im;
    let numerator = (dr.norm_sqr() - phase * phase).max(0.0);
    numerator / gap
}

fn is_singular(r: Complex64) -> bool {
    1.0 - r.norm_sqr() <= SINGULAR_GAP
}

/// QFI from the symmetric logarithmic derivative, evaluated in the
/// eigenbasis of `rho`:
/// `F = 2 Σ_{mn} |⟨ψ_m|∂ρ|ψ_n⟩|² / (ρ_m + ρ_n)`, skipping pairs with
/// `ρ_m + ρ_n < 1e-14`.
pub fn qfi_sld_oracle(rho: &Matrix2, drho: &Matrix2) -> Result<f64> {
    check_hermitian(rho)?;
    check_hermitian(drho)?;
    let (values, vectors) = hermitian_eigen(rho);
    let mut total = 0.0;
    for m in 0..2 {
        for n in 0..2 {
            let denom = values[m] + values[n];
            if denom < 1e-14 {
                continue;
            }
            let element = sandwich(&vectors[m], drho, &vectors[n]);
            total += 2.0 * element.norm_sqr() / denom;
        }
    }
    Ok(total)
}

/// Probe state and its `β`-derivative built from `(r, ∂_β r)` for `|+⟩`.
pub fn probe_state_derivative(r: Complex64, dr: Complex64) -> (Matrix2, Matrix2) {
    let half = Complex64::new(0.5, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let rho = [[half, r * 0.5], [r.conj() * 0.5, half]];
    let drho = [[zero, dr * 0.5], [dr.conj() * 0.5, zero]];
    (rho, drho)
}

fn check_hermitian(m: &Matrix2) -> Result<()> {
    let scale = m.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    if m[0][0].im.abs() > tol || m[1][1].im.abs() > tol || (m[0][1] - m[1][0].conj()).norm() > tol {
        return Err(Error::NotHermitian);
    }
    Ok(())
}

fn hermitian_eigen(m: &Matrix2) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let radius = (half * half + b.norm_sqr()).sqrt();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if b.norm() <= 1e-300 {
        return ([a, d], [[one, zero], [zero, one]]);
    }
    let upper = mean + radius;
    let lower = mean - radius;
    // Two algebraically equivalent eigenvector forms; keep the better conditioned.
    let v1 = [b, Complex64::new(upper - a, 0.0)];
    let v2 = [Complex64::new(upper - d, 0.0), b.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, norm) = if n1 >= n2 { (v1, n1.sqrt()) } else { (v2, n2.sqrt()) };
    let u = [v[0] / norm, v[1] / norm];
    let w = [-u[1].conj(), u[0].conj()];
    ([upper, lower], [u, w])
}

fn sandwich(left: &[Complex64; 2], m: &Matrix2, right: &[Complex64; 2]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += left[i].conj() * m[i][j] * right[j];
        }
    }
    acc
}

/// Converts a Fisher information on `β` into one on `T` (`k_B = 1`):
/// `F_T = β⁴ F_β`, so that `T² F_T = β² F_β`.
pub fn reparametrize(f_beta: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    Ok(beta.powi(4) * f_beta)
}

/// Decoherence factor and its `β`-derivative sampled on a time grid.
///
/// Errors are componentwise standard errors: `r_err[k].re` is the error of
/// `Re r(t_k)`, `r_err[k].im` that of `Im r(t_k)`. Analytic sources carry zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoherenceSeries {
    pub times: Vec<f64>,
    pub r: Vec<Complex64>,
    pub dr: Vec<Complex64>,
    pub r_err: Vec<Complex64>,
    pub dr_err: Vec<Complex64>,
}

impl DecoherenceSeries {
    pub fn exact(times: Vec<f64>, r: Vec<Complex64>, dr: Vec<Complex64>) -> Self {
        let zeros = alloc::vec![Complex64::new(0.0, 0.0); times.len()];
        DecoherenceSeries {
            times,
            r,
            dr,
            r_err: zeros.clone(),
            dr_err: zeros,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn fid(&self) -> Vec<f64> {
        self.r.iter().map(|&r| fid(r)).collect()
    }
}

/// QFI as a function of interrogation time, with its maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct QfiCurve {
    pub times: Vec<f64>,
    pub qfi: Vec<f64>,
    /// First-order propagated errors (zero for analytic sources).
    pub qfi_err: Vec<f64>,
    pub t_opt: f64,
    pub qfi_opt: f64,
    /// Standard error of `qfi_opt`.
    pub qfi_opt_err: f64,
    /// The maximum sits at the edge of the grid; the grid is too short or too coarse.
    pub boundary_warning: bool,
    /// Grid indices at `|r| = 1` with `t > 0` whose value was extrapolated.
    pub extrapolated: Vec<usize>,
    /// `t_opt` comes from local refinement rather than the grid itself.
    pub refined: bool,
}

impl QfiCurve {
    /// Dimensionless `β² F_opt`.
    pub fn scaled_opt(&self, beta: f64) -> f64 {
        beta * beta * self.qfi_opt
    }

    pub fn scaled(&self, beta: f64) -> Vec<f64> {
        self.qfi.iter().map(|f| beta * beta * f).collect()
    }
}

/// Evaluates the QFI along a sampled series.
///
/// Points with `|r| = 1` at `t > 0` (coherence revivals) are replaced by a
/// quadratic extrapolation from the three preceding grid points and listed
/// in [`QfiCurve::extrapolated`]. The maximum is the grid maximum.
pub fn qfi_curve(series: &DecoherenceSeries) -> Result<QfiCurve> {
    if series.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = series.len();
    let mut qfi = Vec::with_capacity(n);
    let mut extrapolated = Vec::new();
    for k in 0..n {
        let (t, r, dr) = (series.times[k], series.r[k], series.dr[k]);
        if t > 0.0 && is_singular(r) {
            extrapolated.push(k);
            qfi.push(if k >= 3 {
                let (t1, t2, t3) = (series.times[k - 3], series.times[k - 2], series.times[k - 1]);
                let (f1, f2, f3) = (qfi[k - 3], qfi[k - 2], qfi[k - 1]);
                lagrange3(t, [t1, t2, t3], [f1, f2, f3]).max(0.0)
            } else {
                0.0
            });
        } else {
            qfi.push(qfi_from_r(r, dr));
        }
    }
    let qfi_err: Vec<f64> = (0..n)
        .map(|k| propagate_error(series.r[k], series.dr[k], series.r_err[k], series.dr_err[k]))
        .collect();
    let best = argmax(&qfi).ok_or(Error::InvalidParameter("QFI is not finite anywhere on the grid"))?;
    Ok(QfiCurve {
        times: series.times.clone(),
        t_opt: series.times[best],
        qfi_opt: qfi[best],
        qfi_opt_err: qfi_err[best],
        boundary_warning: at_boundary(&series.times, best),
        qfi,
        qfi_err,
        extrapolated,
        refined: false,
    })
}

fn at_boundary(times: &[f64], best: usize) -> bool {
    let last = times.len() - 1;
    best == last || best == 0 || (best == 1 && times[0] == 0.0)
}

fn lagrange3(t: f64, x: [f64; 3], y: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= (t - x[j]) / (x[i] - x[j]);
            }
        }
        acc += w * y[i];
    }
    acc
}

/// First-order error propagation through the QFI functional, treating the
/// four real components of `(r, ∂r)` as independent.
pub fn propagate_error(r: Complex64, dr: Complex64, r_err: Complex64, dr_err: Complex64) -> f64 {
    let sigmas = [r_err.re, r_err.im, dr_err.re, dr_err.im];
    if sigmas.iter().all(|&s| s == 0.0) {
        return 0.0;
    }
    let x = [r.re, r.im, dr.re, dr.im];
    let eval = |v: [f64; 4]| qfi_from_r(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]));
    let mut var = 0.0;
    for k in 0..4 {
        if sigmas[k] == 0.0 {
            continue;
        }
        let h = 1e-7 * x[k].abs().max(1e-3);
        let mut up = x;
        let mut down = x;
        up[k] += h;
        down[k] -= h;
        let (fu, fd) = (eval(up), eval(down));
        let slope = if fu.is_finite() && fd.is_finite() {
            (fu - fd) / (2.0 * h)
        } else {
            // one-sided when the upper point leaves |r| ≤ 1
            (eval(x) - fd) / h
        };
        var += slope * slope * sigmas[k] * sigmas[k];
    }
    var.sqrt()
}

/// Grid scan of the QFI followed by golden-section refinement on the
/// bracket around the grid maximum.
///
/// The refinement is skipped when the maximum sits on the grid boundary;
/// `boundary_warning` is then set and `t_opt` is the grid point.
pub fn optimize_qfi<D: Decoherence + ?Sized>(model: &D, times: &[f64]) -> Result<QfiCurve> {
    let series = model.series(times)?;
    let mut curve = qfi_curve(&series)?;
    if curve.boundary_warning || times.len() < 3 {
        return Ok(curve);
    }
    let best = times.iter().position(|&t| t == curve.t_opt).unwrap_or(0);
    let (lo, hi) = (times[best - 1], times[best + 1]);
    let objective = |t: f64| match model.factor(t) {
        Ok((r, dr)) => {
            let f = qfi_from_r(r, dr);
            if f.is_finite() {
                f
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    };
    let (t, f) = golden_section_max(objective, lo, hi, 1e-12 * hi.max(1e-300), 200);
    if f > curve.qfi_opt {
        curve.t_opt = t;
        curve.qfi_opt = f;
        curve.refined = true;
    }
    Ok(curve)
}

/// Evenly spaced grid `0, Δ, ..., t_max`.
pub fn linear_grid(t_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let step = t_max / (points - 1) as f64;
    (0..points).map(|k| k as f64 * step).collect()
}

/// First time at which `|r(t)|` falls to `level`, searched on `[0, t_max]`.
/// `None` if the coherence never drops that low in the window.
pub fn coherence_time<D: Decoherence + ?Sized>(model: &D, level: f64, t_max: f64) -> Result<Option<f64>> {
    const SCAN: usize = 2000;
    let excess = |t: f64| -> Result<f64> { Ok(model.factor(t)?.0.norm() - level) };
    let mut prev_t = 0.0;
    for k in 1..=SCAN {
        let t = t_max * k as f64 / SCAN as f64;
        if excess(t)? <= 0.0 {
            let f = |s: f64| excess(s).unwrap_or(-1.0);
            return Ok(Some(bisect(f, prev_t, t, 80)));
        }
        prev_t = t;
    }
    Ok(None)
}

/// Automatic time grid: [`DEFAULT_GRID_POINTS`] points on `[0, 6τ̂]`, where
/// `τ̂` is the `1/e` time of `|r|`, clipped to the model's time window.
pub fn default_time_grid<D: Decoherence + ?Sized>(model: &D) -> Result<Vec<f64>> {
    let window = model.time_window();
    let t_max = match coherence_time(model, (-1.0f64).exp(), window)? {
        Some(tau) => (6.0 * tau).min(window),
        None => window,
    };
    Ok(linear_grid(t_max, DEFAULT_GRID_POINTS))
}

/// Optimal QFI with its error bar.
pub fn optimal_qfi_estimate(curve: &QfiCurve) -> Estimate {
    Estimate {
        value: curve.qfi_opt,
        std_error: curve.qfi_opt_err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evolve_keeps_populations() {
        let p = ProbeState::new(0.3, c(0.2, 0.1)).unwrap();
        let full = evolve_probe(&p, c(1.0, 0.0), 2.0, 0.7);
        assert_eq!(full.population, 0.3);
        assert!((full.coherence.norm() - p.coherence.norm()).abs() < 1e-15);
        let gone = evolve_probe(&p, c(0.0, 0.0), 2.0, 0.7);
        assert_eq!(gone.coherence, c(0.0, 0.0));
        assert_eq!(gone.population, 0.3);
        let half = ProbeState::new(0.5, c(0.5, 0.0)).unwrap();
        let out = evolve_probe(&half, c(0.6, 0.3), 0.0, 5.0);
        assert!((out.coherence - c(0.3, 0.15)).norm() < 1e-15);
    }

    #[test]
    fn rejects_unphysical_state() {
        assert!(ProbeState::new(0.5, c(0.6, 0.0)).is_err());
        assert!(ProbeState::new(1.2, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn qfi_trivial_cases() {
        assert_eq!(qfi_from_r(c(1.0, 0.0), c(0.0, 0.0)), 0.0);
        let (r, dr) = (0.6, -0.8);
        let f = qfi_from_r(c(r, 0.0), c(dr, 0.0));
        assert!((f - dr * dr / (1.0 - r * r)).abs() < 1e-15);
        assert!(qfi_from_r(c(1.1, 0.0), c(0.1, 0.0)).is_nan());
    }

    #[test]
    fn qfi_is_phase_invariant() {
        let (r, dr) = (c(0.3, -0.4), c(0.7, 0.2));
        let base = qfi_from_r(r, dr);
        for phi in [0.3, 1.7, -2.9] {
            let u = Complex64::from_polar(1.0, phi);
            assert!((qfi_from_r(u * r, u * dr) - base).abs() < 1e-13 * base);
        }
    }

    #[test]
    fn sld_classical_coin() {
        let q: f64 = 0.3;
        let dq: f64 = 0.7;
        let rho = [[c(q, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0 - q, 0.0)]];
        let drho = [[c(dq, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-dq, 0.0)]];
        let f = qfi_sld_oracle(&rho, &drho).unwrap();
        assert!((f - (dq * dq / q + dq * dq / (1.0 - q))).abs() < 1e-13);
        let zero = [[c(0.0, 0.0); 2]; 2];
        assert_eq!(qfi_sld_oracle(&rho, &zero).unwrap(), 0.0);
    }

    #[test]
    fn sld_rejects_non_hermitian() {
        let rho = [[c(0.5, 0.0), c(0.1, 0.0)], [c(0.2, 0.0), c(0.5, 0.0)]];
        let zero = [[c(0.0, 0.0); 2]; 2];
        assert_eq!(qfi_sld_oracle(&rho, &zero), Err(Error::NotHermitian));
    }

    #[test]
    fn sld_matches_closed_form() {
        let (r, dr) = (c(0.2, 0.5), c(-0.3, 0.9));
        let (rho, drho) = probe_state_derivative(r, dr);
        let sld = qfi_sld_oracle(&rho, &drho).unwrap();
        assert!((sld - qfi_from_r(r, dr)).abs() < 1e-12 * sld);
    }

    #[test]
    fn reparametrization() {
        assert_eq!(reparametrize(1.0, 1.0).unwrap(), 1.0);
        let ft = reparametrize(4.0, 2.0).unwrap();
        assert_eq!(ft, 64.0);
        let t: f64 = 0.5;
        assert_eq!(t * t * ft, 16.0);
        assert_eq!(reparametrize(1.0, 0.0), Err(Error::NonPositiveBeta(0.0)));
    }

    #[test]
    fn revival_points_are_extrapolated() {
        let times: Vec<f64> = (0..6).map(|k| k as f64).collect();
        // F = t² away from the revival at t = 5
        let mut r = Vec::new();
        let mut dr = Vec::new();
        for &t in &times {
            if t == 5.0 || t == 0.0 {
                r.push(c(1.0, 0.0));
                dr.push(c(0.0, 0.0));
            } else {
                let rr: f64 = 0.5;
                r.push(c(rr, 0.0));
                dr.push(c(t * (1.0 - rr * rr).sqrt(), 0.0));
            }
        }
        let curve = qfi_curve(&DecoherenceSeries::exact(times, r, dr)).unwrap();
        assert_eq!(curve.extrapolated, [5]);
        assert!((curve.qfi[5] - 25.0).abs() < 1e-9);
        assert!(curve.boundary_warning);
    }

    #[test]
    fn monotone_curve_flags_boundary() {
        let times = linear_grid(1.0, 11);
        let r: Vec<Complex64> = times.iter().map(|_| c(0.0, 0.0)).collect();
        let dr: Vec<Complex64> = times
            .iter()
            .map(|&t| if t == 0.0 { c(0.0, 0.0) } else { c((2.0 - t).sqrt(), 0.0) })
            .collect();
        let curve = qfi_curve(&DecoherenceSeries::exact(times.clone(), r, dr)).unwrap();
        assert!(curve.boundary_warning);
        assert_eq!(curve.t_opt, times[1]);
    }

    #[test]
    fn error_propagation_of_real_case() {
        let (r, dr) = (0.6, 0.5);
        let se = 1e-3;
        let err = propagate_error(c(r, 0.0), c(dr, 0.0), c(0.0, 0.0), c(se, 0.0));
        let expect = 2.0 * dr / (1.0 - r * r) * se;
        assert!((err - expect).abs() < 1e-6 * expect);
    }
}
