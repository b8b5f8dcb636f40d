use thermoprobe_core::enumerate::{enumerate_gibbs, exact_cluster_marginal, exact_decoherence, exact_spectrum, ExactGibbs};
use thermoprobe_core::montecarlo::checkpoint::SamplerState;
use thermoprobe_core::montecarlo::{finite_difference_derivative, run_sampler, Algorithm, Sampler, SamplerConfig};
use thermoprobe_core::probe::{default_time_grid, optimize_qfi};
use thermoprobe_core::{ClusterSpec, Complex64, Lattice, ThermoParams};

const TIMES: [f64; 4] = [4.0, 8.0, 16.0, 24.0];

fn lattice() -> Lattice {
    Lattice::new(4).unwrap()
}

fn cluster(lat: &Lattice, n: usize) -> ClusterSpec {
    ClusterSpec::with_size(lat, lat.site(2, 2), n).unwrap()
}

fn params(beta_j: f64) -> ThermoParams {
    ThermoParams::new(1.0, beta_j, 0.1)
}

/// Collects standardized deviations and fails on any beyond `limit`.
struct Deviations {
    z: Vec<f64>,
    limit: f64,
}

impl Deviations {
    fn new(limit: f64) -> Self {
        Deviations { z: Vec::new(), limit }
    }

    fn check(&mut self, label: &str, estimate: f64, error: f64, exact: f64) {
        assert!(error > 0.0 && error.is_finite(), "{label}: error {error}");
        let z = (estimate - exact) / error;
        assert!(z.abs() < self.limit, "{label}: {estimate} ± {error} vs {exact} (z = {z:.2})");
        self.z.push(z);
    }

    fn mean_square(&self) -> f64 {
        self.z.iter().map(|z| z * z).sum::<f64>() / self.z.len() as f64
    }
}

fn compare_with_enumeration(algorithm: Algorithm, seed: u64) -> f64 {
    let lat = lattice();
    let c = cluster(&lat, 5);
    let mut dev = Deviations::new(4.0);
    for beta_j in [0.1, 0.3, 0.44, 0.6, 0.9] {
        let p = params(beta_j);
        let cfg = SamplerConfig::new(200_000, seed)
            .with_algorithm(algorithm)
            .with_symmetrize(true);
        let stats = run_sampler(&lat, &[c.clone()], &p, &cfg).unwrap();
        let g = enumerate_gibbs(&lat, &p).unwrap();
        let exact = exact_decoherence(&g, &c, &TIMES).unwrap();
        let mc = stats.decoherence(0, &TIMES).unwrap();
        let tag = format!("{algorithm:?} βJ={beta_j}");

        let e = stats.mean_energy().unwrap();
        dev.check(&format!("{tag} energy"), e.value, e.std_error, g.mean_energy());
        for k in 0..TIMES.len() {
            assert_eq!(mc.r[k].im, 0.0);
            assert_eq!(mc.dr[k].im, 0.0);
            dev.check(&format!("{tag} r(t={})", TIMES[k]), mc.r[k].re, mc.r_err[k].re, exact.r[k].re);
            dev.check(&format!("{tag} dr(t={})", TIMES[k]), mc.dr[k].re, mc.dr_err[k].re, exact.dr[k].re);
        }
        let fi = stats.local_fi(0).unwrap();
        let fi_exact = exact_cluster_marginal(&g, &c).unwrap().local_fisher_information();
        dev.check(&format!("{tag} local FI"), fi.value.value, fi.value.std_error, fi_exact);
        assert!(!fi.undersampled);
    }
    dev.mean_square()
}

#[test]
fn metropolis_matches_enumeration() {
    let ms = compare_with_enumeration(Algorithm::Metropolis, 11);
    // error bars neither far too small nor far too large
    assert!(ms > 0.2 && ms < 3.0, "mean z² = {ms}");
}

#[test]
fn wolff_matches_enumeration() {
    let ms = compare_with_enumeration(Algorithm::Wolff, 12);
    assert!(ms > 0.2 && ms < 3.0, "mean z² = {ms}");
}

#[test]
fn infinite_temperature_gives_cosine_power() {
    let lat = lattice();
    let c = cluster(&lat, 5);
    let p = params(0.0);
    let times: Vec<f64> = (0..30).map(|k| k as f64).collect();
    let stats = run_sampler(&lat, &[c.clone()], &p, &SamplerConfig::new(100_000, 3).with_symmetrize(true)).unwrap();
    let mc = stats.decoherence(0, &times).unwrap();
    assert_eq!(mc.r[0], Complex64::new(1.0, 0.0));
    for (k, &t) in times.iter().enumerate().skip(1) {
        let exact = (0.1 * t).cos().powi(5);
        assert!((mc.r[k].re - exact).abs() < 4.0 * mc.r_err[k].re, "t={t}: {} vs {exact}", mc.r[k].re);
    }
    let metropolis = SamplerConfig::new(1000, 3).with_algorithm(Algorithm::Metropolis);
    assert!(Sampler::new(&lat, &[c], &p, &metropolis).is_err());
}

#[test]
fn estimates_are_bounded_and_start_coherent() {
    let lat = lattice();
    let c = cluster(&lat, 9);
    let times: Vec<f64> = (0..60).map(|k| 0.5 * k as f64).collect();
    for sym in [false, true] {
        let cfg = SamplerConfig::new(20_000, 5).with_symmetrize(sym);
        let mc = run_sampler(&lat, &[c.clone()], &params(0.6), &cfg).unwrap().decoherence(0, &times).unwrap();
        assert_eq!(mc.r[0], Complex64::new(1.0, 0.0));
        assert!(mc.dr[0].norm() < 1e-12);
        assert!(mc.r.iter().all(|r| r.norm() <= 1.0 + 1e-12));
        if sym {
            assert!(mc.r.iter().all(|r| r.im == 0.0));
        }
    }
}

#[test]
fn doubling_block_size_keeps_error_bars() {
    let lat = lattice();
    let c = cluster(&lat, 5);
    let cfg = SamplerConfig::new(400_000, 21)
        .with_algorithm(Algorithm::Wolff)
        .with_symmetrize(true)
        .with_blocks(64);
    let stats = run_sampler(&lat, &[c], &params(0.44), &cfg).unwrap();
    let coarse = stats.rebinned(2);
    assert_eq!(coarse.blocks().len(), 32);
    let ratio = |a: f64, b: f64| (b / a - 1.0).abs();
    let (e1, e2) = (stats.mean_energy().unwrap().std_error, coarse.mean_energy().unwrap().std_error);
    assert!(ratio(e1, e2) < 0.2, "energy error {e1} vs {e2}");
    let (d1, d2) = (stats.decoherence(0, &TIMES).unwrap(), coarse.decoherence(0, &TIMES).unwrap());
    for k in 0..TIMES.len() {
        assert!(ratio(d1.r_err[k].re, d2.r_err[k].re) < 0.2, "t={}", TIMES[k]);
        assert!(ratio(d1.dr_err[k].re, d2.dr_err[k].re) < 0.2, "t={}", TIMES[k]);
    }
}

fn exact_magnetization_distribution(g: &ExactGibbs, sites: usize) -> Vec<f64> {
    let mut dist = vec![0.0; 2 * sites + 1];
    for i in 0..g.num_configs() {
        let m = sites as i64 - 2 * (i as u64).count_ones() as i64;
        dist[(m + sites as i64) as usize] += g.probability(i);
    }
    dist
}

#[test]
fn wolff_magnetization_histogram_is_gibbs() {
    let lat = lattice();
    let n = lat.num_sites();
    let p = params(0.44);
    let cfg = SamplerConfig::new(200_000, 8).with_algorithm(Algorithm::Wolff);
    let stats = run_sampler(&lat, &[], &p, &cfg).unwrap();
    let exact = exact_magnetization_distribution(&enumerate_gibbs(&lat, &p).unwrap(), n);

    // per-bin jackknife errors absorb the autocorrelation a raw-count χ² would ignore
    let (hist, err) = stats
        .jackknife(|c| Ok(c.magnetization.iter().map(|&k| k as f64 / c.samples as f64).collect()))
        .unwrap();
    let mut chi2 = 0.0;
    let mut dof = 0;
    for m in (0..=2 * n).step_by(2) {
        if exact[m] < 1e-4 {
            continue;
        }
        chi2 += ((hist[m] - exact[m]) / err[m]).powi(2);
        dof += 1;
    }
    assert!(dof >= 7);
    assert!(chi2 / (dof as f64) < 2.5, "χ²/dof = {}", chi2 / dof as f64);
    // odd magnetizations are impossible on 16 sites
    assert!(stats.magnetization_histogram().keys().all(|m| m % 2 == 0));
    let total: u64 = stats.magnetization_histogram().values().sum();
    assert_eq!(total, stats.samples_used());
}

#[test]
fn finite_difference_agrees_with_covariance_estimator() {
    let lat = lattice();
    let c = cluster(&lat, 5);
    let p = params(0.3);
    let h = 0.02;
    let cfg = SamplerConfig::new(200_000, 4)
        .with_algorithm(Algorithm::Metropolis)
        .with_symmetrize(true);
    let (fd, fd_err) = finite_difference_derivative(&lat, &c, &p, &cfg, &TIMES, h).unwrap();
    let at = |b: f64| exact_decoherence(&enumerate_gibbs(&lat, &p.with_beta(b)).unwrap(), &c, &TIMES).unwrap();
    let (up, down, mid) = (at(0.3 + h), at(0.3 - h), at(0.3));
    for k in 0..TIMES.len() {
        let exact_fd = (up.r[k].re - down.r[k].re) / (2.0 * h);
        assert!((exact_fd - mid.dr[k].re).abs() < 1e-2 * mid.dr[k].re.abs());
        assert!((fd[k].re - exact_fd).abs() < 4.0 * fd_err[k].re, "t={}: {} vs {exact_fd}", TIMES[k], fd[k].re);
    }
    assert!(finite_difference_derivative(&lat, &c, &p, &cfg, &TIMES, 0.5).is_err());
}

#[test]
fn readout_information_bounds_probe_information() {
    let lat = lattice();
    for beta_j in [0.1, 0.3, 0.44, 0.6, 0.9] {
        let g = enumerate_gibbs(&lat, &params(beta_j)).unwrap();
        for n in [1, 5, 9] {
            let c = cluster(&lat, n);
            let spec = exact_spectrum(&g, &c).unwrap();
            let qfi = optimize_qfi(&spec, &default_time_grid(&spec).unwrap()).unwrap();
            let fi = exact_cluster_marginal(&g, &c).unwrap().local_fisher_information();
            assert!(qfi.qfi_opt <= fi * (1.0 + 1e-9) + 1e-20, "βJ={beta_j} n={n}: {} > {fi}", qfi.qfi_opt);
        }
    }
}

#[test]
fn symmetrized_single_spin_carries_no_information() {
    let lat = lattice();
    let cfg = SamplerConfig::new(20_000, 6).with_symmetrize(true);
    let stats = run_sampler(&lat, &[cluster(&lat, 1)], &params(0.44), &cfg).unwrap();
    assert_eq!(stats.local_fi(0).unwrap().value.value, 0.0);
    let curve = stats.qfi(0, &TIMES).unwrap();
    assert!(curve.qfi.iter().all(|&f| f == 0.0));
}

#[test]
fn resume_through_serialized_checkpoint() {
    let lat = lattice();
    let clusters = [cluster(&lat, 5), cluster(&lat, 9)];
    let p = params(0.44);
    let cfg = SamplerConfig::new(5_000, 77).with_algorithm(Algorithm::Wolff);
    let straight = run_sampler(&lat, &clusters, &p, &cfg).unwrap();

    let mut first = Sampler::new(&lat, &clusters, &p, &cfg).unwrap();
    assert!(!first.advance(1_234));
    let bytes = first.state().to_bytes();
    drop(first);
    let state = SamplerState::from_bytes(&bytes).unwrap();
    assert_eq!(state.sweeps_done, 1_234);
    let resumed = Sampler::restore(&lat, &clusters, &p, state).unwrap().run();
    assert_eq!(resumed.blocks(), straight.blocks());
    assert_eq!(
        resumed.decoherence(1, &TIMES).unwrap().r,
        straight.decoherence(1, &TIMES).unwrap().r
    );
}
