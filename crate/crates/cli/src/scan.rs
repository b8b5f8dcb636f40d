//! Evaluation of one β point for every probed cluster, per model.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thermoprobe_core::analytic::{cw_finite, cw_local_fi, cw_saddle_point, mft_solve, CwBranch, HteModel, MftDecoherence};
use thermoprobe_core::enumerate::{enumerate_gibbs, exact_cluster_marginal, exact_spectrum};
use thermoprobe_core::montecarlo::checkpoint::SamplerState;
use thermoprobe_core::montecarlo::{SampleStats, Sampler};
use thermoprobe_core::probe::{coherence_time, default_time_grid, fid, optimize_qfi};
use thermoprobe_core::{ClusterSpec, Decoherence, Estimate, Lattice, QfiCurve};

use crate::config::{Model, RunConfig, TimeGrid};
use crate::error::CliError;

/// Level of `|r|` that defines the decay time: the `e^{-1/2}` point of a
/// Gaussian envelope `exp(-t²/2τ²)`.
pub const DECAY_LEVEL: f64 = 0.606_530_659_712_633_4;

/// What a command needs from each cluster.
#[derive(Clone, Copy, Debug, Default)]
pub struct Needs {
    pub qfi: bool,
    pub local_fi: bool,
    pub fid: bool,
}

#[derive(Clone, Debug)]
pub struct FidTrace {
    pub times: Vec<f64>,
    pub fid: Vec<f64>,
    pub abs_r: Vec<f64>,
    /// `None` when `|r|` never reaches the decay level on the grid.
    pub decay_time: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ClusterResult {
    pub n: usize,
    pub qfi: Option<QfiCurve>,
    pub local_fi: Option<Estimate>,
    /// Optimal QFI over local FI.
    pub ratio: Option<Estimate>,
    pub fid: Option<FidTrace>,
    pub undersampled: bool,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub index: usize,
    pub beta_ratio: f64,
    pub beta: f64,
    pub clusters: Vec<ClusterResult>,
    pub warnings: Vec<String>,
    /// `(seed, stream)` of the chain, for sampled points.
    pub seed: Option<(u64, u64)>,
    pub seconds: f64,
}

/// Cluster disks shared by every β point of a lattice model.
pub fn clusters(config: &RunConfig) -> Result<(Lattice, Vec<ClusterSpec>), CliError> {
    let lattice = Lattice::new(config.side)?;
    let clusters = config
        .radii
        .iter()
        .map(|&r| ClusterSpec::centered(&lattice, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lattice, clusters))
}

fn times_for<D: Decoherence + ?Sized>(grid: &TimeGrid, model: &D) -> Result<Vec<f64>, CliError> {
    Ok(match grid {
        TimeGrid::Auto => default_time_grid(model)?,
        TimeGrid::Values(v) => v.clone(),
    })
}

fn fid_trace<D: Decoherence + ?Sized>(model: &D, times: &[f64]) -> Result<FidTrace, CliError> {
    let series = model.series(times)?;
    let t_max = *times.last().unwrap();
    Ok(FidTrace {
        times: times.to_vec(),
        fid: series.r.iter().map(|&r| fid(r)).collect(),
        abs_r: series.r.iter().map(|r| r.norm()).collect(),
        decay_time: coherence_time(model, DECAY_LEVEL, t_max)?,
    })
}

/// Results for a model without sampling noise.
fn deterministic<D: Decoherence + ?Sized>(
    model: &D,
    n: usize,
    local_fi: Option<f64>,
    grid: &TimeGrid,
    needs: Needs,
) -> Result<ClusterResult, CliError> {
    let times = times_for(grid, model)?;
    let qfi = if needs.qfi { Some(optimize_qfi(model, &times)?) } else { None };
    let local_fi = if needs.local_fi { local_fi.map(Estimate::exact) } else { None };
    let ratio = match (&qfi, local_fi) {
        (Some(q), Some(f)) => Some(Estimate::exact(q.qfi_opt / f.value)),
        _ => None,
    };
    let fid = if needs.fid { Some(fid_trace(model, &times)?) } else { None };
    Ok(ClusterResult {
        n,
        qfi,
        local_fi,
        ratio,
        fid,
        undersampled: false,
    })
}

/// Per-run context shared by all β points.
pub struct Scan<'a> {
    pub config: &'a RunConfig,
    pub needs: Needs,
    pub grid: TimeGrid,
    pub lattice: Option<(Lattice, Vec<ClusterSpec>)>,
    pub checkpoints: Option<PathBuf>,
    /// Run-level warnings found while setting up.
    pub notes: Vec<String>,
}

impl<'a> Scan<'a> {
    pub fn new(config: &'a RunConfig, needs: Needs, checkpoints: Option<PathBuf>) -> Result<Self, CliError> {
        let lattice = match config.model {
            Model::Cw => None,
            _ => Some(clusters(config)?),
        };
        let mut notes = Vec::new();
        if let Some((lat, specs)) = &lattice {
            for c in specs.iter().filter(|c| 2.0 * c.radius() >= lat.side() as f64) {
                notes.push(format!(
                    "disk of radius {} wraps around the {}×{} lattice and holds {} distinct sites",
                    c.radius(),
                    lat.side(),
                    lat.side(),
                    c.len()
                ));
            }
        }
        Ok(Scan {
            config,
            needs,
            grid: config.time_grid()?,
            lattice,
            checkpoints,
            notes,
        })
    }

    pub fn evaluate(&self, index: usize, beta_ratio: f64) -> Result<PointResult, CliError> {
        let start = Instant::now();
        let beta = beta_ratio * self.config.beta_c();
        let p = self.config.thermo_params(beta)?;
        let mut warnings = Vec::new();
        let mut seed = None;
        let clusters = match self.config.model {
            Model::Cw if self.needs.fid => {
                // the finite sum stays regular at Jβ = 1, where the saddle point is singular
                let branch = if p.beta * p.coupling > 1.0 { CwBranch::Positive } else { CwBranch::Symmetric };
                let spectrum = cw_finite(&p, self.config.spins, branch)?;
                vec![deterministic(&spectrum, self.config.spins, None, &self.grid, self.needs)?]
            }
            Model::Cw => {
                let sol = cw_saddle_point(&p, self.config.spins)?;
                vec![deterministic(&sol, self.config.spins, Some(cw_local_fi(&sol)), &self.grid, self.needs)?]
            }
            Model::Exact => {
                let (lat, specs) = self.lattice.as_ref().unwrap();
                let g = enumerate_gibbs(lat, &p)?;
                specs
                    .iter()
                    .map(|c| {
                        let fi = exact_cluster_marginal(&g, c)?.local_fisher_information();
                        deterministic(&exact_spectrum(&g, c)?, c.len(), Some(fi), &self.grid, self.needs)
                    })
                    .collect::<Result<_, _>>()?
            }
            Model::Mft => {
                let sol = mft_solve(&p)?;
                let (_, specs) = self.lattice.as_ref().unwrap();
                specs
                    .iter()
                    .map(|c| deterministic(&MftDecoherence::new(sol, c.len()), c.len(), None, &self.grid, self.needs))
                    .collect::<Result<_, _>>()?
            }
            Model::Hte => {
                let (lat, specs) = self.lattice.as_ref().unwrap();
                let mut out = Vec::with_capacity(specs.len());
                for c in specs {
                    let model = HteModel::new(p, lat.bond_counts(c)?, c.len())?.with_guard(self.config.hte_guard);
                    if model.extrapolated() {
                        warnings.push(format!(
                            "β/β_c = {beta_ratio}: βJ = {:.4} is beyond the expansion guard {}",
                            beta * p.coupling,
                            self.config.hte_guard
                        ));
                    }
                    out.push(deterministic(&model, c.len(), None, &self.grid, self.needs)?);
                }
                out
            }
            Model::Mc => {
                let cfg = self.config.sampler_config(index);
                seed = Some((cfg.seed, cfg.stream));
                let stats = self.sample(index, &p)?;
                self.sampled(&stats, &mut warnings, beta_ratio)?
            }
        };
        for c in &clusters {
            if let Some(q) = &c.qfi {
                if q.boundary_warning && q.qfi_opt > 0.0 {
                    warnings.push(format!("β/β_c = {beta_ratio}, n = {}: QFI maximum at the edge of the time grid", c.n));
                }
            }
        }
        Ok(PointResult {
            index,
            beta_ratio,
            beta,
            clusters,
            warnings,
            seed,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn sampled(&self, stats: &SampleStats, warnings: &mut Vec<String>, beta_ratio: f64) -> Result<Vec<ClusterResult>, CliError> {
        let (_, specs) = self.lattice.as_ref().unwrap();
        let mut out = Vec::with_capacity(specs.len());
        for (i, c) in specs.iter().enumerate() {
            let spectrum = stats.spectrum(i)?;
            let times = times_for(&self.grid, &spectrum)?;
            let qfi = if self.needs.qfi { Some(stats.qfi(i, &times)?) } else { None };
            let mut undersampled = false;
            let (local_fi, ratio) = if self.needs.local_fi {
                let fi = stats.local_fi(i)?;
                if fi.undersampled {
                    undersampled = true;
                    warnings.push(format!(
                        "β/β_c = {beta_ratio}, n = {}: {} occupied configurations from {} samples",
                        c.len(),
                        fi.occupied,
                        stats.samples_used()
                    ));
                }
                let ratio = if self.needs.qfi { Some(stats.information_ratio(i, &times)?) } else { None };
                (Some(fi.value), ratio)
            } else {
                (None, None)
            };
            let fid = if self.needs.fid { Some(fid_trace(&spectrum, &times)?) } else { None };
            out.push(ClusterResult {
                n: c.len(),
                qfi,
                local_fi,
                ratio,
                fid,
                undersampled,
            });
        }
        Ok(out)
    }

    fn sample(&self, index: usize, p: &thermoprobe_core::ThermoParams) -> Result<SampleStats, CliError> {
        let (lat, specs) = self.lattice.as_ref().unwrap();
        let cfg = self.config.sampler_config(index);
        let Some(dir) = &self.checkpoints else {
            return Ok(Sampler::new(lat, specs, p, &cfg)?.run());
        };
        let path = dir.join(format!("point-{index:04}.tpck"));
        let mut sampler = match fs::read(&path) {
            Ok(bytes) => {
                let state = SamplerState::from_bytes(&bytes).map_err(|source| CliError::Checkpoint {
                    path: path.display().to_string(),
                    source,
                })?;
                let expected = *Sampler::new(lat, specs, p, &cfg)?.config();
                if state.config != expected {
                    return Err(CliError::Config(format!("{} was written by a different run", path.display())));
                }
                Sampler::restore(lat, specs, p, state)
                    .map_err(|_| CliError::Config(format!("{} was written by a different run", path.display())))?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sampler::new(lat, specs, p, &cfg)?,
            Err(e) => return Err(e.into()),
        };
        while !sampler.is_done() {
            sampler.advance(self.config.sampler.checkpoint_every);
            write_atomic(&path, &sampler.state().to_bytes())?;
        }
        Ok(sampler.finish())
    }
}

/// Writes through a temporary file so an interrupted write never leaves a
/// truncated checkpoint behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
