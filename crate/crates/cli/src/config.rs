//! Run configuration: a TOML file, then command-line overrides on top.
//!
//! Every key is optional. A file containing only `model = "cw"` is a valid
//! configuration; everything else takes the defaults listed on each field.
//! Unknown keys are rejected so that a typo never silently falls back to a
//! default.
//!
//! ```toml
//! model = "mc"
//! side = 20
//! beta_grid = "0.5:1.5:21"      # β/β_c, start:stop:count or a list
//! t_grid = "auto"               # "auto", "t_max:points" or a list
//! radii = [0.0, 1.0, 1.4142135623730951, 2.0]
//!
//! [params]
//! coupling = 0.25
//! probe_rate = 0.1
//!
//! [sampler]
//! algorithm = "auto"
//! sweeps = 1000000
//! seed = 1
//! symmetrize = false
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermoprobe_core::montecarlo::{Algorithm, SamplerConfig, DEFAULT_BLOCKS, DEFAULT_MARGINAL_CAP};
use thermoprobe_core::{onsager_beta_c, ThermoParams};

use crate::error::CliError;

/// Where the decoherence factor comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Monte-Carlo sampling of the lattice.
    #[default]
    Mc,
    /// Exhaustive enumeration (lattices of at most 24 spins).
    Exact,
    /// Curie-Weiss saddle point on `spins` fully connected spins.
    Cw,
    /// Mean-field product state.
    Mft,
    /// Second-order high-temperature expansion.
    Hte,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Mc => "mc",
            Model::Exact => "exact",
            Model::Cw => "cw",
            Model::Mft => "mft",
            Model::Hte => "hte",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated rows plus a `.meta.json` sidecar.
    #[default]
    Csv,
    /// One JSON document with metadata and rows.
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    /// Wolff near `β_c` (within 20%), Metropolis elsewhere.
    #[default]
    Auto,
    Metropolis,
    Wolff,
}

impl From<AlgorithmChoice> for Algorithm {
    fn from(a: AlgorithmChoice) -> Self {
        match a {
            AlgorithmChoice::Auto => Algorithm::Auto,
            AlgorithmChoice::Metropolis => Algorithm::Metropolis,
            AlgorithmChoice::Wolff => Algorithm::Wolff,
        }
    }
}

/// A grid given either as explicit values or as a compact string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Text(String),
}

impl Grid {
    /// `start:stop:count` (inclusive, evenly spaced) or `a,b,c`.
    pub fn parse(text: &str) -> Result<Vec<f64>, CliError> {
        let text = text.trim();
        let bad = || CliError::Config(format!("cannot parse grid {text:?}"));
        if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            let [start, stop, count] = parts[..] else {
                return Err(bad());
            };
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            return match count {
                0 => Err(bad()),
                1 => Ok(vec![start]),
                _ => Ok((0..count)
                    .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                    .collect()),
            };
        }
        text.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
    }

    fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::Values(v) => Ok(v.clone()),
            Grid::Text(t) => Grid::parse(t),
        }
    }
}

/// Interrogation times: chosen per point, a linear grid, or explicit values.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeGrid {
    /// 400 points up to six `1/e` coherence times, within the model's window.
    Auto,
    Values(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    /// `J`, default 1/4.
    pub coupling: f64,
    /// Longitudinal field `h` (Curie-Weiss and enumeration only), default 0.
    pub field: f64,
    /// Probe coupling `g`, default 0.1 (= 0.4 J).
    pub probe_rate: f64,
    /// Probe splitting `ω_p` entering the FID, default 0.
    pub probe_frequency: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            coupling: 0.25,
            field: 0.0,
            probe_rate: 0.1,
            probe_frequency: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    /// `auto`, `metropolis` or `wolff`; default `auto`.
    pub algorithm: AlgorithmChoice,
    /// Total sweeps per β point including burn-in, default 10⁶.
    pub sweeps: u64,
    /// Discarded sweeps; default a tenth of `sweeps`.
    pub burn_in: Option<u64>,
    /// Sweeps between measurements, default 1.
    pub thinning: u64,
    /// Base seed, default 1. β point `k` runs on ChaCha stream `k`.
    pub seed: u64,
    /// Record each sample together with its global flip, default false.
    pub symmetrize: bool,
    /// Jackknife blocks, default 32.
    pub blocks: usize,
    /// Largest cluster whose configuration marginal is kept, default 13.
    pub marginal_cap: usize,
    /// Sweeps between checkpoints when resuming is enabled, default 10⁵.
    pub checkpoint_every: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            algorithm: AlgorithmChoice::Auto,
            sweeps: 1_000_000,
            burn_in: None,
            thinning: 1,
            seed: 1,
            symmetrize: false,
            blocks: DEFAULT_BLOCKS,
            marginal_cap: DEFAULT_MARGINAL_CAP,
            checkpoint_every: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `mc`, `exact`, `cw`, `mft` or `hte`; default `mc`.
    pub model: Model,
    /// Lattice side `L`, default 20.
    pub side: usize,
    /// Curie-Weiss spin count `N`, default 400.
    pub spins: usize,
    /// Inverse temperatures as multiples of `β_c`, default `0.5:1.5:21`.
    /// `β_c` is Onsager's value for lattice models and `1/J` for Curie-Weiss.
    pub beta_grid: Grid,
    /// `auto` (default), `t_max:points`, or explicit times.
    pub t_grid: Grid,
    /// Disk radii of the probed clusters, default `[0, 1, √2, 2]` (n = 1, 5, 9, 13).
    pub radii: Vec<f64>,
    pub params: ParamsSection,
    pub sampler: SamplerSection,
    /// `βJ` above which the high-temperature expansion is flagged, default 0.25.
    pub hte_guard: f64,
    /// Output file; standard output when absent.
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: Model::Mc,
            side: 20,
            spins: 400,
            beta_grid: Grid::Text("0.5:1.5:21".into()),
            t_grid: Grid::Text("auto".into()),
            radii: vec![0.0, 1.0, std::f64::consts::SQRT_2, 2.0],
            params: ParamsSection::default(),
            sampler: SamplerSection::default(),
            hte_guard: 0.25,
            out: None,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    /// Reference inverse temperature of the `β/β_c` axis.
    pub fn beta_c(&self) -> f64 {
        match self.model {
            Model::Cw => 1.0 / self.params.coupling,
            _ => onsager_beta_c(self.params.coupling),
        }
    }

    pub fn beta_ratios(&self) -> Result<Vec<f64>, CliError> {
        let v = self.beta_grid.values()?;
        if v.is_empty() || v.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(CliError::Config("β grid must be non-empty with finite, non-negative entries".into()));
        }
        Ok(v)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        let bad = |msg: &str| CliError::Config(format!("time grid: {msg}"));
        let values = match &self.t_grid {
            Grid::Text(t) if t.trim() == "auto" => return Ok(TimeGrid::Auto),
            Grid::Text(t) if t.matches(':').count() == 1 => {
                let (max, points) = t.split_once(':').unwrap();
                let max: f64 = max.trim().parse().map_err(|_| bad("bad t_max"))?;
                let points: usize = points.trim().parse().map_err(|_| bad("bad point count"))?;
                if points < 3 || !(max > 0.0) || !max.is_finite() {
                    return Err(bad("need t_max > 0 and at least 3 points"));
                }
                thermoprobe_core::probe::linear_grid(max, points)
            }
            other => other.values()?,
        };
        if values.len() < 3 || values.windows(2).any(|w| !(w[1] > w[0])) || !(values[0] >= 0.0) {
            return Err(bad("need at least 3 increasing, non-negative times"));
        }
        Ok(TimeGrid::Values(values))
    }

    pub fn thermo_params(&self, beta: f64) -> Result<ThermoParams, CliError> {
        let p = ThermoParams::new(self.params.coupling, beta, self.params.probe_rate)
            .with_field(self.params.field);
        let p = ThermoParams {
            probe_frequency: self.params.probe_frequency,
            ..p
        };
        p.validate()?;
        Ok(p)
    }

    /// Sampler settings for the `k`-th β point.
    pub fn sampler_config(&self, k: usize) -> SamplerConfig {
        let s = &self.sampler;
        SamplerConfig {
            algorithm: s.algorithm.into(),
            sweeps: s.sweeps,
            burn_in: s.burn_in.unwrap_or(s.sweeps / 10),
            thinning: s.thinning,
            seed: s.seed,
            stream: k as u64,
            symmetrize: s.symmetrize,
            blocks: s.blocks,
            marginal_cap: s.marginal_cap,
        }
    }

    /// Checks everything that does not need a model evaluation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.beta_ratios()?;
        self.time_grid()?;
        if self.side < 2 {
            return Err(CliError::Config("lattice side must be at least 2".into()));
        }
        if self.model == Model::Cw && self.spins == 0 {
            return Err(CliError::Config("Curie-Weiss needs at least one spin".into()));
        }
        if self.model != Model::Cw && self.radii.is_empty() {
            return Err(CliError::Config("no cluster radii given".into()));
        }
        if self.sampler.checkpoint_every == 0 {
            return Err(CliError::Config("checkpoint_every must be positive".into()));
        }
        self.thermo_params(1.0)?;
        if self.model == Model::Mc {
            self.sampler_config(0).validate()?;
        }
        Ok(())
    }

    /// Canonical text the config hash is taken over. The output location is
    /// left out: writing the same run elsewhere does not change it.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_string(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sweeps = 10").is_err());
        assert!(RunConfig::from_toml("[sampler]\nsweep = 10").is_err());
        assert!(RunConfig::from_toml("[params]\nJ = 1.0").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Grid::parse("0.5, 2").unwrap(), vec![0.5, 2.0]);
        assert!(Grid::parse("1:2").is_err());
        let c = RunConfig::from_toml("beta_grid = [0.9, 1.1]\nt_grid = \"10:5\"").unwrap();
        assert_eq!(c.beta_ratios().unwrap(), vec![0.9, 1.1]);
        assert_eq!(c.time_grid().unwrap(), TimeGrid::Values(vec![0.0, 2.5, 5.0, 7.5, 10.0]));
        assert_eq!(RunConfig::default().time_grid().unwrap(), TimeGrid::Auto);
        let bad = RunConfig::from_toml("t_grid = [0.0, 2.0, 1.0]").unwrap();
        assert!(bad.time_grid().is_err());
    }

    #[test]
    fn reference_temperature_depends_on_model() {
        let mut c = RunConfig::default();
        assert!((c.beta_c() - 4.0 * 0.5 * (1.0 + std::f64::consts::SQRT_2).ln()).abs() < 1e-12);
        c.model = Model::Cw;
        assert_eq!(c.beta_c(), 4.0);
    }

    #[test]
    fn streams_follow_the_point_index() {
        let c = RunConfig::default();
        assert_eq!(c.sampler_config(3).stream, 3);
        assert_eq!(c.sampler_config(3).burn_in, 100_000);
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: Some("elsewhere.csv".into()),
            ..RunConfig::default()
        };
        assert_eq!(a.canonical_json(), b.canonical_json());
    }
}
