use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermoprobe::config::{Format, Grid, Model, RunConfig};
use thermoprobe::{execute, CliError, Command, RunOptions};

/// Temperature scans of a qubit probe dephased by an Ising lattice.
#[derive(Parser, Debug)]
#[command(name = "thermoprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    args: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Optimal probe QFI per (β, n): β/β_c, n, t_opt, β²F_opt, stderr.
    QfiScan,
    /// Local Fisher information of the cluster readout and the QFI ratio.
    LocalFiScan,
    /// Optimal QFI against cluster size with a log-log slope per β.
    Scaling,
    /// Free induction decay and decay time per β.
    Fid,
}

/// Every flag overrides the corresponding config-file key.
#[derive(Args, Debug)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<Model>,
    /// Lattice side.
    #[arg(long = "L", global = true)]
    side: Option<usize>,
    /// β/β_c values: start:stop:count or a comma list.
    #[arg(long, global = true)]
    beta_grid: Option<String>,
    /// Times: auto, t_max:points or a comma list.
    #[arg(long, global = true)]
    t_grid: Option<String>,
    /// Comma-separated cluster disk radii.
    #[arg(long, global = true, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, global = true)]
    sweeps: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record each sample with its global spin flip.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    symmetrize: Option<bool>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Checkpoint directory; a rerun with the same directory continues from it.
    #[arg(long, global = true)]
    resume: Option<PathBuf>,
    /// Exit with status 4 when any result is under-sampled.
    #[arg(long, global = true)]
    strict: bool,
}

impl Overrides {
    fn apply(self, mut c: RunConfig) -> RunConfig {
        if let Some(v) = self.model {
            c.model = v;
        }
        if let Some(v) = self.side {
            c.side = v;
        }
        if let Some(v) = self.beta_grid {
            c.beta_grid = Grid::Text(v);
        }
        if let Some(v) = self.t_grid {
            c.t_grid = Grid::Text(v);
        }
        if let Some(v) = self.radii {
            c.radii = v;
        }
        if let Some(v) = self.sweeps {
            c.sampler.sweeps = v;
        }
        if let Some(v) = self.seed {
            c.sampler.seed = v;
        }
        if let Some(v) = self.symmetrize {
            c.sampler.symmetrize = v;
        }
        if let Some(v) = self.out {
            c.out = Some(v);
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        c
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::QfiScan => Command::QfiScan,
        Cmd::LocalFiScan => Command::LocalFiScan,
        Cmd::Scaling => Command::Scaling,
        Cmd::Fid => Command::Fid,
    };
    let result = (|| -> Result<(), CliError> {
        let base = match &cli.args.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let options = RunOptions {
            resume: cli.args.resume.clone(),
            strict: cli.args.strict,
            threads: None,
        };
        let config = cli.args.apply(base);
        execute(command, &config, &options).map(|_| ())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
