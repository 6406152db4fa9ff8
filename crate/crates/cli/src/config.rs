//! Flags, environment overrides and the TOML config file, merged into a
//! [`RunConfig`]. Precedence: flag or `GPDISC_*` variable, then file, then
//! built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpdisc::design::DesignSpace;
use gpdisc::kernels::{KernelFamily, KernelSpec, ModelPair};
use gpdisc::search::EXCHANGE_PASSES;
use gpdisc::simulation::TableRow;
use serde::{Deserialize, Serialize};

use crate::CliError;

const AFTER_HELP: &str = "\
Criteria (--criterion):
  phi-a, phi-b, phi-kl   prediction-based point scores (greedy only)
  kl                     symmetric Kullback-Leibler divergence
  frechet                Frechet distance between covariance matrices
  p<k>                   sum of |K1 - K0|^k over the design, e.g. p1, p2
  ds                     Ds-optimality for the Matern smoothness
  upper, gamma           bounds on the Bayes error
  sequential             observation-driven design (design, hitrate)

Examples:
  gpdisc design --criterion kl --n 10 --grid 25 --out kl10.csv
  gpdisc measure --p 10 --grid 50 --seed 0 --out xi10.csv
  gpdisc hitrate --criterion kl,frechet --sizes 5,10 --N 100 --seed 0
  gpdisc reproduce table1 --out results/

Exit codes: 0 success, 2 configuration error, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "gpdisc", version, about = "Designs for discriminating between two Gaussian-process kernels", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproduceId {
    /// Point scores between two design points, scaled exponential kernels.
    Ex1,
    /// As ex1 with unscaled exponential kernels.
    Ex2,
    /// Matern pair calibrated under the uniform measure: profiles and scores.
    Ex3,
    /// Rescaled criteria against model 1's inverse length.
    Fig4,
    /// psi^2 profiles and delta_xi surfaces around simplex measures.
    Fig5,
    /// Hit-rate table for the two-dimensional comparison.
    Table1,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an n-point design on the grid: greedy, then exchange for
    /// design-level criteria.
    Design {
        /// Exchange passes; 0 keeps the greedy design.
        #[arg(long, default_value_t = EXCHANGE_PASSES)]
        passes: usize,
        /// Model generating the data for `sequential`.
        #[arg(long, default_value_t = 0)]
        truth: usize,
        /// JSON-lines run log; defaults to `<out>.log.jsonl` when --out is given.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Optimal design measure for phi_p: Fedorov-Wynn on the grid, then
    /// continuous refinement and clustering.
    Measure {
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Use the spike profile (psi = 1 at Delta only) instead of the kernels.
        #[arg(long)]
        idealised: bool,
        /// Write the refined measure without clustering.
        #[arg(long)]
        raw: bool,
        /// JSON report; defaults to `<out>.report.json` when --out is given.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// delta_xi over the grid for a measure read from CSV.
    Surface {
        #[arg(long)]
        measure: PathBuf,
    },
    /// Inverse length of model 1 that minimises a distance criterion.
    Calibrate {
        #[arg(long, default_value_t = 0.5)]
        lo: f64,
        #[arg(long, default_value_t = 3.0)]
        hi: f64,
        /// Design CSV; defaults to the grid.
        #[arg(long, conflicts_with = "measure")]
        design: Option<PathBuf>,
        /// Measure CSV, calibrating phi_p of the measure (needs a p<k> criterion).
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Monte Carlo hit rates of the likelihood-ratio rule.
    Hitrate {
        #[arg(long, default_value_t = EXCHANGE_PASSES)]
        passes: usize,
    },
    /// Point scores phi_A, phi_B, phi_KL over the grid for a design read from CSV.
    Scores {
        #[arg(long)]
        design: PathBuf,
    },
    /// Regenerate the data behind a figure or table; --out names a directory.
    Reproduce {
        #[arg(value_enum)]
        id: ReproduceId,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design { .. } => "design",
            Command::Measure { .. } => "measure",
            Command::Surface { .. } => "surface",
            Command::Calibrate { .. } => "calibrate",
            Command::Hitrate { .. } => "hitrate",
            Command::Scores { .. } => "scores",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML file supplying defaults for the flags below.
    #[arg(long, global = true, env = "GPDISC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Criterion id, or a comma-separated list for hitrate.
    #[arg(long, global = true, env = "GPDISC_CRITERION", value_delimiter = ',', value_parser = parse_row)]
    pub criterion: Option<Vec<TableRow>>,
    /// Exponent of phi_p for measures.
    #[arg(long, global = true, env = "GPDISC_P")]
    pub p: Option<f64>,
    /// Design size.
    #[arg(long, global = true, env = "GPDISC_DESIGN_SIZE")]
    pub n: Option<usize>,
    /// Comma-separated design sizes for hitrate.
    #[arg(long, global = true, env = "GPDISC_SIZES", value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Grid levels per axis.
    #[arg(long, global = true, env = "GPDISC_GRID")]
    pub grid: Option<usize>,
    /// Box as lo:hi per axis, comma-separated, e.g. 0:10,0:10.
    #[arg(long, global = true, env = "GPDISC_SPACE", value_parser = parse_space, allow_hyphen_values = true)]
    pub space: Option<SpaceConfig>,
    /// Kernel family of model 0.
    #[arg(long, global = true, env = "GPDISC_KERNEL0", value_parser = parse_family)]
    pub kernel0: Option<KernelFamily>,
    /// Kernel family of model 1.
    #[arg(long, global = true, env = "GPDISC_KERNEL1", value_parser = parse_family)]
    pub kernel1: Option<KernelFamily>,
    /// Inverse length (theta, or alpha for exponential kernels) of model 0.
    #[arg(long, global = true, env = "GPDISC_THETA0")]
    pub theta0: Option<f64>,
    /// Inverse length of model 1.
    #[arg(long, global = true, env = "GPDISC_THETA1")]
    pub theta1: Option<f64>,
    /// Matern smoothness of model 1; 1.5 and 2.5 select the closed forms.
    #[arg(long, global = true, env = "GPDISC_NU")]
    pub nu: Option<f64>,
    /// Monte Carlo replicates per true model.
    #[arg(long = "N", global = true, env = "GPDISC_REPLICATES")]
    pub replicates: Option<usize>,
    #[arg(long, global = true, env = "GPDISC_SEED")]
    pub seed: Option<u64>,
    /// Output file (directory for reproduce); stdout if absent.
    #[arg(long, global = true, env = "GPDISC_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "GPDISC_FORMAT", value_enum)]
    pub format: Option<Format>,
}

fn parse_row(s: &str) -> Result<TableRow, String> {
    s.parse().map_err(|e: gpdisc::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    s.parse().map_err(|e: gpdisc::Error| e.to_string())
}

fn parse_space(s: &str) -> Result<SpaceConfig, String> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in s.split(',') {
        let (lo, hi) = axis.split_once(':').ok_or_else(|| format!("axis `{axis}` is not lo:hi"))?;
        lower.push(lo.trim().parse::<f64>().map_err(|e| format!("`{lo}`: {e}"))?);
        upper.push(hi.trim().parse::<f64>().map_err(|e| format!("`{hi}`: {e}"))?);
    }
    Ok(SpaceConfig { lower, upper })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

/// Contents of the `--config` file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    criterion: Option<OneOrMany>,
    p: Option<f64>,
    n: Option<usize>,
    sizes: Option<Vec<usize>>,
    grid: Option<usize>,
    space: Option<SpaceConfig>,
    kernel0: Option<KernelSpec>,
    kernel1: Option<KernelSpec>,
    theta0: Option<f64>,
    theta1: Option<f64>,
    nu: Option<f64>,
    replicates: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Everything a command needs; `None` fields take per-command defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub pair: ModelPair,
    pub space: SpaceConfig,
    pub criteria: Vec<TableRow>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(command: &Command, args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let criteria = match (&args.criterion, file.criterion) {
            (Some(c), _) => c.clone(),
            (None, Some(OneOrMany::One(s))) => vec![parse_row(&s).map_err(|e| CliError::Config(format!("criterion: {e}")))?],
            (None, Some(OneOrMany::Many(v))) => v
                .iter()
                .map(|s| parse_row(s))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("criterion: {e}")))?,
            (None, None) => Vec::new(),
        };

        let mut k0 = file.kernel0.unwrap_or(KernelSpec::matern32(1.0));
        let mut k1 = file.kernel1.unwrap_or(KernelSpec::matern52(1.07));
        if let Some(f) = args.kernel0 {
            k0.family = f;
        }
        if let Some(f) = args.kernel1 {
            k1.family = f;
        }
        if let Some(t) = args.theta0.or(file.theta0) {
            k0 = k0.with_inverse_length(t);
        }
        if let Some(t) = args.theta1.or(file.theta1) {
            k1 = k1.with_inverse_length(t);
        }
        if let Some(nu) = args.nu.or(file.nu) {
            k1 = with_smoothness(k1, nu);
        }
        let pair = ModelPair::new(k0, k1);
        pair.validate().map_err(|e| CliError::Config(format!("kernel pair: {e}")))?;

        let space = args.space.clone().or(file.space).unwrap_or(SpaceConfig {
            lower: vec![0.0, 0.0],
            upper: vec![10.0, 10.0],
        });
        DesignSpace::new(space.lower.clone(), space.upper.clone()).map_err(|e| CliError::Config(format!("space: {e}")))?;

        let cfg = Self {
            command: command.name().into(),
            pair,
            space,
            criteria,
            p: args.p.or(file.p),
            n: args.n.or(file.n),
            sizes: args.sizes.clone().or(file.sizes),
            grid: args.grid.or(file.grid),
            replicates: args.replicates.or(file.replicates),
            seed: args.seed.or(file.seed),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(p) = self.p {
            if !(p > 0.0 && p.is_finite()) {
                return Err(CliError::Config(format!("p: must be positive, got {p}")));
            }
        }
        if self.grid.is_some_and(|g| g < 2) {
            return Err(CliError::Config("grid: need at least 2 levels per axis".into()));
        }
        if self.n == Some(0) || self.replicates == Some(0) {
            return Err(CliError::Config("n and N must be positive".into()));
        }
        if self.sizes.as_ref().is_some_and(|s| s.is_empty() || s.contains(&0)) {
            return Err(CliError::Config("sizes: need positive design sizes".into()));
        }
        Ok(())
    }

    /// The design space discretised with `grid` levels unless overridden.
    pub fn space(&self, default_grid: usize) -> Result<DesignSpace, CliError> {
        let s = DesignSpace::new(self.space.lower.clone(), self.space.upper.clone())?;
        Ok(s.with_grid(self.grid.unwrap_or(default_grid))?)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("{}: --seed is required for stochastic commands", self.command)))
    }

    /// The single criterion of commands that take one.
    pub fn criterion(&self) -> Result<&TableRow, CliError> {
        match self.criteria.as_slice() {
            [c] => Ok(c),
            [] => Err(CliError::Config(format!("{}: --criterion is required", self.command))),
            _ => Err(CliError::Config(format!("{}: takes a single criterion", self.command))),
        }
    }
}

/// Sets model 1's Matérn smoothness, using the closed forms where they exist.
fn with_smoothness(mut k: KernelSpec, nu: f64) -> KernelSpec {
    k.nu = nu;
    if matches!(k.family, KernelFamily::Matern32 | KernelFamily::Matern52 | KernelFamily::MaternGeneral) {
        k.family = if nu == 1.5 {
            KernelFamily::Matern32
        } else if nu == 2.5 {
            KernelFamily::Matern52
        } else {
            KernelFamily::MaternGeneral
        };
    }
    k
}
