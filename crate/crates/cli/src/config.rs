//! Command-line arguments and their validation into a run configuration.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

use slag_core::catalog::{CaseName, Sign, Tolerances};
use slag_core::kfield::{Bc, SystemId};

#[derive(Parser, Debug)]
#[command(
    name = "slag",
    version,
    about = "Special Lagrangian 4-folds: catalog checks, k-field solves, reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Verify an explicit construction on a parameter grid.
    Verify(VerifyArgs),
    /// Solve a constraint system for the k-fields.
    Solve(SolveArgs),
    /// Integrate the moving frame and check compatibility.
    Reconstruct(ReconstructArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Constant,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Oracle {
    #[value(name = "closed-form")]
    #[serde(rename = "closed-form")]
    ClosedForm,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Output file (report, field or immersion file depending on the command).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long)]
    pub case: String,
    /// Expected curvature sign; must match the case.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<i8>,
    #[arg(long, default_value_t = 5)]
    pub grid: usize,
    /// Building block: "default", "decoy", or "holo:<f(u)>" for surface cases.
    #[arg(long, default_value = "default")]
    pub block: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_kahler: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_minimality: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_symmetry: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_shape: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_horizontality: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_lift: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_gauss: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<i8>,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, default_value = "periodic")]
    pub bc: String,
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub sign: String,
    #[arg(long, value_enum, default_value = "constant")]
    pub init: Init,
    /// Amplitude of a seeded smooth perturbation of the initial fields.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Only look for a constant solution; no Newton iteration.
    #[arg(long)]
    pub constant_only: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_solver: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iter: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct ReconstructArgs {
    /// Explicit construction to reconstruct from its own frame data.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long, value_enum)]
    pub oracle: Option<Oracle>,
    #[arg(long)]
    pub system: Option<String>,
    /// Field file written by `solve`; a `.json` sidecar next to it is read
    /// when present.
    #[arg(long)]
    pub kfields: Option<PathBuf>,
    #[arg(long)]
    pub bc: Option<String>,
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    pub sign: String,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<i8>,
    /// Integration step for the closed-form oracle (field reconstructions use
    /// twice the field grid spacing).
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub step: f64,
    /// Nodes per axis; the refinement study needs count − 1 divisible by 4.
    #[arg(long, default_value_t = 9)]
    pub count: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub s0: f64,
    #[arg(long)]
    pub reproject: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_align: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_compat: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_drift: f64,
    #[command(flatten)]
    pub output: Output,
}

/// A configuration error; the CLI exits with status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum BlockChoice {
    Default,
    Decoy,
    Holomorphic(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub case: CaseName,
    pub block: BlockChoice,
    pub grid: usize,
    pub tol: Tolerances,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveConfig {
    pub system: SystemId,
    pub grid: usize,
    pub bc: Bc,
    pub sign: Sign,
    pub init: Init,
    pub perturb: f64,
    pub seed: u64,
    pub constant_only: bool,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, Serialize)]
pub enum ReconstructSource {
    Oracle {
        case: CaseName,
    },
    Fields {
        system: SystemId,
        kfields: PathBuf,
        bc: Option<Bc>,
        sign: Sign,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructConfig {
    pub source: ReconstructSource,
    pub step: f64,
    pub count: usize,
    pub t0: f64,
    pub s0: f64,
    pub reproject: bool,
    pub tol_align: f64,
    pub tol_compat: f64,
    pub tol_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub enum CommandConfig {
    Verify(VerifyConfig),
    Solve(SolveConfig),
    Reconstruct(ReconstructConfig),
}

/// Validated, mutually consistent settings of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn positive(name: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(cfg_err(format!("--{name} must be a positive number, got {x}")))
    }
}

fn check_epsilon(given: Option<i8>, expected: i8, what: &str) -> Result<(), ConfigError> {
    match given {
        Some(e) if e != expected => Err(cfg_err(format!(
            "{what} has epsilon {expected}, but --epsilon {e} was given"
        ))),
        _ => Ok(()),
    }
}

fn parse<T: std::str::FromStr<Err = slag_core::Error>>(s: &str) -> Result<T, ConfigError> {
    s.parse::<T>().map_err(|e| cfg_err(e.to_string()))
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig, ConfigError> {
        match self.command {
            Command::Verify(a) => {
                let case: CaseName = parse(&a.case)?;
                check_epsilon(a.epsilon, case.case_id().epsilon, &format!("case {case}"))?;
                if a.grid < 1 || a.grid > 64 {
                    return Err(cfg_err("--grid must be between 1 and 64 for verify"));
                }
                let block = match a.block.as_str() {
                    "default" => BlockChoice::Default,
                    "decoy" => BlockChoice::Decoy,
                    s if s.starts_with("holo:") => BlockChoice::Holomorphic(s[5..].to_string()),
                    s => return Err(cfg_err(format!("unknown block '{s}'"))),
                };
                let tol = Tolerances {
                    kahler: positive("tol-kahler", a.tol_kahler)?,
                    minimality: positive("tol-minimality", a.tol_minimality)?,
                    symmetry: positive("tol-symmetry", a.tol_symmetry)?,
                    shape: positive("tol-shape", a.tol_shape)?,
                    horizontality: positive("tol-horizontality", a.tol_horizontality)?,
                    lift_norm: positive("tol-lift", a.tol_lift)?,
                    gauss: positive("tol-gauss", a.tol_gauss)?,
                };
                Ok(RunConfig {
                    command: CommandConfig::Verify(VerifyConfig {
                        case,
                        block,
                        grid: a.grid,
                        tol,
                    }),
                    out: a.output.out,
                    format: a.output.format,
                })
            }
            Command::Solve(a) => {
                let system: SystemId = parse(&a.system)?;
                check_epsilon(a.epsilon, system.epsilon(), &format!("system {system}"))?;
                if a.grid < 5 || a.grid > 512 {
                    return Err(cfg_err("--grid must be between 5 and 512"));
                }
                if !a.perturb.is_finite() || a.perturb.abs() > 1.0 {
                    return Err(cfg_err("--perturb must be a finite amplitude of at most 1"));
                }
                if a.max_iter == 0 || a.max_iter > 1000 {
                    return Err(cfg_err("--max-iter must be between 1 and 1000"));
                }
                Ok(RunConfig {
                    command: CommandConfig::Solve(SolveConfig {
                        system,
                        grid: a.grid,
                        bc: parse(&a.bc)?,
                        sign: parse(&a.sign)?,
                        init: a.init,
                        perturb: a.perturb,
                        seed: a.seed,
                        constant_only: a.constant_only,
                        tol: positive("tol-solver", a.tol_solver)?,
                        max_iter: a.max_iter,
                    }),
                    out: a.output.out,
                    format: a.output.format,
                })
            }
            Command::Reconstruct(a) => {
                let source = match (&a.case, &a.system, &a.kfields) {
                    (Some(c), None, None) => {
                        let case: CaseName = parse(c)?;
                        check_epsilon(a.epsilon, case.case_id().epsilon, &format!("case {case}"))?;
                        if a.oracle.is_none() {
                            return Err(cfg_err("--case requires --oracle closed-form"));
                        }
                        ReconstructSource::Oracle { case }
                    }
                    (None, Some(s), Some(path)) => {
                        let system: SystemId = parse(s)?;
                        check_epsilon(a.epsilon, system.epsilon(), &format!("system {system}"))?;
                        ReconstructSource::Fields {
                            system,
                            kfields: path.clone(),
                            bc: a.bc.as_deref().map(parse).transpose()?,
                            sign: parse(&a.sign)?,
                        }
                    }
                    (None, Some(_), None) => return Err(cfg_err("--system requires --kfields")),
                    _ => return Err(cfg_err("give either --case with --oracle, or --system with --kfields")),
                };
                if a.count < 5 || (a.count - 1) % 4 != 0 || a.count > 129 {
                    return Err(cfg_err("--count must be 5, 9, 13, ... up to 129"));
                }
                Ok(RunConfig {
                    command: CommandConfig::Reconstruct(ReconstructConfig {
                        source,
                        step: positive("step", a.step)?,
                        count: a.count,
                        t0: a.t0,
                        s0: a.s0,
                        reproject: a.reproject,
                        tol_align: positive("tol-align", a.tol_align)?,
                        tol_compat: positive("tol-compat", a.tol_compat)?,
                        tol_drift: positive("tol-drift", a.tol_drift)?,
                    }),
                    out: a.output.out,
                    format: a.output.format,
                })
            }
        }
    }
}

/// Parses and validates an argument list (program name first).
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| cfg_err(e.to_string()))?;
    cli.into_config()
}
