use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdd_core::estimation::Uncertainty;
use rdd_core::{Design, RegimeTag};

use crate::ingest::IngestionSchema;

#[derive(Debug, Parser)]
#[command(
    name = "rdd-kit",
    version,
    about = "Regression-discontinuity estimation, balance diagnostics, simulation and CI derivations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the effect at the threshold; fails on the first bandwidth error.
    Estimate(EstimateArgs),
    /// Estimate over several bandwidths, reporting failures per bandwidth.
    Sweep(EstimateArgs),
    /// Covariate summaries on each side of the threshold.
    Balance(BalanceArgs),
    /// Write a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Repeated simulate-then-estimate: bias, RMSE and interval coverage.
    McStudy(StudyArgs),
    /// Scatter data plus the fitted side lines, as CSV.
    Plotdata(PlotArgs),
    /// Conditional-independence derivations.
    #[command(subcommand)]
    Ci(CiCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    Sharp,
    Fuzzy,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Sharp => Design::Sharp,
            DesignArg::Fuzzy => Design::Fuzzy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UncertaintyArg {
    Bootstrap,
    Delta,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    InterveneControl,
    InterveneTreat,
    ObservationalSharp,
    ObservationalFuzzy,
}

impl From<RegimeArg> for RegimeTag {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::InterveneControl => RegimeTag::InterveneControl,
            RegimeArg::InterveneTreat => RegimeTag::InterveneTreat,
            RegimeArg::ObservationalSharp => RegimeTag::ObservationalSharp,
            RegimeArg::ObservationalFuzzy => RegimeTag::ObservationalFuzzy,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SchemaArgs {
    /// Outcome column (name, or 1-based index with --no-header).
    #[arg(long, default_value = "outcome")]
    pub outcome_col: String,
    #[arg(long, default_value = "assignment")]
    pub assignment_col: String,
    #[arg(long, default_value = "treatment")]
    pub treatment_col: String,
    /// Threshold indicator column; checked against the threshold if present.
    #[arg(long, default_value = "z")]
    pub z_col: String,
    /// Covariate columns to load.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    #[arg(long)]
    pub no_header: bool,
}

impl SchemaArgs {
    pub fn schema(&self, extra_covariates: &[String]) -> Result<IngestionSchema, String> {
        if !self.delimiter.is_ascii() {
            return Err(format!("delimiter must be a single ASCII character, got '{}'", self.delimiter));
        }
        let mut covariates = self.covariates.clone();
        for c in extra_covariates {
            if !covariates.contains(c) {
                covariates.push(c.clone());
            }
        }
        Ok(IngestionSchema {
            outcome: self.outcome_col.clone(),
            assignment: self.assignment_col.clone(),
            treatment: self.treatment_col.clone(),
            covariates,
            z: self.z_col.clone(),
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct UncertaintyArgs {
    #[arg(long, value_enum, default_value = "bootstrap")]
    pub uncertainty: UncertaintyArg,
    #[arg(long, default_value_t = 2000)]
    pub replications: usize,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl UncertaintyArgs {
    pub fn method(&self) -> Uncertainty {
        match self.uncertainty {
            UncertaintyArg::Bootstrap => Uncertainty::Bootstrap {
                replications: self.replications,
                seed: self.seed,
            },
            UncertaintyArg::Delta => Uncertainty::Delta,
            UncertaintyArg::None => Uncertainty::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    /// One or more bandwidths, comma separated or repeated.
    #[arg(long = "bandwidth", alias = "bandwidths", value_delimiter = ',', required = true)]
    pub bandwidths: Vec<f64>,
    #[arg(long, value_enum)]
    pub design: DesignArg,
    #[command(flatten)]
    pub uncertainty: UncertaintyArgs,
    /// Smallest accepted compliance gap for the fuzzy design.
    #[arg(long, default_value_t = 0.05)]
    pub min_gap: f64,
    /// Covariates entered linearly in both side regressions.
    #[arg(long, value_delimiter = ',')]
    pub adjust: Vec<String>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BalanceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long = "bandwidth", alias = "bandwidths", value_delimiter = ',', required = true)]
    pub bandwidths: Vec<f64>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file (`key = value` lines); defaults to the statins-like scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Scenario seed.
    #[arg(long = "scenario-seed")]
    pub scenario_seed: Option<u64>,
    #[arg(long = "scenario-design", value_enum)]
    pub scenario_design: Option<DesignArg>,
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Defaults to the observational regime of the scenario design.
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Print the resolved scenario file instead of data.
    #[arg(long)]
    pub print_scenario: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Estimator; defaults to the scenario design.
    #[arg(long, value_enum)]
    pub estimator: Option<DesignArg>,
    #[arg(long, default_value_t = 500)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0.1)]
    pub bandwidth: f64,
    #[command(flatten)]
    pub uncertainty: UncertaintyArgs,
    #[arg(long, default_value_t = 0.05)]
    pub min_gap: f64,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    /// Append the two fitted side lines for this bandwidth.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Debug, Subcommand)]
pub enum CiCommand {
    /// Search for a verified derivation of a target statement.
    Derive(DeriveArgs),
    /// List every non-trivial statement derivable from the premises.
    Closure(ClosureArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DeriveArgs {
    #[arg(long)]
    pub premises: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 8)]
    pub max_atoms: usize,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ClosureArgs {
    #[arg(long)]
    pub premises: PathBuf,
    /// Extra atoms to include in the universe.
    #[arg(long, value_delimiter = ',')]
    pub atoms: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub max_atoms: usize,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}
