//! Command-line front end: `decompose`, `train`, `forecast`, `compare` and
//! `describe` over CSV files.
//!
//! Settings resolve in three layers: built-in defaults, then an optional TOML
//! config file (`--config`), then command-line flags. `--print-config` emits
//! the fully resolved settings as TOML and exits, so a run can be reproduced
//! from its printed configuration plus the input files.
//!
//! Exit codes: 0 success, 2 configuration, 3 data (sizing/shape included),
//! 4 numerical, 5 I/O.

pub mod commands;
pub mod io;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::edrvfl::Activation;
use crate::pipeline::{ModelKind, PipelineConfig};
use crate::series::SplitSpec;
use crate::tuning::SearchSpace;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "loadcast",
    version,
    about = "Short-term load forecasting: walk-forward EWT features, ensemble deep RVFL networks, \
             and Friedman/Nemenyi model comparison",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error, 5 I/O error."
)]
pub struct Cli {
    /// TOML settings file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the fully resolved settings as TOML and exit
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Seed for all randomness in the run
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Name of the CSV column holding the observations
    #[arg(long, global = true, value_name = "NAME")]
    pub value_column: Option<String>,

    /// Name of the CSV timestamp column (optional)
    #[arg(long, global = true, value_name = "NAME")]
    pub timestamp_column: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print descriptive statistics of a series
    Describe(DescribeArgs),
    /// Decompose one window of a series into EWT sub-series
    Decompose(DecomposeArgs),
    /// Train a forecasting model end to end and emit artifact + report
    Train(TrainArgs),
    /// Roll one-step-ahead forecasts from a saved model artifact
    Forecast(ForecastArgs),
    /// Rank models over datasets: Friedman test, Nemenyi post-hoc, diagram
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Input CSV file
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Also write the statistics as CSV
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV file
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Directory for component CSVs and the filter-bank dump
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Number of sub-bands
    #[arg(long)]
    pub components: Option<usize>,
    /// Window length to decompose
    #[arg(long)]
    pub window: Option<usize>,
    /// Index one past the window's last observation (default: series end)
    #[arg(long)]
    pub window_end: Option<usize>,
    /// Transition half-width; default picks half the feasible maximum
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input CSV file
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Model to train: persistence, rvfl, ewt-rvfl, med-edrvfl, mea-edrvfl,
    /// ewt-med-edrvfl or ewt-mea-edrvfl
    #[arg(long)]
    pub model: String,
    /// Directory for the artifact, reports and forecast CSVs
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Lags per feature block
    #[arg(long)]
    pub order: Option<usize>,
    /// Walk-forward decomposition window
    #[arg(long)]
    pub window: Option<usize>,
    /// EWT sub-bands
    #[arg(long)]
    pub components: Option<usize>,
    /// Append raw lags to the sub-series lags (true/false)
    #[arg(long)]
    pub include_raw: Option<bool>,
    /// Detect EWT boundaries once, on the earliest window (true/false)
    #[arg(long)]
    pub freeze_boundaries: Option<bool>,
    /// Drop the highest-frequency sub-series (true/false)
    #[arg(long)]
    pub drop_highest_band: Option<bool>,
    /// Enhancement layers for the deep models
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub valid_fraction: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Comma-separated enhancement-node grid, e.g. 50,100,150,200
    #[arg(long, value_delimiter = ',')]
    pub node_grid: Option<Vec<usize>>,
    /// Comma-separated regularization grid, e.g. 0,0.00390625,0.0625
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated activations to try at layer 1
    #[arg(long, value_delimiter = ',')]
    pub activations: Option<Vec<String>>,
    /// Also dump the training feature matrix as CSV
    #[arg(long)]
    pub dump_features: bool,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Saved model artifact (JSON)
    #[arg(long, value_name = "FILE")]
    pub artifact: PathBuf,
    /// Input CSV file with the series to forecast
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Forecast the last HORIZON points one step ahead
    #[arg(long)]
    pub horizon: usize,
    /// Output CSV path
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// models-by-datasets error matrix CSV (header: `model,<dataset>...`)
    #[arg(long, value_name = "FILE")]
    pub errors: PathBuf,
    /// Directory for rank table, pairwise matrices and diagram
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Significance level (0.05 or 0.10)
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

/// Fully resolved run settings; serializes to the same TOML schema the
/// `--config` file uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Settings {
    pub value_column: String,
    pub timestamp_column: Option<String>,
    pub order: usize,
    pub window: usize,
    pub components: usize,
    pub include_raw: bool,
    pub freeze_boundaries: bool,
    pub drop_highest_band: bool,
    pub layers: usize,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub node_grid: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub activations: Vec<String>,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        Self {
            value_column: "value".to_string(),
            timestamp_column: None,
            order: pipeline.order,
            window: pipeline.window_w,
            components: pipeline.num_components,
            include_raw: pipeline.include_raw,
            freeze_boundaries: pipeline.freeze_boundaries,
            drop_highest_band: pipeline.drop_highest_band,
            layers: pipeline.num_layers,
            train_fraction: pipeline.split.train_fraction,
            valid_fraction: pipeline.split.valid_fraction,
            test_fraction: pipeline.split.test_fraction,
            node_grid: pipeline.search.node_grid,
            lambda_grid: pipeline.search.lambda_grid,
            activations: vec!["sigmoid".to_string()],
            seed: pipeline.seed,
        }
    }
}

/// The optional TOML file: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileSettings {
    value_column: Option<String>,
    timestamp_column: Option<String>,
    order: Option<usize>,
    window: Option<usize>,
    components: Option<usize>,
    include_raw: Option<bool>,
    freeze_boundaries: Option<bool>,
    drop_highest_band: Option<bool>,
    layers: Option<usize>,
    train_fraction: Option<f64>,
    valid_fraction: Option<f64>,
    test_fraction: Option<f64>,
    node_grid: Option<Vec<usize>>,
    lambda_grid: Option<Vec<f64>>,
    activations: Option<Vec<String>>,
    seed: Option<u64>,
}

impl Settings {
    /// defaults <- config file <- global flags. Per-command flags land later
    /// via [`Settings::apply_train_args`].
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let mut settings = Settings::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path)?;
            let file: FileSettings = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            settings.merge_file(file);
        }
        if let Some(seed) = cli.seed {
            settings.seed = seed;
        }
        if let Some(col) = &cli.value_column {
            settings.value_column = col.clone();
        }
        if let Some(col) = &cli.timestamp_column {
            settings.timestamp_column = Some(col.clone());
        }
        Ok(settings)
    }

    fn merge_file(&mut self, file: FileSettings) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { self.$field = v; })*
            };
        }
        take!(
            value_column, order, window, components, include_raw, freeze_boundaries,
            drop_highest_band, layers, train_fraction, valid_fraction, test_fraction,
            node_grid, lambda_grid, activations, seed
        );
        if file.timestamp_column.is_some() {
            self.timestamp_column = file.timestamp_column;
        }
    }

    pub fn apply_train_args(&mut self, args: &TrainArgs) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = args.$field.clone() { self.$field = v; })*
            };
        }
        take!(
            order, components, include_raw, freeze_boundaries, drop_highest_band, layers,
            train_fraction, valid_fraction, test_fraction, node_grid, lambda_grid, activations
        );
        if let Some(w) = args.window {
            self.window = w;
        }
    }

    pub fn activations(&self) -> Result<Vec<Activation>> {
        self.activations.iter().map(|s| s.parse()).collect()
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let config = PipelineConfig {
            order: self.order,
            window_w: self.window,
            num_components: self.components,
            include_raw: self.include_raw,
            freeze_boundaries: self.freeze_boundaries,
            drop_highest_band: self.drop_highest_band,
            split: SplitSpec::new(self.train_fraction, self.valid_fraction, self.test_fraction)?,
            num_layers: self.layers,
            search: SearchSpace {
                node_grid: self.node_grid.clone(),
                lambda_grid: self.lambda_grid.clone(),
                activations: self.activations()?,
                seeds: vec![],
            },
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("settings serialization: {e}")))
    }
}

/// Parses `args`, runs the requested command, and maps any failure to its
/// exit code (stderr gets the message).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/version output
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut settings = Settings::resolve(cli)?;
    if let Command::Train(args) = &cli.command {
        settings.apply_train_args(args);
    }
    if cli.print_config {
        print!("{}", settings.to_toml()?);
        return Ok(());
    }
    match &cli.command {
        Command::Describe(args) => commands::describe(&settings, args),
        Command::Decompose(args) => commands::decompose(&settings, args),
        Command::Train(args) => {
            let kind: ModelKind = args.model.parse()?;
            commands::train(&settings, args, kind)
        }
        Command::Forecast(args) => commands::forecast(&settings, args),
        Command::Compare(args) => commands::compare(args),
    }
}
