//! Short-term electricity load forecasting built around two blocks: a
//! leak-free walk-forward empirical wavelet transform (EWT) that turns a raw
//! load series into frequency sub-band features, and an ensemble deep random
//! vector functional link (edRVFL) network whose random hidden layers are
//! fixed and whose per-layer output heads are trained in closed form by ridge
//! regression. Per-layer forecasts are combined by mean or median.
//!
//! The crate also ships the supporting machinery such a pipeline needs:
//! max-min normalization, chronological splitting, lag-matrix construction,
//! layer-wise hyperparameter search on a validation split, RMSE/MASE/MAPE
//! metrics, and a Friedman + Nemenyi model-comparison toolkit.
//!
//! Every capability has a runnable program under `examples/`; start with
//! `train_and_forecast`. A thin `loadcast` binary exposes the same pipelines
//! over CSV files (`decompose`, `train`, `forecast`, `compare`, `describe`).
//!
//! ```
//! use loadcast::edrvfl::{EdRvflConfig, EdRvflModel};
//! use ndarray::{Array1, Array2};
//!
//! let x = Array2::from_shape_fn((64, 4), |(i, j)| ((i + j) as f64 * 0.37).sin());
//! let y = Array1::from_shape_fn(64, |i| (i as f64 * 0.37).cos());
//! let mut model = EdRvflModel::init(EdRvflConfig::new(3, 20, 1e-4, 7), 4).unwrap();
//! model.fit(&x, &y).unwrap();
//! let forecasts = model.predict(&x).unwrap();
//! assert_eq!(forecasts.combined.len(), 64);
//! ```

pub mod cli;
pub mod edrvfl;
pub mod ewt;
pub mod pipeline;
pub mod series;
pub mod stats;
pub mod tuning;
pub mod walkforward;

/// Errors returned by this crate.
///
/// The variants group failures by what the caller has to fix; the CLI maps
/// each group to a distinct exit code (see [`Error::exit_code`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value is outside its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Input data is malformed: non-finite values, zeros where forbidden,
    /// ragged matrices, missing CSV cells.
    #[error("invalid data: {0}")]
    Data(String),
    /// Input is too short for the requested operation.
    #[error("input too short: {0}")]
    Sizing(String),
    /// Matrix or series dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A numerical procedure failed (singular system, lost precision).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Prediction was requested from a model that has not been fitted.
    #[error("model has not been fitted")]
    NotFitted,
    /// An I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// A CSV parse or write failure.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error class.
    ///
    /// 2 = configuration, 3 = data (including sizing/shape/unfitted-model),
    /// 4 = numerical, 5 = I/O. 0 is success; the codes are part of the CLI
    /// contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Sizing(_) | Error::Shape(_) | Error::NotFitted => 3,
            Error::Numerical(_) => 4,
            Error::Io(_) | Error::Csv(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
