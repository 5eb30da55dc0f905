//! Time-series container, max-min normalization, chronological splitting,
//! lag-matrix construction, and descriptive statistics.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An ordered, uniformly sampled sequence of observations (e.g. half-hourly
/// load in MW), optionally tagged with epoch timestamps.
///
/// Values are validated finite on construction; timestamps, when present,
/// must be strictly increasing with constant spacing equal to the sampling
/// period. Instances are immutable and safe to share across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    timestamps: Option<Vec<i64>>,
    /// Spacing between consecutive observations, in seconds.
    sampling_period_secs: i64,
}

/// Default sampling period: half an hour.
pub const DEFAULT_SAMPLING_PERIOD_SECS: i64 = 30 * 60;

impl TimeSeries {
    /// Builds a series from bare values with the default half-hour period.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_period(values, DEFAULT_SAMPLING_PERIOD_SECS)
    }

    /// Builds a series from bare values and an explicit sampling period.
    pub fn with_period(values: Vec<f64>, sampling_period_secs: i64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Sizing("series must contain at least one value".into()));
        }
        if sampling_period_secs <= 0 {
            return Err(Error::Config("sampling period must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at index {i}")));
        }
        Ok(Self { values, timestamps: None, sampling_period_secs })
    }

    /// Builds a series with per-observation epoch timestamps (seconds). The
    /// sampling period is inferred from the first gap and every subsequent
    /// gap must match it exactly.
    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<i64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        let period = if timestamps.len() >= 2 {
            timestamps[1] - timestamps[0]
        } else {
            DEFAULT_SAMPLING_PERIOD_SECS
        };
        if period <= 0 {
            return Err(Error::Data("timestamps must be strictly increasing".into()));
        }
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != period {
                return Err(Error::Data(format!(
                    "irregular timestamp spacing at index {}: {}s, expected {}s",
                    i + 1,
                    pair[1] - pair[0],
                    period
                )));
            }
        }
        let mut s = Self::with_period(values, period)?;
        s.timestamps = Some(timestamps);
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[i64]> {
        self.timestamps.as_deref()
    }

    pub fn sampling_period_secs(&self) -> i64 {
        self.sampling_period_secs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Contiguous sub-series over `range`, keeping timestamps aligned.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::Sizing(format!(
                "slice {}..{} out of range for series of length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[range.clone()].to_vec(),
            timestamps: self.timestamps.as_ref().map(|t| t[range].to_vec()),
            sampling_period_secs: self.sampling_period_secs,
        })
    }

    /// Max-min normalization (affine map of `[x_min, x_max]` onto `[0, 1]`).
    ///
    /// The parameters must come from the training segment only; values
    /// outside the training range land outside `[0, 1]` and are not clipped.
    pub fn normalize(&self, params: &NormalizationParams) -> Self {
        self.map_values(|x| params.normalize(x))
    }

    /// Exact algebraic inverse of [`TimeSeries::normalize`].
    pub fn denormalize(&self, params: &NormalizationParams) -> Self {
        self.map_values(|x| params.denormalize(x))
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&x| f(x)).collect(),
            timestamps: self.timestamps.clone(),
            sampling_period_secs: self.sampling_period_secs,
        }
    }

    /// Chronological train/validation/test split. Validation and test get
    /// `floor(fraction * len)` observations each; the remainder goes to the
    /// training segment, which always comes first.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Self, Self, Self)> {
        spec.validate()?;
        let n = self.len();
        let n_valid = (spec.valid_fraction * n as f64).floor() as usize;
        let n_test = (spec.test_fraction * n as f64).floor() as usize;
        let n_train = n - n_valid - n_test;
        if n_train == 0 || n_test == 0 || (spec.valid_fraction > 0.0 && n_valid == 0) {
            return Err(Error::Sizing(format!(
                "series of length {n} cannot be split {}/{}/{}",
                spec.train_fraction, spec.valid_fraction, spec.test_fraction
            )));
        }
        let train = self.slice(0..n_train)?;
        let valid = if n_valid > 0 {
            self.slice(n_train..n_train + n_valid)?
        } else {
            Self { values: vec![], timestamps: None, sampling_period_secs: self.sampling_period_secs }
        };
        let test = self.slice(n_train + n_valid..n)?;
        Ok((train, valid, test))
    }

    /// Supervised view of the series: row `i` holds
    /// `[x(i), ..., x(i + order - 1)]` and predicts `x(i + order)`.
    pub fn lag_matrix(&self, order: usize) -> Result<FeatureMatrix> {
        if order == 0 {
            return Err(Error::Config("lag order must be positive".into()));
        }
        if self.len() <= order {
            return Err(Error::Sizing(format!(
                "series of length {} cannot produce lag rows of order {order}",
                self.len()
            )));
        }
        let n = self.len() - order;
        let mut inputs = Array2::zeros((n, order));
        let mut targets = Array1::zeros(n);
        for i in 0..n {
            inputs.row_mut(i).assign(&Array1::from_iter(self.values[i..i + order].iter().copied()));
            targets[i] = self.values[i + order];
        }
        Ok(FeatureMatrix {
            inputs,
            targets,
            order,
            layout: FeatureLayout::raw_only(order),
        })
    }

    /// Sample statistics in the convention that keeps report pipelines total:
    /// bias-corrected skewness and excess kurtosis, both reported as 0 for
    /// constant (or too-short) series.
    pub fn describe(&self) -> Result<DescriptiveStats> {
        let x = &self.values;
        let n = x.len();
        if n < 2 {
            return Err(Error::Sizing("descriptive statistics need at least 2 values".into()));
        }
        let nf = n as f64;
        let mean = x.iter().sum::<f64>() / nf;
        let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let std = (m2 / (nf - 1.0)).sqrt();

        let mut sorted = x.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("values validated finite"));
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };

        let (skewness, kurtosis) = if std == 0.0 {
            (0.0, 0.0)
        } else {
            let z3: f64 = x.iter().map(|v| ((v - mean) / std).powi(3)).sum();
            let z4: f64 = x.iter().map(|v| ((v - mean) / std).powi(4)).sum();
            let skew = if n >= 3 { nf / ((nf - 1.0) * (nf - 2.0)) * z3 } else { 0.0 };
            let kurt = if n >= 4 {
                nf * (nf + 1.0) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)) * z4
                    - 3.0 * (nf - 1.0).powi(2) / ((nf - 2.0) * (nf - 3.0))
            } else {
                0.0
            };
            (skew, kurt)
        };

        Ok(DescriptiveStats {
            max: sorted[n - 1],
            min: sorted[0],
            median,
            mean,
            std,
            skewness,
            kurtosis,
        })
    }
}

/// The `(x_min, x_max)` pair behind max-min normalization. Fit it on the
/// training segment only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub x_min: f64,
    pub x_max: f64,
}

impl NormalizationParams {
    /// Derives the parameters from a (training) series.
    pub fn fit(series: &TimeSeries) -> Result<Self> {
        let x_min = series.values.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(x_min, x_max)
    }

    pub fn new(x_min: f64, x_max: f64) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::Config(format!(
                "degenerate normalization range: x_min = {x_min}, x_max = {x_max}"
            )));
        }
        Ok(Self { x_min, x_max })
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.x_min) / (self.x_max - self.x_min)
    }

    #[inline]
    pub fn denormalize(&self, x: f64) -> f64 {
        x * (self.x_max - self.x_min) + self.x_min
    }
}

/// Chronological split fractions; they must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.7, valid_fraction: 0.1, test_fraction: 0.2 }
    }
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let spec = Self { train_fraction: train, valid_fraction: valid, test_fraction: test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.train_fraction > 0.0
            && self.train_fraction < 1.0
            && self.valid_fraction >= 0.0
            && self.valid_fraction < 1.0
            && self.test_fraction > 0.0
            && self.test_fraction < 1.0;
        if !ok {
            return Err(Error::Config(format!(
                "split fractions out of range: {}/{}/{}",
                self.train_fraction, self.valid_fraction, self.test_fraction
            )));
        }
        let sum = self.train_fraction + self.valid_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Where a block of feature columns comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSource {
    /// Lags of the (normalized) series itself.
    Raw,
    /// Lags of EWT sub-series `i` (0 = scaling band, then ascending frequency).
    Component(usize),
}

impl std::fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureSource::Raw => write!(f, "raw"),
            FeatureSource::Component(i) => write!(f, "band{i}"),
        }
    }
}

/// Ordered description of the columns of a [`FeatureMatrix`]: a sequence of
/// blocks, each `lags` consecutive columns drawn from one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub blocks: Vec<(FeatureSource, usize)>,
}

impl FeatureLayout {
    pub fn raw_only(order: usize) -> Self {
        Self { blocks: vec![(FeatureSource::Raw, order)] }
    }

    /// Total feature dimension.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|(_, lags)| lags).sum()
    }

    /// Column headers like `band0_lag47 ... raw_lag0`; lag 0 is the most
    /// recent observation.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for (source, lags) in &self.blocks {
            for lag in (0..*lags).rev() {
                names.push(format!("{source}_lag{lag}"));
            }
        }
        names
    }
}

/// Lagged (and possibly decomposed) inputs aligned with scalar targets.
/// Row `i` of `inputs` only contains observations strictly earlier than
/// `targets[i]`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
    /// Number of lags per source block.
    pub order: usize,
    pub layout: FeatureLayout,
}

impl FeatureMatrix {
    pub fn num_rows(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Rows `range` as a new matrix with the same layout.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.num_rows() || range.start >= range.end {
            return Err(Error::Sizing(format!(
                "row slice {}..{} out of range for {} rows",
                range.start,
                range.end,
                self.num_rows()
            )));
        }
        Ok(Self {
            inputs: self.inputs.slice(ndarray::s![range.start..range.end, ..]).to_owned(),
            targets: self.targets.slice(ndarray::s![range.start..range.end]).to_owned(),
            order: self.order,
            layout: self.layout.clone(),
        })
    }
}

/// The usual one-line summary of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}
