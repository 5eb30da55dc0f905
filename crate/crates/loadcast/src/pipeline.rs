//! End-to-end pipelines: normalize, build features, tune layer-wise, fit,
//! forecast, score. The CLI and the examples are thin wrappers over this
//! module.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::edrvfl::{persistence_forecast, EdRvflModel, EnsembleRule};
use crate::series::{FeatureLayout, FeatureMatrix, NormalizationParams, SplitSpec, TimeSeries};
use crate::stats::{mase, MetricReport};
use crate::tuning::{layerwise_tune, SearchSpace, TuningTrace};
use crate::walkforward::{walk_forward_features, walk_forward_features_at, WalkForwardConfig};
use crate::{Error, Result};

/// The forecasting models the pipeline can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Naive baseline: forecast the previous observation.
    #[serde(rename = "persistence")]
    Persistence,
    /// Shallow RVFL (one enhancement layer) on raw lags.
    #[serde(rename = "rvfl")]
    Rvfl,
    /// Shallow RVFL on walk-forward EWT features.
    #[serde(rename = "ewt-rvfl")]
    EwtRvfl,
    /// Deep ensemble on raw lags, median combination.
    #[serde(rename = "med-edrvfl")]
    MedEdRvfl,
    /// Deep ensemble on raw lags, mean combination.
    #[serde(rename = "mea-edrvfl")]
    MeaEdRvfl,
    /// Deep ensemble on walk-forward EWT features, median combination.
    #[serde(rename = "ewt-med-edrvfl")]
    EwtMedEdRvfl,
    /// Deep ensemble on walk-forward EWT features, mean combination.
    #[serde(rename = "ewt-mea-edrvfl")]
    EwtMeaEdRvfl,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Persistence,
        ModelKind::Rvfl,
        ModelKind::EwtRvfl,
        ModelKind::MedEdRvfl,
        ModelKind::MeaEdRvfl,
        ModelKind::EwtMedEdRvfl,
        ModelKind::EwtMeaEdRvfl,
    ];

    /// Does this model consume walk-forward EWT features (vs raw lags)?
    pub fn uses_ewt(self) -> bool {
        matches!(self, ModelKind::EwtRvfl | ModelKind::EwtMedEdRvfl | ModelKind::EwtMeaEdRvfl)
    }

    /// Layer count given the configured depth; the shallow baselines pin it
    /// to one.
    pub fn num_layers(self, configured: usize) -> usize {
        match self {
            ModelKind::Persistence => 0,
            ModelKind::Rvfl | ModelKind::EwtRvfl => 1,
            _ => configured,
        }
    }

    pub fn ensemble_rule(self) -> EnsembleRule {
        match self {
            ModelKind::MedEdRvfl | ModelKind::EwtMedEdRvfl => EnsembleRule::Median,
            _ => EnsembleRule::Mean,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "persistence" => Ok(ModelKind::Persistence),
            "rvfl" => Ok(ModelKind::Rvfl),
            "ewt-rvfl" => Ok(ModelKind::EwtRvfl),
            "med-edrvfl" => Ok(ModelKind::MedEdRvfl),
            "mea-edrvfl" => Ok(ModelKind::MeaEdRvfl),
            "ewt-med-edrvfl" => Ok(ModelKind::EwtMedEdRvfl),
            "ewt-mea-edrvfl" => Ok(ModelKind::EwtMeaEdRvfl),
            other => Err(Error::Config(format!(
                "unknown model '{other}'; expected one of persistence, rvfl, ewt-rvfl, \
                 med-edrvfl, mea-edrvfl, ewt-med-edrvfl, ewt-mea-edrvfl"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Persistence => "persistence",
            ModelKind::Rvfl => "rvfl",
            ModelKind::EwtRvfl => "ewt-rvfl",
            ModelKind::MedEdRvfl => "med-edrvfl",
            ModelKind::MeaEdRvfl => "mea-edrvfl",
            ModelKind::EwtMedEdRvfl => "ewt-med-edrvfl",
            ModelKind::EwtMeaEdRvfl => "ewt-mea-edrvfl",
        })
    }
}

/// Everything the training pipeline needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Lags per feature block. Default 48 (one day of half-hourly data).
    pub order: usize,
    /// Walk-forward decomposition window. Default 336 (one week).
    pub window_w: usize,
    /// EWT sub-bands. Default 2.
    pub num_components: usize,
    /// Append raw lags after sub-series lags. Default true.
    pub include_raw: bool,
    pub freeze_boundaries: bool,
    pub drop_highest_band: bool,
    pub split: SplitSpec,
    /// Enhancement layers for the deep models. Default 5.
    pub num_layers: usize,
    pub search: SearchSpace,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            order: 48,
            window_w: 336,
            num_components: 2,
            include_raw: true,
            freeze_boundaries: false,
            drop_highest_band: false,
            split: SplitSpec::default(),
            num_layers: 5,
            search: SearchSpace::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn walkforward(&self) -> WalkForwardConfig {
        WalkForwardConfig {
            window_w: self.window_w,
            order: self.order,
            num_components: self.num_components,
            include_raw: self.include_raw,
            freeze_boundaries: self.freeze_boundaries,
            drop_highest_band: self.drop_highest_band,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.search.validate()?;
        self.walkforward().validate()?;
        if self.num_layers == 0 {
            return Err(Error::Config("num_layers must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained model plus everything needed to forecast new data in original
/// units. Serialized as self-describing JSON; the encoding round-trips every
/// float exactly, so identical runs produce identical artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub kind: ModelKind,
    pub seed: u64,
    pub order: usize,
    pub window_w: usize,
    pub num_components: usize,
    pub include_raw: bool,
    pub freeze_boundaries: bool,
    pub drop_highest_band: bool,
    pub normalization: NormalizationParams,
    pub feature_layout: FeatureLayout,
    /// Absent for the persistence baseline.
    pub model: Option<EdRvflModel>,
}

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("artifact serialization: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let artifact: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("malformed artifact {}: {e}", path.display())))?;
        if artifact.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "artifact format {} unsupported (expected {ARTIFACT_FORMAT_VERSION})",
                artifact.format_version
            )));
        }
        Ok(artifact)
    }

    fn walkforward(&self) -> WalkForwardConfig {
        WalkForwardConfig {
            window_w: self.window_w,
            order: self.order,
            num_components: self.num_components,
            include_raw: self.include_raw,
            freeze_boundaries: self.freeze_boundaries,
            drop_highest_band: self.drop_highest_band,
        }
    }

    /// Earliest origin this artifact can forecast within a series.
    pub fn min_origin(&self) -> usize {
        if self.kind == ModelKind::Persistence {
            1
        } else if self.kind.uses_ewt() {
            self.window_w
        } else {
            self.order
        }
    }

    /// One-step-ahead rolling forecasts for origins `[start, end)` of
    /// `series`, in original units. Each forecast at `t` reads only
    /// observations before `t`.
    pub fn forecast_range(
        &self,
        series: &TimeSeries,
        start: usize,
        end: usize,
    ) -> Result<Vec<f64>> {
        if start < self.min_origin() || end > series.len() || start >= end {
            return Err(Error::Sizing(format!(
                "forecast range {start}..{end} invalid for a series of length {} \
                 (earliest origin {})",
                series.len(),
                self.min_origin()
            )));
        }
        if self.kind == ModelKind::Persistence {
            return Ok((start..end).map(|t| series.values()[t - 1]).collect());
        }
        let model = self.model.as_ref().ok_or(Error::NotFitted)?;
        let normalized = series.normalize(&self.normalization);
        let rows: Vec<Array1<f64>> = if self.kind.uses_ewt() {
            let cfg = self.walkforward();
            if cfg.layout() != self.feature_layout {
                return Err(Error::Config(
                    "artifact feature layout disagrees with its decomposition settings".into(),
                ));
            }
            (start..end)
                .map(|t| walk_forward_features_at(&normalized, t, &cfg))
                .collect::<Result<Vec<_>>>()?
        } else {
            let values = normalized.values();
            (start..end)
                .map(|t| Array1::from_iter(values[t - self.order..t].iter().copied()))
                .collect()
        };
        let dim = rows[0].len();
        if dim != model.feature_dim {
            return Err(Error::Config(format!(
                "artifact expects {} features but the configuration produces {dim}",
                model.feature_dim
            )));
        }
        let mut inputs = Array2::zeros((rows.len(), dim));
        for (i, row) in rows.iter().enumerate() {
            inputs.row_mut(i).assign(row);
        }
        let out = model.predict(&inputs)?;
        Ok(out.combined.iter().map(|&v| self.normalization.denormalize(v)).collect())
    }
}

/// Actual-vs-forecast pairs for a contiguous block of origins, in original
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPredictions {
    /// Index (into the full series) of the first forecast origin.
    pub start_index: usize,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Schema version of [`TrainReport`]; bump on breaking field changes.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Summary of one training run. Everything here is recomputable from the
/// emitted forecasts and the input series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub format_version: u32,
    pub model: ModelKind,
    pub seed: u64,
    pub crate_version: String,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub feature_dim: usize,
    pub tuned_nodes: Option<usize>,
    pub tuned_lambdas: Option<Vec<f64>>,
    pub tuned_activation: Option<String>,
    pub valid_metrics: Option<MetricReport>,
    pub test_metrics: MetricReport,
    /// MASE of the naive forecast replayed on the training series; defined
    /// (and exactly 1) for the persistence baseline.
    pub train_replay_mase: Option<f64>,
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub report: TrainReport,
    pub trace: Option<TuningTrace>,
    pub valid_predictions: Option<SplitPredictions>,
    pub test_predictions: SplitPredictions,
}

/// Trains `kind` on `series`: chronological split, max-min normalization from
/// the training segment, feature construction (raw lags or walk-forward EWT),
/// layer-wise tuning on the validation segment, a final fit on the training
/// rows, and metrics on the validation and test segments in original units.
pub fn train_model(series: &TimeSeries, kind: ModelKind, config: &PipelineConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let (train_s, valid_s, test_s) = series.split(&config.split)?;
    let (n_train, n_valid, n_test) = (train_s.len(), valid_s.len(), test_s.len());
    let normalization = NormalizationParams::fit(&train_s)?;

    if kind == ModelKind::Persistence {
        return train_persistence(series, config, &train_s, n_train, n_valid, n_test, normalization);
    }

    let first_origin = if kind.uses_ewt() { config.window_w } else { config.order };
    if n_train <= first_origin + 1 {
        return Err(Error::Sizing(format!(
            "training segment of {n_train} points is too short for features starting at \
             index {first_origin}; provide more data or shrink window/order"
        )));
    }
    if n_valid == 0 {
        return Err(Error::Sizing(
            "layer-wise tuning needs a non-empty validation split".into(),
        ));
    }

    let normalized = series.normalize(&normalization);
    let features = if kind.uses_ewt() {
        walk_forward_features(&normalized, &config.walkforward())?
    } else {
        normalized.lag_matrix(config.order)?
    };

    // row i targets series index first_origin + i
    let row_of = |t: usize| t - first_origin;
    let train_rows = features.slice_rows(0..row_of(n_train))?;
    let valid_rows = features.slice_rows(row_of(n_train)..row_of(n_train + n_valid))?;
    let test_rows = features.slice_rows(row_of(n_train + n_valid)..features.num_rows())?;

    let layers = kind.num_layers(config.num_layers);
    let (tuned, trace) = layerwise_tune(&train_rows, &valid_rows, &config.search, layers, config.seed)?;
    let tuned = tuned.with_ensemble_rule(kind.ensemble_rule());

    let mut model = EdRvflModel::init(tuned.clone(), features.dim())?;
    model.fit(&train_rows.inputs, &train_rows.targets)?;

    let predict_denorm = |rows: &FeatureMatrix| -> Result<Vec<f64>> {
        let out = model.predict(&rows.inputs)?;
        Ok(out.combined.iter().map(|&v| normalization.denormalize(v)).collect())
    };
    let actuals = |start: usize, len: usize| series.values()[start..start + len].to_vec();

    let valid_pred = predict_denorm(&valid_rows)?;
    let valid_actual = actuals(n_train, n_valid);
    let test_pred = predict_denorm(&test_rows)?;
    let test_actual = actuals(n_train + n_valid, n_test);

    let valid_metrics = MetricReport::compute(&valid_pred, &valid_actual, train_s.values())?;
    let test_metrics = MetricReport::compute(&test_pred, &test_actual, train_s.values())?;

    let artifact = ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        kind,
        seed: config.seed,
        order: config.order,
        window_w: config.window_w,
        num_components: config.num_components,
        include_raw: config.include_raw,
        freeze_boundaries: config.freeze_boundaries,
        drop_highest_band: config.drop_highest_band,
        normalization,
        feature_layout: features.layout.clone(),
        model: Some(model),
    };
    let report = TrainReport {
        format_version: REPORT_FORMAT_VERSION,
        model: kind,
        seed: config.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        n_train,
        n_valid,
        n_test,
        feature_dim: features.dim(),
        tuned_nodes: Some(tuned.nodes_per_layer),
        tuned_lambdas: Some(tuned.lambdas.clone()),
        tuned_activation: Some(tuned.activation.to_string()),
        valid_metrics: Some(valid_metrics),
        test_metrics,
        train_replay_mase: None,
    };
    Ok(TrainOutcome {
        artifact,
        report,
        trace: Some(trace),
        valid_predictions: Some(SplitPredictions {
            start_index: n_train,
            actual: valid_actual,
            predicted: valid_pred,
        }),
        test_predictions: SplitPredictions {
            start_index: n_train + n_valid,
            actual: test_actual,
            predicted: test_pred,
        },
    })
}

fn train_persistence(
    series: &TimeSeries,
    config: &PipelineConfig,
    train_s: &TimeSeries,
    n_train: usize,
    n_valid: usize,
    n_test: usize,
    normalization: NormalizationParams,
) -> Result<TrainOutcome> {
    let values = series.values();
    let slice_pred = |start: usize, len: usize| -> Vec<f64> {
        (start..start + len).map(|t| values[t - 1]).collect()
    };
    let valid_pred = slice_pred(n_train, n_valid);
    let valid_actual = values[n_train..n_train + n_valid].to_vec();
    let test_pred = slice_pred(n_train + n_valid, n_test);
    let test_actual = values[n_train + n_valid..].to_vec();

    // the naive forecast replayed on its own training series scores MASE 1
    let replay_pred = persistence_forecast(train_s, 1)?;
    let replay = mase(&replay_pred, &train_s.values()[1..], train_s.values())?;

    let valid_metrics = if n_valid > 0 {
        Some(MetricReport::compute(&valid_pred, &valid_actual, train_s.values())?)
    } else {
        None
    };
    let test_metrics = MetricReport::compute(&test_pred, &test_actual, train_s.values())?;

    let artifact = ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        kind: ModelKind::Persistence,
        seed: config.seed,
        order: config.order,
        window_w: config.window_w,
        num_components: config.num_components,
        include_raw: config.include_raw,
        freeze_boundaries: config.freeze_boundaries,
        drop_highest_band: config.drop_highest_band,
        normalization,
        feature_layout: FeatureLayout { blocks: vec![] },
        model: None,
    };
    let report = TrainReport {
        format_version: REPORT_FORMAT_VERSION,
        model: ModelKind::Persistence,
        seed: config.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        n_train,
        n_valid,
        n_test,
        feature_dim: 0,
        tuned_nodes: None,
        tuned_lambdas: None,
        tuned_activation: None,
        valid_metrics,
        test_metrics,
        train_replay_mase: Some(replay),
    };
    Ok(TrainOutcome {
        artifact,
        report,
        trace: None,
        valid_predictions: (n_valid > 0).then_some(SplitPredictions {
            start_index: n_train,
            actual: valid_actual,
            predicted: valid_pred,
        }),
        test_predictions: SplitPredictions {
            start_index: n_train + n_valid,
            actual: test_actual,
            predicted: test_pred,
        },
    })
}

/// Seeded synthetic half-hourly load: a daily sinusoid with weekly
/// modulation, a mild trend and multiplicative noise. Handy for exercising
/// the full pipeline without real data.
pub fn synthetic_load_series(len: usize, noise: f64, seed: u64) -> TimeSeries {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let values = (0..len)
        .map(|t| {
            let t = t as f64;
            let daily = (2.0 * std::f64::consts::PI * t / 48.0).sin();
            let weekly = 0.3 * (2.0 * std::f64::consts::PI * t / 336.0).sin();
            let base = 1000.0 + 250.0 * daily * (1.0 + weekly) + 0.05 * t;
            base * (1.0 + noise * rng.gen_range(-1.0..1.0))
        })
        .collect();
    TimeSeries::new(values).expect("synthetic values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> PipelineConfig {
        PipelineConfig {
            order: 12,
            window_w: 48,
            num_layers: 2,
            search: SearchSpace {
                node_grid: vec![10, 20],
                lambda_grid: vec![0.0, 2f64.powi(-8), 2f64.powi(-4)],
                ..SearchSpace::default()
            },
            seed: 7,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn model_kind_round_trips_names() {
        for kind in ModelKind::ALL {
            let parsed: ModelKind = kind.to_string().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("nope".parse::<ModelKind>().is_err());
    }

    #[test]
    fn persistence_report_replays_mase_one() {
        let series = synthetic_load_series(400, 0.02, 3);
        let outcome = train_model(&series, ModelKind::Persistence, &quick_config()).unwrap();
        let replay = outcome.report.train_replay_mase.unwrap();
        assert!((replay - 1.0).abs() < 1e-12);
        assert!(outcome.artifact.model.is_none());
    }

    #[test]
    fn ewt_models_report_expected_feature_dim() {
        let series = synthetic_load_series(500, 0.02, 4);
        let cfg = quick_config();
        let outcome = train_model(&series, ModelKind::EwtMeaEdRvfl, &cfg).unwrap();
        assert_eq!(outcome.report.feature_dim, cfg.order * (cfg.num_components + 1));
        assert_eq!(outcome.artifact.feature_layout.blocks.len(), 3);
    }

    #[test]
    fn deterministic_artifacts_and_reports() {
        let series = synthetic_load_series(420, 0.03, 5);
        let cfg = quick_config();
        let a = train_model(&series, ModelKind::MeaEdRvfl, &cfg).unwrap();
        let b = train_model(&series, ModelKind::MeaEdRvfl, &cfg).unwrap();
        assert_eq!(a.artifact.to_json().unwrap(), b.artifact.to_json().unwrap());
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }

    #[test]
    fn forecast_range_matches_training_predictions() {
        let series = synthetic_load_series(420, 0.03, 6);
        let cfg = quick_config();
        let outcome = train_model(&series, ModelKind::Rvfl, &cfg).unwrap();
        let test = &outcome.test_predictions;
        let again = outcome
            .artifact
            .forecast_range(&series, test.start_index, test.start_index + test.actual.len())
            .unwrap();
        assert_eq!(again, test.predicted);
    }

    #[test]
    fn frozen_boundary_mode_round_trips() {
        let series = synthetic_load_series(420, 0.03, 12);
        let cfg = PipelineConfig { freeze_boundaries: true, ..quick_config() };
        let outcome = train_model(&series, ModelKind::EwtMeaEdRvfl, &cfg).unwrap();
        let test = &outcome.test_predictions;
        let again = outcome
            .artifact
            .forecast_range(&series, test.start_index, test.start_index + test.actual.len())
            .unwrap();
        assert_eq!(again, test.predicted);
    }

    #[test]
    fn forecasts_ignore_future_perturbations() {
        let series = synthetic_load_series(420, 0.03, 8);
        let cfg = quick_config();
        let outcome = train_model(&series, ModelKind::EwtRvfl, &cfg).unwrap();
        let t0 = outcome.test_predictions.start_index;
        let one = outcome.artifact.forecast_range(&series, t0, t0 + 1).unwrap();
        let mut mutated = series.values().to_vec();
        for v in mutated.iter_mut().skip(t0) {
            *v *= 3.0;
        }
        let mutated = TimeSeries::new(mutated).unwrap();
        let two = outcome.artifact.forecast_range(&mutated, t0, t0 + 1).unwrap();
        assert_eq!(one, two);
    }


    #[test]
    fn artifact_round_trips_through_json() {
        let series = synthetic_load_series(420, 0.03, 9);
        let outcome = train_model(&series, ModelKind::MedEdRvfl, &quick_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        outcome.artifact.save(&path).unwrap();
        let loaded = ModelArtifact::load(&path).unwrap();
        assert_eq!(loaded, outcome.artifact);
    }

    #[test]
    fn mismatched_artifact_dimension_is_config_error() {
        let series = synthetic_load_series(420, 0.03, 10);
        let outcome = train_model(&series, ModelKind::Rvfl, &quick_config()).unwrap();
        let mut broken = outcome.artifact.clone();
        broken.order = 20;
        let err = broken.forecast_range(&series, 300, 310);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn too_short_series_is_sizing_error() {
        // train segment (42 points) ends before the first EWT origin (48)
        let series = synthetic_load_series(60, 0.02, 11);
        let err = train_model(&series, ModelKind::EwtMeaEdRvfl, &quick_config());
        assert!(matches!(err, Err(Error::Sizing(_))));
    }
}
