//! Leak-free rolling decomposition: at every forecast origin `t` only
//! `x(t - w) ... x(t - 1)` is decomposed, and the last `order` points of each
//! sub-series (plus, by default, the raw series) become the feature row whose
//! target is `x(t)`. Decomposing the whole series at once would let filtered
//! values at time `s < t` depend on observations after `t`; this module never
//! does that.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ewt::{detect_boundaries, EwtBoundaries, EwtFilterBank};
use crate::series::{FeatureLayout, FeatureMatrix, FeatureSource, TimeSeries};
use crate::{Error, Result};

/// Sampled-grid resolution for the per-window filter banks. Feature rows are
/// computed from analytic filter evaluations at the window's FFT bins, so the
/// grid only feeds diagnostics.
const WINDOW_BANK_GRID: usize = 256;

/// Settings for the rolling decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardConfig {
    /// History length decomposed at each origin. Default 336 (one week of
    /// half-hourly data), which covers the daily and weekly cycles.
    pub window_w: usize,
    /// Lag length fed to the model from each sub-series. Default 48 (one
    /// day).
    pub order: usize,
    /// Number of EWT sub-bands. Default 2 (one scaling + one wavelet band).
    pub num_components: usize,
    /// Concatenate the raw lags after the sub-series lags. Default true.
    pub include_raw: bool,
    /// Detect boundaries once, on the earliest window, instead of per
    /// origin. Off by default; a speed knob that stays causal because the
    /// earliest window precedes every forecast origin.
    pub freeze_boundaries: bool,
    /// Drop the highest-frequency sub-series from the features. Off by
    /// default.
    pub drop_highest_band: bool,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        Self {
            window_w: 336,
            order: 48,
            num_components: 2,
            include_raw: true,
            freeze_boundaries: false,
            drop_highest_band: false,
        }
    }
}

impl WalkForwardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("order must be positive".into()));
        }
        if self.num_components == 0 {
            return Err(Error::Config("num_components must be positive".into()));
        }
        if self.window_w < self.order {
            return Err(Error::Config(format!(
                "window_w ({}) must be at least order ({})",
                self.window_w, self.order
            )));
        }
        if self.window_w < 2 * self.num_components {
            return Err(Error::Config(format!(
                "window_w ({}) must be at least twice num_components ({})",
                self.window_w, self.num_components
            )));
        }
        if self.drop_highest_band && self.num_components < 2 {
            return Err(Error::Config(
                "drop_highest_band needs at least two components".into(),
            ));
        }
        Ok(())
    }

    /// Number of sub-series that contribute feature columns.
    pub fn effective_components(&self) -> usize {
        self.num_components - usize::from(self.drop_highest_band)
    }

    /// Feature dimension: `order x (components + include_raw)`.
    pub fn feature_dim(&self) -> usize {
        self.order * (self.effective_components() + usize::from(self.include_raw))
    }

    /// Column layout of the emitted rows: sub-series blocks in ascending
    /// frequency, then the raw block.
    pub fn layout(&self) -> FeatureLayout {
        let mut blocks: Vec<(FeatureSource, usize)> = (0..self.effective_components())
            .map(|i| (FeatureSource::Component(i), self.order))
            .collect();
        if self.include_raw {
            blocks.push((FeatureSource::Raw, self.order));
        }
        FeatureLayout { blocks }
    }
}

/// Builds the full feature matrix: one row per origin `t` in
/// `[window_w, len)`, in chronological order regardless of how rows are
/// scheduled across threads.
pub fn walk_forward_features(series: &TimeSeries, cfg: &WalkForwardConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    if series.len() <= cfg.window_w {
        return Err(Error::Sizing(format!(
            "series of length {} has no forecast origin beyond a window of {}",
            series.len(),
            cfg.window_w
        )));
    }
    let values = series.values();
    let frozen = frozen_boundaries(values, cfg)?;
    let origins: Vec<usize> = (cfg.window_w..values.len()).collect();
    let rows: Vec<Vec<f64>> = origins
        .par_iter()
        .map(|&t| feature_row(values, t, cfg, frozen.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let d = cfg.feature_dim();
    let mut inputs = Array2::zeros((origins.len(), d));
    let mut targets = Array1::zeros(origins.len());
    for (i, (&t, row)) in origins.iter().zip(&rows).enumerate() {
        inputs.row_mut(i).assign(&Array1::from_iter(row.iter().copied()));
        targets[i] = values[t];
    }
    Ok(FeatureMatrix { inputs, targets, order: cfg.order, layout: cfg.layout() })
}

/// The single feature row at origin `t`; identical to the row the batch
/// operation emits there.
pub fn walk_forward_features_at(
    series: &TimeSeries,
    t: usize,
    cfg: &WalkForwardConfig,
) -> Result<Array1<f64>> {
    cfg.validate()?;
    if t < cfg.window_w || t > series.len() {
        return Err(Error::Sizing(format!(
            "origin {t} out of range [{}, {}]",
            cfg.window_w,
            series.len()
        )));
    }
    let values = series.values();
    let frozen = frozen_boundaries(values, cfg)?;
    let row = feature_row(values, t, cfg, frozen.as_ref())?;
    Ok(Array1::from_vec(row))
}

fn frozen_boundaries(values: &[f64], cfg: &WalkForwardConfig) -> Result<Option<EwtBoundaries>> {
    if !cfg.freeze_boundaries {
        return Ok(None);
    }
    if values.len() < cfg.window_w {
        return Err(Error::Sizing("series shorter than one window".into()));
    }
    Ok(Some(detect_boundaries(&values[..cfg.window_w], cfg.num_components)?))
}

/// One row: decompose `values[t - w .. t]`, keep each sub-series' final
/// `order` points, then the raw tail. Reads nothing at or after index `t`.
fn feature_row(
    values: &[f64],
    t: usize,
    cfg: &WalkForwardConfig,
    frozen: Option<&EwtBoundaries>,
) -> Result<Vec<f64>> {
    let window = &values[t - cfg.window_w..t];
    let boundaries = match frozen {
        Some(b) => b.clone(),
        None => detect_boundaries(window, cfg.num_components)?,
    };
    let bank = EwtFilterBank::new(boundaries, None, WINDOW_BANK_GRID)?;
    let components = bank.decompose(window)?;

    let mut row = Vec::with_capacity(cfg.feature_dim());
    let tail = cfg.window_w - cfg.order;
    for comp in components.sub_series.iter().take(cfg.effective_components()) {
        row.extend_from_slice(&comp[tail..]);
    }
    if cfg.include_raw {
        row.extend_from_slice(&window[tail..]);
    }
    Ok(row)
}
