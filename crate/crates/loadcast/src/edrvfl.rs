//! Ensemble deep random vector functional link (edRVFL) networks.
//!
//! The network stacks `L` enhancement layers of `N` random nodes each. Layer
//! 1 sees the input `X`; every deeper layer sees `[H_prev, X]`, so the clean
//! input is re-injected at each depth. All enhancement weights are drawn once
//! from the seed and never updated. Each layer gets its own output head,
//! trained in closed form by ridge regression on the design matrix
//! `D = [H_l, X]` (plus an intercept column when bias is enabled), and the
//! final forecast combines the per-layer outputs by mean or median.

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::series::TimeSeries;
use crate::{Error, Result};

/// Nonlinearity applied to the enhancement nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!(
                "unknown activation '{other}' (expected sigmoid, tanh or relu)"
            ))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        };
        f.write_str(name)
    }
}

/// How per-layer forecasts are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleRule {
    Mean,
    Median,
}

impl std::str::FromStr for EnsembleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(EnsembleRule::Mean),
            "median" => Ok(EnsembleRule::Median),
            other => Err(Error::Config(format!(
                "unknown ensemble rule '{other}' (expected mean or median)"
            ))),
        }
    }
}

impl std::fmt::Display for EnsembleRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleRule::Mean => "mean",
            EnsembleRule::Median => "median",
        })
    }
}

/// Structure and training hyperparameters of an edRVFL network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdRvflConfig {
    /// Number of enhancement layers `L`.
    pub num_layers: usize,
    /// Enhancement nodes per layer `N`.
    pub nodes_per_layer: usize,
    /// Per-layer ridge regularization; length must equal `num_layers`.
    pub lambdas: Vec<f64>,
    pub activation: Activation,
    /// Enhancement weights are uniform on `[-weight_scale, weight_scale]`.
    pub weight_scale: f64,
    /// Adds a random bias node per enhancement layer and an intercept column
    /// to each output head.
    pub use_bias: bool,
    pub ensemble_rule: EnsembleRule,
    pub rng_seed: u64,
}

impl EdRvflConfig {
    /// Convenience constructor with the library defaults (sigmoid, unit
    /// weight scale, bias on, mean ensemble), broadcasting one lambda to all
    /// layers.
    pub fn new(num_layers: usize, nodes_per_layer: usize, lambda: f64, rng_seed: u64) -> Self {
        Self {
            num_layers,
            nodes_per_layer,
            lambdas: vec![lambda; num_layers],
            activation: Activation::Sigmoid,
            weight_scale: 1.0,
            use_bias: true,
            ensemble_rule: EnsembleRule::Mean,
            rng_seed,
        }
    }

    pub fn with_ensemble_rule(mut self, rule: EnsembleRule) -> Self {
        self.ensemble_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Config("num_layers must be at least 1".into()));
        }
        if self.nodes_per_layer == 0 {
            return Err(Error::Config("nodes_per_layer must be at least 1".into()));
        }
        if self.lambdas.len() != self.num_layers {
            return Err(Error::Config(format!(
                "{} lambdas for {} layers",
                self.lambdas.len(),
                self.num_layers
            )));
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config("lambdas must be finite and non-negative".into()));
        }
        if !self.weight_scale.is_finite() || self.weight_scale <= 0.0 {
            return Err(Error::Config("weight_scale must be positive".into()));
        }
        Ok(())
    }
}

/// A (possibly fitted) edRVFL network. Enhancement weights are fixed at
/// construction; fitting only computes the output heads, so a fitted model is
/// immutable in practice and safe to share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdRvflModel {
    pub config: EdRvflConfig,
    /// One matrix per layer. Layer 1 is `(d [+1]) x N`; deeper layers are
    /// `(N + d [+1]) x N`, rows ordered previous-layer nodes, then input
    /// features, then (when bias is on) the bias row.
    pub enhancement_weights: Vec<Array2<f64>>,
    /// One ridge solution per layer, each of length `N + d [+1]`. Empty until
    /// [`EdRvflModel::fit`] runs.
    pub output_heads: Vec<Array1<f64>>,
    /// Feature dimension `d` the weights were drawn for.
    pub feature_dim: usize,
}

impl EdRvflModel {
    /// Draws the enhancement weights for `feature_dim` inputs.
    ///
    /// The RNG stream is consumed in a fixed order - layer by layer, weight
    /// rows in input order, then the bias row - so a seed fully determines
    /// the model regardless of later parallelism. Weights are uniform on
    /// `[-weight_scale, weight_scale]`; bias entries are uniform on `[0, 1)`.
    pub fn init(config: EdRvflConfig, feature_dim: usize) -> Result<Self> {
        config.validate()?;
        if feature_dim == 0 {
            return Err(Error::Config("feature_dim must be at least 1".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
        let n = config.nodes_per_layer;
        let s = config.weight_scale;
        let mut enhancement_weights = Vec::with_capacity(config.num_layers);
        for layer in 0..config.num_layers {
            let in_dim = if layer == 0 { feature_dim } else { feature_dim + n };
            let rows = in_dim + usize::from(config.use_bias);
            let mut w = Array2::zeros((rows, n));
            for r in 0..in_dim {
                for c in 0..n {
                    w[[r, c]] = rng.gen_range(-s..s);
                }
            }
            if config.use_bias {
                for c in 0..n {
                    w[[in_dim, c]] = rng.gen::<f64>();
                }
            }
            enhancement_weights.push(w);
        }
        Ok(Self { config, enhancement_weights, output_heads: Vec::new(), feature_dim })
    }

    pub fn is_fitted(&self) -> bool {
        !self.output_heads.is_empty()
    }

    /// Enhancement features `H_1 .. H_L` for the given inputs, each `n x N`.
    pub fn forward_features(&self, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
        if x.ncols() != self.feature_dim {
            return Err(Error::Shape(format!(
                "input has {} features, model was built for {}",
                x.ncols(),
                self.feature_dim
            )));
        }
        let mut stack: Vec<Array2<f64>> = Vec::with_capacity(self.config.num_layers);
        for layer in 0..self.config.num_layers {
            let prev = if layer == 0 { None } else { Some(&stack[layer - 1]) };
            let h = self.forward_single_layer(layer, prev, x);
            stack.push(h);
        }
        Ok(stack)
    }

    /// One enhancement layer: `g([prev, X] W_layer)` (layer 0 omits `prev`).
    pub(crate) fn forward_single_layer(
        &self,
        layer: usize,
        prev: Option<&Array2<f64>>,
        x: &Array2<f64>,
    ) -> Array2<f64> {
        let aug = match prev {
            None => augment(&[x.view()], self.config.use_bias),
            Some(h) => augment(&[h.view(), x.view()], self.config.use_bias),
        };
        aug.dot(&self.enhancement_weights[layer]).mapv(|v| self.config.activation.apply(v))
    }

    /// Design matrix `D = [H_l, X]` (plus intercept column when bias is on).
    pub(crate) fn design_matrix(&self, h: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
        augment(&[h.view(), x.view()], self.config.use_bias)
    }

    /// Solves every layer's output head on `(x, y)`. Enhancement weights are
    /// untouched, so refitting with the same data is idempotent.
    pub fn fit(&mut self, x: &Array2<f64>, y: &Array1<f64>) -> Result<()> {
        if x.nrows() < 2 {
            return Err(Error::Sizing("fitting needs at least 2 samples".into()));
        }
        if y.len() != x.nrows() {
            return Err(Error::Shape(format!(
                "{} targets for {} rows",
                y.len(),
                x.nrows()
            )));
        }
        let stack = self.forward_features(x)?;
        let heads: Vec<Array1<f64>> = stack
            .par_iter()
            .zip(&self.config.lambdas)
            .map(|(h, &lambda)| ridge_solve(&self.design_matrix(h, x), y, lambda))
            .collect::<Result<Vec<_>>>()?;
        self.output_heads = heads;
        Ok(())
    }

    /// Per-layer predictions and their ensemble.
    pub fn predict(&self, x: &Array2<f64>) -> Result<ForecastSet> {
        if !self.is_fitted() {
            return Err(Error::NotFitted);
        }
        let stack = self.forward_features(x)?;
        let per_layer: Vec<Vec<f64>> = stack
            .iter()
            .zip(&self.output_heads)
            .map(|(h, beta)| self.design_matrix(h, x).dot(beta).to_vec())
            .collect();
        Ok(ForecastSet::combine(per_layer, self.config.ensemble_rule))
    }
}

fn augment(parts: &[ndarray::ArrayView2<f64>], with_ones: bool) -> Array2<f64> {
    let n = parts[0].nrows();
    let mut views: Vec<ndarray::ArrayView2<f64>> = parts.to_vec();
    let ones;
    if with_ones {
        ones = Array2::ones((n, 1));
        views.push(ones.view());
        concatenate(Axis(1), &views).expect("row counts agree")
    } else {
        concatenate(Axis(1), &views).expect("row counts agree")
    }
}

/// Per-layer forecasts plus their combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub per_layer: Vec<Vec<f64>>,
    pub combined: Vec<f64>,
    pub rule: EnsembleRule,
}

impl ForecastSet {
    pub fn combine(per_layer: Vec<Vec<f64>>, rule: EnsembleRule) -> Self {
        let n = per_layer.first().map_or(0, Vec::len);
        let l = per_layer.len();
        let combined = (0..n)
            .map(|i| {
                let mut column: Vec<f64> = per_layer.iter().map(|layer| layer[i]).collect();
                match rule {
                    EnsembleRule::Mean => {
                        // when every layer agrees the mean must be that value
                        // exactly; sum/l can drift by an ulp (0.1*3/3 != 0.1)
                        let first = column[0];
                        if column.iter().all(|&v| v == first) {
                            first
                        } else {
                            column.iter().sum::<f64>() / l as f64
                        }
                    }
                    EnsembleRule::Median => {
                        column.sort_by(|a, b| a.partial_cmp(b).expect("finite forecasts"));
                        if l % 2 == 1 {
                            column[l / 2]
                        } else {
                            0.5 * (column[l / 2 - 1] + column[l / 2])
                        }
                    }
                }
            })
            .collect();
        Self { per_layer, combined, rule }
    }
}

/// Closed-form ridge solution of `min ||D beta - y||^2 + lambda ||beta||^2`.
///
/// Uses the primal normal equations `(D'D + lambda I) beta = D'y` when the
/// system is tall (`m <= n`) and the algebraically equivalent dual form
/// `beta = D' (DD' + lambda I)^{-1} y` when wide (`m > n`). `lambda = 0` is
/// allowed as long as the system is numerically nonsingular.
pub fn ridge_solve(d: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let (n, m) = (d.nrows(), d.ncols());
    if y.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", y.len())));
    }
    if n == 0 || m == 0 {
        return Err(Error::Sizing("empty design matrix".into()));
    }
    if m <= n {
        let mut gram = d.t().dot(d);
        for i in 0..m {
            gram[[i, i]] += lambda;
        }
        cholesky_solve(gram, &d.t().dot(y))
    } else {
        let mut gram = d.dot(&d.t());
        for i in 0..n {
            gram[[i, i]] += lambda;
        }
        let alpha = cholesky_solve(gram, y)?;
        Ok(d.t().dot(&alpha))
    }
}

/// Ridge solve against a precomputed primal Gram matrix `D'D` and right-hand
/// side `D'y`; lets a hyperparameter sweep factor once per lambda instead of
/// rebuilding the Gram matrix.
pub(crate) fn ridge_solve_gram(
    gram: &Array2<f64>,
    rhs: &Array1<f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    let mut g = gram.clone();
    for i in 0..g.nrows() {
        g[[i, i]] += lambda;
    }
    cholesky_solve(g, rhs)
}

/// Solves `G z = b` for symmetric positive definite `G` by an in-place
/// Cholesky factorization. A non-positive (or negligible) pivot means the
/// system is singular at working precision; the error names that pivot.
fn cholesky_solve(mut g: Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let m = g.nrows();
    let scale = g.diag().iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for k in 0..m {
        let mut pivot = g[[k, k]];
        for j in 0..k {
            pivot -= g[[k, j]] * g[[k, j]];
        }
        if pivot <= 1e-13 * scale {
            return Err(Error::Numerical(format!(
                "normal equations are singular at working precision \
                 (smallest pivot {pivot:.3e} at column {k}); increase lambda"
            )));
        }
        let root = pivot.sqrt();
        g[[k, k]] = root;
        for i in (k + 1)..m {
            let mut v = g[[i, k]];
            for j in 0..k {
                v -= g[[i, j]] * g[[k, j]];
            }
            g[[i, k]] = v / root;
        }
    }
    // L z = b, then L' x = z
    let mut z = b.clone();
    for i in 0..m {
        let mut v = z[i];
        for j in 0..i {
            v -= g[[i, j]] * z[j];
        }
        z[i] = v / g[[i, i]];
    }
    for i in (0..m).rev() {
        let mut v = z[i];
        for j in (i + 1)..m {
            v -= g[[j, i]] * z[j];
        }
        z[i] = v / g[[i, i]];
    }
    Ok(z)
}

/// The naive baseline: forecast each step with the previous observation.
/// Returns one forecast per index in `[horizon_start, len)`.
pub fn persistence_forecast(series: &TimeSeries, horizon_start: usize) -> Result<Vec<f64>> {
    if horizon_start == 0 || horizon_start > series.len() {
        return Err(Error::Sizing(format!(
            "horizon_start {horizon_start} out of range [1, {}]",
            series.len()
        )));
    }
    let values = series.values();
    Ok((horizon_start..values.len()).map(|t| values[t - 1]).collect())
}

/// The shallow RVFL baseline: an edRVFL with a single enhancement layer.
/// Bit-identical to `EdRvflModel` with `num_layers = 1` under the same seed.
pub fn shallow_rvfl_fit_predict(
    x_train: &Array2<f64>,
    y_train: &Array1<f64>,
    x_test: &Array2<f64>,
    nodes: usize,
    lambda: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut model = EdRvflModel::init(EdRvflConfig::new(1, nodes, lambda, seed), x_train.ncols())?;
    model.fit(x_train, y_train)?;
    Ok(model.predict(x_test)?.combined)
}
