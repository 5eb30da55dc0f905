//! Forecast error metrics (RMSE, MASE, MAPE) and the statistical machinery
//! for comparing many models over many datasets: average ranks, the Friedman
//! test, and the Nemenyi post-hoc analysis with its critical distance.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;
use std::f64::consts::{PI, SQRT_2};

use crate::{Error, Result};

/// Root mean square error.
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_paired(pred, actual)?;
    let n = pred.len() as f64;
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / n).sqrt())
}

/// Mean absolute scaled error: test-set MAE divided by the in-sample MAE of
/// the one-step naive forecast on the training series. 1.0 means "no better
/// than naive".
pub fn mase(pred: &[f64], actual: &[f64], train: &[f64]) -> Result<f64> {
    check_paired(pred, actual)?;
    let denom = naive_train_mae(train)?;
    let mae: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>()
        / pred.len() as f64;
    Ok(mae / denom)
}

/// The MASE denominator: `1/(L-1) * sum |x_t - x_{t-1}|` over the training
/// series.
pub fn naive_train_mae(train: &[f64]) -> Result<f64> {
    if train.len() < 2 {
        return Err(Error::Sizing("MASE needs a training series of at least 2 values".into()));
    }
    let denom: f64 =
        train.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (train.len() - 1) as f64;
    if denom == 0.0 {
        return Err(Error::Data(
            "constant training series: the naive MAE denominator of MASE is zero".into(),
        ));
    }
    Ok(denom)
}

/// Mean absolute percentage error. Every actual must be nonzero.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_paired(pred, actual)?;
    if let Some(i) = actual.iter().position(|&a| a == 0.0) {
        return Err(Error::Data(format!("MAPE undefined: actual value at index {i} is zero")));
    }
    let n = pred.len() as f64;
    Ok(pred.iter().zip(actual).map(|(p, a)| ((p - a) / a).abs()).sum::<f64>() / n)
}

fn check_paired(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Sizing("metrics need at least one point".into()));
    }
    if pred.iter().chain(actual).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in metric input".into()));
    }
    Ok(())
}

/// The three error metrics over one test segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub mase: f64,
    pub mape: f64,
    pub n_test: usize,
    /// In-sample naive MAE used as the MASE denominator.
    pub mase_denominator: f64,
}

impl MetricReport {
    pub fn compute(pred: &[f64], actual: &[f64], train: &[f64]) -> Result<Self> {
        Ok(Self {
            rmse: rmse(pred, actual)?,
            mase: mase(pred, actual, train)?,
            mape: mape(pred, actual)?,
            n_test: pred.len(),
            mase_denominator: naive_train_mae(train)?,
        })
    }
}

/// A models-by-datasets error matrix with its per-dataset ranks (1 = best,
/// ties share the average rank) and per-model average ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub model_names: Vec<String>,
    pub dataset_names: Vec<String>,
    /// Shape: `num_models x num_datasets`.
    pub errors: Array2<f64>,
    pub ranks: Array2<f64>,
    pub avg_ranks: Vec<f64>,
}

impl ComparisonTable {
    pub fn num_models(&self) -> usize {
        self.errors.nrows()
    }

    pub fn num_datasets(&self) -> usize {
        self.errors.ncols()
    }
}

/// Ranks each dataset's column of errors ascending (rank 1 = lowest error)
/// and averages over datasets.
pub fn rank_models(
    model_names: Vec<String>,
    dataset_names: Vec<String>,
    errors: Array2<f64>,
) -> Result<ComparisonTable> {
    if errors.nrows() == 0 || errors.ncols() == 0 {
        return Err(Error::Sizing("empty error matrix".into()));
    }
    if model_names.len() != errors.nrows() || dataset_names.len() != errors.ncols() {
        return Err(Error::Shape(format!(
            "{} model names and {} dataset names for a {}x{} matrix",
            model_names.len(),
            dataset_names.len(),
            errors.nrows(),
            errors.ncols()
        )));
    }
    if errors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("error matrix contains non-finite entries".into()));
    }
    let mut ranks = Array2::zeros(errors.raw_dim());
    for j in 0..errors.ncols() {
        let column = average_ranks(errors.column(j));
        for (i, r) in column.into_iter().enumerate() {
            ranks[[i, j]] = r;
        }
    }
    let avg_ranks =
        (0..errors.nrows()).map(|i| ranks.row(i).mean().expect("non-empty")).collect();
    Ok(ComparisonTable { model_names, dataset_names, errors, ranks, avg_ranks })
}

/// Ascending fractional ranks with ties averaged.
fn average_ranks(values: ArrayView1<f64>) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold equal values; all get the mean rank
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Friedman rank test over the table: returns `(chi2, p)` where the statistic
/// is `12 N / (k (k + 1)) * (sum R_j^2 - k (k + 1)^2 / 4)` and `p` comes from
/// the chi-square survival function with `k - 1` degrees of freedom.
pub fn friedman_test(table: &ComparisonTable) -> Result<(f64, f64)> {
    let k = table.num_models();
    let n = table.num_datasets();
    if k < 3 {
        return Err(Error::Data(format!("Friedman test needs at least 3 models, got {k}")));
    }
    if n < 2 {
        return Err(Error::Data(format!("Friedman test needs at least 2 datasets, got {n}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = table.avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    Ok((chi2, chi_square_sf(chi2, kf - 1.0)?))
}

/// Survival function of the chi-square distribution, computed through the
/// regularized upper incomplete gamma function (relative accuracy on the
/// order of 1e-14, comfortably inside the 1e-12 target).
pub fn chi_square_sf(x: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df <= 0.0 {
        return Err(Error::Config(format!("degrees of freedom must be positive, got {df}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Config(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_ur(df / 2.0, x / 2.0))
}

/// Critical values for the Nemenyi test: studentized-range quantiles at
/// infinite degrees of freedom divided by sqrt(2), for k = 2..=20 models.
/// Computed by numerically inverting [`studentized_range_cdf`].
const Q_ALPHA_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];
const Q_ALPHA_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889,
    2.977768, 3.029694, 3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224,
    3.319233,
];

fn q_alpha(k: usize, alpha: f64) -> Result<f64> {
    if !(2..=20).contains(&k) {
        return Err(Error::Config(format!(
            "critical values are tabulated for 2..=20 models, got {k}"
        )));
    }
    let table = if (alpha - 0.05).abs() < 1e-9 {
        &Q_ALPHA_05
    } else if (alpha - 0.10).abs() < 1e-9 {
        &Q_ALPHA_10
    } else {
        return Err(Error::Config(format!(
            "alpha {alpha} unsupported; the embedded table covers 0.05 and 0.10"
        )));
    };
    Ok(table[k - 2])
}

/// Nemenyi critical distance `q_alpha * sqrt(k (k + 1) / (6 N))`: two models
/// whose average ranks differ by more than this are significantly different
/// at level `alpha`.
pub fn nemenyi_cd(k: usize, n_datasets: usize, alpha: f64) -> Result<f64> {
    if n_datasets == 0 {
        return Err(Error::Config("n_datasets must be positive".into()));
    }
    let q = q_alpha(k, alpha)?;
    let (kf, nf) = (k as f64, n_datasets as f64);
    Ok(q * (kf * (kf + 1.0) / (6.0 * nf)).sqrt())
}

/// Pairwise Nemenyi p-values. `clamped` mirrors the usual report rendering:
/// off-diagonal values clipped to `[0.001, 0.900]`, diagonal fixed at -1.
/// `raw` keeps the unclipped probabilities (diagonal also -1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwisePValues {
    pub clamped: Array2<f64>,
    pub raw: Array2<f64>,
}

/// Post-hoc pairwise comparison: for each model pair the rank difference is
/// referred to the studentized-range distribution at infinite degrees of
/// freedom (evaluated by numerical integration).
pub fn nemenyi_pairwise(table: &ComparisonTable) -> Result<PairwisePValues> {
    let k = table.num_models();
    let n = table.num_datasets();
    if k < 3 {
        return Err(Error::Data(format!("Nemenyi test needs at least 3 models, got {k}")));
    }
    if n < 2 {
        return Err(Error::Data(format!("Nemenyi test needs at least 2 datasets, got {n}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let se = (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    let mut raw = Array2::from_elem((k, k), -1.0);
    let mut clamped = raw.clone();
    for i in 0..k {
        for j in (i + 1)..k {
            let q = (table.avg_ranks[i] - table.avg_ranks[j]).abs() / se * SQRT_2;
            let p = 1.0 - studentized_range_cdf(q, k);
            raw[[i, j]] = p;
            raw[[j, i]] = p;
            let c = p.clamp(0.001, 0.900);
            clamped[[i, j]] = c;
            clamped[[j, i]] = c;
        }
    }
    Ok(PairwisePValues { clamped, raw })
}

// 16-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [(f64, f64); 16] = [
    (-0.9894009349916499, 0.027152459411754037),
    (-0.9445750230732326, 0.062253523938647706),
    (-0.8656312023878318, 0.09515851168249259),
    (-0.755404408355003, 0.12462897125553403),
    (-0.6178762444026438, 0.14959598881657676),
    (-0.45801677765722737, 0.16915651939500262),
    (-0.2816035507792589, 0.1826034150449236),
    (-0.09501250983763745, 0.18945061045506859),
    (0.09501250983763745, 0.18945061045506859),
    (0.2816035507792589, 0.1826034150449236),
    (0.45801677765722737, 0.16915651939500262),
    (0.6178762444026438, 0.14959598881657676),
    (0.755404408355003, 0.12462897125553403),
    (0.8656312023878318, 0.09515851168249259),
    (0.9445750230732326, 0.062253523938647706),
    (0.9894009349916499, 0.027152459411754037),
];

#[inline]
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// CDF of the studentized range of `k` groups at infinite degrees of freedom:
/// `k * integral of phi(z) (Phi(z) - Phi(z - q))^(k-1) dz`, integrated by a
/// composite Gauss-Legendre rule (absolute error well below 1e-9).
pub fn studentized_range_cdf(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let lo = -8.5;
    let hi = q + 8.5;
    let panels = ((hi - lo) / 0.5).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        for (node, weight) in GL_NODES {
            let z = mid + half * node;
            let inner = std_normal_cdf(z) - std_normal_cdf(z - q);
            total += weight * half * std_normal_pdf(z) * inner.powf(kf - 1.0);
        }
    }
    (kf * total).clamp(0.0, 1.0)
}

/// Plain-text critical-difference summary: models sorted by average rank,
/// each with a marker on a shared rank axis, plus the Friedman statistic and
/// the critical distance at `alpha`.
pub fn rank_diagram(table: &ComparisonTable, alpha: f64) -> Result<String> {
    let (chi2, p) = friedman_test(table)?;
    let cd = nemenyi_cd(table.num_models(), table.num_datasets(), alpha)?;
    let k = table.num_models() as f64;

    let mut order: Vec<usize> = (0..table.num_models()).collect();
    order.sort_by(|&a, &b| {
        table.avg_ranks[a].partial_cmp(&table.avg_ranks[b]).expect("finite ranks")
    });
    let name_width =
        table.model_names.iter().map(String::len).max().unwrap_or(5).max("model".len());

    const AXIS: usize = 60;
    let position =
        |rank: f64| (((rank - 1.0) / (k - 1.0).max(1.0)) * (AXIS - 1) as f64).round() as usize;

    let mut out = String::new();
    out.push_str(&format!(
        "Friedman chi2 = {chi2:.4}, p = {p:.4e} ({} models, {} datasets)\n",
        table.num_models(),
        table.num_datasets()
    ));
    out.push_str(&format!("Critical distance (alpha = {alpha}): {cd:.4}\n"));
    out.push_str(&format!("{:name_width$}  {:>6}  best -> worst\n", "model", "avg"));
    for &i in &order {
        let rank = table.avg_ranks[i];
        let mut axis = vec![b' '; AXIS];
        // bracket one critical distance either side of this model's rank
        axis[position((rank - cd).max(1.0))] = b'[';
        axis[position((rank + cd).min(k))] = b']';
        axis[position(rank)] = b'*';
        out.push_str(&format!(
            "{:name_width$}  {:>6.2}  {}\n",
            table.model_names[i],
            rank,
            String::from_utf8(axis).expect("ascii"),
        ));
    }
    out.push_str("(* = average rank; [ ] = one critical distance either side)\n");
    Ok(out)
}
