//! Layer-wise hyperparameter search on a validation split.
//!
//! Node count and activation are chosen once, while fitting layer 1; every
//! deeper layer then gets its own regularization parameter with all shallower
//! choices (and the shared random weights) frozen. Candidates within a stage
//! are independent and evaluated in parallel; the winner is reduced in a
//! fixed order, so results do not depend on scheduling.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

use crate::edrvfl::{ridge_solve, ridge_solve_gram, Activation, EdRvflConfig, EdRvflModel};
use crate::series::FeatureMatrix;
use crate::stats::rmse;
use crate::{Error, Result};

/// The hyperparameter grids to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Enhancement-node counts tried at layer 1. Default 50..=200 step 50.
    pub node_grid: Vec<usize>,
    /// Ridge regularization values tried at every layer.
    /// Default `{0, 2^-8, 2^-4}`.
    pub lambda_grid: Vec<f64>,
    /// Activations tried at layer 1. Default sigmoid only.
    pub activations: Vec<Activation>,
    /// Extra seeds for repeated evaluation; candidate scores are averaged
    /// over them. Empty means "use the run seed alone".
    pub seeds: Vec<u64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            node_grid: vec![50, 100, 150, 200],
            lambda_grid: vec![0.0, 2f64.powi(-8), 2f64.powi(-4)],
            activations: vec![Activation::Sigmoid],
            seeds: vec![],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.node_grid.is_empty() || self.lambda_grid.is_empty() || self.activations.is_empty()
        {
            return Err(Error::Config("search grids must be non-empty".into()));
        }
        if self.node_grid.contains(&0) {
            return Err(Error::Config("node counts must be positive".into()));
        }
        if self.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config("lambda grid values must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// One evaluated candidate: the hyperparameters and the validation RMSE of
/// the layer's own head (averaged over the seed set).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub layer: usize,
    pub nodes: usize,
    pub activation: Activation,
    pub lambda: f64,
    pub valid_rmse: f64,
}

/// All candidates evaluated while fixing one layer, and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub layer: usize,
    pub candidates: Vec<CandidateEval>,
    pub chosen: CandidateEval,
    /// Wall-clock spent on the stage; excluded from serialized output so
    /// exports stay byte-reproducible.
    #[serde(skip)]
    pub elapsed: Option<Duration>,
}

/// Audit record of a layer-wise search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningTrace {
    pub stages: Vec<StageTrace>,
}

impl TuningTrace {
    pub fn total_evaluations(&self) -> usize {
        self.stages.iter().map(|s| s.candidates.len()).sum()
    }

    /// One CSV row per candidate, chosen ones flagged.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["layer", "nodes", "activation", "lambda", "valid_rmse", "chosen"])?;
        for stage in &self.stages {
            for c in &stage.candidates {
                let chosen = *c == stage.chosen;
                w.write_record([
                    c.layer.to_string(),
                    c.nodes.to_string(),
                    c.activation.to_string(),
                    c.lambda.to_string(),
                    c.valid_rmse.to_string(),
                    chosen.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `a` beats `b` when its validation RMSE is lower; exact ties prefer the
/// larger lambda (more regularization), then fewer nodes (cheaper model),
/// then evaluation order.
fn better(a: &CandidateEval, b: &CandidateEval) -> bool {
    if a.valid_rmse != b.valid_rmse {
        return a.valid_rmse < b.valid_rmse;
    }
    if a.lambda != b.lambda {
        return a.lambda > b.lambda;
    }
    a.nodes < b.nodes
}

fn select(candidates: &[CandidateEval]) -> Result<CandidateEval> {
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if better(c, &best) {
            best = *c;
        }
    }
    if !best.valid_rmse.is_finite() {
        return Err(Error::Numerical(format!(
            "every candidate at layer {} hit a singular system; widen the lambda grid",
            best.layer
        )));
    }
    Ok(best)
}

/// Per-seed working state: the fixed random weights plus lazily extended
/// enhancement stacks for the training and validation inputs. Shared across
/// every candidate of every deeper stage, which is what keeps earlier layers
/// byte-identical while only the current layer's lambda varies.
struct SeedState {
    model: EdRvflModel,
    h_train: Vec<Array2<f64>>,
    h_valid: Vec<Array2<f64>>,
}

impl SeedState {
    fn new(
        nodes: usize,
        activation: Activation,
        num_layers: usize,
        seed: u64,
        dim: usize,
    ) -> Result<Self> {
        let config = EdRvflConfig {
            nodes_per_layer: nodes,
            activation,
            ..EdRvflConfig::new(num_layers, nodes, 0.0, seed)
        };
        Ok(Self { model: EdRvflModel::init(config, dim)?, h_train: vec![], h_valid: vec![] })
    }

    fn ensure_depth(&mut self, depth: usize, x_train: &Array2<f64>, x_valid: &Array2<f64>) {
        while self.h_train.len() < depth {
            let l = self.h_train.len();
            let prev_t = if l == 0 { None } else { Some(&self.h_train[l - 1]) };
            self.h_train.push(self.model.forward_single_layer(l, prev_t, x_train));
            let prev_v = if l == 0 { None } else { Some(&self.h_valid[l - 1]) };
            self.h_valid.push(self.model.forward_single_layer(l, prev_v, x_valid));
        }
    }

    /// Validation RMSE of one layer's own head fitted with `lambda`. The
    /// primal Gram matrix is precomputed by the caller when it applies.
    /// A numerically singular system (possible at lambda = 0 when feature
    /// blocks are collinear) marks the candidate infeasible with an infinite
    /// score instead of aborting the search.
    fn eval_lambda(
        &self,
        gram: Option<&(Array2<f64>, Array1<f64>)>,
        d_train: &Array2<f64>,
        d_valid: &Array2<f64>,
        y_train: &Array1<f64>,
        y_valid: &Array1<f64>,
        lambda: f64,
    ) -> Result<f64> {
        let solved = match gram {
            Some((g, rhs)) => ridge_solve_gram(g, rhs, lambda),
            None => ridge_solve(d_train, y_train, lambda),
        };
        let beta = match solved {
            Ok(beta) => beta,
            Err(Error::Numerical(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        let pred = d_valid.dot(&beta);
        rmse(pred.as_slice().expect("contiguous"), y_valid.as_slice().expect("contiguous"))
    }
}

/// Runs the layer-wise search and returns the tuned configuration together
/// with the full audit trace. The returned config keeps the library defaults
/// for fields the search does not touch (bias, weight scale, mean ensemble);
/// the ensemble rule can be overridden afterwards without invalidating the
/// tuned choices, which only depend on per-layer heads.
pub fn layerwise_tune(
    train: &FeatureMatrix,
    valid: &FeatureMatrix,
    space: &SearchSpace,
    num_layers: usize,
    seed: u64,
) -> Result<(EdRvflConfig, TuningTrace)> {
    space.validate()?;
    if num_layers == 0 {
        return Err(Error::Config("num_layers must be at least 1".into()));
    }
    if train.layout != valid.layout {
        return Err(Error::Shape(
            "training and validation matrices have different feature layouts".into(),
        ));
    }
    if train.num_rows() < 2 || valid.num_rows() == 0 {
        return Err(Error::Sizing("tuning needs >= 2 training rows and >= 1 validation row".into()));
    }
    let dim = train.dim();
    let seeds: Vec<u64> = if space.seeds.is_empty() { vec![seed] } else { space.seeds.clone() };

    // Stage 1: sweep (nodes, activation) x lambda on the first layer.
    let stage_start = Instant::now();
    let pairs: Vec<(usize, Activation)> = space
        .node_grid
        .iter()
        .flat_map(|&n| space.activations.iter().map(move |&a| (n, a)))
        .collect();
    let evaluated: Vec<(Vec<CandidateEval>, Vec<SeedState>)> = pairs
        .par_iter()
        .map(|&(nodes, activation)| -> Result<(Vec<CandidateEval>, Vec<SeedState>)> {
            let mut states = seeds
                .iter()
                .map(|&s| SeedState::new(nodes, activation, num_layers, s, dim))
                .collect::<Result<Vec<_>>>()?;
            let mut sums = vec![0.0; space.lambda_grid.len()];
            for state in &mut states {
                state.ensure_depth(1, &train.inputs, &valid.inputs);
                let d_train = state.model.design_matrix(&state.h_train[0], &train.inputs);
                let d_valid = state.model.design_matrix(&state.h_valid[0], &valid.inputs);
                let gram = (d_train.ncols() <= d_train.nrows())
                    .then(|| (d_train.t().dot(&d_train), d_train.t().dot(&train.targets)));
                for (li, &lambda) in space.lambda_grid.iter().enumerate() {
                    sums[li] += state.eval_lambda(
                        gram.as_ref(),
                        &d_train,
                        &d_valid,
                        &train.targets,
                        &valid.targets,
                        lambda,
                    )?;
                }
            }
            let candidates = space
                .lambda_grid
                .iter()
                .zip(&sums)
                .map(|(&lambda, &sum)| CandidateEval {
                    layer: 1,
                    nodes,
                    activation,
                    lambda,
                    valid_rmse: sum / seeds.len() as f64,
                })
                .collect();
            Ok((candidates, states))
        })
        .collect::<Result<Vec<_>>>()?;

    let stage1_candidates: Vec<CandidateEval> =
        evaluated.iter().flat_map(|(c, _)| c.iter().copied()).collect();
    let chosen1 = select(&stage1_candidates)?;
    let mut states = evaluated
        .into_iter()
        .find(|(c, _)| c[0].nodes == chosen1.nodes && c[0].activation == chosen1.activation)
        .map(|(_, s)| s)
        .expect("winning pair was evaluated");

    let mut lambdas = vec![chosen1.lambda];
    let mut stages = vec![StageTrace {
        layer: 1,
        candidates: stage1_candidates,
        chosen: chosen1,
        elapsed: Some(stage_start.elapsed()),
    }];

    // Deeper stages: everything shallower is frozen; only lambda_l moves.
    for layer in 2..=num_layers {
        let stage_start = Instant::now();
        let mut sums = vec![0.0; space.lambda_grid.len()];
        for state in &mut states {
            state.ensure_depth(layer, &train.inputs, &valid.inputs);
            let d_train = state.model.design_matrix(&state.h_train[layer - 1], &train.inputs);
            let d_valid = state.model.design_matrix(&state.h_valid[layer - 1], &valid.inputs);
            let gram = (d_train.ncols() <= d_train.nrows())
                .then(|| (d_train.t().dot(&d_train), d_train.t().dot(&train.targets)));
            let per_lambda: Vec<f64> = space
                .lambda_grid
                .par_iter()
                .map(|&lambda| {
                    state.eval_lambda(
                        gram.as_ref(),
                        &d_train,
                        &d_valid,
                        &train.targets,
                        &valid.targets,
                        lambda,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            for (s, v) in sums.iter_mut().zip(per_lambda) {
                *s += v;
            }
        }
        let candidates: Vec<CandidateEval> = space
            .lambda_grid
            .iter()
            .zip(&sums)
            .map(|(&lambda, &sum)| CandidateEval {
                layer,
                nodes: chosen1.nodes,
                activation: chosen1.activation,
                lambda,
                valid_rmse: sum / seeds.len() as f64,
            })
            .collect();
        let chosen = select(&candidates)?;
        lambdas.push(chosen.lambda);
        stages.push(StageTrace {
            layer,
            candidates,
            chosen,
            elapsed: Some(stage_start.elapsed()),
        });
    }

    let config = EdRvflConfig {
        nodes_per_layer: chosen1.nodes,
        lambdas,
        activation: chosen1.activation,
        ..EdRvflConfig::new(num_layers, chosen1.nodes, 0.0, seed)
    };
    Ok((config, TuningTrace { stages }))
}

/// Fits `config` on the training rows and scores RMSE of the combined
/// forecast on the validation rows. Pure given the config's seed.
pub fn grid_eval(
    config: &EdRvflConfig,
    train: &FeatureMatrix,
    valid: &FeatureMatrix,
) -> Result<f64> {
    if train.layout != valid.layout {
        return Err(Error::Shape(
            "training and validation matrices have different feature layouts".into(),
        ));
    }
    let mut model = EdRvflModel::init(config.clone(), train.dim())?;
    model.fit(&train.inputs, &train.targets)?;
    let out = model.predict(&valid.inputs)?;
    rmse(&out.combined, valid.targets.as_slice().expect("contiguous"))
}
