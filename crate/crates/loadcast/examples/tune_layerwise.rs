//! Watch the layer-wise hyperparameter search decide.
//!
//! Layer 1 sweeps node count and regularization together; every deeper layer
//! then freezes what came before and picks only its own regularization. The
//! trace below shows each candidate's validation RMSE and the winner per
//! stage.
//!
//! Run with: `cargo run --release --example tune_layerwise`

use loadcast::pipeline::synthetic_load_series;
use loadcast::tuning::{layerwise_tune, SearchSpace};

fn main() -> loadcast::Result<()> {
    let series = synthetic_load_series(700, 0.05, 11);
    let features = series.lag_matrix(24)?;
    let train = features.slice_rows(0..500)?;
    let valid = features.slice_rows(500..600)?;

    let space = SearchSpace {
        node_grid: vec![20, 40, 80],
        ..SearchSpace::default()
    };
    let (config, trace) = layerwise_tune(&train, &valid, &space, 3, 99)?;

    for stage in &trace.stages {
        println!("layer {}:", stage.layer);
        for c in &stage.candidates {
            let marker = if *c == stage.chosen { "  <- chosen" } else { "" };
            println!(
                "  nodes {:>3}  lambda {:<10} rmse {:.6}{marker}",
                c.nodes, c.lambda, c.valid_rmse
            );
        }
    }

    println!(
        "\ntuned config: {} nodes, activation {}, lambdas {:?}",
        config.nodes_per_layer, config.activation, config.lambdas
    );
    println!("total candidate evaluations: {}", trace.total_evaluations());

    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    println!("\ntrace as CSV:\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
