//! Build leak-free forecasting features with walk-forward decomposition.
//!
//! At every forecast origin only past observations are decomposed, so
//! mutating the future cannot change a feature row. This example builds the
//! feature matrix, prints its layout, and demonstrates that property.
//!
//! Run with: `cargo run --example walk_forward_features`

use loadcast::pipeline::synthetic_load_series;
use loadcast::series::TimeSeries;
use loadcast::walkforward::{walk_forward_features, walk_forward_features_at, WalkForwardConfig};

fn main() -> loadcast::Result<()> {
    let series = synthetic_load_series(500, 0.05, 42);
    let cfg = WalkForwardConfig {
        window_w: 96, // decompose two days of history per origin
        order: 24,    // feed half a day of lags per source
        ..WalkForwardConfig::default()
    };

    let features = walk_forward_features(&series, &cfg)?;
    println!("rows: {} (one per forecast origin)", features.num_rows());
    println!("feature dimension: {}", features.dim());
    for (source, lags) in &features.layout.blocks {
        println!("  block: {source} x {lags} lags");
    }

    // causality: rewrite everything after an origin and rebuild
    let origin = 300;
    let row_before = walk_forward_features_at(&series, origin, &cfg)?;
    let mut tampered = series.values().to_vec();
    for v in tampered.iter_mut().skip(origin) {
        *v = 9_999.0;
    }
    let tampered = TimeSeries::new(tampered)?;
    let row_after = walk_forward_features_at(&tampered, origin, &cfg)?;
    assert_eq!(row_before, row_after);
    println!("row at origin {origin} is bit-identical after rewriting the future: no leakage");

    // the batch matrix and the single-origin path agree exactly
    let batch_row = features.inputs.row(origin - cfg.window_w);
    assert_eq!(batch_row, row_before.view());
    println!("batch row and single-origin row agree bit for bit");
    Ok(())
}
