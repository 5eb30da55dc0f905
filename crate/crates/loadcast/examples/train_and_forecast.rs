//! Train the full pipeline on a synthetic load series and forecast its tail.
//!
//! Trains the EWT-augmented mean-ensemble deep RVFL next to the persistence
//! baseline, prints test metrics for both, saves the model artifact, and
//! replays one-step-ahead forecasts from the reloaded artifact.
//!
//! Run with: `cargo run --release --example train_and_forecast`

use loadcast::pipeline::{
    synthetic_load_series, train_model, ModelArtifact, ModelKind, PipelineConfig,
};

fn main() -> loadcast::Result<()> {
    // one month of half-hourly observations
    let series = synthetic_load_series(1490, 0.05, 2024);
    let config = PipelineConfig { seed: 7, ..PipelineConfig::default() };

    let naive = train_model(&series, ModelKind::Persistence, &config)?;
    let deep = train_model(&series, ModelKind::EwtMeaEdRvfl, &config)?;

    println!("model              test RMSE   test MASE   test MAPE");
    for outcome in [&naive, &deep] {
        let m = &outcome.report.test_metrics;
        println!(
            "{:18} {:>9.3} {:>11.4} {:>11.5}",
            outcome.report.model.to_string(),
            m.rmse,
            m.mase,
            m.mape
        );
    }
    let tuned = &deep.report;
    println!(
        "\ntuned: {} nodes, {} activation, per-layer lambdas {:?}",
        tuned.tuned_nodes.unwrap(),
        tuned.tuned_activation.as_deref().unwrap(),
        tuned.tuned_lambdas.as_deref().unwrap()
    );

    // persist, reload, and roll forecasts for the last two days
    let dir = std::env::temp_dir().join("loadcast_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.json");
    deep.artifact.save(&path)?;
    let reloaded = ModelArtifact::load(&path)?;
    let horizon = 96;
    let start = series.len() - horizon;
    let forecasts = reloaded.forecast_range(&series, start, series.len())?;
    let actual = &series.values()[start..];
    let rmse = loadcast::stats::rmse(&forecasts, actual)?;
    println!("\nreloaded artifact, {horizon}-step rolling forecast RMSE: {rmse:.3}");
    println!("artifact written to {}", path.display());
    Ok(())
}
