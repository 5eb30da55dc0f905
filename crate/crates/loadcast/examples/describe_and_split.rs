//! Inspect a series and prepare it for modeling: descriptive statistics, a
//! chronological 70/10/20 split, and train-fitted max-min normalization.
//!
//! Run with: `cargo run --example describe_and_split`

use loadcast::pipeline::synthetic_load_series;
use loadcast::series::{NormalizationParams, SplitSpec};

fn main() -> loadcast::Result<()> {
    let series = synthetic_load_series(1490, 0.05, 1);

    let stats = series.describe()?;
    println!("n        {}", series.len());
    println!("max      {:.2}", stats.max);
    println!("min      {:.2}", stats.min);
    println!("median   {:.2}", stats.median);
    println!("mean     {:.2}", stats.mean);
    println!("std      {:.2}", stats.std);
    println!("skewness {:.3}", stats.skewness);
    println!("kurtosis {:.3}", stats.kurtosis);

    let (train, valid, test) = series.split(&SplitSpec::default())?;
    println!("\nsplit: {} train / {} valid / {} test", train.len(), valid.len(), test.len());

    // scale parameters come from the training segment only; later segments
    // may land outside [0, 1] and are left unclipped
    let params = NormalizationParams::fit(&train)?;
    println!("train range: [{:.2}, {:.2}]", params.x_min, params.x_max);
    let normalized_test = test.normalize(&params);
    let outside = normalized_test
        .values()
        .iter()
        .filter(|v| !(0.0..=1.0).contains(*v))
        .count();
    println!("test points outside [0,1] after normalization: {outside}");

    let round_trip = normalized_test.denormalize(&params);
    let worst = test
        .values()
        .iter()
        .zip(round_trip.values())
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    println!("denormalize(normalize(test)) worst relative error: {worst:.3e}");
    Ok(())
}
