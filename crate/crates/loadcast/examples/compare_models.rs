//! Rank fifteen forecasting models over twenty datasets and test whether
//! their differences are statistically significant.
//!
//! Uses the bundled RMSE matrix under `data/`: per-dataset ranks, average
//! ranks, the Friedman test, the Nemenyi critical distance, pairwise
//! p-values, and a plain-text critical-difference diagram.
//!
//! Run with: `cargo run --example compare_models`

use loadcast::cli::io::read_error_matrix;
use loadcast::stats::{friedman_test, nemenyi_cd, nemenyi_pairwise, rank_diagram, rank_models};
use std::path::Path;

fn main() -> loadcast::Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/comparative_rmse.csv");
    let (models, datasets, errors) = read_error_matrix(&fixture)?;
    let table = rank_models(models, datasets, errors)?;

    print!("{}", rank_diagram(&table, 0.05)?);

    let (chi2, p) = friedman_test(&table)?;
    let cd = nemenyi_cd(table.num_models(), table.num_datasets(), 0.05)?;
    println!("\nFriedman chi2 {chi2:.2}, p {p:.2e}; CD(0.05) {cd:.3}");

    // which models are indistinguishable from the best one?
    let best = table
        .avg_ranks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let pairwise = nemenyi_pairwise(&table)?;
    println!("\npairwise vs {} (clamped p):", table.model_names[best]);
    for i in 0..table.num_models() {
        if i == best {
            continue;
        }
        let p = pairwise.clamped[[best, i]];
        let verdict = if p < 0.05 { "different" } else { "not separable" };
        println!("  {:16} p = {p:<6.3} {verdict}", table.model_names[i]);
    }
    Ok(())
}
