//! The five CLI commands. Each one reads CSVs through [`super::io`], calls
//! into the library, and writes byte-deterministic outputs (given the same
//! seed and inputs) so whole runs can be diffed.

use std::path::Path;

use super::io;
use super::{CompareArgs, DecomposeArgs, DescribeArgs, ForecastArgs, Settings, TrainArgs};
use crate::ewt::{detect_boundaries, EwtFilterBank};
use crate::pipeline::{train_model, ModelArtifact, ModelKind};
use crate::series::TimeSeries;
use crate::stats::{friedman_test, nemenyi_cd, nemenyi_pairwise, rank_diagram, rank_models};
use crate::walkforward::walk_forward_features;
use crate::{Error, Result};

fn read_input(settings: &Settings, path: &Path) -> Result<TimeSeries> {
    io::read_series(path, &settings.value_column, settings.timestamp_column.as_deref())
}

pub fn describe(settings: &Settings, args: &DescribeArgs) -> Result<()> {
    let series = read_input(settings, &args.input)?;
    let stats = series.describe()?;
    println!("n        {}", series.len());
    println!("max      {:.4}", stats.max);
    println!("min      {:.4}", stats.min);
    println!("median   {:.4}", stats.median);
    println!("mean     {:.4}", stats.mean);
    println!("std      {:.4}", stats.std);
    println!("skewness {:.4}", stats.skewness);
    println!("kurtosis {:.4}", stats.kurtosis);
    if let Some(path) = &args.output {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "max", "min", "median", "mean", "std", "skewness", "kurtosis"])?;
        w.write_record([
            series.len().to_string(),
            stats.max.to_string(),
            stats.min.to_string(),
            stats.median.to_string(),
            stats.mean.to_string(),
            stats.std.to_string(),
            stats.skewness.to_string(),
            stats.kurtosis.to_string(),
        ])?;
        w.flush()?;
    }
    Ok(())
}

pub fn decompose(settings: &Settings, args: &DecomposeArgs) -> Result<()> {
    let series = read_input(settings, &args.input)?;
    let components = args.components.unwrap_or(settings.components);
    let window_len = match args.window {
        Some(w) if w > series.len() => {
            return Err(Error::Sizing(format!(
                "requested window {w} exceeds the series length {}",
                series.len()
            )));
        }
        Some(w) => w,
        // the default window shrinks to fit short inputs
        None => settings.window.min(series.len()),
    };
    let end = args.window_end.unwrap_or(series.len());
    if end > series.len() || end < window_len {
        return Err(Error::Sizing(format!(
            "window of {window_len} ending at {end} does not fit a series of length {}",
            series.len()
        )));
    }
    let window = &series.values()[end - window_len..end];

    let boundaries = detect_boundaries(window, components)?;
    if boundaries.uniform_fallback() {
        eprintln!("note: too few spectral maxima; fell back to uniform segmentation");
    }
    let bank = EwtFilterBank::new(boundaries, args.gamma, 4096)?;
    let decomposed = bank.decompose(window)?;
    let reconstructed = bank.reconstruct(&decomposed)?;
    let rel_err = {
        let num: f64 = window.iter().zip(&reconstructed).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = window.iter().map(|a| a * a).sum::<f64>().max(f64::MIN_POSITIVE);
        (num / den).sqrt()
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let paths = io::write_component_csvs(&args.out_dir, &decomposed.sub_series)?;
    let bank_path = args.out_dir.join("filter_bank.csv");
    bank.write_csv(std::io::BufWriter::new(std::fs::File::create(&bank_path)?))?;

    println!("window: {window_len} points ending at index {end}");
    println!(
        "boundaries (rad): {}",
        bank.boundaries()
            .omegas()
            .iter()
            .map(|w| format!("{w:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("gamma: {:.6}", bank.gamma());
    println!("reconstruction relative error: {rel_err:.3e}");
    for p in &paths {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", bank_path.display());
    Ok(())
}

pub fn train(settings: &Settings, args: &TrainArgs, kind: ModelKind) -> Result<()> {
    let series = read_input(settings, &args.input)?;
    let config = settings.pipeline_config()?;
    let started = std::time::Instant::now();
    let outcome = train_model(&series, kind, &config)?;
    eprintln!("trained {kind} in {:.2?}", started.elapsed());

    std::fs::create_dir_all(&args.out_dir)?;
    let artifact_path = args.out_dir.join("model.json");
    outcome.artifact.save(&artifact_path)?;

    let report_path = args.out_dir.join("report.json");
    let report_json = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    std::fs::write(&report_path, report_json)?;

    let ts = series.timestamps();
    let slice_ts = |start: usize, len: usize| ts.map(|t| t[start..start + len].to_vec());
    let test = &outcome.test_predictions;
    let test_path = args.out_dir.join("forecasts_test.csv");
    io::write_forecast_csv(
        &test_path,
        test.start_index,
        slice_ts(test.start_index, test.actual.len()).as_deref(),
        &test.actual,
        &test.predicted,
    )?;
    if let Some(valid) = &outcome.valid_predictions {
        io::write_forecast_csv(
            &args.out_dir.join("forecasts_valid.csv"),
            valid.start_index,
            slice_ts(valid.start_index, valid.actual.len()).as_deref(),
            &valid.actual,
            &valid.predicted,
        )?;
    }
    if let Some(trace) = &outcome.trace {
        let f = std::fs::File::create(args.out_dir.join("tuning_trace.csv"))?;
        trace.write_csv(std::io::BufWriter::new(f))?;
    }
    if args.dump_features {
        let normalized =
            series.normalize(&crate::series::NormalizationParams::fit(&series.slice(
                0..outcome.report.n_train,
            )?)?);
        let matrix = if kind.uses_ewt() {
            walk_forward_features(&normalized, &config.walkforward())?
        } else {
            normalized.lag_matrix(config.order)?
        };
        io::write_feature_matrix_csv(&args.out_dir.join("features.csv"), &matrix)?;
    }

    let report = &outcome.report;
    println!("model: {}", report.model);
    println!("seed: {}", report.seed);
    println!(
        "split: {} train / {} valid / {} test",
        report.n_train, report.n_valid, report.n_test
    );
    if let Some(nodes) = report.tuned_nodes {
        println!(
            "tuned: nodes = {nodes}, activation = {}, lambdas = {:?}",
            report.tuned_activation.as_deref().unwrap_or("-"),
            report.tuned_lambdas.as_deref().unwrap_or(&[])
        );
    }
    if let Some(m) = &report.valid_metrics {
        println!("valid: rmse {:.4}  mase {:.4}  mape {:.5}", m.rmse, m.mase, m.mape);
    }
    let m = &report.test_metrics;
    println!("test:  rmse {:.4}  mase {:.4}  mape {:.5}", m.rmse, m.mase, m.mape);
    if let Some(replay) = report.train_replay_mase {
        println!("train-replay mase: {replay:.6}");
    }
    println!("wrote {}", artifact_path.display());
    println!("wrote {}", report_path.display());
    println!("wrote {}", test_path.display());
    Ok(())
}

pub fn forecast(settings: &Settings, args: &ForecastArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.artifact)?;
    let series = read_input(settings, &args.input)?;
    if args.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if args.horizon > series.len().saturating_sub(artifact.min_origin()) {
        return Err(Error::Sizing(format!(
            "horizon {} too long: series has {} points and forecasting starts at index {}",
            args.horizon,
            series.len(),
            artifact.min_origin()
        )));
    }
    let start = series.len() - args.horizon;
    let predicted = artifact.forecast_range(&series, start, series.len())?;
    let actual = &series.values()[start..];
    io::write_forecast_csv(
        &args.output,
        start,
        series.timestamps().map(|t| t[start..].to_vec()).as_deref(),
        actual,
        &predicted,
    )?;
    println!("wrote {} forecasts to {}", predicted.len(), args.output.display());
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let (models, datasets, errors) = io::read_error_matrix(&args.errors)?;
    let table = rank_models(models, datasets, errors)?;
    let (chi2, p) = friedman_test(&table)?;
    let cd = nemenyi_cd(table.num_models(), table.num_datasets(), args.alpha)?;
    let pairwise = nemenyi_pairwise(&table)?;
    let diagram = rank_diagram(&table, args.alpha)?;

    std::fs::create_dir_all(&args.out_dir)?;
    io::write_ranks_csv(
        &args.out_dir.join("ranks.csv"),
        &table.model_names,
        &table.dataset_names,
        &table.ranks,
        &table.avg_ranks,
    )?;
    io::write_named_matrix_csv(
        &args.out_dir.join("pairwise_p.csv"),
        &table.model_names,
        &pairwise.clamped,
    )?;
    io::write_named_matrix_csv(
        &args.out_dir.join("pairwise_p_raw.csv"),
        &table.model_names,
        &pairwise.raw,
    )?;
    let summary = serde_json::json!({
        "models": table.num_models(),
        "datasets": table.num_datasets(),
        "friedman_chi2": chi2,
        "friedman_p": p,
        "alpha": args.alpha,
        "critical_distance": cd,
        "avg_ranks": table.model_names.iter().zip(&table.avg_ranks)
            .map(|(m, r)| serde_json::json!({"model": m, "avg_rank": r}))
            .collect::<Vec<_>>(),
    });
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Data(format!("summary serialization: {e}")))?,
    )?;
    std::fs::write(args.out_dir.join("cd_diagram.txt"), &diagram)?;

    print!("{diagram}");
    println!("wrote rank table, pairwise matrices and diagram to {}", args.out_dir.display());
    Ok(())
}
