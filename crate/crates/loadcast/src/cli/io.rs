//! CSV ingestion and report emission for the command-line front end.
//!
//! Input files must be UTF-8 with a header row, decimal-point numbers and no
//! missing cells; anything else fails loudly with the offending line number.

use ndarray::Array2;
use std::path::Path;

use crate::series::{FeatureMatrix, TimeSeries};
use crate::{Error, Result};

/// Reads one column of a CSV file into a series, optionally pairing it with a
/// timestamp column (epoch seconds or `YYYY-MM-DD[ T]HH:MM[:SS]`, `/` also
/// accepted as the date separator).
pub fn read_series(
    path: &Path,
    value_column: &str,
    timestamp_column: Option<&str>,
) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))?;

    let headers = reader.headers()?.clone();
    let value_idx = find_column(&headers, value_column, path)?;
    let ts_idx = timestamp_column.map(|c| find_column(&headers, c, path)).transpose()?;

    let mut values = Vec::new();
    let mut timestamps = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".to_string());
        let cell = record.get(value_idx).unwrap_or("");
        if cell.trim().is_empty() {
            return Err(Error::Data(format!(
                "{}: line {line}: missing value in column '{value_column}'",
                path.display()
            )));
        }
        let value: f64 = cell.trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}: line {line}: cannot parse '{cell}' as a number",
                path.display()
            ))
        })?;
        values.push(value);
        if let Some(idx) = ts_idx {
            let cell = record.get(idx).unwrap_or("");
            let ts = parse_timestamp(cell.trim()).map_err(|e| {
                Error::Data(format!("{}: line {line}: {e}", path.display()))
            })?;
            timestamps.push(ts);
        }
    }
    if ts_idx.is_some() {
        TimeSeries::with_timestamps(values, timestamps)
    } else {
        TimeSeries::new(values)
    }
}

fn find_column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Data(format!(
            "{}: no column named '{name}' (available: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

/// Epoch seconds from an integer or a calendar timestamp.
pub fn parse_timestamp(s: &str) -> Result<i64> {
    if let Ok(epoch) = s.parse::<i64>() {
        return Ok(epoch);
    }
    let normalized = s.replace('/', "-").replace('T', " ");
    let (date, time) = normalized
        .split_once(' ')
        .ok_or_else(|| Error::Data(format!("cannot parse timestamp '{s}'")))?;
    let date_parts: Vec<&str> = date.split('-').collect();
    let time_parts: Vec<&str> = time.split(':').collect();
    if date_parts.len() != 3 || time_parts.len() < 2 || time_parts.len() > 3 {
        return Err(Error::Data(format!("cannot parse timestamp '{s}'")));
    }
    let parse = |p: &str, what: &str| -> Result<i64> {
        p.parse::<i64>().map_err(|_| Error::Data(format!("bad {what} in timestamp '{s}'")))
    };
    let (y, m, d) = (parse(date_parts[0], "year")?, parse(date_parts[1], "month")?, parse(date_parts[2], "day")?);
    if !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return Err(Error::Data(format!("bad calendar date in timestamp '{s}'")));
    }
    let h = parse(time_parts[0], "hour")?;
    let mi = parse(time_parts[1], "minute")?;
    let sec = if time_parts.len() == 3 { parse(time_parts[2], "second")? } else { 0 };
    if !(0..24).contains(&h) || !(0..60).contains(&mi) || !(0..60).contains(&sec) {
        return Err(Error::Data(format!("bad time of day in timestamp '{s}'")));
    }
    Ok(days_from_civil(y, m, d) * 86_400 + h * 3600 + mi * 60 + sec)
}

/// Days since 1970-01-01 for a proleptic Gregorian date.
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Writes `index[,timestamp],actual,forecast` rows.
pub fn write_forecast_csv(
    path: &Path,
    start_index: usize,
    timestamps: Option<&[i64]>,
    actual: &[f64],
    forecast: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if timestamps.is_some() {
        w.write_record(["index", "timestamp", "actual", "forecast"])?;
    } else {
        w.write_record(["index", "actual", "forecast"])?;
    }
    for (offset, (a, f)) in actual.iter().zip(forecast).enumerate() {
        let idx = (start_index + offset).to_string();
        match timestamps {
            Some(ts) => {
                w.write_record([idx, ts[offset].to_string(), a.to_string(), f.to_string()])?
            }
            None => w.write_record([idx, a.to_string(), f.to_string()])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one `index,value` file per sub-series and returns the paths.
pub fn write_component_csvs(
    dir: &Path,
    components: &[Vec<f64>],
) -> Result<Vec<std::path::PathBuf>> {
    let mut paths = Vec::new();
    for (k, component) in components.iter().enumerate() {
        let path = dir.join(format!("component_{k}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["index", "value"])?;
        for (i, v) in component.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads a models-by-datasets error matrix: header `model,<dataset>...`, one
/// row per model.
pub fn read_error_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Data(format!(
            "{}: expected 'model' plus at least one dataset column",
            path.display()
        )));
    }
    let datasets: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut models = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".to_string());
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: line {line}: {} cells, expected {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        models.push(record.get(0).unwrap_or("").to_string());
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "{}: line {line}: cannot parse '{cell}' as a number",
                        path.display()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if models.is_empty() {
        return Err(Error::Data(format!("{}: no model rows", path.display())));
    }
    let mut errors = Array2::zeros((models.len(), datasets.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            errors[[i, j]] = *v;
        }
    }
    Ok((models, datasets, errors))
}

/// Writes a named square matrix (`model` column then one column per model).
pub fn write_named_matrix_csv(path: &Path, names: &[String], matrix: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(matrix.row(i).iter().map(|v| format!("{v:.3}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-dataset ranks and the average rank for each model.
pub fn write_ranks_csv(
    path: &Path,
    models: &[String],
    datasets: &[String],
    ranks: &Array2<f64>,
    avg_ranks: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model".to_string()];
    header.extend(datasets.iter().cloned());
    header.push("avg_rank".to_string());
    w.write_record(&header)?;
    for (i, model) in models.iter().enumerate() {
        let mut row = vec![model.clone()];
        row.extend(ranks.row(i).iter().map(|v| v.to_string()));
        row.push(avg_ranks[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dumps a feature matrix with layout-encoding headers plus the target.
pub fn write_feature_matrix_csv(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = matrix.layout.column_names();
    header.push("target".to_string());
    w.write_record(&header)?;
    for i in 0..matrix.num_rows() {
        let mut row: Vec<String> = matrix.inputs.row(i).iter().map(|v| v.to_string()).collect();
        row.push(matrix.targets[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_epoch_and_calendar_timestamps() {
        assert_eq!(parse_timestamp("0").unwrap(), 0);
        assert_eq!(parse_timestamp("1800").unwrap(), 1800);
        assert_eq!(parse_timestamp("1970-01-01 00:00:00").unwrap(), 0);
        assert_eq!(parse_timestamp("1970-01-01 00:30").unwrap(), 1800);
        assert_eq!(parse_timestamp("2020/01/01 00:00:00").unwrap(), 1_577_836_800);
        assert_eq!(parse_timestamp("2020-01-01T00:30:00").unwrap(), 1_577_838_600);
        assert!(parse_timestamp("yesterday").is_err());
        assert!(parse_timestamp("2020-13-01 00:00").is_err());
    }

    #[test]
    fn read_series_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "timestamp,load\n0,1.5\n1800,oops\n").unwrap();
        match read_series(&path, "load", None) {
            Err(Error::Data(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
        std::fs::write(&path, "timestamp,load\n0,1.5\n1800,\n").unwrap();
        match read_series(&path, "load", None) {
            Err(Error::Data(msg)) => assert!(msg.contains("missing value"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn read_series_with_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ok.csv");
        std::fs::write(
            &path,
            "timestamp,load\n2020-01-01 00:00,1.0\n2020-01-01 00:30,2.0\n2020-01-01 01:00,3.0\n",
        )
        .unwrap();
        let s = read_series(&path, "load", Some("timestamp")).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.sampling_period_secs(), 1800);
    }

    #[test]
    fn missing_column_lists_available() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cols.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        match read_series(&path, "load", None) {
            Err(Error::Data(msg)) => assert!(msg.contains("available: a, b"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn error_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("errors.csv");
        std::fs::write(&path, "model,d1,d2\nalpha,1.0,2.0\nbeta,3.0,4.0\n").unwrap();
        let (models, datasets, errors) = read_error_matrix(&path).unwrap();
        assert_eq!(models, vec!["alpha", "beta"]);
        assert_eq!(datasets, vec!["d1", "d2"]);
        assert_eq!(errors, ndarray::array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn ragged_error_matrix_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "model,d1,d2\nalpha,1.0\n").unwrap();
        assert!(read_error_matrix(&path).is_err());
    }
}
