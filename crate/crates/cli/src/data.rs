use std::path::Path;

use nalgebra::{DMatrix, DVector};

use cppp_core::capture_recapture::RecaptureData;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Numbers separated by newlines, commas or whitespace. Blank lines and
/// lines starting with `#` are skipped, and a non-numeric first line is
/// taken as a header.
pub fn observations(path: &Path) -> CliResult<Vec<f64>> {
    parse_observations(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn parse_observations(text: &str) -> Result<Vec<f64>, String> {
    let mut values = Vec::new();
    let lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    for (k, (line_no, line)) in lines.enumerate() {
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        if k == 0 && parsed.iter().all(Option::is_none) {
            continue;
        }
        match parsed.into_iter().collect::<Option<Vec<f64>>>() {
            Some(v) => values.extend(v),
            None => return Err(format!("line {}: not a number: {line:?}", line_no + 1)),
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("observations must be finite".into());
    }
    if values.is_empty() {
        return Err("no observations".into());
    }
    Ok(values)
}

/// CSV with a header; `response` names the outcome column and every other
/// column is a covariate.
pub fn regression(path: &Path, response: &str, intercept: bool) -> CliResult<(DMatrix<f64>, DVector<f64>)> {
    let err = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    let y_col = headers
        .iter()
        .position(|h| h.trim() == response)
        .ok_or_else(|| err(format!("no column named '{response}'")))?;
    let mut ys = Vec::new();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let mut covariates = Vec::new();
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(format!("row {}: '{field}' is not a number", r + 2)))?;
            if j == y_col {
                ys.push(v);
            } else {
                covariates.push(v);
            }
        }
        rows.push(covariates);
    }
    let n = ys.len();
    let p = rows.first().map_or(0, Vec::len) + usize::from(intercept);
    if n == 0 || p == 0 {
        return Err(err("need at least one row and one covariate".into()));
    }
    let x = DMatrix::from_fn(n, p, |i, j| {
        if intercept {
            if j == 0 { 1.0 } else { rows[i][j - 1] }
        } else {
            rows[i][j]
        }
    });
    Ok((x, DVector::from_vec(ys)))
}

pub fn recaptures(path: &Path) -> CliResult<RecaptureData> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    RecaptureData::from_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
