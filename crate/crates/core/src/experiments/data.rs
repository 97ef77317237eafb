use std::path::Path;

use rand::Rng;

use crate::error::{CoresetError, Result};
use crate::matrix::{norm2, DenseMatrix, RegressionInstance};
use crate::rng::{normal_vec, seeded, standard_normal};

/// Magnitude of the uniform filler in the top-right block.
const NG_FILLER: f64 = 1e-8;

/// The `n × d` test matrix with a few rows of near-unit leverage:
///
/// ```text
/// [ α·N(0,1)   1e-8·U(0,1) ]   (n − d/2 rows)
/// [    0         I_{d/2}   ]   (d/2 rows)
/// ```
pub fn generate_ng_matrix(n: usize, d: usize, alpha: f64, seed: u64) -> Result<DenseMatrix> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(CoresetError::invalid(format!(
            "d={d} must be even and positive"
        )));
    }
    if n <= d {
        return Err(CoresetError::invalid(format!("n={n} must exceed d={d}")));
    }
    if !alpha.is_finite() {
        return Err(CoresetError::invalid("alpha must be finite"));
    }
    let h = d / 2;
    let top = n - h;
    let mut rng = seeded(seed);
    let mut data = vec![0.0; n * d];
    for i in 0..top {
        let row = &mut data[i * d..(i + 1) * d];
        for v in row[..h].iter_mut() {
            *v = alpha * standard_normal(&mut rng);
        }
        for v in row[h..].iter_mut() {
            *v = NG_FILLER * rng.random::<f64>();
        }
    }
    for k in 0..h {
        data[(top + k) * d + h + k] = 1.0;
    }
    DenseMatrix::from_row_major(n, d, data)
}

/// `b = A·x_true + noise_scale·(‖A·x_true‖₂ / ‖e‖₂)·e` with `e ~ N(0, I)`,
/// so that `‖b − A·x_true‖₂ = noise_scale·‖A·x_true‖₂`.
pub fn generate_response(
    a: &DenseMatrix,
    x_true: &[f64],
    noise_scale: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(noise_scale >= 0.0) || !noise_scale.is_finite() {
        return Err(CoresetError::invalid("noise_scale must be finite and >= 0"));
    }
    let signal = a.matvec(x_true)?;
    if noise_scale == 0.0 {
        return Ok(signal);
    }
    let signal_norm = norm2(&signal);
    if signal_norm == 0.0 {
        return Err(CoresetError::DegenerateSignal(
            "A·x_true is zero, so relative noise is undefined".into(),
        ));
    }
    let e = normal_vec(&mut seeded(seed), a.rows());
    let scale = noise_scale * signal_norm / norm2(&e);
    Ok(signal
        .iter()
        .zip(&e)
        .map(|(s, ei)| s + scale * ei)
        .collect())
}

/// Read a headed CSV file; `target_column` becomes `b`, every other column a
/// feature. With `normalize`, each feature column is divided by its largest
/// absolute value (all-zero columns are left as they are).
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    normalize: bool,
) -> Result<RegressionInstance> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| CoresetError::Io(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CoresetError::Schema(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let target = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| {
            CoresetError::Schema(format!("target column {target_column:?} not found"))
        })?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(CoresetError::Schema("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut response = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CoresetError::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(CoresetError::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| CoresetError::Parse {
                row,
                column: headers[j].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(CoresetError::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            if j == target {
                response.push(value);
            } else {
                features.push(value);
            }
        }
    }
    let n = response.len();
    if n == 0 {
        return Err(CoresetError::Schema("file has no data rows".into()));
    }
    if normalize {
        for j in 0..d {
            let max = (0..n)
                .map(|i| features[i * d + j].abs())
                .fold(0.0, f64::max);
            if max > 0.0 {
                for i in 0..n {
                    features[i * d + j] /= max;
                }
            }
        }
    }
    RegressionInstance::new(DenseMatrix::from_row_major(n, d, features)?, response)
}
