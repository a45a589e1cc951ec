//! Tabular binary-classification data: CSV ingestion, per-column
//! standardization and the basic feature vector with its leading bias entry.

use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// One labelled observation. `input` is already standardized.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub label: u8,
    pub input: Vec<f64>,
}

/// Per-column affine map `x -> (x - mean) / scale` recorded at load time and
/// reused verbatim at prediction time.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Identity transform for `d` columns.
    pub fn identity(d: usize) -> Self {
        Standardization {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    /// Column means and population standard deviations. Columns whose spread
    /// is zero (up to rounding) get scale 1.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R], d: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 * m.abs().max(1.0) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }
}

/// Immutable training corpus.
#[derive(Clone, Debug)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    standardization: Standardization,
}

impl Dataset {
    /// Standardizes raw `(label, input)` rows. Labels must be 0 or 1.
    pub fn from_raw(rows: Vec<(u8, Vec<f64>)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.1.len()).unwrap_or(0);
        for (i, (label, input)) in rows.iter().enumerate() {
            if *label > 1 {
                return Err(Error::NonBinaryLabel {
                    row: i + 1,
                    value: f64::from(*label),
                });
            }
            if input.len() != dim {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    message: format!("expected {dim} inputs, found {}", input.len()),
                });
            }
            if input.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    message: "non-finite value".into(),
                });
            }
        }
        let inputs: Vec<&[f64]> = rows.iter().map(|r| r.1.as_slice()).collect();
        let standardization = Standardization::fit(&inputs, dim);
        let samples = rows
            .iter()
            .map(|(label, raw)| {
                Ok(Sample {
                    label: *label,
                    input: standardization.apply(raw)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            samples,
            dim,
            standardization,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Input dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| f64::from(s.label)).collect()
    }

    /// Counts of (label 0, label 1).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.samples.iter().filter(|s| s.label == 1).count();
        (self.samples.len() - ones, ones)
    }

    /// Checks the training-mode requirements. A single-class corpus is
    /// allowed but logged; fewer than two samples is an error.
    pub fn check_trainable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                found: self.len(),
            });
        }
        let (zeros, ones) = self.class_counts();
        if zeros == 0 || ones == 0 {
            warn!("training data contains a single class ({zeros} zeros, {ones} ones)");
        }
        Ok(())
    }
}

/// Feature vector `(1, x_1, ..., x_d)`.
pub fn basic_features(x: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(x.len() + 1);
    f.push(1.0);
    f.extend_from_slice(x);
    f
}

/// Like [`basic_features`] but checks the dimension first.
pub fn basic_features_checked(x: &[f64], d: usize) -> Result<Vec<f64>> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    Ok(basic_features(x))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_fields(line: &str, row: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::MalformedRow {
                    row,
                    message: format!("non-finite value {field:?}"),
                });
            }
            Ok(value)
        })
        .collect()
}

/// Numbered, non-blank lines; line numbers are 1-based.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// A first line counts as a header when none of its fields is numeric.
pub fn looks_like_header(path: &Path) -> Result<bool> {
    let text = read_text(path)?;
    let header = content_lines(&text)
        .next()
        .map(|(_, line)| line.split(',').all(|f| f.trim().parse::<f64>().is_err()))
        .unwrap_or(false);
    Ok(header)
}

/// Loads a labelled CSV file: `d` input columns followed by the label.
pub fn load_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut rows: Vec<(u8, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (row, line) in content_lines(&text).skip(usize::from(has_header)) {
        let mut fields = parse_fields(line, row)?;
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected {w} fields, found {}", fields.len()),
            });
        }
        let label = fields.pop().ok_or_else(|| Error::MalformedRow {
            row,
            message: "missing label".into(),
        })?;
        let label = if label == 0.0 {
            0
        } else if label == 1.0 {
            1
        } else {
            return Err(Error::NonBinaryLabel { row, value: label });
        };
        rows.push((label, fields));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Dataset::from_raw(rows)
}

/// Loads unlabelled raw input rows of dimension `d`. Rows with `d + 1`
/// fields are accepted and the trailing label column is ignored.
pub fn load_inputs_csv(path: &Path, d: usize, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (row, line) in content_lines(&text).skip(usize::from(has_header)) {
        let mut fields = parse_fields(line, row)?;
        if fields.len() == d + 1 {
            fields.pop();
        }
        if fields.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: fields.len(),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}
