//! File ingestion.
//!
//! Bit and categorical data: CSV with a header row, one feature per column,
//! and a named label column. Continuous data: the same CSV layout with real
//! cells, or raw little-endian `f32` rows described by a sidecar header:
//!
//! ```text
//! rows = 1000
//! cols = 768
//! data = embeddings.f32      # optional, defaults to the header path minus `.hdr`
//! labels = labels.txt        # one class label per line
//! ```
//!
//! Relative paths in the header resolve against the header's directory.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{CategoricalTable, ContinuousDataset, LabeledBitDataset, OneHotEncoder};
use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitCsvSchema {
    pub label_column: String,
    /// Treat feature cells as categories and one-hot encode them.
    pub one_hot: bool,
}

impl BitCsvSchema {
    pub fn new(label_column: impl Into<String>) -> Self {
        BitCsvSchema {
            label_column: label_column.into(),
            one_hot: false,
        }
    }
}

struct RawTable {
    columns: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
    labels: Vec<String>,
}

fn read_raw(path: &Path, label_column: &str) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Schema(format!("label column `{label_column}` not found in {}", path.display())))?;
    let columns = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        labels.push(record[label_idx].to_string());
        rows.push((
            line,
            record
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != label_idx)
                .map(|(_, c)| c.to_string())
                .collect(),
        ));
    }
    Ok(RawTable { columns, rows, labels })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::Schema(format!(
            "{}:{}: row has {len} fields, header has {expected_len}",
            path.display(),
            pos.as_ref().map_or(0, |p| p.line())
        )),
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
        _ => Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        },
    }
}

/// Maps label strings to class ids: integer labels keep their value,
/// anything else gets ids in sorted order.
fn encode_labels(raw: &[String]) -> (Vec<usize>, usize) {
    if let Ok(ids) = raw.iter().map(|s| s.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>() {
        let classes = ids.iter().copied().max().map_or(2, |m| (m + 1).max(2));
        return (ids, classes);
    }
    let names: Vec<&String> = raw.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let ids = raw.iter().map(|s| names.binary_search(&s).unwrap()).collect();
    (ids, names.len().max(2))
}

/// Loads a 0/1 CSV (or a categorical CSV when `schema.one_hot` is set, in
/// which case the vocabulary is fitted on the whole file).
pub fn load_bit_dataset(path: &Path, schema: &BitCsvSchema) -> Result<LabeledBitDataset> {
    if schema.one_hot {
        let table = load_categorical_csv(path, &schema.label_column)?;
        return OneHotEncoder::fit(&table)?.transform(&table);
    }
    let raw = read_raw(path, &schema.label_column)?;
    let n = raw.columns.len();
    let mut samples = Vec::with_capacity(raw.rows.len());
    for (line, cells) in &raw.rows {
        let mut b = BitString::zeros(n);
        for (i, cell) in cells.iter().enumerate() {
            match cell.as_str() {
                "0" => {}
                "1" => b.set(i, true),
                other => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: *line,
                        msg: format!("column `{}` holds `{other}`, expected 0 or 1", raw.columns[i]),
                    })
                }
            }
        }
        samples.push(b);
    }
    let (labels, classes) = encode_labels(&raw.labels);
    LabeledBitDataset::new(n, samples, labels, classes)
}

pub fn load_categorical_csv(path: &Path, label_column: &str) -> Result<CategoricalTable> {
    let raw = read_raw(path, label_column)?;
    let (labels, classes) = encode_labels(&raw.labels);
    Ok(CategoricalTable {
        columns: raw.columns,
        rows: raw.rows.into_iter().map(|(_, r)| r).collect(),
        labels,
        classes,
    })
}

pub fn load_continuous_csv(path: &Path, label_column: &str) -> Result<ContinuousDataset> {
    let raw = read_raw(path, label_column)?;
    let d = raw.columns.len();
    let mut samples = Vec::with_capacity(raw.rows.len());
    for (line, cells) in &raw.rows {
        let row = cells
            .iter()
            .map(|c| {
                c.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    msg: format!("`{c}` is not a finite number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(row);
    }
    let (labels, classes) = encode_labels(&raw.labels);
    ContinuousDataset::new(d, samples, labels, classes)
}

pub fn load_continuous_binary(header: &Path) -> Result<ContinuousDataset> {
    let text = fs::read_to_string(header)?;
    let base = header.parent().unwrap_or(Path::new("."));
    let mut rows = None;
    let mut cols = None;
    let mut data = None;
    let mut labels = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: header.to_path_buf(),
            line: i + 1,
            msg,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        let value = value.trim().trim_matches('"');
        match key.trim() {
            "rows" => rows = Some(value.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
            "cols" => cols = Some(value.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
            "data" => data = Some(base.join(value)),
            "labels" => labels = Some(base.join(value)),
            other => return Err(parse_err(format!("unknown header key `{other}`"))),
        }
    }
    let rows = rows.ok_or_else(|| Error::Schema("header missing `rows`".into()))?;
    let cols = cols.ok_or_else(|| Error::Schema("header missing `cols`".into()))?;
    let labels_path = labels.ok_or_else(|| Error::Schema("header missing `labels`".into()))?;
    let data_path = data.unwrap_or_else(|| {
        let s = header.to_string_lossy();
        PathBuf::from(s.strip_suffix(".hdr").unwrap_or(&s).to_string())
    });
    let bytes = fs::read(&data_path)?;
    if bytes.len() != rows * cols * 4 {
        return Err(Error::Schema(format!(
            "{} holds {} bytes, header implies {}",
            data_path.display(),
            bytes.len(),
            rows * cols * 4
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let samples: Vec<Vec<f64>> = values.chunks(cols.max(1)).take(rows).map(<[f64]>::to_vec).collect();
    let raw_labels: Vec<String> = fs::read_to_string(&labels_path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if raw_labels.len() != rows {
        return Err(Error::Schema(format!("{} labels for {rows} rows", raw_labels.len())));
    }
    let (labels, classes) = encode_labels(&raw_labels);
    ContinuousDataset::new(cols, samples, labels, classes)
}

/// Writes `b0,…,b{n-1},label` rows.
pub fn write_bit_csv(dataset: &LabeledBitDataset, out: &mut impl Write) -> Result<()> {
    let header: Vec<String> = (0..dataset.n()).map(|i| format!("b{i}")).chain(["label".into()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (s, l) in dataset.samples().iter().zip(dataset.labels()) {
        let cells: Vec<&str> = s.iter().map(|b| if b { "1" } else { "0" }).collect();
        writeln!(out, "{},{l}", cells.join(","))?;
    }
    Ok(())
}
