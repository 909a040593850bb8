//! Integer CSV sample sets: `input_dim` feature columns followed by a label.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Interval, QuantizedMLP};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("dataset is empty")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<i64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub rows: Vec<Sample>,
    pub role: Role,
}

impl Dataset {
    pub fn new(rows: Vec<Sample>, role: Role) -> Self {
        Self { rows, role }
    }

    /// Every input of the domain, labelled with the network's own prediction.
    pub fn grid(net: &QuantizedMLP, role: Role) -> Self {
        let rows = net
            .grid()
            .map(|x| {
                let label = net.forward_unchecked(&x).class();
                Sample { x, label }
            })
            .collect();
        Self { rows, role }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Order-sensitive fingerprint used to match benchmark reports.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for s in &self.rows {
            for v in &s.x {
                h.update(v.to_le_bytes());
            }
            h.update((s.label as u64).to_le_bytes());
        }
        crate::model::hex(&h.finalize())
    }
}

pub fn load_csv(path: &Path, net: &QuantizedMLP, header: bool, role: Role) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_csv(&text, net, header, role)
}

pub fn parse_csv(text: &str, net: &QuantizedMLP, header: bool, role: Role) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns = net.input_dim() + 1;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| DatasetError::Row { line, message };
        if record.len() != columns {
            return Err(row_err(format!("expected {columns} columns, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(columns);
        for (i, cell) in record.iter().enumerate() {
            let v: i64 = cell
                .parse()
                .map_err(|_| row_err(format!("column {i}: {cell:?} is not an integer")))?;
            values.push(v);
        }
        let label = values.pop().expect("label column");
        for (feature, (&v, iv)) in values.iter().zip(net.input_domain()).enumerate() {
            if !iv.contains(v) {
                return Err(row_err(format!(
                    "feature {feature} = {v} outside domain [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
        }
        if label < 0 || label as usize >= net.class_count() {
            return Err(row_err(format!(
                "label {label} not in 0..{}",
                net.class_count()
            )));
        }
        rows.push(Sample { x: values, label: label as usize });
    }
    Ok(Dataset { rows, role })
}

pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<(), DatasetError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for s in &dataset.rows {
        let mut fields: Vec<String> = s.x.iter().map(i64::to_string).collect();
        fields.push(s.label.to_string());
        writer.write_record(&fields)?;
    }
    writer.flush().map_err(|source| DatasetError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

/// Componentwise min/max of the observed inputs.
pub fn infer_input_box(dataset: &Dataset) -> Result<Vec<Interval>, DatasetError> {
    let first = dataset.rows.first().ok_or(DatasetError::Empty)?;
    let mut bounds: Vec<Interval> = first.x.iter().map(|&v| Interval::new(v, v)).collect();
    for s in &dataset.rows[1..] {
        for (b, &v) in bounds.iter_mut().zip(&s.x) {
            b.lo = b.lo.min(v);
            b.hi = b.hi.max(v);
        }
    }
    Ok(bounds)
}
