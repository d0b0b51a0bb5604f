use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::schema::{ColumnKind, ColumnSpec, Schema};
use super::DataError;

/// One feature column as read from disk; `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureColumn {
    Numeric {
        name: String,
        kind: ColumnKind,
        values: Vec<Option<f64>>,
    },
    Categorical {
        name: String,
        values: Vec<Option<String>>,
    },
}

impl FeatureColumn {
    pub fn name(&self) -> &str {
        match self {
            FeatureColumn::Numeric { name, .. } | FeatureColumn::Categorical { name, .. } => name,
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            FeatureColumn::Numeric { kind, .. } => *kind,
            FeatureColumn::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric { values, .. } => values.len(),
            FeatureColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell rendered as a group label (used for subgroup analysis).
    pub fn label(&self, row: usize) -> Option<String> {
        match self {
            FeatureColumn::Numeric { values, .. } => values[row].map(|v| format!("{v}")),
            FeatureColumn::Categorical { values, .. } => values[row].clone(),
        }
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            FeatureColumn::Numeric { name, kind, values } => FeatureColumn::Numeric {
                name: name.clone(),
                kind: *kind,
                values: idx.iter().map(|&i| values[i]).collect(),
            },
            FeatureColumn::Categorical { name, values } => FeatureColumn::Categorical {
                name: name.clone(),
                values: idx.iter().map(|&i| values[i].clone()).collect(),
            },
        }
    }
}

/// Survival table with continuous times, before imputation, encoding,
/// normalization and discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub features: Vec<FeatureColumn>,
    pub times: Vec<f64>,
    pub events: Vec<bool>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureColumn> {
        self.features.iter().find(|f| f.name() == name)
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.iter().map(|f| f.select(idx)).collect(),
            times: idx.iter().map(|&i| self.times[i]).collect(),
            events: idx.iter().map(|&i| self.events[i]).collect(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "NaN" | "nan" | "?" | "null")
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_csv(file, schema)
}

/// Parses CSV text laid out according to `schema`.
///
/// Rows whose time or event cell is missing are dropped with a warning.
/// Row numbers in errors count data rows from 1 (the header is row 0).
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawDataset, DataError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let col = |spec: &ColumnSpec| {
        position
            .get(spec.name.as_str())
            .copied()
            .ok_or_else(|| DataError::UnknownColumn(spec.name.clone()))
    };
    let time_idx = col(schema.time_column())?;
    let event_idx = col(schema.event_column())?;
    let feature_specs: Vec<&ColumnSpec> = schema.features().collect();
    let feature_idx = feature_specs
        .iter()
        .map(|s| col(s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut features: Vec<FeatureColumn> = feature_specs
        .iter()
        .map(|s| match s.kind {
            ColumnKind::Categorical => FeatureColumn::Categorical {
                name: s.name.clone(),
                values: Vec::new(),
            },
            kind => FeatureColumn::Numeric {
                name: s.name.clone(),
                kind,
                values: Vec::new(),
            },
        })
        .collect();
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut dropped = 0usize;

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        let cell = |j: usize| record.get(j).unwrap_or("");

        let (t_cell, e_cell) = (cell(time_idx), cell(event_idx));
        if is_missing(t_cell) || is_missing(e_cell) {
            dropped += 1;
            continue;
        }
        let time = parse_number(t_cell).ok_or_else(|| DataError::BadValue {
            row,
            column: schema.time_column().name.clone(),
            value: t_cell.to_string(),
        })?;
        if time < 0.0 {
            return Err(DataError::NegativeTime { row, value: time });
        }
        let event = match parse_number(e_cell) {
            Some(0.0) => false,
            Some(1.0) => true,
            _ => {
                return Err(DataError::NonBinaryEvent {
                    row,
                    value: e_cell.to_string(),
                })
            }
        };

        for (col, &j) in features.iter_mut().zip(&feature_idx) {
            let raw = cell(j);
            match col {
                FeatureColumn::Categorical { values, .. } => {
                    values.push((!is_missing(raw)).then(|| raw.to_string()));
                }
                FeatureColumn::Numeric { name, kind, values } => {
                    if is_missing(raw) {
                        values.push(None);
                        continue;
                    }
                    let v = parse_number(raw).ok_or_else(|| DataError::BadValue {
                        row,
                        column: name.clone(),
                        value: raw.to_string(),
                    })?;
                    if *kind == ColumnKind::Binary && v != 0.0 && v != 1.0 {
                        return Err(DataError::BadValue {
                            row,
                            column: name.clone(),
                            value: raw.to_string(),
                        });
                    }
                    values.push(Some(v));
                }
            }
        }
        times.push(time);
        events.push(event);
    }

    if dropped > 0 {
        log::warn!("dropped {dropped} row(s) with a missing time or event");
    }
    if times.is_empty() {
        return Err(DataError::NoRecords);
    }
    Ok(RawDataset {
        features,
        times,
        events,
    })
}

/// Writes `data` as CSV with features first, then `time` and `event`, plus
/// the matching schema.
pub fn write_csv(data: &RawDataset, path: impl AsRef<Path>) -> Result<Schema, DataError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| DataError::Csv(e.to_string()))?;
    let mut header: Vec<String> = data.features.iter().map(|f| f.name().to_string()).collect();
    header.push("time".into());
    header.push("event".into());
    w.write_record(&header)
        .map_err(|e| DataError::Csv(e.to_string()))?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data
            .features
            .iter()
            .map(|f| f.label(i).unwrap_or_default())
            .collect();
        rec.push(format!("{}", data.times[i]));
        rec.push(if data.events[i] {
            "1".into()
        } else {
            "0".into()
        });
        w.write_record(&rec)
            .map_err(|e| DataError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;

    use super::schema::ColumnRole;
    let mut columns: Vec<ColumnSpec> = data
        .features
        .iter()
        .map(|f| ColumnSpec::new(f.name(), f.kind(), ColumnRole::Feature))
        .collect();
    columns.push(ColumnSpec::new("time", ColumnKind::Real, ColumnRole::Time));
    columns.push(ColumnSpec::new(
        "event",
        ColumnKind::Binary,
        ColumnRole::Event,
    ));
    Ok(Schema { columns })
}
