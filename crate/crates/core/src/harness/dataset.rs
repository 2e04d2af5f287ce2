use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::adversary::FeatureMatrix;
use crate::fairness::{BinaryVector, SensitiveVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// Column roles of a dataset CSV, stored as a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    #[serde(default = "default_id")]
    pub id: String,
    pub features: Vec<FeatureSpec>,
    #[serde(default = "default_sensitive")]
    pub sensitive: String,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default = "default_cardinality")]
    pub sensitive_cardinality: u32,
}

fn default_id() -> String {
    "id".into()
}
fn default_sensitive() -> String {
    "s".into()
}
fn default_label() -> String {
    "y".into()
}
fn default_cardinality() -> u32 {
    2
}

impl DatasetSchema {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("schema serializes");
        std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumn {
    /// `levels` sorted; `codes[i]` indexes into it.
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Numeric(Vec<f64>),
}

impl FeatureColumn {
    fn select(&self, indices: &[usize]) -> Self {
        match self {
            Self::Categorical { levels, codes } => Self::Categorical {
                levels: levels.clone(),
                codes: indices.iter().map(|&i| codes[i]).collect(),
            },
            Self::Numeric(v) => Self::Numeric(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Self::Categorical { levels, codes } => levels[codes[row] as usize].clone(),
            Self::Numeric(v) => v[row].to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    pub ids: Vec<i64>,
    pub feature_names: Vec<String>,
    pub features: Vec<FeatureColumn>,
    pub sensitive: SensitiveVector,
    pub labels: BinaryVector,
    pub predictions: Option<BinaryVector>,
}

impl DatasetTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            feature_names: self.feature_names.clone(),
            features: self.features.iter().map(|f| f.select(indices)).collect(),
            sensitive: self.sensitive.select(indices),
            labels: self.labels.select(indices),
            predictions: self.predictions.as_ref().map(|p| p.select(indices)),
        }
    }

    pub fn schema(&self) -> DatasetSchema {
        DatasetSchema {
            id: default_id(),
            features: self
                .feature_names
                .iter()
                .zip(&self.features)
                .map(|(name, f)| FeatureSpec {
                    name: name.clone(),
                    kind: match f {
                        FeatureColumn::Categorical { .. } => FeatureKind::Categorical,
                        FeatureColumn::Numeric(_) => FeatureKind::Numeric,
                    },
                })
                .collect(),
            sensitive: default_sensitive(),
            label: default_label(),
            prediction: self.predictions.as_ref().map(|_| "yhat".into()),
            sensitive_cardinality: self.sensitive.cardinality(),
        }
    }

    /// Writes `id,<features>,s,y[,yhat]` matching [`DatasetTable::schema`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(["s".to_string(), "y".to_string()]);
        if self.predictions.is_some() {
            header.push("yhat".into());
        }
        w.write_record(&header)?;
        for row in 0..self.len() {
            let mut record = vec![self.ids[row].to_string()];
            record.extend(self.features.iter().map(|f| f.cell(row)));
            record.push(self.sensitive.values()[row].to_string());
            record.push(self.labels[row].to_string());
            if let Some(p) = &self.predictions {
                record.push(p[row].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        Ok(())
    }
}

pub fn ingest_csv(path: &Path, schema: &DatasetSchema) -> Result<DatasetTable, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    ingest_reader(file, schema)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, HarnessError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| HarnessError::Schema(format!("declared column `{name}` is missing")))
}

fn parse_bit(raw: &str, row: usize, column: &str) -> Result<u8, HarnessError> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(HarnessError::Parse {
            row,
            column: column.into(),
            message: format!("expected 0 or 1, got `{other}`"),
        }),
    }
}

/// Parses a dataset CSV. `row` in errors is the 1-based data row.
pub fn ingest_reader<R: Read>(reader: R, schema: &DatasetSchema) -> Result<DatasetTable, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_col = column_index(&headers, &schema.id)?;
    let s_col = column_index(&headers, &schema.sensitive)?;
    let y_col = column_index(&headers, &schema.label)?;
    let p_col = schema
        .prediction
        .as_deref()
        .map(|name| column_index(&headers, name))
        .transpose()?;
    let f_cols = schema
        .features
        .iter()
        .map(|f| column_index(&headers, &f.name))
        .collect::<Result<Vec<_>, _>>()?;
    if schema.sensitive_cardinality < 2 {
        return Err(HarnessError::Schema(format!(
            "sensitive_cardinality must be at least 2, got {}",
            schema.sensitive_cardinality
        )));
    }

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut s = Vec::new();
    let mut y = Vec::new();
    let mut p = Vec::new();
    let mut raw_features: Vec<Vec<String>> = vec![Vec::new(); f_cols.len()];
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); f_cols.len()];

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let id: i64 = field(id_col).parse().map_err(|_| HarnessError::Parse {
            row,
            column: schema.id.clone(),
            message: format!("expected an integer id, got `{}`", field(id_col)),
        })?;
        if !seen.insert(id) {
            return Err(HarnessError::DuplicateId(id));
        }
        ids.push(id);
        let sv: u32 = field(s_col).parse().map_err(|_| HarnessError::Parse {
            row,
            column: schema.sensitive.clone(),
            message: format!("expected a group index, got `{}`", field(s_col)),
        })?;
        if sv >= schema.sensitive_cardinality {
            return Err(HarnessError::Schema(format!(
                "row {row}: sensitive value {sv} exceeds declared cardinality {}",
                schema.sensitive_cardinality
            )));
        }
        s.push(sv);
        y.push(parse_bit(field(y_col), row, &schema.label)?);
        if let (Some(col), Some(name)) = (p_col, schema.prediction.as_deref()) {
            p.push(parse_bit(field(col), row, name)?);
        }
        for (j, (&col, spec)) in f_cols.iter().zip(&schema.features).enumerate() {
            let raw = field(col);
            match spec.kind {
                FeatureKind::Categorical => raw_features[j].push(raw.to_string()),
                FeatureKind::Numeric => {
                    let v: f64 = raw.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                        HarnessError::Parse {
                            row,
                            column: spec.name.clone(),
                            message: format!("expected a finite number, got `{raw}`"),
                        }
                    })?;
                    numeric[j].push(v);
                }
            }
        }
    }

    let features = schema
        .features
        .iter()
        .zip(raw_features.into_iter().zip(numeric))
        .map(|(spec, (raw, num))| match spec.kind {
            FeatureKind::Numeric => FeatureColumn::Numeric(num),
            FeatureKind::Categorical => {
                let levels: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                let codes = raw
                    .iter()
                    .map(|v| levels.binary_search(v).expect("level present") as u32)
                    .collect();
                FeatureColumn::Categorical { levels, codes }
            }
        })
        .collect();

    Ok(DatasetTable {
        ids,
        feature_names: schema.features.iter().map(|f| f.name.clone()).collect(),
        features,
        sensitive: SensitiveVector::new(s, schema.sensitive_cardinality)?,
        labels: BinaryVector::new(y)?,
        predictions: p_col.map(|_| BinaryVector::new(p)).transpose()?,
    })
}

/// Categorical codes as-is; numeric columns cut at deciles of the fit data.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    cuts: Vec<Option<Vec<f64>>>,
}

impl FeatureEncoder {
    pub fn fit(table: &DatasetTable) -> Self {
        let cuts = table
            .features
            .iter()
            .map(|f| match f {
                FeatureColumn::Categorical { .. } => None,
                FeatureColumn::Numeric(v) => Some(decile_cuts(v)),
            })
            .collect();
        Self { cuts }
    }

    pub fn encode(&self, table: &DatasetTable) -> Result<FeatureMatrix, HarnessError> {
        if table.features.len() != self.cuts.len() {
            return Err(HarnessError::Schema(format!(
                "encoder fit on {} features, table has {}",
                self.cuts.len(),
                table.features.len()
            )));
        }
        let columns = table
            .features
            .iter()
            .zip(&self.cuts)
            .map(|(f, cuts)| match (f, cuts) {
                (FeatureColumn::Categorical { codes, .. }, None) => Ok(codes.clone()),
                (FeatureColumn::Numeric(v), Some(cuts)) => {
                    Ok(v.iter().map(|x| cuts.partition_point(|c| c <= x) as u32).collect())
                }
                _ => Err(HarnessError::Schema("feature kinds differ from the encoder's".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut m = FeatureMatrix::new(columns)?;
        if m.n_columns() == 0 {
            m = FeatureMatrix::empty(table.len());
        }
        Ok(m)
    }
}

/// The 10%, ..., 90% order statistics, deduplicated.
fn decile_cuts(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..10)
        .map(|d| sorted[((d * sorted.len()) / 10).min(sorted.len() - 1)])
        .collect();
    cuts.dedup();
    cuts
}
