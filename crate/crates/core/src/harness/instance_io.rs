//! CSV formats for correction instances, corrected vectors and externally
//! produced guesses.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use super::HarnessError;
use crate::fairness::{AttackInstance, BinaryVector, ConfidenceVector, SensitiveVector};

/// A correction instance with its row ids, from `id,y,yhat,s_hat,confidence[,s_true]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTable {
    pub ids: Vec<i64>,
    pub instance: AttackInstance,
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn required(headers: &csv::StringRecord, name: &str) -> Result<usize, HarnessError> {
    header_index(headers, name).ok_or_else(|| HarnessError::Schema(format!("missing column `{name}`")))
}

fn parse<T: std::str::FromStr>(record: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<T, HarnessError> {
    let raw = record.get(col).unwrap_or("");
    raw.parse().map_err(|_| HarnessError::Parse {
        row,
        column: name.into(),
        message: format!("cannot parse `{raw}`"),
    })
}

fn parse_bit(record: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<u8, HarnessError> {
    let v: u8 = parse(record, col, row, name)?;
    if v > 1 {
        return Err(HarnessError::Parse {
            row,
            column: name.into(),
            message: format!("expected 0 or 1, got {v}"),
        });
    }
    Ok(v)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

/// Reads an instance. The sensitive cardinality is one more than the largest
/// value in `s_hat` or `s_true`, and at least 2.
pub fn read_instance_csv<R: Read>(r: R) -> Result<InstanceTable, HarnessError> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let cols = ["id", "y", "yhat", "s_hat", "confidence"]
        .iter()
        .map(|name| required(&headers, name))
        .collect::<Result<Vec<_>, _>>()?;
    let truth_col = header_index(&headers, "s_true");

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let (mut y, mut yhat, mut guess, mut conf, mut truth) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let id: i64 = parse(&record, cols[0], row, "id")?;
        if !seen.insert(id) {
            return Err(HarnessError::DuplicateId(id));
        }
        ids.push(id);
        y.push(parse_bit(&record, cols[1], row, "y")?);
        yhat.push(parse_bit(&record, cols[2], row, "yhat")?);
        guess.push(parse::<u32>(&record, cols[3], row, "s_hat")?);
        let c: f64 = parse(&record, cols[4], row, "confidence")?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(HarnessError::Parse {
                row,
                column: "confidence".into(),
                message: format!("confidence must be finite and non-negative, got {c}"),
            });
        }
        conf.push(c);
        if let Some(col) = truth_col {
            truth.push(parse::<u32>(&record, col, row, "s_true")?);
        }
    }
    let cardinality = guess.iter().chain(&truth).max().map_or(2, |&m| (m + 1).max(2));
    let instance = AttackInstance::new(
        BinaryVector::new(yhat)?,
        BinaryVector::new(y)?,
        SensitiveVector::new(guess, cardinality)?,
        ConfidenceVector::new(conf)?,
        truth_col.map(|_| SensitiveVector::new(truth, cardinality)).transpose()?,
    )?;
    Ok(InstanceTable { ids, instance })
}

pub fn write_instance_csv<W: Write>(table: &InstanceTable, w: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(w);
    let inst = &table.instance;
    let mut header = vec!["id", "y", "yhat", "s_hat", "confidence"];
    if inst.truth.is_some() {
        header.push("s_true");
    }
    w.write_record(&header)?;
    for (i, id) in table.ids.iter().enumerate() {
        let mut rec = vec![
            id.to_string(),
            inst.labels[i].to_string(),
            inst.predictions[i].to_string(),
            inst.guess.values()[i].to_string(),
            inst.confidence[i].to_string(),
        ];
        if let Some(t) = &inst.truth {
            rec.push(t.values()[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// Writes `id,s_star,changed`.
pub fn write_corrected_csv<W: Write>(
    ids: &[i64],
    original: &SensitiveVector,
    corrected: &SensitiveVector,
    w: W,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["id", "s_star", "changed"])?;
    for (i, id) in ids.iter().enumerate() {
        let (a, b) = (original.values()[i], corrected.values()[i]);
        w.write_record([id.to_string(), b.to_string(), u8::from(a != b).to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// Guesses keyed by row id, from `id,s_hat,confidence_raw`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExternalGuesses {
    by_id: HashMap<i64, (u32, f64)>,
    cardinality: u32,
}

impl ExternalGuesses {
    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// The guess and raw scores for `ids`, in order.
    pub fn lookup(&self, ids: &[i64]) -> Result<(SensitiveVector, Vec<f64>), HarnessError> {
        let mut guess = Vec::with_capacity(ids.len());
        let mut raw = Vec::with_capacity(ids.len());
        for id in ids {
            let &(s, c) = self.by_id.get(id).ok_or(HarnessError::MissingGuess(*id))?;
            guess.push(s);
            raw.push(c);
        }
        Ok((SensitiveVector::new(guess, self.cardinality)?, raw))
    }
}

pub fn read_guess_csv<R: Read>(r: R) -> Result<ExternalGuesses, HarnessError> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let id_col = required(&headers, "id")?;
    let s_col = required(&headers, "s_hat")?;
    let c_col = required(&headers, "confidence_raw")?;
    let mut by_id = HashMap::new();
    let mut max = 1;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let id: i64 = parse(&record, id_col, row, "id")?;
        let s: u32 = parse(&record, s_col, row, "s_hat")?;
        let c: f64 = parse(&record, c_col, row, "confidence_raw")?;
        if by_id.insert(id, (s, c)).is_some() {
            return Err(HarnessError::DuplicateId(id));
        }
        max = max.max(s);
    }
    Ok(ExternalGuesses {
        by_id,
        cardinality: max + 1,
    })
}

pub fn write_guess_csv<W: Write>(ids: &[i64], guess: &SensitiveVector, raw: &[f64], w: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["id", "s_hat", "confidence_raw"])?;
    for (i, id) in ids.iter().enumerate() {
        w.write_record([id.to_string(), guess.values()[i].to_string(), raw[i].to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}
