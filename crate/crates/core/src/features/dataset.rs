//! Dataset and category-statistics files.
//!
//! Example records are line-delimited: raceId, categoryIndex, the 128×9
//! input floats row-major, the raw target and the label, tab-separated
//! (inputs space-separated). Category statistics are a JSON sidecar kept
//! with each category's model.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureError, NormalizationSpec, TIME_STEPS, VARIABLES};

/// One serialized example row.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub race_id: String,
    pub category: usize,
    /// `TIME_STEPS` rows of `VARIABLES` raw (unnormalized) indicators.
    pub inputs: Vec<[f64; VARIABLES]>,
    pub raw_target: f64,
    pub label: usize,
}

pub fn write_dataset<W: Write>(writer: &mut W, records: &[DatasetRecord]) -> Result<(), FeatureError> {
    for r in records {
        let mut line = String::new();
        line.push_str(&r.race_id);
        line.push('\t');
        line.push_str(&r.category.to_string());
        line.push('\t');
        let mut first = true;
        for row in &r.inputs {
            for v in row {
                if !first {
                    line.push(' ');
                }
                first = false;
                line.push_str(&format!("{v}"));
            }
        }
        line.push('\t');
        line.push_str(&format!("{}", r.raw_target));
        line.push('\t');
        line.push_str(&r.label.to_string());
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<DatasetRecord>, FeatureError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: &str| FeatureError::Parse { line: line_no, message: message.into() };
        let mut fields = line.split('\t');
        let race_id = fields.next().ok_or_else(|| parse("missing raceId"))?.to_string();
        let category = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse("bad categoryIndex"))?;
        let floats_field = fields.next().ok_or_else(|| parse("missing inputs"))?;
        let values: Vec<f64> = floats_field
            .split(' ')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse("bad input float"))?;
        if values.len() != TIME_STEPS * VARIABLES {
            return Err(parse(&format!(
                "expected {} input floats, got {}",
                TIME_STEPS * VARIABLES,
                values.len()
            )));
        }
        let inputs: Vec<[f64; VARIABLES]> = values
            .chunks(VARIABLES)
            .map(|chunk| {
                let mut row = [0.0; VARIABLES];
                row.copy_from_slice(chunk);
                row
            })
            .collect();
        let raw_target = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse("bad raw target"))?;
        let label = fields.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse("bad label"))?;
        out.push(DatasetRecord { race_id, category, inputs, raw_target, label });
    }
    Ok(out)
}

pub fn write_dataset_file(path: &Path, records: &[DatasetRecord]) -> Result<(), FeatureError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(&mut file, records)
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<DatasetRecord>, FeatureError> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}

/// Everything a category's model needs besides its parameters: the input
/// normalization, the label boundaries and the per-class movement
/// statistics behind mechanism parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: usize,
    pub example_count: usize,
    pub normalization: NormalizationSpec,
    /// Upper boundary target value of classes 0..4.
    pub boundaries: [f64; 4],
    /// Mean of each class's maximum absolute tick variation over the
    /// target window.
    pub class_mean_max_variation: [f64; 5],
    pub class_counts: [usize; 5],
}

impl CategoryStats {
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self).map_err(|e| FeatureError::Parse {
            line: 0,
            message: format!("serializing category stats: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<CategoryStats, FeatureError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        serde_json::from_reader(file).map_err(|e| FeatureError::Parse {
            line: 0,
            message: format!("parsing category stats: {e}"),
        })
    }
}
