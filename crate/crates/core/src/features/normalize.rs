//! Input normalization and target labeling.
//!
//! Inputs are rescaled to `[-1, 1]` against per-variable bounds found by
//! truncating 10% of each histogram tail; out-of-bounds values are clamped,
//! never dropped. Targets are split into five equal-count classes.

use serde::{Deserialize, Serialize};

use super::{FeatureError, MoveClass};

/// Bounds found by dropping `tail` of the sorted values at each end and
/// taking the extremes of what remains.
pub fn truncated_minmax(values: &[f64], tail: f64) -> Result<(f64, f64), FeatureError> {
    if values.len() < 10 {
        return Err(FeatureError::TooFewValues { min: 10, got: values.len() });
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let k = (values.len() as f64 * tail).floor() as usize;
    Ok((sorted[k], sorted[sorted.len() - 1 - k]))
}

/// The fitted range of one input variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableRange {
    pub min: f64,
    pub max: f64,
}

impl VariableRange {
    /// Fits the truncated bounds, widening a degenerate (all-equal) range
    /// by machine epsilon so the mapping never divides by zero.
    pub fn fit(values: &[f64], tail: f64) -> Result<VariableRange, FeatureError> {
        let (mut min, mut max) = truncated_minmax(values, tail)?;
        if min == max {
            let eps = f64::EPSILON * min.abs().max(1.0);
            min -= eps;
            max += eps;
        }
        Ok(VariableRange { min, max })
    }

    pub fn normalize(&self, value: f64) -> f64 {
        normalize(value, *self)
    }
}

/// Clamps to the fitted range, then maps it affinely onto `[-1, 1]`.
pub fn normalize(value: f64, range: VariableRange) -> f64 {
    let v = value.clamp(range.min, range.max);
    2.0 * (v - range.min) / (range.max - range.min) - 1.0
}

/// Per-variable ranges for one category, persisted with the model so
/// production inputs reuse the training-time bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub tail: f64,
    pub ranges: Vec<VariableRange>,
}

impl NormalizationSpec {
    /// Fits one range per input column over a set of example matrices.
    pub fn fit(
        examples: &[Vec<[f64; super::VARIABLES]>],
        tail: f64,
    ) -> Result<NormalizationSpec, FeatureError> {
        let mut ranges = Vec::with_capacity(super::VARIABLES);
        for var in 0..super::VARIABLES {
            let values: Vec<f64> =
                examples.iter().flat_map(|rows| rows.iter().map(move |r| r[var])).collect();
            ranges.push(VariableRange::fit(&values, tail)?);
        }
        Ok(NormalizationSpec { tail, ranges })
    }

    pub fn apply(&self, rows: &[[f64; super::VARIABLES]]) -> Vec<[f64; super::VARIABLES]> {
        rows.iter()
            .map(|row| {
                let mut out = [0.0; super::VARIABLES];
                for (i, (v, range)) in row.iter().zip(&self.ranges).enumerate() {
                    out[i] = range.normalize(*v);
                }
                out
            })
            .collect()
    }
}

/// An equal-count five-way split of the training targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuintileSplit {
    /// Upper boundary value of classes 0..4 (the last class is unbounded).
    pub boundaries: [f64; 4],
    /// Class of each input target, in input order.
    pub labels: Vec<MoveClass>,
    pub counts: [usize; 5],
}

impl QuintileSplit {
    /// Class of a fresh target value: values at or below a boundary fall in
    /// the lower class.
    pub fn classify(&self, target: f64) -> MoveClass {
        let idx = self.boundaries.iter().filter(|b| target > **b).count();
        MoveClass::from_index(idx).expect("at most four boundaries below")
    }
}

/// Splits training targets into five classes of equal count (±1), sorted
/// by value; ties are broken by input position so the balance is exact.
pub fn label_by_quintiles(targets: &[f64]) -> Result<QuintileSplit, FeatureError> {
    let n = targets.len();
    if n < 5 {
        return Err(FeatureError::TooFewValues { min: 5, got: n });
    }
    let first = targets[0];
    if targets.iter().all(|t| *t == first) {
        return Err(FeatureError::DegenerateSpread);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        targets[a].partial_cmp(&targets[b]).expect("finite targets").then(a.cmp(&b))
    });

    let mut labels = vec![MoveClass::Neutral; n];
    let mut counts = [0usize; 5];
    let mut boundaries = [0.0f64; 4];
    let base = n / 5;
    let extra = n % 5;
    let mut cursor = 0usize;
    for class in 0..5 {
        let size = base + usize::from(class < extra);
        for &idx in &order[cursor..cursor + size] {
            labels[idx] = MoveClass::from_index(class).expect("class in range");
        }
        counts[class] = size;
        cursor += size;
        if class < 4 {
            boundaries[class] = targets[order[cursor - 1]];
        }
    }
    Ok(QuintileSplit { boundaries, labels, counts })
}
