//! Columnar data model: typed columns, a group (SIG) label per row,
//! stratified sampling, and the equi-width discretization baseline.
//!
//! Categorical columns hold dense dictionary codes; `MISSING_CODE` marks
//! missing cells and is excluded from candidate generation. Continuous
//! columns hold f64 values with NaN marking missing; every stored non-missing
//! value is finite.

pub mod io;
pub mod synth;

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const MISSING_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone)]
pub enum ColumnData {
    Categorical { codes: Vec<u32>, dict: Vec<String> },
    Continuous { values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
            ColumnData::Continuous { .. } => ColumnKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Categorical { codes, .. } => codes.len(),
            ColumnData::Continuous { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub group_column: String,
    pub group_names: Vec<String>,
    /// Group index per row.
    pub group_of: Vec<u32>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.group_of.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.n_groups()];
        for &g in &self.group_of {
            sizes[g as usize] += 1;
        }
        sizes
    }

    pub fn column(&self, name: &str) -> Option<(usize, &Column)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
    }

    pub fn continuous_column_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind() == ColumnKind::Continuous)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn categorical_column_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind() == ColumnKind::Categorical)
            .map(|(i, _)| i)
            .collect()
    }

    /// Content hash used in run headers for reproducibility.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.group_column.as_bytes());
        for name in &self.group_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for &g in &self.group_of {
            h.update(g.to_le_bytes());
        }
        for col in &self.columns {
            h.update(col.name.as_bytes());
            match &col.data {
                ColumnData::Categorical { codes, dict } => {
                    for s in dict {
                        h.update(s.as_bytes());
                        h.update([0u8]);
                    }
                    for &c in codes {
                        h.update(c.to_le_bytes());
                    }
                }
                ColumnData::Continuous { values } => {
                    for &v in values {
                        h.update(v.to_le_bytes());
                    }
                }
            }
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Keep the given rows (in order), producing a new dataset.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Categorical { codes, dict } => ColumnData::Categorical {
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                        dict: dict.clone(),
                    },
                    ColumnData::Continuous { values } => ColumnData::Continuous {
                        values: rows.iter().map(|&r| values[r]).collect(),
                    },
                },
            })
            .collect();
        Dataset {
            columns,
            group_column: self.group_column.clone(),
            group_names: self.group_names.clone(),
            group_of: rows.iter().map(|&r| self.group_of[r]).collect(),
        }
    }
}

/// Retain each row of group g independently with probability
/// min(1, target_per_group / |g|). Deterministic given seed; never moves a
/// row between groups or duplicates one.
pub fn stratified_sample(d: &Dataset, target_per_group: usize, seed: u64) -> Dataset {
    assert!(target_per_group >= 1);
    let sizes = d.group_sizes();
    let probs: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            if n == 0 {
                0.0
            } else {
                (target_per_group as f64 / n as f64).min(1.0)
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept: Vec<usize> = (0..d.n_rows())
        .filter(|&r| {
            let p = probs[d.group_of[r] as usize];
            p >= 1.0 || rng.gen::<f64>() < p
        })
        .collect();
    d.select_rows(&kept)
}

/// Replace every continuous column with a categorical column of `bins`
/// equi-width bins computed over the whole column. Bin labels carry the
/// interval; the top bin is right-closed so the max is representable.
pub fn discretize_equiwidth(d: &Dataset, bins: usize) -> Dataset {
    assert!(bins >= 2);
    let columns = d
        .columns
        .iter()
        .map(|c| match &c.data {
            ColumnData::Categorical { .. } => c.clone(),
            ColumnData::Continuous { values } => Column {
                name: c.name.clone(),
                data: bin_column(values, bins),
            },
        })
        .collect();
    Dataset {
        columns,
        group_column: d.group_column.clone(),
        group_names: d.group_names.clone(),
        group_of: d.group_of.clone(),
    }
}

fn bin_column(values: &[f64], bins: usize) -> ColumnData {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return ColumnData::Categorical {
            codes: vec![MISSING_CODE; values.len()],
            dict: vec![],
        };
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        // constant column: everything in bin 0
        return ColumnData::Categorical {
            codes: values
                .iter()
                .map(|v| if v.is_finite() { 0 } else { MISSING_CODE })
                .collect(),
            dict: vec![format!("[{min}, {max}]")],
        };
    }
    let width = (max - min) / bins as f64;
    let codes = values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                MISSING_CODE
            } else {
                (((v - min) / width).floor() as i64).clamp(0, bins as i64 - 1) as u32
            }
        })
        .collect();
    let dict = (0..bins)
        .map(|b| {
            let lo = min + b as f64 * width;
            let hi = min + (b + 1) as f64 * width;
            if b == bins - 1 {
                format!("[{lo}, {hi}]")
            } else {
                format!("[{lo}, {hi})")
            }
        })
        .collect();
    ColumnData::Categorical { codes, dict }
}

/// Build a dataset directly from typed parts; validates row counts.
pub fn from_parts(
    columns: Vec<Column>,
    group_column: String,
    group_names: Vec<String>,
    group_of: Vec<u32>,
) -> Result<Dataset> {
    for c in &columns {
        if c.len() != group_of.len() {
            return Err(Error::InvalidSpec(format!(
                "column {:?} has {} values, expected {}",
                c.name,
                c.len(),
                group_of.len()
            )));
        }
    }
    Ok(Dataset {
        columns,
        group_column,
        group_names,
        group_of,
    })
}
