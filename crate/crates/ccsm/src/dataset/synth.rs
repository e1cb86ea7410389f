//! Synthetic dataset generation with planted anomalies, used as the oracle
//! for recovery and false-positive tests.

use super::{Column, ColumnData, Dataset};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Group name -> row count. BTreeMap so generation order is stable.
    pub groups: BTreeMap<String, usize>,
    #[serde(default)]
    pub categorical: Vec<CatFeatureSpec>,
    #[serde(default)]
    pub continuous: Vec<ContFeatureSpec>,
    #[serde(default)]
    pub planted_categorical: Vec<PlantedCategorical>,
    #[serde(default)]
    pub planted_continuous: Vec<PlantedContinuous>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatFeatureSpec {
    pub name: String,
    pub cardinality: usize,
    /// Optional baseline weights over the dictionary; uniform when absent.
    #[serde(default)]
    pub baseline: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContFeatureSpec {
    pub name: String,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedCategorical {
    pub group: String,
    pub column: String,
    /// Dictionary value, e.g. "v0".
    pub value: String,
    pub support_in: f64,
    pub support_out: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedContinuous {
    pub group: String,
    pub column: String,
    /// In-group mean shift in units of the column's stddev.
    pub shift_stddevs: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidSpec("no groups".into()));
        }
        for (name, &n) in &self.groups {
            if n == 0 {
                return Err(Error::InvalidSpec(format!("group {name:?} has size 0")));
            }
        }
        for p in &self.planted_categorical {
            if !(0.0..=1.0).contains(&p.support_in) || !(0.0..=1.0).contains(&p.support_out) {
                return Err(Error::InvalidSpec("planted support outside [0,1]".into()));
            }
            if !self.groups.contains_key(&p.group) {
                return Err(Error::InvalidSpec(format!("unknown group {:?}", p.group)));
            }
            let feat = self
                .categorical
                .iter()
                .find(|f| f.name == p.column)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown column {:?}", p.column)))?;
            if dict_code(feat.cardinality, &p.value).is_none() {
                return Err(Error::InvalidSpec(format!(
                    "planted value {:?} outside cardinality {} of {:?}",
                    p.value, feat.cardinality, p.column
                )));
            }
        }
        for p in &self.planted_continuous {
            if !self.groups.contains_key(&p.group) {
                return Err(Error::InvalidSpec(format!("unknown group {:?}", p.group)));
            }
            if !self.continuous.iter().any(|f| f.name == p.column) {
                return Err(Error::InvalidSpec(format!("unknown column {:?}", p.column)));
            }
        }
        Ok(())
    }
}

fn dict_code(cardinality: usize, value: &str) -> Option<u32> {
    (0..cardinality)
        .position(|i| format!("v{i}") == value)
        .map(|i| i as u32)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let group_names: Vec<String> = spec.groups.keys().cloned().collect();
    let mut group_of = Vec::new();
    for (g, name) in group_names.iter().enumerate() {
        group_of.extend(std::iter::repeat(g as u32).take(spec.groups[name]));
    }
    let n_rows = group_of.len();

    let mut columns = Vec::new();
    for feat in &spec.categorical {
        let dict: Vec<String> = (0..feat.cardinality).map(|i| format!("v{i}")).collect();
        let baseline = feat
            .baseline
            .clone()
            .unwrap_or_else(|| vec![1.0; feat.cardinality]);
        let mut codes = Vec::with_capacity(n_rows);
        for &g in &group_of {
            let group = &group_names[g as usize];
            let plant = spec
                .planted_categorical
                .iter()
                .find(|p| p.column == feat.name);
            let code = match plant {
                Some(p) => {
                    let target = dict_code(feat.cardinality, &p.value).unwrap();
                    let prob = if *group == p.group {
                        p.support_in
                    } else {
                        p.support_out
                    };
                    if rng.gen::<f64>() < prob {
                        target
                    } else {
                        weighted_draw_excluding(&mut rng, &baseline, Some(target as usize))
                    }
                }
                None => weighted_draw_excluding(&mut rng, &baseline, None),
            };
            codes.push(code);
        }
        columns.push(Column {
            name: feat.name.clone(),
            data: ColumnData::Categorical { codes, dict },
        });
    }
    for feat in &spec.continuous {
        let mut values = Vec::with_capacity(n_rows);
        for &g in &group_of {
            let group = &group_names[g as usize];
            let shift = spec
                .planted_continuous
                .iter()
                .find(|p| p.column == feat.name && p.group == *group)
                .map(|p| p.shift_stddevs * feat.stddev)
                .unwrap_or(0.0);
            let dist = Normal::new(feat.mean + shift, feat.stddev)
                .map_err(|e| Error::InvalidSpec(e.to_string()))?;
            values.push(dist.sample(&mut rng));
        }
        columns.push(Column {
            name: feat.name.clone(),
            data: ColumnData::Continuous { values },
        });
    }

    Ok(Dataset {
        columns,
        group_column: "sig".to_string(),
        group_names,
        group_of,
    })
}

fn weighted_draw_excluding(rng: &mut ChaCha8Rng, weights: &[f64], exclude: Option<usize>) -> u32 {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(_, w)| w)
        .sum();
    if total <= 0.0 {
        // only the excluded value has weight; fall back to it
        return exclude.unwrap_or(0) as u32;
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        x -= w;
        if x < 0.0 {
            return i as u32;
        }
    }
    (weights.len() - 1) as u32
}
