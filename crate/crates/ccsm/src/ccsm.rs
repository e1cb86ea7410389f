//! Continuous contrast set mining: the STUCCO search structure with a
//! one-way ANOVA significance test and a max pairwise mean-difference
//! largeness test, operating directly on real-valued columns. N-gram
//! features extend level by level (one trailing event at a time, IDF
//! recounted over all logs); plain continuous columns participate at
//! depth 1 only.

use crate::dataset::{ColumnData, Dataset};
use crate::navfeat::{gram_name, idf, FeatureMatrix, Gram, NavigationLog};
use crate::stats::{anova_f_test, tree_level_alpha, GroupSample};
use crate::stucco::{CategoricalMining, MinerConfig, MiningStats};
use crate::{exec, Error, Result};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub enum FeatureSource {
    /// Continuous column of the dataset.
    Column(usize),
    /// Materialized TF-IDF column (extended n-grams).
    Owned(Arc<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct ContinuousCandidate {
    pub name: String,
    /// Present for n-gram features; None for plain columns.
    pub gram: Option<Gram>,
    /// n-gram length, or 1 for plain columns.
    pub depth: usize,
    pub source: FeatureSource,
}

impl ContinuousCandidate {
    pub fn values<'a>(&'a self, d: &'a Dataset) -> &'a [f64] {
        match &self.source {
            FeatureSource::Column(c) => match &d.columns[*c].data {
                ColumnData::Continuous { values } => values,
                _ => panic!("candidate points at non-continuous column"),
            },
            FeatureSource::Owned(v) => v,
        }
    }
}

/// Per-group sufficient statistics for one candidate.
#[derive(Debug, Clone)]
pub struct ContinuousStats {
    pub groups: Vec<GroupSample>,
    /// Rows with a nonzero (and non-missing) value.
    pub nonzero: u64,
}

impl ContinuousStats {
    pub fn compute(values: &[f64], group_of: &[u32], n_groups: usize) -> ContinuousStats {
        let mut groups = vec![GroupSample::default(); n_groups];
        let mut nonzero = 0;
        for (&v, &g) in values.iter().zip(group_of) {
            if v.is_finite() {
                groups[g as usize].push(v);
                if v != 0.0 {
                    nonzero += 1;
                }
            }
        }
        ContinuousStats { groups, nonzero }
    }

    /// max_ij |mean(q|G_i) - mean(q|G_j)| over non-empty groups.
    pub fn means_difference(&self) -> f64 {
        let means: Vec<f64> = self
            .groups
            .iter()
            .filter(|g| g.n > 0)
            .map(|g| g.mean)
            .collect();
        if means.len() < 2 {
            return 0.0;
        }
        let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Group sample for `g` and the pooled complement of all other groups.
    pub fn one_vs_rest(&self, g: usize) -> (GroupSample, GroupSample) {
        let rest = self
            .groups
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != g)
            .fold(GroupSample::default(), |acc, (_, s)| acc.merge(s));
        (self.groups[g], rest)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CcsmConfig {
    /// Minimum mean difference, in raw feature units.
    pub delta: f64,
    pub alpha: f64,
    /// Maximum n-gram length for candidate extension.
    pub max_ngram: usize,
    /// Minimum number of nonzero-weight rows (and minimum document
    /// frequency for extended grams).
    pub min_count: u64,
    #[serde(skip)]
    pub timeout: Option<Duration>,
}

impl Default for CcsmConfig {
    fn default() -> Self {
        CcsmConfig {
            delta: 0.0,
            alpha: 0.05,
            max_ngram: 3,
            min_count: 5,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuousTest {
    pub significant: bool,
    pub large: bool,
    pub means_difference: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Significance (ANOVA at the corrected level) and largeness (mean
/// difference strictly above delta). None means untestable: pruned.
pub fn test_continuous(
    stats: &ContinuousStats,
    cfg: &CcsmConfig,
    alpha_level: f64,
) -> Option<ContinuousTest> {
    let r = anova_f_test(&stats.groups)?;
    let means_difference = stats.means_difference();
    Some(ContinuousTest {
        significant: r.p_value < alpha_level,
        large: means_difference > cfg.delta,
        means_difference,
        p_value: r.p_value,
        degenerate: r.degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct MinedContinuous {
    pub candidate: ContinuousCandidate,
    pub stats: ContinuousStats,
    pub p_value: f64,
    pub means_difference: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ContinuousMining {
    pub findings: Vec<MinedContinuous>,
    pub stats: MiningStats,
}

/// Initial candidate features for the continuous miner.
pub struct ContinuousFeatures<'a> {
    /// Indices of plain continuous dataset columns (depth 1 only).
    pub plain_columns: Vec<usize>,
    /// Navigation-log n-gram features, row-aligned with the dataset.
    pub ngrams: Option<NGramInput<'a>>,
}

pub struct NGramInput<'a> {
    pub logs: &'a [NavigationLog],
    pub ngram_len: usize,
    pub matrix: &'a FeatureMatrix,
}

/// Extend each surviving n-gram by one trailing event observed in the logs.
/// Extended grams are materialized as TF-IDF columns with IDF recounted over
/// all logs; extensions below `min_df` document frequency are dropped.
pub fn gen_candidates(
    survivors: &[Gram],
    logs: &[NavigationLog],
    min_df: usize,
) -> Vec<(Gram, Arc<Vec<f64>>)> {
    if survivors.is_empty() {
        return Vec::new();
    }
    let len = survivors[0].len();
    debug_assert!(survivors.iter().all(|g| g.len() == len));
    let prefixes: HashSet<&[String]> = survivors.iter().map(|g| g.as_slice()).collect();

    // term counts per log for each extension
    let per_log: Vec<HashMap<Gram, u64>> = exec::map(logs, |log| {
        let mut counts: HashMap<Gram, u64> = HashMap::new();
        if log.events.len() > len {
            for w in log.events.windows(len + 1) {
                if prefixes.contains(&w[..len]) {
                    *counts.entry(w.to_vec()).or_insert(0) += 1;
                }
            }
        }
        counts
    });

    let mut df: BTreeMap<Gram, usize> = BTreeMap::new();
    for counts in &per_log {
        for gram in counts.keys() {
            *df.entry(gram.clone()).or_insert(0) += 1;
        }
    }
    let doc_count = logs.len();
    df.into_iter()
        .filter(|(_, f)| *f >= min_df)
        .map(|(gram, f)| {
            let w = idf(doc_count, f);
            let column: Vec<f64> = per_log
                .iter()
                .map(|counts| counts.get(&gram).copied().unwrap_or(0) as f64 * w)
                .collect();
            (gram, Arc::new(column))
        })
        .collect()
}

/// Level-wise continuous mining loop: test every candidate at the
/// tree-level corrected alpha, emit passers, extend surviving n-grams.
pub fn mine_continuous(
    d: &Dataset,
    features: &ContinuousFeatures,
    cfg: &CcsmConfig,
) -> Result<ContinuousMining> {
    let start = Instant::now();
    let n_groups = d.n_groups();
    if n_groups < 2 {
        return Err(Error::TooFewGroups);
    }

    let mut candidates: Vec<ContinuousCandidate> = Vec::new();
    for &c in &features.plain_columns {
        candidates.push(ContinuousCandidate {
            name: d.columns[c].name.clone(),
            gram: None,
            depth: 1,
            source: FeatureSource::Column(c),
        });
    }
    if let Some(ngrams) = &features.ngrams {
        for (j, gram) in ngrams.matrix.grams.iter().enumerate() {
            candidates.push(ContinuousCandidate {
                name: ngrams.matrix.names[j].clone(),
                gram: Some(gram.clone()),
                depth: ngrams.ngram_len,
                source: FeatureSource::Owned(Arc::new(ngrams.matrix.columns[j].clone())),
            });
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoCandidateFeatures);
    }

    let mut findings: Vec<MinedContinuous> = Vec::new();
    let mut stats = MiningStats::default();
    let mut level = 1usize;

    while !candidates.is_empty() {
        if let Some(cap) = cfg.timeout {
            if start.elapsed() >= cap {
                stats.timed_out = true;
                break;
            }
        }
        let width = candidates.len();
        stats.candidates_tested += width;
        stats.peak_level_width = stats.peak_level_width.max(width);
        stats.levels = level;
        let alpha_level = tree_level_alpha(cfg.alpha, level, width);

        let evaluated: Vec<(ContinuousStats, Option<ContinuousTest>)> =
            exec::map(&candidates, |cand| {
                let cs = ContinuousStats::compute(cand.values(d), &d.group_of, n_groups);
                let test = if cs.nonzero < cfg.min_count {
                    None
                } else {
                    test_continuous(&cs, cfg, alpha_level)
                };
                (cs, test)
            });

        let mut surviving_grams: Vec<Gram> = Vec::new();
        for (cand, (cs, test)) in candidates.into_iter().zip(evaluated) {
            let Some(test) = test else { continue };
            if test.significant && test.large {
                if let Some(gram) = &cand.gram {
                    if gram.len() < cfg.max_ngram {
                        surviving_grams.push(gram.clone());
                    }
                }
                findings.push(MinedContinuous {
                    candidate: cand,
                    stats: cs,
                    p_value: test.p_value,
                    means_difference: test.means_difference,
                    degenerate: test.degenerate,
                });
            }
        }

        candidates = match (&features.ngrams, surviving_grams.is_empty()) {
            (Some(ngrams), false) => {
                gen_candidates(&surviving_grams, ngrams.logs, cfg.min_count as usize)
                    .into_iter()
                    .map(|(gram, column)| ContinuousCandidate {
                        name: gram_name(&gram),
                        depth: gram.len(),
                        gram: Some(gram),
                        source: FeatureSource::Owned(column),
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        level += 1;
    }

    findings.sort_by(|a, b| a.candidate.name.cmp(&b.candidate.name));
    Ok(ContinuousMining { findings, stats })
}

/// Discretization baseline: equi-width binning followed by categorical
/// mining. Used by the benchmark harness.
pub fn mine_binned_baseline(d: &Dataset, bins: usize, cfg: &MinerConfig) -> Result<CategoricalMining> {
    let binned = crate::dataset::discretize_equiwidth(d, bins);
    crate::stucco::mine_categorical(&binned, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use approx::assert_relative_eq;

    fn cont_dataset(groups: Vec<u32>, cols: Vec<(&str, Vec<f64>)>) -> Dataset {
        let n_groups = groups.iter().max().unwrap() + 1;
        Dataset {
            columns: cols
                .into_iter()
                .map(|(name, values)| Column {
                    name: name.into(),
                    data: ColumnData::Continuous { values },
                })
                .collect(),
            group_column: "sig".into(),
            group_names: (0..n_groups).map(|g| format!("G{g}")).collect(),
            group_of: groups,
        }
    }

    #[test]
    fn test_continuous_anova_example() {
        // groups {1,2,3},{2,3,4},{3,4,5}: F = 3.0, p ~ 0.125, means diff 2.0
        let d = cont_dataset(
            vec![0, 0, 0, 1, 1, 1, 2, 2, 2],
            vec![("x", vec![1., 2., 3., 2., 3., 4., 3., 4., 5.])],
        );
        let cs = ContinuousStats::compute(
            match &d.columns[0].data {
                ColumnData::Continuous { values } => values,
                _ => panic!(),
            },
            &d.group_of,
            3,
        );
        let cfg = CcsmConfig {
            delta: 1.5,
            ..Default::default()
        };
        let t = test_continuous(&cs, &cfg, 0.05).unwrap();
        assert_relative_eq!(t.means_difference, 2.0, epsilon = 1e-12);
        assert!(t.large);
        assert!(!t.significant);
        assert_relative_eq!(t.p_value, 0.125, epsilon = 1e-3);
    }

    #[test]
    fn identical_groups_not_significant() {
        let cs = ContinuousStats::compute(
            &[1., 2., 3., 1., 2., 3.],
            &[0, 0, 0, 1, 1, 1],
            2,
        );
        let t = test_continuous(&cs, &CcsmConfig::default(), 0.05).unwrap();
        assert!(!t.significant);
        assert_eq!(t.means_difference, 0.0);
    }

    #[test]
    fn depth1_equals_per_column_filter() {
        // max depth 1 (no grams): mining = independent per-column tests
        let spec = crate::dataset::synth::SyntheticSpec {
            seed: 11,
            groups: [("A".to_string(), 400), ("B".to_string(), 400)]
                .into_iter()
                .collect(),
            categorical: vec![],
            continuous: (0..6)
                .map(|i| crate::dataset::synth::ContFeatureSpec {
                    name: format!("f{i}"),
                    mean: 1.0,
                    stddev: 1.0,
                })
                .collect(),
            planted_categorical: vec![],
            planted_continuous: vec![crate::dataset::synth::PlantedContinuous {
                group: "A".into(),
                column: "f2".into(),
                shift_stddevs: 0.8,
            }],
        };
        let d = crate::dataset::synth::generate_synthetic(&spec).unwrap();
        let cfg = CcsmConfig {
            min_count: 0,
            ..Default::default()
        };
        let features = ContinuousFeatures {
            plain_columns: d.continuous_column_indices(),
            ngrams: None,
        };
        let mined = mine_continuous(&d, &features, &cfg).unwrap();

        // oracle: test each column independently at the same level-1 alpha
        let alpha1 = tree_level_alpha(cfg.alpha, 1, 6);
        let mut expected: Vec<String> = Vec::new();
        for &c in &d.continuous_column_indices() {
            let values = match &d.columns[c].data {
                ColumnData::Continuous { values } => values,
                _ => panic!(),
            };
            let cs = ContinuousStats::compute(values, &d.group_of, 2);
            if let Some(t) = test_continuous(&cs, &cfg, alpha1) {
                if t.significant && t.large {
                    expected.push(d.columns[c].name.clone());
                }
            }
        }
        expected.sort();
        let got: Vec<String> = mined
            .findings
            .iter()
            .map(|f| f.candidate.name.clone())
            .collect();
        assert_eq!(got, expected);
        assert!(got.contains(&"f2".to_string()));
    }

    #[test]
    fn gen_candidates_extends_by_observed_events() {
        let log = |events: &[&str]| NavigationLog {
            events: events.iter().map(|s| s.to_string()).collect(),
        };
        let logs = vec![
            log(&["Feed", "Photos", "Fundraiser", "Feed", "Photos", "Friends"]),
            log(&["Feed", "Photos", "Friends"]),
        ];
        let survivor: Gram = vec!["Feed".into(), "Photos".into()];
        let ext = gen_candidates(&[survivor.clone()], &logs, 1);
        let names: Vec<String> = ext.iter().map(|(g, _)| gram_name(g)).collect();
        assert_eq!(
            names,
            vec!["Feed->Photos->Friends", "Feed->Photos->Fundraiser"]
        );
        // extension in < min_df logs dropped
        let ext2 = gen_candidates(&[survivor], &logs, 2);
        let names2: Vec<String> = ext2.iter().map(|(g, _)| gram_name(g)).collect();
        assert_eq!(names2, vec!["Feed->Photos->Friends"]);
    }

    #[test]
    fn no_features_is_error() {
        let d = cont_dataset(vec![0, 1], vec![("x", vec![1.0, 2.0])]);
        let features = ContinuousFeatures {
            plain_columns: vec![],
            ngrams: None,
        };
        assert!(matches!(
            mine_continuous(&d, &features, &CcsmConfig::default()),
            Err(Error::NoCandidateFeatures)
        ));
    }

    #[test]
    fn means_difference_invariant_to_relabeling() {
        let values = [1.0, 5.0, 2.0, 8.0, 3.0, 9.0];
        let a = ContinuousStats::compute(&values, &[0, 0, 1, 1, 2, 2], 3);
        let b = ContinuousStats::compute(&values, &[2, 2, 0, 0, 1, 1], 3);
        assert_relative_eq!(a.means_difference(), b.means_difference(), epsilon = 1e-12);
    }
}
