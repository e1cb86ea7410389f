//! Categorical contrast set mining: level-wise tree search over conjunctions
//! of attribute-value pairs, testing each candidate for significance
//! (chi-squared) and largeness (max pairwise support difference) under a
//! tree-level Bonferroni correction.

use crate::dataset::{ColumnData, Dataset, MISSING_CODE};
use crate::stats::{
    chi_squared_test, min_expected_cell, tree_level_alpha, ContingencyTable,
};
use crate::{exec, Error, Result};
use std::time::{Duration, Instant};

/// Conjunction of (column index, value code) predicates; column indices are
/// strictly increasing (canonical ordering) with at most one predicate per
/// column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContrastSet {
    pub predicates: Vec<(usize, u32)>,
}

impl ContrastSet {
    pub fn depth(&self) -> usize {
        self.predicates.len()
    }

    /// Human-readable form using the dataset's column names and dictionaries.
    pub fn describe(&self, d: &Dataset) -> String {
        let parts: Vec<String> = self
            .predicates
            .iter()
            .map(|&(c, v)| {
                let col = &d.columns[c];
                let value = match &col.data {
                    ColumnData::Categorical { dict, .. } => dict[v as usize].clone(),
                    ColumnData::Continuous { .. } => v.to_string(),
                };
                format!("{}={}", col.name, value)
            })
            .collect();
        parts.join(", ")
    }
}

/// Per-group raw counts plus group sizes for one contrast set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportTable {
    pub counts: Vec<u64>,
    pub group_sizes: Vec<u64>,
}

impl SupportTable {
    pub fn support(&self, g: usize) -> f64 {
        if self.group_sizes[g] == 0 {
            0.0
        } else {
            self.counts[g] as f64 / self.group_sizes[g] as f64
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// max_ij |S(X, G_i) - S(X, G_j)|, over non-empty groups.
    pub fn max_support_difference(&self) -> f64 {
        let supports: Vec<f64> = (0..self.counts.len())
            .filter(|&g| self.group_sizes[g] > 0)
            .map(|g| self.support(g))
            .collect();
        let max = supports.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = supports.iter().copied().fold(f64::INFINITY, f64::min);
        if supports.len() < 2 {
            0.0
        } else {
            max - min
        }
    }

    pub fn max_support(&self) -> f64 {
        (0..self.counts.len())
            .map(|g| self.support(g))
            .fold(0.0, f64::max)
    }
}

/// Which tested nodes may generate children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpandPolicy {
    /// Only nodes passing both the significance and largeness tests expand.
    Survivors,
    /// Every node not removed by a pruning rule expands. Makes depth-2
    /// output match exhaustive enumeration regardless of parent outcomes.
    Exhaustive,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MinerConfig {
    /// Minimum support difference delta in [0, 1].
    pub delta: f64,
    /// Base significance level; corrected per tree level.
    pub alpha: f64,
    pub max_depth: usize,
    /// Nodes with total raw count below this are pruned and never expand.
    pub min_count: u64,
    /// Prune a child whose per-group counts equal its parent's (no new information).
    pub prune_no_refinement: bool,
    /// Prune expansion when no descendant can reach the delta threshold.
    pub prune_delta_bound: bool,
    pub expand: ExpandPolicy,
    #[serde(skip)]
    pub timeout: Option<Duration>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            delta: 0.05,
            alpha: 0.05,
            max_depth: 3,
            min_count: 5,
            prune_no_refinement: true,
            prune_delta_bound: true,
            expand: ExpandPolicy::Survivors,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NodeTest {
    pub significant: bool,
    pub large: bool,
    pub p_value: f64,
    /// Some expected cell count < 5; tested anyway but flagged.
    pub low_count: bool,
}

#[derive(Debug, Clone)]
pub struct MinedContrast {
    pub set: ContrastSet,
    pub table: SupportTable,
    pub p_value: f64,
    pub low_count: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MiningStats {
    pub candidates_tested: usize,
    pub peak_level_width: usize,
    pub levels: usize,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct CategoricalMining {
    pub findings: Vec<MinedContrast>,
    pub stats: MiningStats,
}

/// Observed (non-missing) value codes per column; empty for continuous columns.
pub fn observed_codes(d: &Dataset) -> Vec<Vec<u32>> {
    d.columns
        .iter()
        .map(|c| match &c.data {
            ColumnData::Categorical { codes, dict } => {
                let mut seen = vec![false; dict.len()];
                for &code in codes {
                    if code != MISSING_CODE {
                        seen[code as usize] = true;
                    }
                }
                (0..dict.len() as u32)
                    .filter(|&v| seen[v as usize])
                    .collect()
            }
            ColumnData::Continuous { .. } => Vec::new(),
        })
        .collect()
}

/// One depth-1 candidate per (categorical column, observed value), in
/// (column index, value code) order. The missing sentinel is excluded.
pub fn enumerate_initial(d: &Dataset) -> Result<Vec<ContrastSet>> {
    if d.n_groups() < 2 {
        return Err(Error::TooFewGroups);
    }
    if d.categorical_column_indices().is_empty() {
        return Err(Error::NoCategoricalColumns);
    }
    let observed = observed_codes(d);
    let mut out = Vec::new();
    for (c, values) in observed.iter().enumerate() {
        for &v in values {
            out.push(ContrastSet {
                predicates: vec![(c, v)],
            });
        }
    }
    Ok(out)
}

/// Exact per-group counts of rows satisfying every predicate.
pub fn count_support(d: &Dataset, x: &ContrastSet) -> SupportTable {
    count_support_with(d, x, &d.group_sizes())
}

fn count_support_with(d: &Dataset, x: &ContrastSet, group_sizes: &[u64]) -> SupportTable {
    let preds: Vec<(&[u32], u32)> = x
        .predicates
        .iter()
        .map(|&(c, v)| match &d.columns[c].data {
            ColumnData::Categorical { codes, .. } => (codes.as_slice(), v),
            ColumnData::Continuous { .. } => panic!("continuous column in contrast set"),
        })
        .collect();
    let mut counts = vec![0u64; group_sizes.len()];
    'rows: for r in 0..d.n_rows() {
        for &(codes, v) in &preds {
            if codes[r] != v {
                continue 'rows;
            }
        }
        counts[d.group_of[r] as usize] += 1;
    }
    SupportTable {
        counts,
        group_sizes: group_sizes.to_vec(),
    }
}

/// Apply the significance (chi-squared at the corrected level) and
/// largeness (max pairwise support difference >= delta) tests.
/// Untestable tables fail both.
pub fn test_node(s: &SupportTable, cfg: &MinerConfig, alpha_level: f64) -> NodeTest {
    let table = ContingencyTable::from_counts(s.counts.clone(), &s.group_sizes);
    match chi_squared_test(&table) {
        None => NodeTest {
            significant: false,
            large: false,
            p_value: 1.0,
            low_count: false,
        },
        Some(r) => NodeTest {
            significant: r.p_value < alpha_level,
            large: s.max_support_difference() >= cfg.delta,
            p_value: r.p_value,
            low_count: min_expected_cell(&table) < 5.0,
        },
    }
}

/// Extend each survivor with one predicate on a strictly higher-indexed
/// column; duplicates are impossible by construction.
pub fn gen_children(survivors: &[ContrastSet], d: &Dataset) -> Vec<ContrastSet> {
    gen_children_with(survivors, &observed_codes(d))
}

fn gen_children_with(survivors: &[ContrastSet], observed: &[Vec<u32>]) -> Vec<ContrastSet> {
    let mut out = Vec::new();
    for parent in survivors {
        let last_col = parent.predicates.last().map(|&(c, _)| c).unwrap_or(0);
        for (c, values) in observed.iter().enumerate().skip(last_col + 1) {
            for &v in values {
                let mut predicates = parent.predicates.clone();
                predicates.push((c, v));
                out.push(ContrastSet { predicates });
            }
        }
    }
    out
}

/// Level-wise STUCCO loop: test all candidates at each depth under the
/// tree-level corrected alpha, emit passers, expand, repeat. Output is
/// canonically sorted and independent of row/evaluation order.
pub fn mine_categorical(d: &Dataset, cfg: &MinerConfig) -> Result<CategoricalMining> {
    let start = Instant::now();
    let initial = enumerate_initial(d)?;
    let observed = observed_codes(d);
    let group_sizes = d.group_sizes();

    // candidate paired with its parent's counts, for the no-refinement rule
    let mut candidates: Vec<(ContrastSet, Option<Vec<u64>>)> =
        initial.into_iter().map(|c| (c, None)).collect();
    let mut findings = Vec::new();
    let mut stats = MiningStats::default();
    let mut level = 1usize;

    while !candidates.is_empty() && level <= cfg.max_depth {
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

        let evaluated: Vec<(SupportTable, NodeTest)> = exec::map(&candidates, |(set, _)| {
            let table = count_support_with(d, set, &group_sizes);
            let test = test_node(&table, cfg, alpha_level);
            (table, test)
        });

        let mut expandable: Vec<(ContrastSet, Vec<u64>)> = Vec::new();
        for ((set, parent_counts), (table, test)) in candidates.into_iter().zip(evaluated) {
            if table.total() < cfg.min_count {
                continue;
            }
            if cfg.prune_no_refinement {
                if let Some(parent) = &parent_counts {
                    if *parent == table.counts {
                        continue;
                    }
                }
            }
            if test.significant && test.large {
                findings.push(MinedContrast {
                    set: set.clone(),
                    table: table.clone(),
                    p_value: test.p_value,
                    low_count: test.low_count,
                });
            }
            let expand = match cfg.expand {
                ExpandPolicy::Survivors => test.significant && test.large,
                ExpandPolicy::Exhaustive => true,
            };
            // no descendant can exceed the parent's per-group supports
            if expand && !(cfg.prune_delta_bound && table.max_support() < cfg.delta) {
                expandable.push((set, table.counts));
            }
        }

        candidates = expandable
            .iter()
            .flat_map(|(parent, counts)| {
                gen_children_with(std::slice::from_ref(parent), &observed)
                    .into_iter()
                    .map(move |child| (child, Some(counts.clone())))
            })
            .collect();
        level += 1;
    }

    findings.sort_by(|a, b| a.set.cmp(&b.set));
    Ok(CategoricalMining { findings, stats })
}
