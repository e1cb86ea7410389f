//! Scoring, ranking, and report rendering for mined contrast sets.
//!
//! Categorical findings are scored with Cohen's h, continuous findings with
//! Cohen's d, making the two comparable in one ranked list per group. The
//! legacy percent-difference score is reported alongside for categorical
//! findings. Confidence intervals are Bonferroni-adjusted across the
//! findings emitted per group.

use crate::ccsm::ContinuousStats;
use crate::dataset::{ColumnData, Dataset};
use crate::stats::{
    cohens_d, cohens_h, effect_size_interval, wilson_interval, welch_interval, EffectKind,
    GroupSample, Interval,
};
use crate::stucco::{ContrastSet, SupportTable};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedBasis {
    /// Expected support from the pooled complement (all other groups).
    Complement,
    /// Expected support from the whole population including the group.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Magnitude {
    Negligible,
    VerySmall,
    Small,
    Medium,
    Large,
    VeryLarge,
    Huge,
}

impl Magnitude {
    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::VerySmall => "very small",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
            Magnitude::VeryLarge => "very large",
            Magnitude::Huge => "huge",
        }
    }
}

/// Largest threshold <= |score| determines the label (thresholds closed
/// below); below 0.01 the label is "negligible".
pub fn magnitude_label(score: f64) -> Magnitude {
    let s = score.abs();
    if s >= 2.0 {
        Magnitude::Huge
    } else if s >= 1.2 {
        Magnitude::VeryLarge
    } else if s >= 0.8 {
        Magnitude::Large
    } else if s >= 0.5 {
        Magnitude::Medium
    } else if s >= 0.2 {
        Magnitude::Small
    } else if s >= 0.01 {
        Magnitude::VerySmall
    } else {
        Magnitude::Negligible
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastTerm {
    pub column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

#[derive(Debug, Clone)]
enum CiBasis {
    Categorical {
        count_in: u64,
        n_in: u64,
        count_out: u64,
        n_out: u64,
    },
    Continuous {
        group: GroupSample,
        rest: GroupSample,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoredFinding {
    pub group: String,
    pub contrast: Vec<ContrastTerm>,
    pub kind: Kind,
    pub observed: f64,
    pub expected: f64,
    pub score: f64,
    pub score_ci: [f64; 2],
    pub raw_diff: f64,
    pub raw_diff_ci: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent_diff: Option<f64>,
    pub magnitude: String,
    pub p_value: f64,
    pub flags: Vec<String>,
    #[serde(skip)]
    ci_basis: Option<CiBasis>,
}

fn categorical_cis(
    count_in: u64,
    n_in: u64,
    count_out: u64,
    n_out: u64,
    score: f64,
    level: f64,
) -> ([f64; 2], [f64; 2]) {
    let score_ci = effect_size_interval(EffectKind::H, score, n_in.max(2), n_out.max(2), level);
    let w_in = wilson_interval(count_in, n_in, level);
    let w_out = wilson_interval(count_out, n_out, level);
    (
        [score_ci.lo, score_ci.hi],
        [w_in.lo - w_out.hi, w_in.hi - w_out.lo],
    )
}

/// Score one categorical contrast set for one group against its expected
/// support. Returns None if the group or its complement is empty.
#[allow(clippy::too_many_arguments)]
pub fn score_categorical(
    d: &Dataset,
    x: &ContrastSet,
    group: usize,
    supports: &SupportTable,
    basis: ExpectedBasis,
    level: f64,
    p_value: f64,
    low_count: bool,
) -> Option<ScoredFinding> {
    let n_in = supports.group_sizes[group];
    let n_total: u64 = supports.group_sizes.iter().sum();
    let count_in = supports.counts[group];
    let total = supports.total();
    let (count_out, n_out) = match basis {
        ExpectedBasis::Complement => (total - count_in, n_total - n_in),
        ExpectedBasis::Population => (total, n_total),
    };
    if n_in == 0 || n_out == 0 {
        return None;
    }
    let observed = count_in as f64 / n_in as f64;
    let expected = count_out as f64 / n_out as f64;
    let score = cohens_h(observed, expected);
    let mut flags = Vec::new();
    if low_count {
        flags.push("low-count".to_string());
    }
    let percent_diff = if expected > 0.0 {
        Some((observed - expected) / expected)
    } else {
        flags.push("infinite-percent".to_string());
        None
    };
    let (score_ci, raw_diff_ci) = categorical_cis(count_in, n_in, count_out, n_out, score, level);
    Some(ScoredFinding {
        group: d.group_names[group].clone(),
        contrast: x
            .predicates
            .iter()
            .map(|&(c, v)| {
                let col = &d.columns[c];
                let value = match &col.data {
                    ColumnData::Categorical { dict, .. } => dict[v as usize].clone(),
                    ColumnData::Continuous { .. } => v.to_string(),
                };
                ContrastTerm {
                    column: col.name.clone(),
                    value: Some(value),
                }
            })
            .collect(),
        kind: Kind::Categorical,
        observed,
        expected,
        score,
        score_ci,
        raw_diff: observed - expected,
        raw_diff_ci,
        percent_diff,
        magnitude: magnitude_label(score).as_str().to_string(),
        p_value,
        flags,
        ci_basis: Some(CiBasis::Categorical {
            count_in,
            n_in,
            count_out,
            n_out,
        }),
    })
}

/// Score one continuous feature for one group against the pooled complement.
/// Returns None when either side has fewer than 2 observations.
pub fn score_continuous(
    group_names: &[String],
    feature_name: &str,
    group: usize,
    stats: &ContinuousStats,
    level: f64,
    p_value: f64,
) -> Option<ScoredFinding> {
    let (g, rest) = stats.one_vs_rest(group);
    if g.n < 2 || rest.n < 2 {
        return None;
    }
    let score = cohens_d(&g, &rest);
    let raw = welch_interval(&g, &rest, level);
    let score_iv = effect_size_interval(EffectKind::D, score, g.n, rest.n, level);
    Some(ScoredFinding {
        group: group_names[group].clone(),
        contrast: vec![ContrastTerm {
            column: feature_name.to_string(),
            value: None,
        }],
        kind: Kind::Continuous,
        observed: g.mean,
        expected: rest.mean,
        score,
        score_ci: [score_iv.lo, score_iv.hi],
        raw_diff: g.mean - rest.mean,
        raw_diff_ci: [raw.lo, raw.hi],
        percent_diff: None,
        magnitude: magnitude_label(score).as_str().to_string(),
        p_value,
        flags: Vec::new(),
        ci_basis: Some(CiBasis::Continuous { group: g, rest }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankConfig {
    /// Nominal confidence level for intervals.
    pub level: f64,
    /// Findings kept per group.
    pub top_k: usize,
    /// Rank by |score| and keep negative contrast sets too.
    pub absolute: bool,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            level: 0.95,
            top_k: 20,
            absolute: false,
        }
    }
}

/// Per group: sort by anomaly score descending (positive scores only by
/// default), truncate to top_k, and re-derive confidence intervals at the
/// Bonferroni-corrected level for the emitted count.
pub fn rank_findings(findings: Vec<ScoredFinding>, cfg: &RankConfig) -> Vec<ScoredFinding> {
    assert!(cfg.top_k >= 1);
    let mut group_order: Vec<String> = Vec::new();
    for f in &findings {
        if !group_order.contains(&f.group) {
            group_order.push(f.group.clone());
        }
    }
    let mut out = Vec::new();
    for group in &group_order {
        let mut fs: Vec<ScoredFinding> = findings
            .iter()
            .filter(|f| &f.group == group)
            .filter(|f| cfg.absolute || f.score > 0.0)
            .cloned()
            .collect();
        if cfg.absolute {
            fs.sort_by(|a, b| b.score.abs().total_cmp(&a.score.abs()));
        } else {
            fs.sort_by(|a, b| b.score.total_cmp(&a.score));
        }
        fs.truncate(cfg.top_k);
        let m = fs.len();
        if m == 0 {
            continue;
        }
        let corrected = 1.0 - crate::stats::bonferroni(1.0 - cfg.level, m);
        for f in &mut fs {
            recompute_cis(f, corrected);
        }
        out.extend(fs);
    }
    out
}

fn recompute_cis(f: &mut ScoredFinding, level: f64) {
    match &f.ci_basis {
        Some(CiBasis::Categorical {
            count_in,
            n_in,
            count_out,
            n_out,
        }) => {
            let (score_ci, raw_ci) =
                categorical_cis(*count_in, *n_in, *count_out, *n_out, f.score, level);
            f.score_ci = score_ci;
            f.raw_diff_ci = raw_ci;
        }
        Some(CiBasis::Continuous { group, rest }) => {
            if f.score.is_finite() {
                let iv = effect_size_interval(EffectKind::D, f.score, group.n, rest.n, level);
                f.score_ci = [iv.lo, iv.hi];
            }
            let raw: Interval = welch_interval(group, rest, level);
            f.raw_diff_ci = [raw.lo, raw.hi];
        }
        None => {}
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub timestamp: u64,
    pub config: serde_json::Value,
    pub dataset_fingerprint: String,
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub run: &'a RunInfo,
    pub findings: &'a [ScoredFinding],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

pub fn render_report(
    findings: &[ScoredFinding],
    format: ReportFormat,
    run: &RunInfo,
) -> crate::Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(&Report { run, findings })? + "\n"),
        ReportFormat::Markdown => Ok(render_markdown(findings, run)),
    }
}

fn contrast_string(terms: &[ContrastTerm]) -> String {
    let parts: Vec<String> = terms
        .iter()
        .map(|t| match &t.value {
            Some(v) => format!("{}: {}", t.column, v),
            None => t.column.clone(),
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn render_markdown(findings: &[ScoredFinding], run: &RunInfo) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# Contrast mining report\n\nDataset fingerprint: `{}`\n\n",
        run.dataset_fingerprint
    ));
    out.push_str(
        "| Group | Feature | Observed | Expected | Score | CI | Magnitude | Percent Deviation |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for f in findings {
        let percent = match (f.percent_diff, f.flags.iter().any(|x| x == "infinite-percent")) {
            (Some(p), _) => format!("{:.0}%", p * 100.0),
            (None, true) => "∞".to_string(),
            (None, false) => "-".to_string(),
        };
        out.push_str(&format!(
            "| {} | {} | {:.4} | {:.4} | {:.3} | ({:.3}, {:.3}) | {} | {} |\n",
            f.group,
            contrast_string(&f.contrast),
            f.observed,
            f.expected,
            f.score,
            f.score_ci[0],
            f.score_ci[1],
            f.magnitude,
            percent
        ));
    }
    if findings.is_empty() {
        out.push_str("\nNo findings.\n");
    }
    out
}
