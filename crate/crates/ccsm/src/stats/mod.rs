//! Statistical kernel shared by both miners and the ranker: hypothesis
//! tests, effect sizes, confidence intervals, and multiple-testing
//! correction. Everything computes from streaming sufficient statistics so
//! the miners never materialize per-group value vectors per candidate.

pub mod special;

use serde::Serialize;

/// 2 x k contingency table: contrast-present / contrast-absent counts per group.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub present: Vec<u64>,
    pub absent: Vec<u64>,
}

impl ContingencyTable {
    pub fn from_counts(present: Vec<u64>, group_sizes: &[u64]) -> Self {
        let absent = present
            .iter()
            .zip(group_sizes)
            .map(|(&p, &n)| n - p)
            .collect();
        ContingencyTable { present, absent }
    }

    pub fn total(&self) -> u64 {
        self.present.iter().sum::<u64>() + self.absent.iter().sum::<u64>()
    }
}

/// Streaming sufficient statistics for one group: count, mean, and sum of
/// squared deviations (Welford / Chan merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupSample {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl GroupSample {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &GroupSample) -> GroupSample {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        GroupSample { n, mean, m2 }
    }

    pub fn from_values(values: &[f64]) -> GroupSample {
        let mut s = GroupSample::default();
        for &v in values {
            s.push(v);
        }
        s
    }

    /// Sample variance; NaN for n < 2.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// (dof,) for chi-squared, (dof_between, dof_within) for F.
    pub dof: (f64, f64),
    /// Set when SSW = 0 with SSB > 0 (p forced to 0).
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Pearson chi-squared test of independence on a 2 x k table. Returns None
/// ("untestable") when any row or column total is zero.
pub fn chi_squared_test(t: &ContingencyTable) -> Option<TestResult> {
    let k = t.present.len();
    let row_present: u64 = t.present.iter().sum();
    let row_absent: u64 = t.absent.iter().sum();
    if row_present == 0 || row_absent == 0 {
        return None;
    }
    let n = (row_present + row_absent) as f64;
    let mut stat = 0.0;
    for g in 0..k {
        let col = t.present[g] + t.absent[g];
        if col == 0 {
            return None;
        }
        let col = col as f64;
        let e1 = row_present as f64 * col / n;
        let e2 = row_absent as f64 * col / n;
        let d1 = t.present[g] as f64 - e1;
        let d2 = t.absent[g] as f64 - e2;
        stat += d1 * d1 / e1 + d2 * d2 / e2;
    }
    let dof = (k - 1) as f64;
    Some(TestResult {
        statistic: stat,
        p_value: special::chi_squared_sf(stat, dof),
        dof: (dof, 0.0),
        degenerate: false,
    })
}

/// Smallest expected cell count of the table (chi-squared validity check).
pub fn min_expected_cell(t: &ContingencyTable) -> f64 {
    let row_present: u64 = t.present.iter().sum();
    let row_absent: u64 = t.absent.iter().sum();
    let n = (row_present + row_absent) as f64;
    let mut min = f64::INFINITY;
    for g in 0..t.present.len() {
        let col = (t.present[g] + t.absent[g]) as f64;
        min = min
            .min(row_present as f64 * col / n)
            .min(row_absent as f64 * col / n);
    }
    min
}

/// One-way ANOVA F-test from per-group sufficient statistics. None when the
/// data carries no variance at all (untestable).
pub fn anova_f_test(groups: &[GroupSample]) -> Option<TestResult> {
    let used: Vec<&GroupSample> = groups.iter().filter(|g| g.n >= 2).collect();
    let k = used.len();
    if k < 2 {
        return None;
    }
    let n: u64 = used.iter().map(|g| g.n).sum();
    if n <= k as u64 {
        return None;
    }
    let grand = used
        .iter()
        .fold(GroupSample::default(), |acc, g| acc.merge(g));
    let ssb: f64 = used
        .iter()
        .map(|g| g.n as f64 * (g.mean - grand.mean).powi(2))
        .sum();
    let ssw: f64 = used.iter().map(|g| g.m2).sum();
    let dof = ((k - 1) as f64, (n - k as u64) as f64);
    if ssw == 0.0 {
        if ssb == 0.0 {
            return None;
        }
        return Some(TestResult {
            statistic: f64::INFINITY,
            p_value: 0.0,
            dof,
            degenerate: true,
        });
    }
    let f = (ssb / dof.0) / (ssw / dof.1);
    Some(TestResult {
        statistic: f,
        p_value: special::f_sf(f, dof.0, dof.1),
        dof,
        degenerate: false,
    })
}

/// Cohen's d with pooled standard deviation. Returns signed infinity when the
/// pooled deviation is zero but the means differ ("infinite effect"); 0 when
/// the samples are identical constants.
pub fn cohens_d(a: &GroupSample, b: &GroupSample) -> f64 {
    debug_assert!(a.n + b.n >= 3);
    let pooled_var = (a.m2 + b.m2) / (a.n + b.n - 2) as f64;
    let diff = a.mean - b.mean;
    if pooled_var <= 0.0 {
        return if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
    }
    diff / pooled_var.sqrt()
}

/// Cohen's h: difference of arcsine-root-transformed proportions.
pub fn cohens_h(p1: f64, p2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
    2.0 * (p1.sqrt().asin() - p2.sqrt().asin())
}

/// Welch's t-interval for the difference of means.
pub fn welch_interval(a: &GroupSample, b: &GroupSample, level: f64) -> Interval {
    debug_assert!(a.n >= 2 && b.n >= 2);
    let diff = a.mean - b.mean;
    let va = a.variance() / a.n as f64;
    let vb = b.variance() / b.n as f64;
    if va + vb <= 0.0 {
        return Interval { lo: diff, hi: diff, level };
    }
    let se = (va + vb).sqrt();
    let dof = (va + vb).powi(2)
        / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    let t = special::t_quantile(0.5 + level / 2.0, dof);
    Interval {
        lo: diff - t * se,
        hi: diff + t * se,
        level,
    }
}

/// Wilson score interval without continuity correction.
pub fn wilson_interval(successes: u64, n: u64, level: f64) -> Interval {
    debug_assert!(n >= 1 && successes <= n);
    let z = special::std_normal_quantile(0.5 + level / 2.0);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // Zero or full counts hit the boundary exactly; avoid rounding residue.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    Interval { lo, hi, level }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    D,
    H,
}

/// Normal-approximation confidence interval for Cohen's d or h.
pub fn effect_size_interval(kind: EffectKind, point: f64, n1: u64, n2: u64, level: f64) -> Interval {
    debug_assert!(n1 >= 2 && n2 >= 2);
    let (n1, n2) = (n1 as f64, n2 as f64);
    let se = match kind {
        EffectKind::D => ((n1 + n2) / (n1 * n2) + point * point / (2.0 * (n1 + n2))).sqrt(),
        EffectKind::H => (1.0 / n1 + 1.0 / n2).sqrt(),
    };
    let z = special::std_normal_quantile(0.5 + level / 2.0);
    Interval {
        lo: point - z * se,
        hi: point + z * se,
        level,
    }
}

/// Plain Bonferroni correction: alpha / m.
pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    alpha / m as f64
}

/// Tree-level corrected significance for level `level` (1-based) with
/// `candidates` hypotheses tested at that level: min(alpha/2^l, alpha/|C_l|).
pub fn tree_level_alpha(alpha: f64, level: usize, candidates: usize) -> f64 {
    let by_depth = alpha / 2f64.powi(level as i32);
    if candidates == 0 {
        return by_depth;
    }
    by_depth.min(alpha / candidates as f64)
}
