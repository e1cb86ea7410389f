//! Navigation logs to continuous n-gram feature columns via TF-IDF.
//!
//! The vocabulary is built once over the entire corpus (all groups pooled).
//! Raw IDF can go negative for very common grams; it is clamped to 0 so a
//! high weight always means a rare gram.

use crate::exec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

pub const GRAM_SEPARATOR: &str = "->";

#[derive(Debug, Clone, Default)]
pub struct NavigationLog {
    pub events: Vec<String>,
}

pub type Gram = Vec<String>;

pub fn gram_name(gram: &[String]) -> String {
    gram.join(GRAM_SEPARATOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramEntry {
    pub index: usize,
    /// Number of logs containing the gram.
    pub df: usize,
    pub idf: f64,
}

#[derive(Debug, Clone)]
pub struct NGramVocabulary {
    pub n: usize,
    pub doc_count: usize,
    pub grams: BTreeMap<Gram, GramEntry>,
}

/// IDF(q) = max(0, ln((docCount - f(q) + 0.5) / (f(q) + 0.5))).
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let raw = ((doc_count as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
    raw.max(0.0)
}

/// All consecutive n-event windows of the log, with multiplicity.
pub fn extract_ngrams(log: &NavigationLog, n: usize) -> HashMap<Gram, u64> {
    assert!(n >= 1);
    let mut counts = HashMap::new();
    if log.events.len() < n {
        return counts;
    }
    for window in log.events.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    counts
}

/// Grams appearing in at least `min_df` distinct logs, with document
/// frequencies and clamped IDF over the whole corpus.
pub fn build_vocabulary(logs: &[NavigationLog], n: usize, min_df: usize) -> Result<NGramVocabulary> {
    assert!(min_df >= 1);
    if logs.is_empty() {
        return Err(Error::NoNavLogs);
    }
    let per_log: Vec<HashSet<Gram>> = exec::map(logs, |log| {
        extract_ngrams(log, n).into_keys().collect::<HashSet<_>>()
    });
    let mut df: BTreeMap<Gram, usize> = BTreeMap::new();
    for set in per_log {
        for gram in set {
            *df.entry(gram).or_insert(0) += 1;
        }
    }
    let doc_count = logs.len();
    let mut grams = BTreeMap::new();
    let mut index = 0;
    for (gram, f) in df {
        if f >= min_df {
            grams.insert(
                gram,
                GramEntry {
                    index,
                    df: f,
                    idf: idf(doc_count, f),
                },
            );
            index += 1;
        }
    }
    Ok(NGramVocabulary {
        n,
        doc_count,
        grams,
    })
}

/// Row-aligned continuous columns, one per vocabulary gram.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// `grams[j]` names column j; column j row i holds tf(q_j, log_i) * idf(q_j).
    pub grams: Vec<Gram>,
    pub columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

/// Cell (i, j) = count of gram j in log i times idf(j). Grams absent from
/// the vocabulary are ignored.
pub fn vectorize(logs: &[NavigationLog], vocab: &NGramVocabulary) -> Result<FeatureMatrix> {
    if vocab.grams.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let k = vocab.grams.len();
    let rows: Vec<Vec<(usize, f64)>> = exec::map(logs, |log| {
        extract_ngrams(log, vocab.n)
            .into_iter()
            .filter_map(|(gram, tf)| {
                vocab
                    .grams
                    .get(&gram)
                    .map(|e| (e.index, tf as f64 * e.idf))
            })
            .collect()
    });
    let mut columns = vec![vec![0.0; logs.len()]; k];
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            columns[j][i] = w;
        }
    }
    let mut grams = vec![Vec::new(); k];
    for (gram, entry) in &vocab.grams {
        grams[entry.index] = gram.clone();
    }
    let names = grams.iter().map(|g| gram_name(g)).collect();
    Ok(FeatureMatrix {
        names,
        grams,
        columns,
    })
}

/// Serialized vocabulary sidecar: one record per gram.
#[derive(Debug, Serialize, Deserialize)]
pub struct VocabRecord {
    pub gram: String,
    pub f: usize,
    pub idf: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VocabSidecar {
    pub n: usize,
    pub doc_count: usize,
    pub grams: Vec<VocabRecord>,
}

impl NGramVocabulary {
    pub fn to_sidecar(&self) -> VocabSidecar {
        let mut records: Vec<(usize, VocabRecord)> = self
            .grams
            .iter()
            .map(|(gram, e)| {
                (
                    e.index,
                    VocabRecord {
                        gram: gram_name(gram),
                        f: e.df,
                        idf: e.idf,
                    },
                )
            })
            .collect();
        records.sort_by_key(|(i, _)| *i);
        VocabSidecar {
            n: self.n,
            doc_count: self.doc_count,
            grams: records.into_iter().map(|(_, r)| r).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn log(events: &[&str]) -> NavigationLog {
        NavigationLog {
            events: events.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn gram(events: &[&str]) -> Gram {
        events.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bigram_multiset_example() {
        // Feed -> Photos appears twice; four distinct bi-grams total
        let l = log(&["Feed", "Photos", "Fundraiser", "Feed", "Photos", "Friends"]);
        let grams = extract_ngrams(&l, 2);
        assert_eq!(grams.len(), 4);
        assert_eq!(grams[&gram(&["Feed", "Photos"])], 2);
        assert_eq!(grams[&gram(&["Photos", "Fundraiser"])], 1);
        assert_eq!(grams[&gram(&["Fundraiser", "Feed"])], 1);
        assert_eq!(grams[&gram(&["Photos", "Friends"])], 1);
    }

    #[test]
    fn short_log_and_trigram() {
        assert!(extract_ngrams(&log(&["A"]), 2).is_empty());
        let grams = extract_ngrams(&log(&["A", "B", "C"]), 3);
        assert_eq!(grams.len(), 1);
        assert_eq!(grams[&gram(&["A", "B", "C"])], 1);
    }

    #[test]
    fn idf_formula_and_clamp() {
        assert_relative_eq!(idf(10, 2), (8.5f64 / 2.5).ln(), epsilon = 1e-12);
        assert_relative_eq!(idf(10, 2), 1.2238, epsilon = 1e-4);
        // raw ln(2.5/8.5) < 0 -> clamped
        assert_eq!(idf(10, 8), 0.0);
    }

    #[test]
    fn idf_non_increasing_in_df() {
        let dc = 100;
        for f in 1..dc {
            assert!(idf(dc, f) >= idf(dc, f + 1));
        }
        // rare grams get strictly higher weight than df = doc_count/2 grams
        assert!(idf(1000, 1) > idf(1000, 500));
    }

    #[test]
    fn vocabulary_df_and_min_df() {
        let logs = vec![
            log(&["A", "B", "C"]),
            log(&["A", "B"]),
            log(&["C", "D"]),
        ];
        let v = build_vocabulary(&logs, 2, 1).unwrap();
        assert_eq!(v.doc_count, 3);
        assert_eq!(v.grams[&gram(&["A", "B"])].df, 2);
        let v2 = build_vocabulary(&logs, 2, 2).unwrap();
        assert_eq!(v2.grams.len(), 1);
        // min_df above corpus size -> empty vocabulary, surfaced by vectorize
        let v3 = build_vocabulary(&logs, 2, 4).unwrap();
        assert!(matches!(
            vectorize(&logs, &v3),
            Err(crate::Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(build_vocabulary(&[], 2, 1).is_err());
    }

    #[test]
    fn vectorize_weights() {
        let logs = vec![
            log(&["Feed", "Photos", "Feed", "Photos"]),
            log(&["Video", "Feed"]),
            log(&["Feed", "Photos"]),
        ];
        let v = build_vocabulary(&logs, 2, 1).unwrap();
        let m = vectorize(&logs, &v).unwrap();
        let fp = v.grams[&gram(&["Feed", "Photos"])];
        // tf = 2 in the first log (matches the "2 * idf" shape)
        assert_relative_eq!(m.columns[fp.index][0], 2.0 * fp.idf, epsilon = 1e-12);
        // gram absent from a log -> 0
        assert_eq!(m.columns[fp.index][1], 0.0);
        // log containing no vocabulary grams -> all-zero row
        let logs2 = vec![log(&["A", "B"]), log(&["Z"])];
        let v2 = build_vocabulary(&logs2, 2, 1).unwrap();
        let m2 = vectorize(&logs2, &v2).unwrap();
        for col in &m2.columns {
            assert_eq!(col[1], 0.0);
        }
    }

    #[test]
    fn vectorize_invariant_to_log_order() {
        let logs = vec![
            log(&["A", "B", "C"]),
            log(&["B", "C", "A"]),
            log(&["A", "B"]),
        ];
        let rev: Vec<NavigationLog> = logs.iter().rev().cloned().collect();
        let v1 = build_vocabulary(&logs, 2, 1).unwrap();
        let v2 = build_vocabulary(&rev, 2, 1).unwrap();
        let m1 = vectorize(&logs, &v1).unwrap();
        let m2 = vectorize(&rev, &v2).unwrap();
        assert_eq!(m1.names, m2.names);
        for (c1, c2) in m1.columns.iter().zip(&m2.columns) {
            let mut s1 = c1.clone();
            let mut s2 = c2.clone();
            s1.sort_by(f64::total_cmp);
            s2.sort_by(f64::total_cmp);
            assert_eq!(s1, s2);
        }
    }
}
