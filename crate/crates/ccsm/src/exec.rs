//! Candidate-level execution: data-parallel on rayon when the `parallel`
//! feature is enabled, sequential otherwise. Order of results always matches
//! input order, so mining output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<I, R, F>(items: &[I], f: F) -> Vec<R>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<I, R, F>(items: &[I], f: F) -> Vec<R>
where
    F: Fn(&I) -> R,
{
    map_seq(items, f)
}

/// Always-sequential variant; used by the benches to compare against rayon.
pub fn map_seq<I, R, F>(items: &[I], f: F) -> Vec<R>
where
    F: Fn(&I) -> R,
{
    items.iter().map(f).collect()
}
