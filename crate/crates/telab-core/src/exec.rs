//! Deterministic chunked execution.
//!
//! Every data-parallel loop in this crate is expressed as a map over fixed
//! index chunks followed by a sequential fold of the per-chunk results in
//! chunk order. The chunk layout depends only on the problem size, never on
//! the thread count, so a run produces bit-identical numbers whether it is
//! executed sequentially or on a rayon pool of any width.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::ops::Range;

/// How to drive a chunked loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

/// The default mode: parallel when the `parallel` feature is enabled.
pub const fn default_mode() -> ExecMode {
    #[cfg(feature = "parallel")]
    {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    {
        ExecMode::Sequential
    }
}

/// Splits `0..n` into ranges of at most `chunk` indices.
pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    assert!(chunk > 0);
    let mut out = Vec::with_capacity(n.div_ceil(chunk));
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        out.push(start..end);
        start = end;
    }
    out
}

/// Applies `kernel` to every chunk and returns the per-chunk results in
/// chunk order.
pub fn map_chunks<T, F>(mode: ExecMode, n: usize, chunk: usize, kernel: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk);
    match mode {
        ExecMode::Sequential => ranges.into_iter().map(kernel).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => ranges.into_par_iter().map(kernel).collect(),
    }
}

/// Sums `f(i)` over `i ∈ 0..n` with a fixed chunk layout.
pub fn chunked_sum<F>(mode: ExecMode, n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    map_chunks(mode, n, chunk, |r| {
        let mut acc = 0.0;
        for i in r {
            acc += f(i);
        }
        acc
    })
    .into_iter()
    .sum()
}

/// Returns `max_i f(i)` together with the smallest index attaining it.
pub fn chunked_max<F>(mode: ExecMode, n: usize, chunk: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    let parts = map_chunks(mode, n, chunk, |r| {
        let mut best: Option<(usize, f64)> = None;
        for i in r {
            let v = f(i);
            let better = match best {
                None => true,
                Some((_, bv)) => v > bv,
            };
            if better {
                best = Some((i, v));
            }
        }
        best
    });
    let mut best: Option<(usize, f64)> = None;
    for p in parts.into_iter().flatten() {
        let better = match best {
            None => true,
            Some((_, bv)) => p.1 > bv,
        };
        if better {
            best = Some(p);
        }
    }
    best
}

/// Counts indices where `pred(i)` holds, chunk by chunk.
pub fn chunked_count<F>(mode: ExecMode, n: usize, chunk: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync,
{
    map_chunks(mode, n, chunk, |r| r.filter(|&i| pred(i)).count())
        .into_iter()
        .sum()
}
