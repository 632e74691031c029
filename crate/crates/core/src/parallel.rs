//! Deterministic data-parallel Monte Carlo.
//!
//! Draw `j` always belongs to chunk `j / CHUNK`, and each chunk owns a ChaCha8 stream
//! derived from the seed and the chunk index. Results are returned in draw order, so the
//! output depends on the seed only, not on the number of workers or the scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Draws per independent random stream.
pub const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Parallel over chunks; `None` uses the global pool.
    Parallel(Option<usize>),
}

impl Execution {
    /// Parallel when the `parallel` feature is enabled, otherwise sequential.
    pub fn with_workers(workers: Option<usize>) -> Self {
        if cfg!(feature = "parallel") && workers != Some(1) {
            Execution::Parallel(workers)
        } else {
            Execution::Sequential
        }
    }
}

impl Default for Execution {
    fn default() -> Self {
        Self::with_workers(None)
    }
}

/// The random stream of chunk `c`.
pub fn chunk_rng(seed: u64, c: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(c as u64);
    rng
}

fn run_chunk<T, F>(seed: u64, samples: usize, c: usize, f: &F) -> Result<Vec<T>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T>,
{
    let mut rng = chunk_rng(seed, c);
    let hi = ((c + 1) * CHUNK).min(samples);
    (c * CHUNK..hi).map(|j| f(j, &mut rng)).collect()
}

/// Runs `f(j, rng)` for `j in 0..samples`, returning the results in order.
pub fn run<T, F>(exec: Execution, seed: u64, samples: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    match exec {
        Execution::Sequential => sequential(seed, samples, chunks, &f),
        Execution::Parallel(workers) => parallel(seed, samples, chunks, workers, &f),
    }
}

fn sequential<T, F>(seed: u64, samples: usize, chunks: usize, f: &F) -> Result<Vec<T>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T>,
{
    let mut out = Vec::with_capacity(samples);
    for c in 0..chunks {
        out.extend(run_chunk(seed, samples, c, f)?);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(seed: u64, samples: usize, chunks: usize, workers: Option<usize>, f: &F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    let go = || -> Result<Vec<T>> {
        let parts: Vec<Result<Vec<T>>> = (0..chunks).into_par_iter().map(|c| run_chunk(seed, samples, c, f)).collect();
        let mut out = Vec::with_capacity(samples);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    };
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?
            .install(go),
        None => go(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(seed: u64, samples: usize, chunks: usize, _workers: Option<usize>, f: &F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    sequential(seed, samples, chunks, f)
}
