//! Deterministic seeding and index-ordered parallel maps.
//!
//! Every stochastic task derives its generator from `(master seed, task
//! index)` alone, and results are collected in index order, so output never
//! depends on the worker count or the schedule.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Generator for task `index` under `master`: the master seed picks the key,
/// the index picks the stream.
pub fn task_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// A 64-bit seed derived from `(master, index)`, for handing to functions that
/// take a plain seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    task_rng(master, index).next_u64()
}

/// Evaluates `f(0..count)` on `threads` workers (0 = rayon default) and
/// returns the results in index order.
pub fn map_indexed<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == 1 || count <= 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::arg(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Like [`map_indexed`] for fallible tasks; the error of the lowest failing
/// index is returned.
pub fn try_map_indexed<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(threads, count, f)?.into_iter().collect()
}

/// Sample mean and standard error of the mean. With fewer than two values the
/// standard error is zero.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|v| *v == values[0]) {
        // avoids a rounding-noise standard error for constant samples
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_of_schedule() {
        let draw = |i: usize| task_rng(7, i as u64).gen::<u64>();
        let serial = map_indexed(1, 64, draw).unwrap();
        let parallel = map_indexed(4, 64, draw).unwrap();
        assert_eq!(serial, parallel);
        assert_ne!(serial[0], serial[1]);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, se) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lowest_error_wins() {
        let r: Result<Vec<usize>> = try_map_indexed(3, 10, |i| {
            if i >= 4 {
                Err(Error::arg(format!("bad {i}")))
            } else {
                Ok(i)
            }
        });
        assert_eq!(r.unwrap_err().to_string(), "invalid argument: bad 4");
    }
}
