//! Data-parallel helpers for per-node work.
//!
//! Every helper returns results in index order, and callers reduce them
//! sequentially, so serial and parallel runs agree bitwise. Without the
//! `parallel` feature everything runs on the calling thread.

use serde::{Deserialize, Serialize};

/// Below this many items the parallel path is not worth the scheduling cost.
pub const PARALLEL_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

impl Execution {
    /// Reads `MAP_THREADS`: `0` means serial, any other value caps the
    /// global worker pool. Unset or unparsable leaves the default.
    pub fn from_env() -> Self {
        match std::env::var("MAP_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(0) => Execution::Serial,
            Some(n) => {
                init_pool(n);
                Execution::Parallel
            }
            None => Execution::Parallel,
        }
    }

    #[cfg(feature = "parallel")]
    fn use_parallel(self, len: usize) -> bool {
        self == Execution::Parallel && len >= PARALLEL_THRESHOLD
    }
}

#[cfg(feature = "parallel")]
fn init_pool(threads: usize) {
    // Fails only if the pool is already built, which is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_threads: usize) {}

/// Computes `f(i)` for `i in 0..len`, in order.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.use_parallel(len) {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Applies `f` to each element with its index.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.use_parallel(items.len()) {
        use rayon::prelude::*;
        items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t));
        return;
    }
    let _ = exec;
    items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_range(Execution::Serial, 5000, f);
        let b = map_range(Execution::Parallel, 5000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn for_each_mut_visits_every_index() {
        let mut v = vec![0usize; 1000];
        for_each_mut(Execution::Parallel, &mut v, |i, x| *x = 2 * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
