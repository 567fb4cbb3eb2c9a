//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool; the
//! pool size honours `KB_THREADS`. Without the feature, or with
//! [`Execution::Sequential`], the same closures run in a plain loop. Results are
//! always returned in index order, so output never depends on scheduling.

use std::sync::Once;

/// How a batch of independent evaluations is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Parallel when the `parallel` feature is compiled in, otherwise sequential.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Execution::Sequential
    }
}

static POOL_INIT: Once = Once::new();

/// Sizes the global pool from `KB_THREADS` (default: available parallelism).
/// Safe to call repeatedly; only the first call has an effect.
pub fn init_threads_from_env() {
    POOL_INIT.call_once(|| {
        #[cfg(feature = "parallel")]
        if let Some(n) = std::env::var("KB_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            // Fails only if a pool already exists, in which case we keep it.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}

/// Number of worker threads that [`Execution::Auto`] would use.
pub fn worker_count() -> usize {
    init_threads_from_env();
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        init_threads_from_env();
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        init_threads_from_env();
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
