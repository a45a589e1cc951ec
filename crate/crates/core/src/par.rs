//! Indexed map used for the per-replicate work. Results always come back in
//! index order, so downstream reductions see the same sequence whether the
//! map ran on a thread pool or on the calling thread.

/// How independent per-replicate work is scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "parallel", derive(Default))]
pub enum Execution {
    Sequential,
    /// Rayon's global (or currently installed) pool.
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[cfg(not(feature = "parallel"))]
impl Default for Execution {
    fn default() -> Self {
        Execution::Sequential
    }
}

pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

/// Runs `f` with at most `threads` workers (0 means the library default).
/// Without the `parallel` feature this simply calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(f);
            }
        }
    }
    let _ = threads;
    f()
}
