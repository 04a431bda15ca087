//! Data-parallel helpers. Without the `parallel` feature everything runs on
//! the calling thread; results are identical either way.

/// How independent work items are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Whether the crate was built with the `parallel` feature.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// `(0..n).map(f)` in index order, possibly evaluated in parallel.
pub fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `f` with at most `threads` workers; `None` keeps the global default.
pub fn with_thread_count<R, F>(threads: Option<usize>, f: F) -> Result<R, String>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err("thread count must be at least 1".into()),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| e.to_string()),
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(f()),
    }
}
