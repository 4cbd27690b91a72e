use std::sync::OnceLock;

use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "VORTEX_CHORUS_THREADS";

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|t| *t > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
    })
}

/// Maps `f` over `0..count` on the worker pool; output is in index order.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    pool().install(|| (0..count).into_par_iter().map(f).collect())
}
