//! Replicate chains over a worker pool.
//!
//! Jobs are independent and results come back in job order whatever the
//! completion order. With the `parallel` feature (default) jobs run on a rayon
//! pool whose size is the number of cores, capped by `PDMP_THREADS`; without
//! it they run one after the other.

/// Worker count: available cores, capped by `PDMP_THREADS` when set.
pub fn worker_threads() -> usize {
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("PDMP_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => cap.min(cores).max(1),
        _ => cores,
    }
}

/// Runs `job(i)` for `i in 0..n` in order on the current thread.
pub fn run_sequential<T, F>(n: usize, job: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(job).collect()
}

/// Runs `job(i)` for `i in 0..n` on `threads` workers; output is in job order.
#[cfg(feature = "parallel")]
pub fn run_parallel<T, F>(n: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(&job).collect())
}

/// Runs the jobs on the default pool (or sequentially without `parallel`).
pub fn run_jobs<T, F>(n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let threads = worker_threads();
        if threads > 1 && n > 1 {
            return run_parallel(n, threads, job);
        }
    }
    run_sequential(n, job)
}
