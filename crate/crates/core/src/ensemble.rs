//! Replica fan-out.
//!
//! Results always come back in replica-index order, and every replica seeds
//! its own stream from its index, so the output is identical for any worker
//! count. With the `parallel` feature off everything runs on the calling
//! thread.

/// Worker configuration for an ensemble run. `workers == 0` means the
/// global rayon pool (or the calling thread without `parallel`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ensemble {
    pub workers: usize,
}

impl Ensemble {
    pub fn new(workers: usize) -> Self {
        Self { workers }
    }

    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    pub fn map<T, F>(&self, replicas: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self.workers == 1 {
                return map_sequential(replicas, f);
            }
            map_parallel(replicas, self.workers, f)
        }
        #[cfg(not(feature = "parallel"))]
        {
            map_sequential(replicas, f)
        }
    }
}

pub fn map_sequential<T, F>(replicas: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..replicas).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(replicas: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..replicas).into_par_iter().map(&f).collect();
    if workers == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
