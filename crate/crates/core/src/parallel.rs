//! Particle decomposition: contiguous blocks of `ceil(N / threads)`
//! particles, one block per worker.

use rayon::prelude::*;
use rayon::ThreadPool;

pub struct Executor {
    threads: usize,
    pool: Option<ThreadPool>,
}

impl Executor {
    pub fn new(threads: usize) -> Self {
        let threads = threads.max(1);
        let pool = if threads > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .thread_name(|k| format!("nauticle-worker-{k}"))
                .build()
                .ok()
        } else {
            None
        };
        Executor { threads, pool }
    }

    pub fn sequential() -> Self {
        Executor::new(1)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Block length for `n` particles.
    pub fn block_len(&self, n: usize) -> usize {
        n.div_ceil(self.threads).max(1)
    }

    /// Fill `out[i] = f(i)`. The first error in index order wins.
    pub fn fill<T, E>(&self, out: &mut [T], f: impl Fn(usize) -> Result<T, E> + Sync) -> Result<(), E>
    where
        T: Send,
        E: Send,
    {
        let n = out.len();
        match &self.pool {
            Some(pool) if n > 1 => {
                let block = self.block_len(n);
                pool.install(|| {
                    let results: Vec<Result<(), E>> = out
                        .par_chunks_mut(block)
                        .enumerate()
                        .map(|(b, chunk)| {
                            for (k, slot) in chunk.iter_mut().enumerate() {
                                *slot = f(b * block + k)?;
                            }
                            Ok(())
                        })
                        .collect();
                    results.into_iter().collect()
                })
            }
            _ => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = f(i)?;
                }
                Ok(())
            }
        }
    }

    pub fn map<T, E>(&self, n: usize, f: impl Fn(usize) -> Result<T, E> + Sync) -> Result<Vec<T>, E>
    where
        T: Send + Default + Clone,
        E: Send,
    {
        let mut out = vec![T::default(); n];
        self.fill(&mut out, f)?;
        Ok(out)
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Executor({} threads)", self.threads)
    }
}
