//! Deterministic fan-out over realization indices.
//!
//! Results come back indexed by realization, so every reduction downstream
//! runs in a fixed order however many workers produced them.

/// `None` uses every available core.
pub fn run_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..n as u64).into_par_iter().map(&f).collect::<Vec<T>>();
        match workers {
            Some(1) => (0..n as u64).map(&f).collect(),
            Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                Ok(pool) => pool.install(run),
                Err(e) => {
                    log::warn!("could not build a {w}-thread pool ({e}); using the global pool");
                    run()
                }
            },
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n as u64).map(&f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_worker_count() {
        let f = |i: u64| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        let one = run_indexed(1000, Some(1), f);
        assert_eq!(one, run_indexed(1000, Some(3), f));
        assert_eq!(one, run_indexed(1000, None, f));
    }
}
