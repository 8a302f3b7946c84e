//! Execution strategy for the data-parallel kernels.
//!
//! Reductions are split into fixed-size chunks whose partial sums are
//! combined in index order, so the sequential and parallel paths produce
//! bit-identical results.

/// Number of items per reduction chunk.
pub const CHUNK: usize = 1024;

/// How the data-parallel kernels are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(i)` for `i in 0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Sums `f(i)` over `range` with a fixed chunked reduction order.
    pub fn sum<F>(self, range: std::ops::Range<usize>, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let start = range.start;
        let len = range.end.saturating_sub(start);
        let chunks = len.div_ceil(CHUNK);
        let partial = |c: usize| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + len);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        };
        let parts = if chunks > 1 {
            self.map(chunks, partial)
        } else {
            (0..chunks).map(partial).collect()
        };
        parts.iter().sum()
    }
}

/// Configures the global worker pool. Has no effect without the `parallel` feature.
pub fn set_threads(n: usize) -> crate::Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_sums_are_identical() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = Exec::Sequential.sum(3..100_000, f);
        let b = Exec::Parallel.sum(3..100_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_preserves_order() {
        let v = Exec::Parallel.map(5000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
