//! Optional data parallelism. With the `parallel` feature the closure runs
//! on the rayon pool; without it the same closure runs sequentially. Both
//! paths return results in index order, so any fold over the output is
//! deterministic and bit-identical across the two builds.

#[cfg(feature = "parallel")]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..n).map(f).collect()
}
