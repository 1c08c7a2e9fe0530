//! Deterministic fan-out helpers.
//!
//! Sample sweeps (censuses, trap sampling, multi-seed solves) map an indexed
//! job list to results and merge in index order, so the output is identical
//! whether the `parallel` feature is on or off and whatever the thread
//! count. Randomness is derived per analysis name and job index from one
//! root seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Map each index to a result, in parallel when the feature is enabled.
/// Results always come back in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sequential reference path; the bench suite compares this against
/// [`map_indexed`].
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Configure the global worker pool size. Call once, before any parallel
/// work; later calls are ignored by the pool.
#[cfg(feature = "parallel")]
pub fn set_jobs(n: usize) {
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn set_jobs(_n: usize) {}

/// Mix a root seed with an analysis label: every analysis draws from its own
/// stream regardless of execution order.
pub fn sub_seed(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, then SplitMix64 with the root folded in.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix(root ^ h)
}

/// Per-job generator: one independent stream per (seed, index).
pub fn job_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(index as u64 + 1)))
}

fn splitmix(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let par = map_indexed(100, |i| {
            use rand::Rng;
            let mut rng = job_rng(42, i);
            rng.gen::<f64>() + i as f64
        });
        let seq = map_indexed_seq(100, |i| {
            use rand::Rng;
            let mut rng = job_rng(42, i);
            rng.gen::<f64>() + i as f64
        });
        assert_eq!(par, seq);
    }

    #[test]
    fn sub_seeds_differ_by_label() {
        let a = sub_seed(1, "lyapunov");
        let b = sub_seed(1, "census");
        assert_ne!(a, b);
        assert_eq!(a, sub_seed(1, "lyapunov"));
    }
}
