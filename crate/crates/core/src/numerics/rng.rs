use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for task `index` of an ensemble seeded by `seed`.
///
/// Each index gets its own ChaCha stream, so results do not depend on how
/// tasks are scheduled across threads.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Map `f` over `0..n` with per-index generators and collect results in index order.
pub fn map_indexed<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| f(i, &mut task_rng(seed, i as u64)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n)
            .map(|i| f(i, &mut task_rng(seed, i as u64)))
            .collect()
    }
}
