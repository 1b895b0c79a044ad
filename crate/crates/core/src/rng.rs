//! Counter-based random streams.
//!
//! Every random quantity in an experiment is drawn from a stream identified by
//! the master seed plus a path of indices (sample index, walk index, step
//! index, ...). Streams never depend on scheduling, so serial and parallel runs
//! produce bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream label reserved for auxiliary draws that are shared by all samples
/// of an experiment (e.g. the initial point cloud of a diffusion run).
pub const SHARED_LABEL: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the stream for `path` under `master_seed`.
pub fn derive(master_seed: u64, path: &[u64]) -> Stream {
    let mut state = splitmix64(master_seed ^ 0x6A09_E667_F3BC_C908);
    for (depth, &index) in path.iter().enumerate() {
        state = splitmix64(state ^ splitmix64(index.wrapping_add(depth as u64 + 1)));
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        state = splitmix64(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Worker count from `RANDHAM_WORKERS`, if set to a positive integer.
pub fn worker_override() -> Option<usize> {
    std::env::var("RANDHAM_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run `f` on a pool sized by `RANDHAM_WORKERS` (or rayon's default).
pub fn with_workers<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match worker_override() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn equal_paths_give_equal_streams() {
        let mut a = derive(7, &[3, 4]);
        let mut b = derive(7, &[3, 4]);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_paths_diverge() {
        let a = derive(7, &[3, 4]).next_u64();
        assert_ne!(a, derive(7, &[4, 3]).next_u64());
        assert_ne!(a, derive(8, &[3, 4]).next_u64());
        assert_ne!(a, derive(7, &[3]).next_u64());
        assert_ne!(derive(7, &[]).next_u64(), derive(7, &[0]).next_u64());
    }
}
