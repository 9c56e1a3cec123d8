//! Deterministic block-parallel replication.
//!
//! Replications are cut into fixed-size blocks. Block `i` always draws from
//! ChaCha8 stream `i` of the generator keyed by the run seed, so results do
//! not depend on how rayon schedules the blocks or how many threads exist.
//! Block outputs are returned in block order for an order-fixed merge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 14;

/// Generator for one block: the seed picks the key, the block index the stream.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Runs `work(block_index, replications_in_block, rng)` over all blocks.
pub fn run_blocks<A, F>(total: u64, block_size: u64, seed: u64, work: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(u64, u64, &mut ChaCha8Rng) -> Result<A> + Sync,
{
    let block_size = block_size.max(1);
    let blocks = total.div_ceil(block_size);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * block_size;
            let len = block_size.min(total - start);
            let mut rng = block_rng(seed, b);
            work(b, len, &mut rng)
        })
        .collect()
}
