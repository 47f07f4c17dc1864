//! Reproducible randomness: ChaCha8 keyed by the 64-bit seed, one stream
//! per instance index, so instance `k` does not depend on how many other
//! instances were generated or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type InstanceRng = ChaCha8Rng;

pub fn instance_rng(seed: u64, instance: u64) -> InstanceRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance);
    rng
}
