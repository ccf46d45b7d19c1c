//! Seeded generators. Deployment and the per-round protocol randomness draw
//! from separate ChaCha streams of the same seed, so changing a protocol never
//! perturbs the node layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DEPLOYMENT_STREAM: u64 = 0;
const PROTOCOL_STREAM: u64 = 1;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn deployment_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(DEPLOYMENT_STREAM);
    rng
}

pub fn protocol_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(PROTOCOL_STREAM);
    rng
}
