use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded ChaCha generator on an explicit stream, so that independent
/// consumers of one user-facing seed never share random numbers.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const DIRICHLET_SAMPLE: u64 = 1;
    pub const ORACLE_P: u64 = 2;
    pub const ORACLE_Q: u64 = 3;
    pub const JS_P: u64 = 4;
    pub const JS_Q: u64 = 5;
    pub const INIT: u64 = 10;
    pub const SYNTH_CENTERS: u64 = 20;
    pub const SYNTH_NOISE: u64 = 21;
    pub const INJECT_NOISE: u64 = 22;
    pub const SPLIT: u64 = 23;
    pub const SHUFFLE: u64 = 30;
}
