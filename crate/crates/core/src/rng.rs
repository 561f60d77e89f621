use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible stream for `(seed, domain, index)`.
///
/// Streams never depend on the order in which other streams are consumed, so
/// per-respondent work can be generated in parallel.
pub(crate) fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mixed = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}

pub(crate) mod domain {
    pub const BANK: u64 = 1;
    pub const ASSIGN: u64 = 2;
    pub const RESPONDENT: u64 = 3;
    pub const PIVOT: u64 = 4;
}
