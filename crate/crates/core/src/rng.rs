use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every random draw in a run.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one random stream of a run.
///
/// The key is `mix64(seed)` and the ChaCha stream id is `stream`, so uplink,
/// downlink and target draws never share state and the streams of two seeds
/// are unrelated.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(stream);
    rng
}
