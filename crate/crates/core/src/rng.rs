//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 256-bit
//! key is the tuple `(master seed, replica, time, role)`. Streams never share
//! state, so replicas can be simulated in any order or on any thread and
//! still reproduce bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a stream; distinct roles at the same `(seed, replica,
/// time)` give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Letters of the earliest word of a path.
    Root,
    /// The innovation drawn at a given time.
    Innovation,
    /// Free-form role for kernels that need their own streams.
    Custom(u32),
}

/// Which copy of a pair a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Copy {
    Single,
    First,
    Second,
}

impl Role {
    fn tag(self, copy: Copy) -> u64 {
        let base = match self {
            Role::Root => 1u64,
            Role::Innovation => 2,
            Role::Custom(x) => 0x1_0000_0000 | x as u64,
        };
        let copy = match copy {
            Copy::Single => 0u64,
            Copy::First => 1,
            Copy::Second => 2,
        };
        base | (copy << 40)
    }
}

/// Stream keyed by `(seed, replica, time, role)`.
pub fn stream(seed: u64, replica: u64, time: i64, role: Role) -> ChaCha8Rng {
    stream_for(seed, replica, time, role, Copy::Single)
}

pub fn stream_for(seed: u64, replica: u64, time: i64, role: Role, copy: Copy) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replica.to_le_bytes());
    key[16..24].copy_from_slice(&time.to_le_bytes());
    key[24..].copy_from_slice(&role.tag(copy).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Per-replica seed derived from a master seed (SplitMix64 finalizer, a
/// bijection, so distinct indices give distinct seeds).
pub fn replica_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fills `out` with letters uniform on `1..=alphabet`.
///
/// Power-of-two alphabets consume whole 64-bit words bit by bit; the result is
/// still a deterministic function of the stream.
pub fn fill_letters<R: RngCore>(rng: &mut R, alphabet: u32, out: &mut [u32]) {
    debug_assert!(alphabet >= 1);
    if alphabet.is_power_of_two() {
        let bits = alphabet.trailing_zeros();
        if bits == 0 {
            out.fill(1);
            return;
        }
        let per_word = (64 / bits) as usize;
        let mask = (1u64 << bits) - 1;
        for chunk in out.chunks_mut(per_word) {
            let mut w = rng.next_u64();
            for slot in chunk {
                *slot = (w & mask) as u32 + 1;
                w >>= bits;
            }
        }
    } else {
        for slot in out {
            *slot = rng.random_range(1..=alphabet);
        }
    }
}

/// Uniform draw from `1..=r`.
pub fn uniform_index<R: Rng>(rng: &mut R, r: usize) -> usize {
    rng.random_range(1..=r)
}
