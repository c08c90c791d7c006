//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, domain, step, index)` and every output is
//! a pure function of that address plus a draw counter. The noise an agent
//! receives at a step therefore does not depend on the pairing order or on
//! how pair updates are spread across threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent families of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Init,
    Pairing,
    ContactNoise,
    OpinionNoise,
    Oracle,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Init => 0x11,
            Domain::Pairing => 0x22,
            Domain::ContactNoise => 0x33,
            Domain::OpinionNoise => 0x44,
            Domain::Oracle => 0x55,
        }
    }
}

/// Key shared by all streams of one domain at one step.
pub fn stream_key(seed: u64, domain: Domain, step: u64) -> u64 {
    let key = mix64(seed ^ domain.tag().wrapping_mul(GOLDEN));
    mix64(key ^ step.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, domain: Domain, step: u64, index: u64) -> Self {
        Self::at(stream_key(seed, domain, step), index)
    }

    /// Stream `index` under a key from [`stream_key`].
    #[inline]
    pub fn at(step_key: u64, index: u64) -> Self {
        let key = mix64(step_key ^ index.wrapping_mul(0xa076_1d64_78bd_642f));
        Self { key, counter: 0 }
    }

    /// Draws taken from this stream so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
