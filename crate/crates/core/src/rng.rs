//! Counter-based random numbers for reproducible Monte Carlo.
//!
//! All randomness comes from Philox4x32-10 (Salmon, Moraes, Dror, Shaw;
//! "Parallel random numbers: as easy as 1, 2, 3", SC 2011). The generator is
//! a keyed bijection on 128-bit counters, so the `i`-th output of stream `s`
//! under seed `k` is a pure function of `(k, s, i)`. Work can be split across
//! any number of threads by handing each replicate (or path) its own stream id
//! and the merged result does not depend on the split.
//!
//! Counter layout: words 0–1 hold the position within the stream, words 2–3
//! hold the stream id. The 64-bit seed is the key.

const MUL0: u32 = 0xD251_1F53;
const MUL1: u32 = 0xCD9E_8D57;
const WEYL0: u32 = 0x9E37_79B9;
const WEYL1: u32 = 0xBB67_AE85;
const ROUNDS: usize = 10;

/// The Philox4x32-10 block function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Philox4x32 {
    key: [u32; 2],
}

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

impl Philox4x32 {
    pub fn new(key: [u32; 2]) -> Self {
        Self { key }
    }

    pub fn block(&self, counter: [u32; 4]) -> [u32; 4] {
        let mut ctr = counter;
        let mut key = self.key;
        for round in 0..ROUNDS {
            if round > 0 {
                key[0] = key[0].wrapping_add(WEYL0);
                key[1] = key[1].wrapping_add(WEYL1);
            }
            let (hi0, lo0) = mulhilo(MUL0, ctr[0]);
            let (hi1, lo1) = mulhilo(MUL1, ctr[2]);
            ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
        }
        ctr
    }
}

/// Sequential reader over one Philox stream.
#[derive(Debug, Clone)]
pub struct PhiloxStream {
    cipher: Philox4x32,
    stream: u64,
    position: u64,
    buffer: [u32; 4],
    used: usize,
}

impl PhiloxStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            cipher: Philox4x32::new([seed as u32, (seed >> 32) as u32]),
            stream,
            position: 0,
            buffer: [0; 4],
            used: 4,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            let p = self.position;
            let s = self.stream;
            self.buffer =
                self.cipher
                    .block([p as u32, (p >> 32) as u32, s as u32, (s >> 32) as u32]);
            self.position = self.position.wrapping_add(1);
            self.used = 0;
        }
        let out = self.buffer[self.used];
        self.used += 1;
        out
    }

    pub fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() needs a nonempty range");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Inverse-CDF sampling of an index from a finite distribution.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    /// `probs` must be nonnegative with positive total.
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_positive,
        }
    }

    /// Maps `u ∈ [0, 1)` to the first index whose cumulative mass exceeds it.
    pub fn pick(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.last_positive)
    }

    pub fn draw(&self, rng: &mut PhiloxStream) -> usize {
        self.pick(rng.uniform())
    }
}
