//! Deterministic input generation and raw record file I/O.
//!
//! Records are generated in fixed shards of [`SHARD_RECORDS`]; shard `i`
//! draws from a ChaCha8 stream seeded with the user seed and stream id `i`,
//! so the output depends only on the [`GenSpec`], never on thread count.
//!
//! Keys:
//! * uniform: every key byte independently uniform;
//! * zipf: a rank `r` in `1..=universe` with probability proportional to
//!   `r^-theta`, mapped through [`mix64`] (and `mix64(mix64(r))` for the low
//!   word of 16-byte keys), stored big-endian.
//!
//! Payload: each 8-byte payload word holds the record index, little-endian.

use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::record::{try_alloc_zeroed, RecordArray, RecordLayout};

pub const SHARD_RECORDS: usize = 1 << 16;
pub const MAX_ZIPF_UNIVERSE: u64 = 1 << 26;
pub const DEFAULT_THETA: f64 = 0.75;
pub const DEFAULT_UNIVERSE: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Uniform,
    Zipf { theta: f64, universe: u64 },
}

impl Distribution {
    pub fn zipf() -> Self {
        Distribution::Zipf {
            theta: DEFAULT_THETA,
            universe: DEFAULT_UNIVERSE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Zipf { .. } => "zipf",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub layout: RecordLayout,
    pub distribution: Distribution,
    pub seed: u64,
}

impl GenSpec {
    pub fn uniform(n: usize, layout: RecordLayout, seed: u64) -> Self {
        GenSpec {
            n,
            layout,
            distribution: Distribution::Uniform,
            seed,
        }
    }

    pub fn zipf(n: usize, layout: RecordLayout, theta: f64, universe: u64, seed: u64) -> Self {
        GenSpec {
            n,
            layout,
            distribution: Distribution::Zipf { theta, universe },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Distribution::Zipf { theta, universe } = self.distribution {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "zipf theta must be > 0, got {theta}"
                )));
            }
            if !(1..=MAX_ZIPF_UNIVERSE).contains(&universe) {
                return Err(Error::InvalidConfig(format!(
                    "zipf universe must be in 1..={MAX_ZIPF_UNIVERSE}, got {universe}"
                )));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inverse-CDF sampler over ranks `1..=universe` with weight `r^-theta`.
pub struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    pub fn new(theta: f64, universe: u64) -> Self {
        let mut cdf = Vec::with_capacity(universe as usize);
        let mut acc = 0.0f64;
        for r in 1..=universe {
            acc += (r as f64).powf(-theta);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        ZipfTable { cdf }
    }

    pub fn universe(&self) -> u64 {
        self.cdf.len() as u64
    }

    /// Rank for a uniform variate `u` in `[0, 1)`.
    #[inline]
    pub fn rank(&self, u: f64) -> u64 {
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u64 + 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.rank(rng.random::<f64>())
    }
}

/// Key bytes for a zipf rank: big-endian `mix64(rank)`, followed by
/// `mix64(mix64(rank))` for 16-byte keys.
pub fn zipf_key(rank: u64, key: &mut [u8]) {
    let hi = mix64(rank);
    key[..8].copy_from_slice(&hi.to_be_bytes());
    if key.len() >= 16 {
        key[8..16].copy_from_slice(&mix64(hi).to_be_bytes());
    }
}

pub fn generate(spec: &GenSpec) -> Result<RecordArray> {
    spec.validate()?;
    let layout = spec.layout;
    let rs = layout.record_size();
    let ks = layout.key_size();
    let mut bytes = try_alloc_zeroed(spec.n, rs, "generated records")?;
    let table = match spec.distribution {
        Distribution::Zipf { theta, universe } => Some(ZipfTable::new(theta, universe)),
        Distribution::Uniform => None,
    };

    bytes
        .par_chunks_mut(SHARD_RECORDS * rs)
        .enumerate()
        .for_each(|(shard, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(shard as u64);
            let first = shard * SHARD_RECORDS;
            for (j, rec) in out.chunks_exact_mut(rs).enumerate() {
                let (key, payload) = rec.split_at_mut(ks);
                match &table {
                    None => rng.fill_bytes(key),
                    Some(t) => zipf_key(t.sample(&mut rng), key),
                }
                let index = ((first + j) as u64).to_le_bytes();
                for w in payload.chunks_exact_mut(8) {
                    w.copy_from_slice(&index);
                }
            }
        });
    RecordArray::from_bytes(layout, bytes)
}

pub fn load_file(path: impl AsRef<Path>, layout: RecordLayout) -> Result<RecordArray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RecordArray::from_bytes(layout, bytes)
}

pub fn save_file(path: impl AsRef<Path>, array: &RecordArray) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, array.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
