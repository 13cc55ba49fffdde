//! Buffered LSD radix sort, the baseline the MSD sorter is measured against.
//!
//! One stable buffered split per key byte, least significant first,
//! alternating between the caller's array and an auxiliary array. Every
//! pass runs regardless of the data, so the pass count is always the key
//! size.

use std::mem::MaybeUninit;

use crate::error::{Error, Result};
use crate::radix::{equal_chunks, split_buffered, BufferConfig, CACHE_LINE};
use crate::record::{as_records_mut, with_record_type, Record, RecordLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LsdConfig {
    /// Staging bytes per digit lane (`B`).
    pub buffer_bytes_per_digit: usize,
    pub threads: usize,
    /// Chunks per pass are `chunk_multiplier * threads`, equal-sized.
    pub chunk_multiplier: usize,
    pub streaming: bool,
}

impl Default for LsdConfig {
    fn default() -> Self {
        LsdConfig {
            buffer_bytes_per_digit: 64,
            threads: 1,
            chunk_multiplier: 8,
            streaming: BufferConfig::default().streaming,
        }
    }
}

impl LsdConfig {
    /// One cache line per digit lane.
    pub fn lsd1(threads: usize) -> Self {
        LsdConfig {
            threads,
            ..Default::default()
        }
    }

    /// Four cache lines per digit lane.
    pub fn lsd4(threads: usize) -> Self {
        LsdConfig {
            buffer_bytes_per_digit: 4 * CACHE_LINE,
            threads,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffer_bytes_per_digit == 0
            || !self.buffer_bytes_per_digit.is_multiple_of(CACHE_LINE)
        {
            return Err(Error::InvalidConfig(format!(
                "buffer_bytes_per_digit {} is not a positive multiple of {CACHE_LINE}",
                self.buffer_bytes_per_digit
            )));
        }
        if self.threads == 0 || self.chunk_multiplier == 0 {
            return Err(Error::InvalidConfig(
                "threads and chunk_multiplier must be positive".into(),
            ));
        }
        Ok(())
    }

    fn buffer(&self) -> BufferConfig {
        BufferConfig {
            lane_bytes: self.buffer_bytes_per_digit,
            streaming: self.streaming,
        }
    }
}

/// Stable sort of `data` by key. Returns the number of passes made.
pub fn lsd_sort(data: &mut [u8], layout: RecordLayout, cfg: &LsdConfig) -> Result<usize> {
    cfg.validate()?;
    layout.count(data.len())?;
    with_record_type!(layout, T => lsd_sort_typed(as_records_mut::<T>(data), cfg))
}

pub(crate) fn lsd_sort_typed<T: Record>(data: &mut [T], cfg: &LsdConfig) -> Result<usize> {
    lsd_passes(data, T::KEY, cfg)
}

fn lsd_passes<T: Record>(data: &mut [T], passes: usize, cfg: &LsdConfig) -> Result<usize> {
    let n = data.len();
    let mut aux: Vec<MaybeUninit<T>> = Vec::new();
    aux.try_reserve_exact(n).map_err(|_| Error::Resource {
        what: "auxiliary array",
        bytes: n * T::SIZE,
    })?;
    // SAFETY: each pass writes the whole destination before it is read.
    unsafe { aux.set_len(n) };
    let aux = unsafe { std::slice::from_raw_parts_mut(aux.as_mut_ptr() as *mut T, n) };

    let chunks = equal_chunks(n, cfg.chunk_multiplier * cfg.threads);
    let buffer = cfg.buffer();
    for byte in 0..passes {
        let (src, dst): (&[T], &mut [T]) = if byte % 2 == 0 {
            (&*data, &mut *aux)
        } else {
            (&*aux, &mut *data)
        };
        split_buffered(src, dst, byte, &chunks, cfg.threads, buffer);
    }
    if passes % 2 == 1 {
        data.copy_from_slice(aux);
    }
    Ok(passes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radix::split_plain;
    use crate::record::Rec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type R16 = Rec<16, 8>;

    fn random(n: usize, key_mask: u64, seed: u64) -> Vec<R16> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u64)
            .map(|i| {
                let mut b = [0u8; 16];
                b[..8].copy_from_slice(&(rng.random::<u64>() & key_mask).to_be_bytes());
                b[8..].copy_from_slice(&i.to_le_bytes());
                Rec(b)
            })
            .collect()
    }

    #[test]
    fn one_pass_equals_single_split() {
        let src = random(10_000, u64::MAX, 1);
        let mut a = src.clone();
        let passes = lsd_passes(&mut a, 1, &LsdConfig::lsd1(3)).unwrap();
        assert_eq!(passes, 1);
        let mut b = src.clone();
        split_plain(&src, &mut b, 0);
        assert!(a == b);
        // Odd pass count leaves the result copied back into `data`.
        let mut c = src.clone();
        lsd_passes(&mut c, 3, &LsdConfig::lsd4(2)).unwrap();
        // Three passes order by digits 2, 1, 0 (bytes 5, 6, 7), stably.
        let mut expect = src.clone();
        expect.sort_by_key(|r| (r.0[5], r.0[6], r.0[7]));
        assert!(c == expect);
    }

    #[test]
    fn stable_and_sorted() {
        for (t, cfg) in [
            (1, LsdConfig::lsd1(1)),
            (4, LsdConfig::lsd4(4)),
            (3, LsdConfig::lsd1(3)),
        ] {
            let mut v = random(50_000, 0xFF00_0000_0000_00FF, t);
            let mut expected = v.clone();
            expected.sort_by(|a, b| a.key_cmp(b));
            assert_eq!(lsd_sort_typed(&mut v, &cfg).unwrap(), 8);
            assert!(v == expected);
        }
    }

    #[test]
    fn sorted_input_unchanged() {
        let mut v = random(20_000, u64::MAX, 5);
        v.sort_by(|a, b| a.key_cmp(b));
        let before = v.clone();
        lsd_sort_typed(&mut v, &LsdConfig::lsd1(2)).unwrap();
        assert!(v == before);
    }

    #[test]
    fn rejects_bad_buffer() {
        let cfg = LsdConfig {
            buffer_bytes_per_digit: 96,
            ..Default::default()
        };
        let mut d = vec![0u8; 16];
        assert!(lsd_sort(&mut d, RecordLayout::KEY8_DATA8, &cfg).is_err());
    }
}
