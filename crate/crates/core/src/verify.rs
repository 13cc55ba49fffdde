//! Oracles and invariant checks for sorted output.

use std::fmt;

use rayon::prelude::*;

use crate::record::{as_records, compare_keys, with_record_type, Record, RecordLayout};

/// Index of the first `i` with `key(i) > key(i + 1)`, or `None` if sorted.
pub fn check_sorted(data: &[u8], layout: RecordLayout) -> Option<usize> {
    with_record_type!(layout, T => {
        as_records::<T>(data)
            .windows(2)
            .position(|w| w[0].key_cmp(&w[1]) == std::cmp::Ordering::Greater)
    })
}

/// Order-independent 128-bit fingerprint of a record multiset.
///
/// Each record is hashed to 128 bits (two independently seeded 64-bit
/// chains of SplitMix64 rounds over its 8-byte words) and the hashes are
/// summed modulo 2^128. Treating record hashes as uniform, two distinct
/// multisets of at most 2^32 records collide with probability well below
/// 2^-64.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Digest(pub u128);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({:032x})", self.0)
    }
}

#[inline]
fn round(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn record_hash(rec: &[u8]) -> u128 {
    let mut a = 0x243f_6a88_85a3_08d3u64;
    let mut b = 0x1319_8a2e_0370_7344u64;
    for w in rec.chunks_exact(8) {
        let w = u64::from_le_bytes(w.try_into().unwrap());
        a = round(a ^ w).wrapping_add(0x9e37_79b9_7f4a_7c15);
        b = round(b.rotate_left(23) ^ w ^ 0xa409_3822_299f_31d0);
    }
    ((round(a) as u128) << 64) | round(b ^ rec.len() as u64) as u128
}

pub fn digest(data: &[u8], layout: RecordLayout) -> Digest {
    let rs = layout.record_size();
    let sum = data
        .par_chunks(rs * 4096)
        .map(|block| {
            block
                .chunks_exact(rs)
                .fold(0u128, |acc, r| acc.wrapping_add(record_hash(r)))
        })
        .reduce(|| 0u128, u128::wrapping_add);
    Digest(sum)
}

pub fn check_permutation(before: Digest, after: &[u8], layout: RecordLayout) -> bool {
    digest(after, layout) == before
}

/// Stable sort of a copy of `data` by key using the standard library sort.
pub fn oracle_sort(data: &[u8], layout: RecordLayout) -> Vec<u8> {
    with_record_type!(layout, T => {
        let mut v: Vec<T> = as_records::<T>(data).to_vec();
        v.sort_by(|a, b| a.key_cmp(b));
        let mut out = Vec::with_capacity(data.len());
        for r in &v {
            out.extend_from_slice(&r.0);
        }
        out
    })
}

/// In-place counterpart of [`oracle_sort`]; the benchmark's reference sorter.
pub fn oracle_sort_in_place(data: &mut [u8], layout: RecordLayout) {
    with_record_type!(layout, T => {
        crate::record::as_records_mut::<T>(data).sort_by(|a, b| a.key_cmp(b))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub sorted_ok: bool,
    pub multiset_ok: bool,
    /// Whether equal keys kept their input order; only checked in full mode
    /// when stability was requested.
    pub stable_ok: Option<bool>,
    /// First offending record index, present iff some check failed.
    pub mismatch_index: Option<usize>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.sorted_ok && self.multiset_ok && self.stable_ok != Some(false)
    }

    /// Sortedness plus the permutation digest.
    pub fn digest_mode(before: Digest, after: &[u8], layout: RecordLayout) -> Self {
        let violation = check_sorted(after, layout);
        let multiset_ok = check_permutation(before, after, layout);
        VerifyReport {
            sorted_ok: violation.is_none(),
            multiset_ok,
            stable_ok: None,
            mismatch_index: violation.or(if multiset_ok { None } else { Some(0) }),
        }
    }

    /// Comparison against [`oracle_sort`] of the original input.
    ///
    /// Keys must match the oracle position by position. With `stable`, the
    /// full records must match too (equal keys in input order).
    pub fn full_mode(input: &[u8], after: &[u8], layout: RecordLayout, stable: bool) -> Self {
        let expected = oracle_sort(input, layout);
        let rs = layout.record_size();
        let violation = check_sorted(after, layout);
        let multiset_ok =
            after.len() == input.len() && digest(input, layout) == digest(after, layout);
        let key_mismatch = expected
            .chunks_exact(rs)
            .zip(after.chunks_exact(rs))
            .position(|(e, a)| compare_keys(e, a, layout) != std::cmp::Ordering::Equal);
        let record_mismatch = if stable {
            expected
                .chunks_exact(rs)
                .zip(after.chunks_exact(rs))
                .position(|(e, a)| e != a)
        } else {
            None
        };
        let sorted_ok = violation.is_none() && key_mismatch.is_none();
        let stable_ok = stable.then_some(record_mismatch.is_none());
        let mismatch_index = violation
            .or(key_mismatch)
            .or(record_mismatch)
            .or(if multiset_ok { None } else { Some(0) });
        VerifyReport {
            sorted_ok,
            multiset_ok,
            stable_ok,
            mismatch_index,
        }
    }
}
