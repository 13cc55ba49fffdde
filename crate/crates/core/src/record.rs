//! Fixed-size records with a big-endian key prefix.
//!
//! A record is `record_size` bytes. The first `key_size` bytes hold the key,
//! most significant byte first, so plain lexicographic byte order equals the
//! numeric order of the key. Digit `i` is the key byte of significance `i`:
//! digit `key_size - 1` is the most significant, digit `0` the least.
//!
//! Internally every supported `(record_size, key_size)` pair is
//! monomorphized to [`Rec`], a `[u8; R]` newtype, so the kernels move whole
//! records with fixed-size copies.

use std::cmp::Ordering;
use std::fmt;
use std::mem;
use std::slice;

use crate::error::{Error, Result};

pub const RECORD_SIZES: [usize; 4] = [8, 16, 24, 32];
pub const KEY_SIZES: [usize; 2] = [8, 16];

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecordLayout {
    record_size: usize,
    key_size: usize,
}

impl RecordLayout {
    /// 16-byte records with an 8-byte key and 8 bytes of payload.
    pub const KEY8_DATA8: RecordLayout = RecordLayout {
        record_size: 16,
        key_size: 8,
    };

    pub fn new(record_size: usize, key_size: usize) -> Result<Self> {
        if !RECORD_SIZES.contains(&record_size)
            || !KEY_SIZES.contains(&key_size)
            || key_size > record_size
        {
            return Err(Error::InvalidLayout {
                record_size,
                key_size,
            });
        }
        Ok(RecordLayout {
            record_size,
            key_size,
        })
    }

    /// Every supported layout, ordered by record size then key size.
    pub fn all() -> Vec<RecordLayout> {
        let mut out = Vec::new();
        for &r in &RECORD_SIZES {
            for &k in &KEY_SIZES {
                if let Ok(l) = RecordLayout::new(r, k) {
                    out.push(l);
                }
            }
        }
        out
    }

    #[inline]
    pub fn record_size(&self) -> usize {
        self.record_size
    }

    #[inline]
    pub fn key_size(&self) -> usize {
        self.key_size
    }

    #[inline]
    pub fn payload_size(&self) -> usize {
        self.record_size - self.key_size
    }

    /// Number of whole records in `len` bytes, or a format error when `len`
    /// is not a multiple of the record size.
    pub fn count(&self, len: usize) -> Result<usize> {
        if !len.is_multiple_of(self.record_size) {
            return Err(Error::Format {
                len,
                record_size: self.record_size,
            });
        }
        Ok(len / self.record_size)
    }
}

impl fmt::Debug for RecordLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RecordLayout({}B, key {}B)",
            self.record_size, self.key_size
        )
    }
}

/// Returns the key byte of significance `byte_index` of `record`.
///
/// Panics if `byte_index >= layout.key_size()`.
#[inline]
pub fn digit(record: &[u8], layout: RecordLayout, byte_index: usize) -> u8 {
    assert!(
        byte_index < layout.key_size,
        "byte_index {byte_index} out of range for key_size {}",
        layout.key_size
    );
    record[layout.key_size - 1 - byte_index]
}

/// Orders two records by key; payload bytes are ignored.
#[inline]
pub fn compare_keys(a: &[u8], b: &[u8], layout: RecordLayout) -> Ordering {
    a[..layout.key_size].cmp(&b[..layout.key_size])
}

/// An owned, densely packed array of records.
#[derive(Clone, PartialEq, Eq)]
pub struct RecordArray {
    layout: RecordLayout,
    bytes: Vec<u8>,
}

impl RecordArray {
    pub fn from_bytes(layout: RecordLayout, bytes: Vec<u8>) -> Result<Self> {
        layout.count(bytes.len())?;
        Ok(RecordArray { layout, bytes })
    }

    /// `n` all-zero records.
    pub fn zeroed(layout: RecordLayout, n: usize) -> Result<Self> {
        let bytes = try_alloc_zeroed(n, layout.record_size, "record array")?;
        Ok(RecordArray { layout, bytes })
    }

    #[inline]
    pub fn layout(&self) -> RecordLayout {
        self.layout
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bytes.len() / self.layout.record_size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    #[inline]
    pub fn record(&self, i: usize) -> &[u8] {
        let rs = self.layout.record_size;
        &self.bytes[i * rs..(i + 1) * rs]
    }

    #[inline]
    pub fn record_mut(&mut self, i: usize) -> &mut [u8] {
        let rs = self.layout.record_size;
        &mut self.bytes[i * rs..(i + 1) * rs]
    }

    pub fn key(&self, i: usize) -> &[u8] {
        &self.record(i)[..self.layout.key_size]
    }

    pub fn records(&self) -> std::slice::ChunksExact<'_, u8> {
        self.bytes.chunks_exact(self.layout.record_size)
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// The key column, concatenated.
    pub fn keys(&self) -> Vec<u8> {
        let ks = self.layout.key_size;
        let mut out = Vec::with_capacity(self.len() * ks);
        for r in self.records() {
            out.extend_from_slice(&r[..ks]);
        }
        out
    }
}

impl fmt::Debug for RecordArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RecordArray")
            .field("layout", &self.layout)
            .field("n", &self.len())
            .finish()
    }
}

pub(crate) fn try_alloc_zeroed(n: usize, size: usize, what: &'static str) -> Result<Vec<u8>> {
    let bytes = n.checked_mul(size).ok_or(Error::Resource {
        what,
        bytes: usize::MAX,
    })?;
    let mut v = Vec::new();
    v.try_reserve_exact(bytes)
        .map_err(|_| Error::Resource { what, bytes })?;
    v.resize(bytes, 0);
    Ok(v)
}

/// A record of `R` bytes whose first `K` bytes are the big-endian key.
#[derive(Clone, Copy, PartialEq, Eq)]
#[repr(transparent)]
pub struct Rec<const R: usize, const K: usize>(pub [u8; R]);

/// Typed view of a record used by the kernels.
///
/// # Safety
///
/// Implementors must be `repr(transparent)` over `[u8; SIZE]` (alignment 1,
/// no padding, every bit pattern valid) so byte buffers can be reinterpreted
/// as record slices.
pub unsafe trait Record: Copy + Send + Sync + 'static {
    const SIZE: usize;
    const KEY: usize;

    fn digit(&self, byte_index: usize) -> u8;
    fn key_cmp(&self, other: &Self) -> Ordering;

    #[inline(always)]
    fn key_lt(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Less
    }
}

unsafe impl<const R: usize, const K: usize> Record for Rec<R, K> {
    const SIZE: usize = R;
    const KEY: usize = K;

    #[inline(always)]
    fn digit(&self, byte_index: usize) -> u8 {
        debug_assert!(byte_index < K);
        self.0[K - 1 - byte_index]
    }

    #[inline(always)]
    fn key_cmp(&self, other: &Self) -> Ordering {
        if K == 8 {
            let a = u64::from_be_bytes(self.0[..8].try_into().unwrap());
            let b = u64::from_be_bytes(other.0[..8].try_into().unwrap());
            a.cmp(&b)
        } else if K == 16 {
            let a = u128::from_be_bytes(self.0[..16].try_into().unwrap());
            let b = u128::from_be_bytes(other.0[..16].try_into().unwrap());
            a.cmp(&b)
        } else {
            self.0[..K].cmp(&other.0[..K])
        }
    }
}

#[inline]
pub(crate) fn as_records<T: Record>(bytes: &[u8]) -> &[T] {
    debug_assert_eq!(mem::size_of::<T>(), T::SIZE);
    debug_assert_eq!(mem::align_of::<T>(), 1);
    assert_eq!(bytes.len() % T::SIZE, 0);
    // SAFETY: `Record` guarantees a padding-free, alignment-1 layout of SIZE bytes.
    unsafe { slice::from_raw_parts(bytes.as_ptr() as *const T, bytes.len() / T::SIZE) }
}

#[inline]
pub(crate) fn as_records_mut<T: Record>(bytes: &mut [u8]) -> &mut [T] {
    assert_eq!(bytes.len() % T::SIZE, 0);
    // SAFETY: see `as_records`.
    unsafe { slice::from_raw_parts_mut(bytes.as_mut_ptr() as *mut T, bytes.len() / T::SIZE) }
}

/// Runs `$body` with `$T` bound to the concrete [`Rec`] type for `$layout`.
macro_rules! with_record_type {
    ($layout:expr, $T:ident => $body:expr) => {{
        let layout: $crate::record::RecordLayout = $layout;
        match (layout.record_size(), layout.key_size()) {
            (8, 8) => {
                type $T = $crate::record::Rec<8, 8>;
                $body
            }
            (16, 8) => {
                type $T = $crate::record::Rec<16, 8>;
                $body
            }
            (16, 16) => {
                type $T = $crate::record::Rec<16, 16>;
                $body
            }
            (24, 8) => {
                type $T = $crate::record::Rec<24, 8>;
                $body
            }
            (24, 16) => {
                type $T = $crate::record::Rec<24, 16>;
                $body
            }
            (32, 8) => {
                type $T = $crate::record::Rec<32, 8>;
                $body
            }
            (32, 16) => {
                type $T = $crate::record::Rec<32, 16>;
                $body
            }
            _ => unreachable!("RecordLayout::new admits only supported layouts"),
        }
    }};
}
pub(crate) use with_record_type;
