//! Split kernels: the plain counting-sort split and the buffered
//! (software write-combining) split.
//!
//! Both kernels are out-of-place and stable. They read a source range,
//! write a destination range of equal length grouped by one key digit, and
//! return 256 [`Bin`]s tiling the destination in ascending digit order.

use std::ops::Range;
use std::ptr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use crate::record::{as_records, as_records_mut, with_record_type, Record, RecordLayout};

pub const RADIX: usize = 256;

/// Bytes in a cache line; buffer lanes are sized in multiples of this.
pub const CACHE_LINE: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Histogram {
    pub counts: [usize; RADIX],
}

impl Default for Histogram {
    fn default() -> Self {
        Histogram { counts: [0; RADIX] }
    }
}

impl Histogram {
    #[inline]
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of digit values that occur at least once.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn add(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }
}

/// Which of the two working arrays holds a bin's records.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Parity {
    /// The caller's array.
    Primary,
    /// The auxiliary array allocated by the sorter.
    Auxiliary,
}

impl Parity {
    #[inline]
    pub fn flip(self) -> Parity {
        match self {
            Parity::Primary => Parity::Auxiliary,
            Parity::Auxiliary => Parity::Primary,
        }
    }
}

/// A contiguous run of records sharing every digit above `next_byte`.
///
/// `next_byte` is the digit still to be processed; `None` once the least
/// significant digit has been split and the bin is in final order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Bin {
    pub start: usize,
    pub end: usize,
    pub next_byte: Option<usize>,
    pub parity: Parity,
}

impl Bin {
    #[inline]
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    #[inline]
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Destination start of each digit group: `offsets[d] = sum(counts[..d])`.
pub fn exclusive_prefix_sum(h: &Histogram) -> [usize; RADIX] {
    let mut offsets = [0usize; RADIX];
    let mut acc = 0;
    for (o, &c) in offsets.iter_mut().zip(h.counts.iter()) {
        *o = acc;
        acc += c;
    }
    offsets
}

/// Turns the histogram of a split of `[base, base + total)` on `byte_index`
/// into the 256 child bins living in the array of parity `parity`.
pub fn bins_from_histogram(
    h: &Histogram,
    base: usize,
    byte_index: usize,
    parity: Parity,
) -> [Bin; RADIX] {
    let next_byte = byte_index.checked_sub(1);
    let mut start = base;
    std::array::from_fn(|d| {
        let end = start + h.counts[d];
        let b = Bin {
            start,
            end,
            next_byte,
            parity,
        };
        start = end;
        b
    })
}

#[inline]
pub(crate) fn histogram_of<T: Record>(src: &[T], byte_index: usize) -> Histogram {
    let mut h = Histogram::default();
    for r in src {
        h.counts[r.digit(byte_index) as usize] += 1;
    }
    h
}

/// Stable counting-sort split of `src` into `dst` on one digit.
pub(crate) fn split_plain<T: Record>(src: &[T], dst: &mut [T], byte_index: usize) -> Histogram {
    assert_eq!(src.len(), dst.len());
    let h = histogram_of(src, byte_index);
    let mut cursor = exclusive_prefix_sum(&h);
    for r in src {
        let d = r.digit(byte_index) as usize;
        // SAFETY: cursor[d] < offsets[d] + counts[d] <= dst.len().
        unsafe { *dst.get_unchecked_mut(cursor[d]) = *r };
        cursor[d] += 1;
    }
    h
}

/// Staging lanes and behavior of the buffered split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferConfig {
    /// Bytes staged per digit lane; a positive multiple of [`CACHE_LINE`].
    pub lane_bytes: usize,
    /// Flush lanes with cache-bypassing stores where the platform has them.
    pub streaming: bool,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            lane_bytes: 256,
            streaming: cfg!(target_arch = "x86_64"),
        }
    }
}

impl BufferConfig {
    pub fn with_lane_bytes(lane_bytes: usize) -> Self {
        BufferConfig {
            lane_bytes,
            ..Default::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lane_bytes > 0 && self.lane_bytes.is_multiple_of(CACHE_LINE)
    }

    /// Records per lane for records of `record_size` bytes (at least one).
    pub fn lane_records(&self, record_size: usize) -> usize {
        (self.lane_bytes / record_size).max(1)
    }
}

/// Per-thread write-combining staging area: one lane per digit value.
///
/// Records are staged in the lane of their digit; a full lane is written
/// to the destination as one contiguous block at that lane's cursor.
pub struct BufferSet<T> {
    lanes: Vec<T>,
    capacity: usize,
    fill: [usize; RADIX],
    cursor: [usize; RADIX],
    streaming: bool,
}

impl<T: Record> BufferSet<T> {
    pub fn new(cfg: BufferConfig) -> Self {
        let capacity = cfg.lane_records(T::SIZE);
        // SAFETY: `Record` types are plain bytes, so zeroed memory is valid.
        let zero: T = unsafe { std::mem::zeroed() };
        BufferSet {
            lanes: vec![zero; capacity * RADIX],
            capacity,
            fill: [0; RADIX],
            cursor: [0; RADIX],
            streaming: cfg.streaming,
        }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn fill(&self, digit: usize) -> usize {
        self.fill[digit]
    }

    #[inline]
    pub fn cursor(&self, digit: usize) -> usize {
        self.cursor[digit]
    }

    /// Points every lane at a new destination start; lanes must be empty.
    pub fn reset(&mut self, cursors: &[usize; RADIX]) {
        debug_assert!(self.fill.iter().all(|&f| f == 0));
        self.cursor = *cursors;
    }

    /// Stages `rec` in lane `digit`, flushing the lane to `dst` when full.
    ///
    /// # Safety
    ///
    /// `dst` must be valid for writes at every position the lane's cursor
    /// will reach, and no other thread may write those positions.
    #[inline(always)]
    pub unsafe fn push(&mut self, digit: usize, rec: T, dst: *mut T) {
        let f = *self.fill.get_unchecked(digit);
        *self.lanes.get_unchecked_mut(digit * self.capacity + f) = rec;
        *self.fill.get_unchecked_mut(digit) = f + 1;
        if f + 1 == self.capacity {
            self.flush(digit, dst);
        }
    }

    /// Writes lane `digit` to `dst[cursor..cursor + fill]` and empties it.
    ///
    /// # Safety
    ///
    /// As for [`BufferSet::push`].
    #[inline]
    pub unsafe fn flush(&mut self, digit: usize, dst: *mut T) {
        let n = self.fill[digit];
        if n == 0 {
            return;
        }
        let src = self.lanes.as_ptr().add(digit * self.capacity);
        let out = dst.add(self.cursor[digit]);
        copy_block(src, out, n, self.streaming);
        self.cursor[digit] += n;
        self.fill[digit] = 0;
    }

    /// Flushes every partially filled lane.
    ///
    /// # Safety
    ///
    /// As for [`BufferSet::push`].
    pub unsafe fn flush_all(&mut self, dst: *mut T) {
        for d in 0..RADIX {
            self.flush(d, dst);
        }
        store_fence(self.streaming);
    }
}

#[inline(always)]
unsafe fn copy_block<T: Record>(src: *const T, dst: *mut T, n: usize, streaming: bool) {
    #[cfg(target_arch = "x86_64")]
    {
        if streaming && (dst as usize).is_multiple_of(8) {
            use std::arch::x86_64::_mm_stream_si64;
            let words = n * T::SIZE / 8;
            let s = src as *const u8;
            let d = dst as *mut i64;
            for i in 0..words {
                let w = ptr::read_unaligned(s.add(i * 8) as *const i64);
                _mm_stream_si64(d.add(i), w);
            }
            return;
        }
    }
    let _ = streaming;
    ptr::copy_nonoverlapping(src, dst, n);
}

#[inline]
fn store_fence(streaming: bool) {
    #[cfg(target_arch = "x86_64")]
    if streaming {
        // SAFETY: sfence has no preconditions on x86_64.
        unsafe { std::arch::x86_64::_mm_sfence() };
    }
    let _ = streaming;
}

#[derive(Clone, Copy)]
struct SyncPtr<T>(*mut T);
// SAFETY: the buffered split hands each thread disjoint destination ranges.
unsafe impl<T> Send for SyncPtr<T> {}
unsafe impl<T> Sync for SyncPtr<T> {}

/// Buffered split of `src` into `dst` on one digit using `threads` threads.
///
/// Chunks are claimed dynamically from a shared counter, first to build
/// per-chunk histograms and then to distribute. Each `(chunk, digit)` pair
/// owns a disjoint destination sub-range ordered by digit, then by chunk
/// index, so the output equals [`split_plain`] regardless of `threads`.
pub(crate) fn split_buffered<T: Record>(
    src: &[T],
    dst: &mut [T],
    byte_index: usize,
    chunks: &[Range<usize>],
    threads: usize,
    cfg: BufferConfig,
) -> Histogram {
    assert_eq!(src.len(), dst.len());
    debug_assert_eq!(chunks.iter().map(|c| c.len()).sum::<usize>(), src.len());
    let threads = threads.max(1).min(chunks.len().max(1));

    // Phase 1: per-chunk histograms.
    let mut chunk_hist = vec![Histogram::default(); chunks.len()];
    if threads == 1 {
        for (h, c) in chunk_hist.iter_mut().zip(chunks) {
            *h = histogram_of(&src[c.clone()], byte_index);
        }
    } else {
        let next = AtomicUsize::new(0);
        let parts: Vec<Vec<(usize, Histogram)>> = thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|_| {
                    s.spawn(|| {
                        let mut mine = Vec::new();
                        loop {
                            let c = next.fetch_add(1, Ordering::Relaxed);
                            if c >= chunks.len() {
                                break;
                            }
                            mine.push((c, histogram_of(&src[chunks[c].clone()], byte_index)));
                        }
                        mine
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (c, h) in parts.into_iter().flatten() {
            chunk_hist[c] = h;
        }
    }

    // Phase 2: digit-major, chunk-minor destination offsets.
    let mut total = Histogram::default();
    let mut chunk_offsets = vec![[0usize; RADIX]; chunks.len()];
    let mut acc = 0;
    for d in 0..RADIX {
        for (off, h) in chunk_offsets.iter_mut().zip(&chunk_hist) {
            off[d] = acc;
            acc += h.counts[d];
        }
    }
    for h in &chunk_hist {
        total.add(h);
    }

    // Phase 3: distribute through per-thread write-combining lanes.
    let out = SyncPtr(dst.as_mut_ptr());
    let distribute = |buf: &mut BufferSet<T>, c: usize| {
        // Capture the whole wrapper, which is Send, not its raw pointer.
        #[allow(clippy::redundant_locals)]
        let out = out;
        buf.reset(&chunk_offsets[c]);
        for r in &src[chunks[c].clone()] {
            // SAFETY: positions written for chunk c lie in its own sub-ranges.
            unsafe { buf.push(r.digit(byte_index) as usize, *r, out.0) };
        }
        unsafe { buf.flush_all(out.0) };
    };
    if threads == 1 {
        let mut buf = BufferSet::new(cfg);
        for c in 0..chunks.len() {
            distribute(&mut buf, c);
        }
    } else {
        let next = AtomicUsize::new(0);
        thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| {
                    let mut buf = BufferSet::new(cfg);
                    loop {
                        let c = next.fetch_add(1, Ordering::Relaxed);
                        if c >= chunks.len() {
                            break;
                        }
                        distribute(&mut buf, c);
                    }
                });
            }
        });
    }
    total
}

/// `count` chunks of (nearly) equal size covering `0..n`.
pub fn equal_chunks(n: usize, count: usize) -> Vec<Range<usize>> {
    let count = count.max(1);
    (0..count)
        .map(|i| (n * i / count)..(n * (i + 1) / count))
        .collect()
}

/// `count` chunks covering `0..n` whose sizes grow linearly from
/// `n / first_den`, so that they sum to `n`.
///
/// The scheduler uses `count = 8T`, `first_den = 64T`: the first chunk has
/// `n / 64T` records and the common difference is `7n / (4 * 8T * (8T - 1))`.
/// Sizes are rounded down and the last chunk takes the remainder. When
/// `first_den < count` the first chunk would exceed the mean size, so equal
/// chunks are returned instead.
pub fn linear_chunks(n: usize, count: usize, first_den: usize) -> Vec<Range<usize>> {
    let count = count.max(1);
    if count == 1 {
        return equal_chunks(n, 1);
    }
    if first_den < count {
        return equal_chunks(n, count);
    }
    // size_i = n * (C(C-1) + 2i(D - C)) / (D * C * (C-1)), C = count, D = first_den
    let c = count as u128;
    let d = first_den as u128;
    let denom = d * c * (c - 1);
    let mut out = Vec::with_capacity(count);
    let mut start = 0usize;
    for i in 0..count - 1 {
        let num = n as u128 * (c * (c - 1) + 2 * i as u128 * (d - c));
        let size = (num / denom) as usize;
        out.push(start..start + size);
        start += size;
    }
    out.push(start..n);
    out
}

// Byte-level entry points.

pub fn build_histogram(src: &[u8], layout: RecordLayout, byte_index: usize) -> Histogram {
    assert!(byte_index < layout.key_size());
    with_record_type!(layout, T => histogram_of(as_records::<T>(src), byte_index))
}

/// Stable counting-sort split of `src` into `dst` on digit `byte_index`.
///
/// The returned bins index into `dst`, whose parity is reported as
/// [`Parity::Auxiliary`] (the flip of the source).
pub fn radix_split(
    src: &[u8],
    dst: &mut [u8],
    layout: RecordLayout,
    byte_index: usize,
) -> [Bin; RADIX] {
    assert!(byte_index < layout.key_size());
    assert_eq!(src.len(), dst.len());
    let h = with_record_type!(layout, T => {
        split_plain(as_records::<T>(src), as_records_mut::<T>(dst), byte_index)
    });
    bins_from_histogram(&h, 0, byte_index, Parity::Auxiliary)
}

/// Buffered split over `chunks` with `threads` threads; output is identical
/// to [`radix_split`].
pub fn buffered_radix_split(
    src: &[u8],
    dst: &mut [u8],
    layout: RecordLayout,
    byte_index: usize,
    chunks: &[Range<usize>],
    threads: usize,
    cfg: BufferConfig,
) -> [Bin; RADIX] {
    assert!(byte_index < layout.key_size());
    assert_eq!(src.len(), dst.len());
    let h = with_record_type!(layout, T => {
        let src = as_records::<T>(src);
        assert!(chunks.iter().all(|c| c.end <= src.len()));
        split_buffered(src, as_records_mut::<T>(dst), byte_index, chunks, threads, cfg)
    });
    bins_from_histogram(&h, 0, byte_index, Parity::Auxiliary)
}
