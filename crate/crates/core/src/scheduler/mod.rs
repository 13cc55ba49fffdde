//! The MSD pass scheduler.
//!
//! Sorting runs in three kinds of passes over radix-256 digits, most
//! significant first:
//!
//! * the **first pass** splits the whole array on the top digit with `T`
//!   threads and classifies the resulting bins as big (more than `2N/3T`
//!   records) or small;
//! * **big-bin passes** split each big bin with `T_big` threads in the
//!   calling context, recursing into big children and queueing small ones;
//! * **workers** pop small bins from priority queues (largest first) and
//!   finish them single-threaded: a plain or buffered split chosen by the
//!   bin's cache footprint, comparison sorts for tiny children, inline
//!   recursion for children below `N/4096` and re-queueing for the rest.
//!
//! Splits ping-pong between the caller's array and one auxiliary array of
//! the same size; a bin that becomes final in the auxiliary array is copied
//! back. Every bin in flight owns a disjoint range of both arrays, which is
//! what makes the unsynchronized accesses below sound.

mod queue;

pub use queue::{process_bins, Task, TaskGuard, TaskQueue};

use std::mem::MaybeUninit;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use crate::error::{Error, Result};
use crate::radix::{
    bins_from_histogram, linear_chunks, split_buffered, split_plain, Bin, BufferConfig, Parity,
    RADIX,
};
use crate::record::{as_records_mut, with_record_type, Record, RecordLayout};
use crate::small_sorts::{is_tiny, sort_records, TinyPolicy};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulerConfig {
    /// Total threads, the caller's included.
    pub threads: usize,
    pub l2_cache_bytes: usize,
    /// A bin is big when its size exceeds `num / den * N / T`.
    pub big_bin_factor: (usize, usize),
    /// Children smaller than `N / queue_cutoff_divisor` are recursed into
    /// instead of queued.
    pub queue_cutoff_divisor: usize,
    /// The first pass uses `chunk_multiplier * T` chunks ...
    pub chunk_multiplier: usize,
    /// ... the first of which holds `N / (first_chunk_divisor * T)` records.
    pub first_chunk_divisor: usize,
    pub buffer: BufferConfig,
    pub tiny: TinyPolicy,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            threads: thread::available_parallelism().map_or(1, |n| n.get()),
            l2_cache_bytes: 262_144,
            big_bin_factor: (2, 3),
            queue_cutoff_divisor: 4096,
            chunk_multiplier: 8,
            first_chunk_divisor: 64,
            buffer: BufferConfig::default(),
            tiny: TinyPolicy::default(),
        }
    }
}

impl SchedulerConfig {
    pub fn with_threads(threads: usize) -> Self {
        SchedulerConfig {
            threads,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if self.big_bin_factor.0 == 0 || self.big_bin_factor.1 == 0 {
            return bad("big_bin_factor terms must be positive");
        }
        if self.queue_cutoff_divisor == 0
            || self.chunk_multiplier == 0
            || self.first_chunk_divisor == 0
        {
            return bad("divisors and multipliers must be positive");
        }
        if !self.buffer.is_valid() {
            return bad("buffer lane size must be a positive multiple of 64 bytes");
        }
        if !self.tiny.is_valid() {
            return bad("tiny-bin thresholds must satisfy insertion <= shell <= tiny");
        }
        Ok(())
    }
}

/// Splits bins into (small, big); big iff `size > factor * n / threads`.
/// Both lists keep digit order.
pub fn classify_bins(
    bins: &[Bin],
    n: usize,
    threads: usize,
    factor: (usize, usize),
) -> (Vec<Bin>, Vec<Bin>) {
    bins.iter()
        .partition(|b| !is_big(b.len(), n, threads, factor))
}

/// `size > (num / den) * n / threads`, evaluated exactly.
#[inline]
pub fn is_big(size: usize, n: usize, threads: usize, factor: (usize, usize)) -> bool {
    let (num, den) = factor;
    size as u128 * den as u128 * threads as u128 > num as u128 * n as u128
}

/// Threads for big bins and for the small-bin queue after the first pass:
/// `T_big = min(T, ceil(1.25 * T * n_big / n))`, at least 1 when any
/// record is in a big bin, and `T_small = T - T_big`.
pub fn split_threads(n_big: usize, n: usize, threads: usize) -> (usize, usize) {
    if n_big == 0 || n == 0 {
        return (0, threads);
    }
    let num = 5 * threads as u128 * n_big as u128;
    let den = 4 * n as u128;
    let t_big = (num.div_ceil(den) as usize).clamp(1, threads);
    (t_big, threads - t_big)
}

/// Whether a worker finishes a child bin of `len` records itself instead
/// of queueing it: `len < n / divisor`, evaluated exactly.
#[inline]
pub fn recurses_inline(len: usize, n: usize, divisor: usize) -> bool {
    (len as u128) * (divisor as u128) < n as u128
}

/// Counters describing one sort run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SortStats {
    pub n: usize,
    pub threads: usize,
    pub first_pass_big_bins: usize,
    pub first_pass_small_bins: usize,
    /// Records in big bins after the first pass.
    pub n_big: usize,
    pub t_big: usize,
    pub t_small: usize,
    pub big_partition_passes: usize,
    pub tasks_queued: usize,
    pub tasks_processed: usize,
    pub msd_splits: usize,
    pub inline_recursions: usize,
    pub tiny_sorts: usize,
}

/// Sorts `data` (packed records of `layout`) by key, ascending.
///
/// Allocates one auxiliary array of the same size; if that fails the input
/// is left untouched and [`Error::Resource`] is returned.
pub fn sort(data: &mut [u8], layout: RecordLayout, cfg: &SchedulerConfig) -> Result<()> {
    sort_with_stats(data, layout, cfg).map(|_| ())
}

pub fn sort_with_stats(
    data: &mut [u8],
    layout: RecordLayout,
    cfg: &SchedulerConfig,
) -> Result<SortStats> {
    cfg.validate()?;
    layout.count(data.len())?;
    with_record_type!(layout, T => sort_records_typed(as_records_mut::<T>(data), cfg))
}

pub(crate) fn sort_records_typed<T: Record>(
    data: &mut [T],
    cfg: &SchedulerConfig,
) -> Result<SortStats> {
    let n = data.len();
    let mut stats = SortStats {
        n,
        threads: cfg.threads,
        ..Default::default()
    };
    if n <= 1 {
        return Ok(stats);
    }
    let mut aux: Vec<MaybeUninit<T>> = Vec::new();
    aux.try_reserve_exact(n).map_err(|_| Error::Resource {
        what: "auxiliary array",
        bytes: n * T::SIZE,
    })?;
    // SAFETY: MaybeUninit needs no initialization; every auxiliary range is
    // written by a split before it is read.
    unsafe { aux.set_len(n) };

    let sorter = Sorter {
        arrays: WorkArrays {
            primary: data.as_mut_ptr(),
            aux: aux.as_mut_ptr() as *mut T,
            n,
        },
        n,
        cfg,
        counters: Counters::default(),
    };
    sorter.first_pass(&mut stats);
    sorter.counters.fill(&mut stats);
    Ok(stats)
}

/// Raw views of the two working arrays.
struct WorkArrays<T> {
    primary: *mut T,
    aux: *mut T,
    n: usize,
}

// SAFETY: access is partitioned by bin ranges; see the module docs.
unsafe impl<T: Send> Send for WorkArrays<T> {}
unsafe impl<T: Send> Sync for WorkArrays<T> {}

impl<T: Record> WorkArrays<T> {
    #[inline]
    fn base(&self, parity: Parity) -> *mut T {
        match parity {
            Parity::Primary => self.primary,
            Parity::Auxiliary => self.aux,
        }
    }

    /// # Safety
    ///
    /// The caller must own `range` in the array of `parity` exclusively.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    unsafe fn slice(&self, parity: Parity, range: Range<usize>) -> &mut [T] {
        debug_assert!(range.start <= range.end && range.end <= self.n);
        std::slice::from_raw_parts_mut(self.base(parity).add(range.start), range.len())
    }

    /// Source (where the bin lives) and destination (the other array).
    ///
    /// # Safety
    ///
    /// As for [`WorkArrays::slice`], in both arrays.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    unsafe fn pair(&self, bin: &Bin) -> (&[T], &mut [T]) {
        (
            self.slice(bin.parity, bin.range()),
            self.slice(bin.parity.flip(), bin.range()),
        )
    }
}

#[derive(Default)]
struct Counters {
    big_partition_passes: AtomicUsize,
    tasks_queued: AtomicUsize,
    tasks_processed: AtomicUsize,
    msd_splits: AtomicUsize,
    inline_recursions: AtomicUsize,
    tiny_sorts: AtomicUsize,
}

impl Counters {
    fn bump(c: &AtomicUsize) {
        c.fetch_add(1, Ordering::Relaxed);
    }

    fn fill(&self, s: &mut SortStats) {
        s.big_partition_passes = self.big_partition_passes.load(Ordering::Relaxed);
        s.tasks_queued = self.tasks_queued.load(Ordering::Relaxed);
        s.tasks_processed = self.tasks_processed.load(Ordering::Relaxed);
        s.msd_splits = self.msd_splits.load(Ordering::Relaxed);
        s.inline_recursions = self.inline_recursions.load(Ordering::Relaxed);
        s.tiny_sorts = self.tiny_sorts.load(Ordering::Relaxed);
    }
}

struct Sorter<'a, T> {
    arrays: WorkArrays<T>,
    n: usize,
    cfg: &'a SchedulerConfig,
    counters: Counters,
}

impl<T: Record> Sorter<'_, T> {
    #[inline]
    fn big(&self, size: usize) -> bool {
        is_big(size, self.n, self.cfg.threads, self.cfg.big_bin_factor)
    }

    fn enqueue(&self, queue: &TaskQueue, bin: Bin, parent_size: Option<usize>) {
        Counters::bump(&self.counters.tasks_queued);
        queue.push(Task { bin, parent_size });
    }

    /// Puts a bin in final order into the caller's array.
    fn finalize(&self, bin: &Bin) {
        if bin.parity == Parity::Auxiliary && !bin.is_empty() {
            // SAFETY: the bin's range is owned by the current thread.
            unsafe {
                let (src, dst) = self.arrays.pair(bin);
                dst.copy_from_slice(src);
            }
        }
    }

    /// Finishes a tiny bin with a comparison sort in the caller's array.
    fn sort_tiny(&self, bin: &Bin) {
        self.finalize(bin);
        if bin.len() > 1 {
            Counters::bump(&self.counters.tiny_sorts);
            // SAFETY: the bin's range is owned by the current thread.
            let v = unsafe { self.arrays.slice(Parity::Primary, bin.range()) };
            sort_records(v, &self.cfg.tiny);
        }
    }

    fn first_pass(&self, stats: &mut SortStats) {
        let threads = self.cfg.threads;
        let root = Bin {
            start: 0,
            end: self.n,
            next_byte: Some(T::KEY - 1),
            parity: Parity::Primary,
        };
        let byte = T::KEY - 1;
        let chunks = linear_chunks(
            self.n,
            self.cfg.chunk_multiplier * threads,
            self.cfg.first_chunk_divisor * threads,
        );
        // SAFETY: the whole array is owned by the first pass.
        let h = unsafe {
            let (src, dst) = self.arrays.pair(&root);
            split_buffered(src, dst, byte, &chunks, threads, self.cfg.buffer)
        };
        let bins = bins_from_histogram(&h, 0, byte, Parity::Auxiliary);
        if byte == 0 {
            bins.iter().for_each(|b| self.finalize(b));
            return;
        }

        let (small, big) = classify_bins(&bins, self.n, threads, self.cfg.big_bin_factor);
        let n_big: usize = big.iter().map(Bin::len).sum();
        let (t_big, t_small) = split_threads(n_big, self.n, threads);
        stats.first_pass_big_bins = big.len();
        stats.first_pass_small_bins = small.iter().filter(|b| !b.is_empty()).count();
        stats.n_big = n_big;
        stats.t_big = t_big;
        stats.t_small = t_small;

        let small_queue = TaskQueue::new();
        let big_queue = TaskQueue::new();
        for b in small.iter().filter(|b| !b.is_empty()) {
            self.enqueue(&small_queue, *b, None);
        }
        small_queue.close();

        thread::scope(|s| {
            // The calling thread counts towards T: it runs the big passes and
            // then works the queues, unless there is nothing big to do.
            let spawned_small = if t_big == 0 { t_small - 1 } else { t_small };
            for _ in 0..spawned_small {
                s.spawn(|| self.worker(&small_queue, &big_queue));
            }
            if t_big > 0 {
                for b in &big {
                    self.big_partition_pass(b, t_big, &big_queue);
                }
                big_queue.close();
                for _ in 1..t_big {
                    s.spawn(|| self.worker(&big_queue, &small_queue));
                }
                self.worker(&big_queue, &small_queue);
            } else {
                big_queue.close();
                self.worker(&small_queue, &big_queue);
            }
        });
    }

    /// Drains `own` first, then helps with `other` until both are done.
    fn worker(&self, own: &TaskQueue, other: &TaskQueue) {
        for q in [own, other] {
            process_bins(q, |task| self.run_task(q, task));
        }
    }

    fn run_task(&self, queue: &TaskQueue, task: Task) {
        Counters::bump(&self.counters.tasks_processed);
        if is_tiny(task.bin.len(), task.parent_size, &self.cfg.tiny) {
            self.sort_tiny(&task.bin);
        } else {
            self.msd_radix_bins(&task.bin, queue);
        }
    }

    /// Splits a big bin with `threads` threads. Big children recurse at
    /// once; the rest go to `queue`.
    fn big_partition_pass(&self, bin: &Bin, threads: usize, queue: &TaskQueue) {
        Counters::bump(&self.counters.big_partition_passes);
        let byte = bin.next_byte.expect("big bins always have a digit left");
        let chunks = linear_chunks(
            bin.len(),
            self.cfg.chunk_multiplier * threads,
            self.cfg.first_chunk_divisor * threads,
        );
        // SAFETY: the calling thread owns the big bin.
        let h = unsafe {
            let (src, dst) = self.arrays.pair(bin);
            split_buffered(src, dst, byte, &chunks, threads, self.cfg.buffer)
        };
        let children = bins_from_histogram(&h, bin.start, byte, bin.parity.flip());
        if byte == 0 {
            children.iter().for_each(|c| self.finalize(c));
            return;
        }
        for c in children.iter().filter(|c| !c.is_empty()) {
            if self.big(c.len()) {
                self.big_partition_pass(c, threads, queue);
            } else {
                self.enqueue(queue, *c, Some(bin.len()));
            }
        }
    }

    /// Single-threaded split of a small bin and dispatch of its children.
    fn msd_radix_bins(&self, bin: &Bin, queue: &TaskQueue) {
        if bin.len() <= 1 {
            self.finalize(bin);
            return;
        }
        let byte = bin.next_byte.expect("queued bins always have a digit left");
        Counters::bump(&self.counters.msd_splits);
        // SAFETY: the current thread owns `bin`.
        let h = unsafe {
            let (src, dst) = self.arrays.pair(bin);
            if bin.len() * T::SIZE <= self.cfg.l2_cache_bytes / 2 {
                split_plain(src, dst, byte)
            } else {
                let whole = 0..bin.len();
                split_buffered(
                    src,
                    dst,
                    byte,
                    std::slice::from_ref(&whole),
                    1,
                    self.cfg.buffer,
                )
            }
        };
        let children = bins_from_histogram(&h, bin.start, byte, bin.parity.flip());
        if byte == 0 {
            children.iter().for_each(|c| self.finalize(c));
            return;
        }
        for c in children.iter().filter(|c| !c.is_empty()) {
            if is_tiny(c.len(), Some(bin.len()), &self.cfg.tiny) {
                self.sort_tiny(c);
            } else if recurses_inline(c.len(), self.n, self.cfg.queue_cutoff_divisor) {
                Counters::bump(&self.counters.inline_recursions);
                self.msd_radix_bins(c, queue);
            } else {
                self.enqueue(queue, *c, Some(bin.len()));
            }
        }
    }
}

const _: () = assert!(RADIX == 256);
