//! Comparison sorters for tiny bins and the policy that picks them.
//!
//! A bin below the tiny threshold is cheaper to finish with a comparison
//! sort than with further radix passes. Among tiny bins the smallest use
//! insertion sort, mid-sized ones a two-gap Shell sort and the rest an
//! introspective sort.

use crate::record::{as_records_mut, with_record_type, Record, RecordLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TinyPolicy {
    /// Bins with fewer records are tiny.
    pub tiny_threshold: usize,
    /// Bins up to this size use insertion sort.
    pub insertion_threshold: usize,
    /// Fixed Shell/introsort boundary; `None` derives it from the key size.
    pub intro_vs_shell_override: Option<usize>,
    /// Parent-to-child size ratio above which the narrowed threshold applies.
    pub narrowing_factor_limit: usize,
    pub narrowed_tiny_threshold: usize,
}

impl Default for TinyPolicy {
    fn default() -> Self {
        TinyPolicy {
            tiny_threshold: 384,
            insertion_threshold: 32,
            intro_vs_shell_override: None,
            narrowing_factor_limit: 16,
            narrowed_tiny_threshold: 32,
        }
    }
}

impl TinyPolicy {
    /// Largest bin size handled by Shell sort: `100 + 5 * key_size`,
    /// clamped to `[100, 180]` (140 for 8-byte keys, 180 for 16-byte keys).
    pub fn intro_vs_shell_threshold(&self, key_size: usize) -> usize {
        self.intro_vs_shell_override
            .unwrap_or_else(|| (100 + 5 * key_size).clamp(100, 180))
    }

    pub fn is_valid(&self) -> bool {
        [8, 16].iter().all(|&k| {
            let s = self.intro_vs_shell_threshold(k);
            self.insertion_threshold <= s && s <= self.tiny_threshold
        }) && self.narrowed_tiny_threshold <= self.tiny_threshold
    }
}

/// Whether a bin of `bin_size` records, produced from a parent bin of
/// `parent_size` records, should go to a comparison sort.
///
/// When the parent is more than `narrowing_factor_limit` times larger the
/// next radix pass is expected to pay off, so the narrowed threshold is
/// used. Bins without a parent (first pass) use the default threshold.
pub fn is_tiny(bin_size: usize, parent_size: Option<usize>, policy: &TinyPolicy) -> bool {
    let threshold = match parent_size {
        Some(p) if p > policy.narrowing_factor_limit * bin_size => policy.narrowed_tiny_threshold,
        _ => policy.tiny_threshold,
    };
    bin_size < threshold
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TinySorter {
    Insertion,
    Shell,
    Introspective,
}

pub fn select_sorter(len: usize, key_size: usize, policy: &TinyPolicy) -> TinySorter {
    if len <= policy.insertion_threshold {
        TinySorter::Insertion
    } else if len <= policy.intro_vs_shell_threshold(key_size) {
        TinySorter::Shell
    } else {
        TinySorter::Introspective
    }
}

/// Sorts `v` with the sorter [`select_sorter`] picks for its length.
pub fn comparison_sort<T, F>(v: &mut [T], key_size: usize, policy: &TinyPolicy, mut is_less: F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    match select_sorter(v.len(), key_size, policy) {
        TinySorter::Insertion => insertion_sort(v, &mut is_less),
        TinySorter::Shell => shell_sort(v, &mut is_less),
        TinySorter::Introspective => {
            introspective_sort_with(v, policy.insertion_threshold, &mut is_less)
        }
    }
}

pub(crate) fn sort_records<T: Record>(v: &mut [T], policy: &TinyPolicy) {
    comparison_sort(v, T::KEY, policy, |a, b| a.key_lt(b));
}

/// Byte-level [`comparison_sort`] over a packed record buffer.
pub fn comparison_sort_bytes(bytes: &mut [u8], layout: RecordLayout, policy: &TinyPolicy) {
    with_record_type!(layout, T => sort_records(as_records_mut::<T>(bytes), policy))
}

/// Stable insertion sort.
pub fn insertion_sort<T, F>(v: &mut [T], is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    gapped_insertion(v, 1, is_less);
}

/// Shell sort with the increment sequence `8, 1`.
pub fn shell_sort<T, F>(v: &mut [T], is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    gapped_insertion(v, 8, is_less);
    gapped_insertion(v, 1, is_less);
}

#[inline]
fn gapped_insertion<T, F>(v: &mut [T], gap: usize, is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    for i in gap..v.len() {
        let x = v[i];
        let mut j = i;
        while j >= gap && is_less(&x, &v[j - gap]) {
            v[j] = v[j - gap];
            j -= gap;
        }
        v[j] = x;
    }
}

/// Quicksort with median-of-three pivots, a `2 * floor(log2 n)` depth limit
/// guarded by heapsort, and insertion sort below 32 elements.
pub fn introspective_sort<T, F>(v: &mut [T], is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    introspective_sort_with(v, TinyPolicy::default().insertion_threshold, is_less);
}

fn introspective_sort_with<T, F>(v: &mut [T], small: usize, is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    if v.len() < 2 {
        return;
    }
    let depth = 2 * v.len().ilog2() as usize;
    intro_loop(v, depth, small.max(3), is_less);
}

fn intro_loop<T, F>(mut v: &mut [T], mut depth: usize, small: usize, is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    loop {
        if v.len() <= small {
            insertion_sort(v, is_less);
            return;
        }
        if depth == 0 {
            heapsort(v, is_less);
            return;
        }
        depth -= 1;
        let cut = partition(v, is_less);
        let (left, right) = v.split_at_mut(cut);
        if left.len() < right.len() {
            intro_loop(left, depth, small, is_less);
            v = right;
        } else {
            intro_loop(right, depth, small, is_less);
            v = left;
        }
    }
}

/// Hoare partition around the median of the first, middle and last
/// elements. Returns `cut` with `v[..cut] <= pivot <= v[cut..]`, both sides
/// non-empty for `v.len() >= 3`.
fn partition<T, F>(v: &mut [T], is_less: &mut F) -> usize
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    let n = v.len();
    let mid = n / 2;
    if is_less(&v[mid], &v[0]) {
        v.swap(mid, 0);
    }
    if is_less(&v[n - 1], &v[mid]) {
        v.swap(n - 1, mid);
        if is_less(&v[mid], &v[0]) {
            v.swap(mid, 0);
        }
    }
    let pivot = v[mid];
    let mut i = 0;
    let mut j = n - 1;
    loop {
        while is_less(&v[i], &pivot) {
            i += 1;
        }
        while is_less(&pivot, &v[j]) {
            j -= 1;
        }
        if i >= j {
            return j + 1;
        }
        v.swap(i, j);
        i += 1;
        j -= 1;
    }
}

pub fn heapsort<T, F>(v: &mut [T], is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    let n = v.len();
    for i in (0..n / 2).rev() {
        sift_down(v, i, n, is_less);
    }
    for end in (1..n).rev() {
        v.swap(0, end);
        sift_down(v, 0, end, is_less);
    }
}

fn sift_down<T, F>(v: &mut [T], mut node: usize, end: usize, is_less: &mut F)
where
    T: Copy,
    F: FnMut(&T, &T) -> bool,
{
    loop {
        let mut child = 2 * node + 1;
        if child >= end {
            return;
        }
        if child + 1 < end && is_less(&v[child], &v[child + 1]) {
            child += 1;
        }
        if !is_less(&v[node], &v[child]) {
            return;
        }
        v.swap(node, child);
        node = child;
    }
}
