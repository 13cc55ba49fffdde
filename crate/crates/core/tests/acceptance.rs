//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Timing criteria run at full size and take minutes.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use raduls::datagen::{generate, GenSpec};
use raduls::radix::{buffered_radix_split, linear_chunks, radix_split, BufferConfig};
use raduls::scheduler::{is_big, recurses_inline, split_threads};
use raduls::small_sorts::{is_tiny, select_sorter, TinySorter};
use raduls::verify::{digest, oracle_sort};
use raduls::{lsd_sort, sort, LsdConfig, RecordArray, RecordLayout, SchedulerConfig, TinyPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    /// The criterion's precondition does not hold on this machine.
    Skip(String),
}

type Check = fn() -> Verdict;

fn layout_name(l: RecordLayout) -> String {
    format!("{}B/{}B", l.record_size(), l.key_size())
}

fn keys_equal(a: &[u8], b: &[u8], layout: RecordLayout) -> bool {
    let (rs, ks) = (layout.record_size(), layout.key_size());
    a.len() == b.len()
        && a.chunks_exact(rs)
            .zip(b.chunks_exact(rs))
            .all(|(x, y)| x[..ks] == y[..ks])
}

fn oracle_equivalence() -> Verdict {
    const SIZES: [usize; 13] = [0, 1, 2, 31, 32, 33, 100, 180, 383, 384, 385, 1000, 100_000];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let layouts = RecordLayout::all();
    for i in 0..500 {
        let layout = layouts[i % layouts.len()];
        let n = SIZES[i % SIZES.len()];
        let threads = rng.random_range(1..=8);
        let seed = rng.random();
        let spec = if rng.random_bool(0.5) {
            GenSpec::uniform(n, layout, seed)
        } else {
            GenSpec::zipf(
                n,
                layout,
                rng.random_range(0.5..1.5),
                rng.random_range(1..=1 << 16),
                seed,
            )
        };
        let input = generate(&spec).unwrap();
        let mut got = input.as_bytes().to_vec();
        sort(&mut got, layout, &SchedulerConfig::with_threads(threads)).unwrap();
        let expected = oracle_sort(input.as_bytes(), layout);
        if !keys_equal(&got, &expected, layout)
            || digest(&got, layout) != digest(input.as_bytes(), layout)
        {
            return Verdict::Fail(format!(
                "instance {i}: n={n} {} T={threads} {spec:?}",
                layout_name(layout)
            ));
        }
    }
    Verdict::Pass("500 instances, 7 layouts x 13 sizes".into())
}

fn kernel_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let layouts = RecordLayout::all();
    let mut largest = 0;
    for i in 0..200 {
        let layout = layouts[rng.random_range(0..layouts.len())];
        // Log-uniform sizes up to 10^6 records, with the maximum forced once.
        let n = if i == 0 {
            1_000_000
        } else {
            10f64.powf(rng.random_range(0.0..6.0)) as usize
        };
        largest = largest.max(n);
        let spec = if rng.random_bool(0.5) {
            GenSpec::uniform(n, layout, rng.random())
        } else {
            GenSpec::zipf(n, layout, 0.75, rng.random_range(1..=4096), rng.random())
        };
        let src = generate(&spec).unwrap();
        let byte = rng.random_range(0..layout.key_size());
        let mut plain = vec![0u8; src.as_bytes().len()];
        let plain_bins = radix_split(src.as_bytes(), &mut plain, layout, byte);
        for t in [1, 2, 4, 8] {
            let cfg = BufferConfig::with_lane_bytes(64 * rng.random_range(1..=8));
            let chunks = linear_chunks(n, 8 * t, 64 * t);
            let mut buffered = vec![0u8; plain.len()];
            let bins =
                buffered_radix_split(src.as_bytes(), &mut buffered, layout, byte, &chunks, t, cfg);
            if buffered != plain || bins != plain_bins {
                return Verdict::Fail(format!(
                    "input {i}: n={n} {} byte={byte} T={t}",
                    layout_name(layout)
                ));
            }
        }
    }
    Verdict::Pass(format!(
        "200 inputs up to {largest} records, T in {{1,2,4,8}}"
    ))
}

fn lsd_stability() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let layouts = RecordLayout::all();
    for i in 0..100 {
        let layout = layouts[i % layouts.len()];
        let n = rng.random_range(0..=50_000);
        let input = generate(&GenSpec::zipf(n, layout, 0.75, 1 << 8, rng.random())).unwrap();
        let t = rng.random_range(1..=8);
        let cfg = if i % 2 == 0 {
            LsdConfig::lsd1(t)
        } else {
            LsdConfig::lsd4(t)
        };
        let mut got = input.as_bytes().to_vec();
        lsd_sort(&mut got, layout, &cfg).unwrap();
        if got != oracle_sort(input.as_bytes(), layout) {
            return Verdict::Fail(format!("input {i}: n={n} {} {cfg:?}", layout_name(layout)));
        }
    }
    Verdict::Pass("100 inputs, zipf universe 256, byte-identical".into())
}

fn physical_cores() -> usize {
    let logical = std::thread::available_parallelism().map_or(1, |n| n.get());
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else {
        return logical;
    };
    let mut cores = BTreeSet::new();
    let (mut phys, mut core) = (None, None);
    for line in info.lines().chain(std::iter::once("")) {
        let mut kv = line.splitn(2, ':').map(str::trim);
        match (kv.next(), kv.next()) {
            (Some("physical id"), Some(v)) => phys = Some(v.to_string()),
            (Some("core id"), Some(v)) => core = Some(v.to_string()),
            (Some(""), _) => {
                if let (Some(p), Some(c)) = (phys.take(), core.take()) {
                    cores.insert((p, c));
                }
            }
            _ => {}
        }
    }
    if cores.is_empty() {
        logical
    } else {
        cores.len()
    }
}

const M: usize = 1 << 20;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Median of three timed runs, each on a fresh copy of `input`.
fn time_sort(input: &RecordArray, work: &mut [u8], run: impl Fn(&mut [u8])) -> f64 {
    let times = (0..3)
        .map(|_| {
            work.copy_from_slice(input.as_bytes());
            let start = Instant::now();
            run(work);
            start.elapsed().as_secs_f64()
        })
        .collect();
    median(times)
}

fn raduls_time(input: &RecordArray, work: &mut [u8], threads: usize) -> f64 {
    let cfg = SchedulerConfig::with_threads(threads);
    time_sort(input, work, |d| sort(d, input.layout(), &cfg).unwrap())
}

fn uniform_64m() -> RecordArray {
    generate(&GenSpec::uniform(64 * M, RecordLayout::KEY8_DATA8, 42)).unwrap()
}

fn scaling() -> Verdict {
    let cores = physical_cores();
    let input = uniform_64m();
    let mut work = vec![0u8; input.as_bytes().len()];
    let t1 = raduls_time(&input, &mut work, 1);
    let t8 = raduls_time(&input, &mut work, 8);
    let speedup = t1 / t8;
    let detail =
        format!("speedup(8) = {speedup:.2} (T1 {t1:.2}s, T8 {t8:.2}s), {cores} physical cores");
    if cores < 8 {
        Verdict::Skip(format!("{detail}; needs >= 8 physical cores"))
    } else if speedup >= 3.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn skew() -> Verdict {
    let mut work = vec![0u8; 64 * M * 16];
    let uniform = raduls_time(&uniform_64m(), &mut work, 8);
    let zipf_input = generate(&GenSpec::zipf(
        64 * M,
        RecordLayout::KEY8_DATA8,
        0.75,
        1 << 24,
        43,
    ))
    .unwrap();
    let zipf = raduls_time(&zipf_input, &mut work, 8);
    let ratio = zipf / uniform;
    let detail = format!("zipf/uniform = {ratio:.2} ({zipf:.2}s / {uniform:.2}s), limit 2.5");
    if ratio <= 2.5 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn record_size() -> Verdict {
    let mut times = Vec::new();
    for rs in [8, 32] {
        let layout = RecordLayout::new(rs, 8).unwrap();
        let input = generate(&GenSpec::uniform(32 * M, layout, 44)).unwrap();
        let mut work = vec![0u8; input.as_bytes().len()];
        times.push(raduls_time(&input, &mut work, 8));
    }
    let ratio = times[1] / times[0];
    let detail = format!(
        "t(32B)/t(8B) = {ratio:.2} ({:.2}s / {:.2}s), limit 3.5",
        times[1], times[0]
    );
    if ratio < 3.5 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn baseline() -> Verdict {
    let input = uniform_64m();
    let layout = input.layout();
    let mut work = vec![0u8; input.as_bytes().len()];
    let r = raduls_time(&input, &mut work, 8);
    let l1 = time_sort(&input, &mut work, |d| {
        lsd_sort(d, layout, &LsdConfig::lsd1(8)).unwrap();
    });
    let l4 = time_sort(&input, &mut work, |d| {
        lsd_sort(d, layout, &LsdConfig::lsd4(8)).unwrap();
    });
    let detail = format!("raduls {r:.2}s, lsd1 {l1:.2}s, lsd4 {l4:.2}s");
    if r < l1 && r < l4 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn policy_tables() -> Verdict {
    let p = TinyPolicy::default();
    // (bin_size, parent_size, tiny)
    let tiny_table: &[(usize, Option<usize>, bool)] = &[
        (0, None, true),
        (383, None, true),
        (384, None, false),
        (300, Some(1000), true),
        (100, Some(10_000), false),
        (31, Some(10_000), true),
        (32, Some(10_000), false),
        // Narrowing applies only when parent > 16 * size.
        (383, Some(16 * 383), true),
        (383, Some(16 * 383 + 1), false),
        (32, Some(16 * 32), true),
        (32, Some(16 * 32 + 1), false),
        (384, Some(384), false),
    ];
    for &(size, parent, want) in tiny_table {
        if is_tiny(size, parent, &p) != want {
            return Verdict::Fail(format!("is_tiny({size}, {parent:?}) != {want}"));
        }
    }
    let sorter_table = [
        (32, 8, TinySorter::Insertion),
        (33, 8, TinySorter::Shell),
        (140, 8, TinySorter::Shell),
        (141, 8, TinySorter::Introspective),
        (180, 16, TinySorter::Shell),
        (181, 16, TinySorter::Introspective),
        (383, 16, TinySorter::Introspective),
    ];
    for (len, ks, want) in sorter_table {
        if select_sorter(len, ks, &p) != want {
            return Verdict::Fail(format!("select_sorter({len}, {ks}) != {want:?}"));
        }
    }
    // (n_big, n, T, T_big): T_big = clamp(ceil(1.25 * T * n_big / n), 1, T).
    let split_table = [
        (0, 1000, 8, 0),
        (1, 1000, 8, 1),
        (100, 1000, 8, 1),
        (101, 1000, 8, 2),
        (200, 1000, 8, 2),
        (201, 1000, 8, 3),
        (800, 1000, 8, 8),
        (1000, 1000, 8, 8),
        (1000, 1000, 1, 1),
        (500, 1000, 3, 2),
    ];
    for (n_big, n, t, want) in split_table {
        if split_threads(n_big, n, t) != (want, t - want) {
            return Verdict::Fail(format!(
                "split_threads({n_big}, {n}, {t}) = {:?}",
                split_threads(n_big, n, t)
            ));
        }
    }
    // Big iff size > 2N/3T; N = 3000, T = 4 gives 500.
    let big_table = [(500, false), (501, true), (0, false), (3000, true)];
    for (size, want) in big_table {
        if is_big(size, 3000, 4, (2, 3)) != want {
            return Verdict::Fail(format!("is_big({size}, 3000, 4) != {want}"));
        }
    }
    // Inline recursion iff size < N/4096; N = 2^22 gives 1024.
    let inline_table = [(1023, true), (1024, false), (0, true)];
    for (size, want) in inline_table {
        if recurses_inline(size, 1 << 22, 4096) != want {
            return Verdict::Fail(format!("recurses_inline({size}, 2^22) != {want}"));
        }
    }
    Verdict::Pass("is_tiny, sorter choice, split_threads, 2N/3T and N/4096 boundaries".into())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("kernel equivalence", kernel_equivalence),
        ("lsd stability", lsd_stability),
        ("scaling speedup(8) >= 3.0", scaling),
        ("skew robustness", skew),
        ("record size growth", record_size),
        ("baseline ordering", baseline),
        ("policy tables", policy_tables),
    ];
    let logical = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!(
        "environment: {} physical cores, {logical} logical",
        physical_cores()
    );
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name}: {detail} [{secs:.1}s]");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
