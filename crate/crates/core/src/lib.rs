//! Parallel hybrid MSD radix sort for fixed-size records.
//!
//! Records are `8..=32` bytes with an 8- or 16-byte big-endian key at the
//! front. [`sort`] runs a radix-256 MSD sort whose first pass and big bins
//! are split by all threads through write-combining buffers, whose small
//! bins are handed to worker threads through size-ordered task queues, and
//! whose tiny bins are finished by comparison sorts.
//!
//! ```
//! use raduls::{sort, RecordLayout, SchedulerConfig};
//!
//! let layout = RecordLayout::new(16, 8).unwrap();
//! let mut data = Vec::new();
//! for k in [3u64, 1, 2] {
//!     data.extend_from_slice(&k.to_be_bytes());
//!     data.extend_from_slice(&[0u8; 8]);
//! }
//! sort(&mut data, layout, &SchedulerConfig::with_threads(2)).unwrap();
//! assert_eq!(data[7], 1);
//! assert_eq!(data[16 + 7], 2);
//! ```

pub mod datagen;
pub mod error;
pub mod lsd;
pub mod radix;
pub mod record;
pub mod scheduler;
pub mod small_sorts;
pub mod verify;

pub use error::{Error, Result};
pub use lsd::{lsd_sort, LsdConfig};
pub use record::{compare_keys, digit, RecordArray, RecordLayout};
pub use scheduler::{sort, sort_with_stats, SchedulerConfig, SortStats};
pub use small_sorts::TinyPolicy;
