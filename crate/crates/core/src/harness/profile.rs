//! Wall-clock timing and peak-memory measurement around code sections.
//!
//! Peak memory comes from [`TrackingAllocator`] when a binary installs it as
//! the global allocator (heap high-water mark within the section, counted
//! process-wide). Otherwise the process peak resident set size is read from
//! `/proc/self/status`; that figure covers the whole process lifetime, not
//! just the section.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// Counting wrapper around the system allocator.
pub struct TrackingAllocator;

impl TrackingAllocator {
    fn grew(size: usize) {
        let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
        PEAK.fetch_max(now, Ordering::Relaxed);
    }
}

// SAFETY: defers every allocation to `System`, only adding atomic counters.
unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            ACTIVE.store(true, Ordering::Relaxed);
            Self::grew(layout.size());
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            ACTIVE.store(true, Ordering::Relaxed);
            Self::grew(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let new = System.realloc(ptr, layout, new_size);
        if !new.is_null() {
            if new_size >= layout.size() {
                Self::grew(new_size - layout.size());
            } else {
                CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
            }
        }
        new
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryMethod {
    HeapHighWater,
    ProcessPeakRss,
    Unavailable,
}

impl MemoryMethod {
    pub fn describe(self) -> &'static str {
        match self {
            MemoryMethod::HeapHighWater => "heap high-water mark above section entry (tracking allocator, process-wide)",
            MemoryMethod::ProcessPeakRss => "process peak resident set size (VmHWM), lifetime of the process",
            MemoryMethod::Unavailable => "no memory probe available",
        }
    }
}

pub fn memory_method() -> MemoryMethod {
    if ACTIVE.load(Ordering::Relaxed) {
        MemoryMethod::HeapHighWater
    } else if process_peak_rss().is_some() {
        MemoryMethod::ProcessPeakRss
    } else {
        MemoryMethod::Unavailable
    }
}

fn process_peak_rss() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib * 1024)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub seconds: f64,
    pub peak_bytes: Option<u64>,
}

/// Runs `f`, returning its value with elapsed monotonic time and a peak
/// memory figure from [`memory_method`].
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, Measurement) {
    let tracking = ACTIVE.load(Ordering::Relaxed);
    let (baseline, outer_peak) = if tracking {
        let base = CURRENT.load(Ordering::Relaxed);
        (base, PEAK.swap(base, Ordering::Relaxed))
    } else {
        (0, 0)
    };
    let start = Instant::now();
    let value = f();
    let seconds = start.elapsed().as_secs_f64();
    let peak_bytes = if tracking {
        let peak = PEAK.fetch_max(outer_peak, Ordering::Relaxed);
        Some(peak.saturating_sub(baseline) as u64)
    } else {
        process_peak_rss()
    };
    (value, Measurement { seconds, peak_bytes })
}
