//! Injected time and background-work abstractions. The serving layer
//! never reads the wall clock ambiently, so TTL and refresh behavior are
//! fully testable with a manual clock.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Time source: unix seconds for TTL decisions plus a monotonic
/// millisecond counter for latency measurement.
pub trait Clock: Send + Sync {
    fn now_unix(&self) -> i64;
    fn monotonic_millis(&self) -> f64;
}

/// Real time.
pub struct SystemClock {
    start: std::time::Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { start: std::time::Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_unix(&self) -> i64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)
    }

    fn monotonic_millis(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Hand-driven clock for tests and the browser demo.
#[derive(Default)]
pub struct ManualClock {
    state: Mutex<(i64, f64)>,
}

impl ManualClock {
    pub fn at(unix: i64) -> Self {
        ManualClock { state: Mutex::new((unix, 0.0)) }
    }

    pub fn advance_secs(&self, secs: i64) {
        let mut s = self.state.lock().unwrap();
        s.0 += secs;
        s.1 += secs as f64 * 1e3;
    }
}

impl Clock for ManualClock {
    fn now_unix(&self) -> i64 {
        self.state.lock().unwrap().0
    }

    fn monotonic_millis(&self) -> f64 {
        self.state.lock().unwrap().1
    }
}

/// Runs refresh jobs. `submit` must return without executing the job
/// inline when the executor is asynchronous.
pub trait RefreshExecutor: Send + Sync {
    fn submit(&self, job: Box<dyn FnOnce() + Send>);
}

/// Runs jobs immediately on the caller's thread (tests, wasm).
pub struct InlineExecutor;

impl RefreshExecutor for InlineExecutor {
    fn submit(&self, job: Box<dyn FnOnce() + Send>) {
        job();
    }
}

/// Spawns one thread per job; fine at expansion-refresh rates.
pub struct ThreadExecutor {
    pub spawned: AtomicU64,
}

impl ThreadExecutor {
    pub fn new() -> Self {
        ThreadExecutor { spawned: AtomicU64::new(0) }
    }
}

impl Default for ThreadExecutor {
    fn default() -> Self {
        Self::new()
    }
}

impl RefreshExecutor for ThreadExecutor {
    fn submit(&self, job: Box<dyn FnOnce() + Send>) {
        self.spawned.fetch_add(1, Ordering::Relaxed);
        std::thread::spawn(job);
    }
}
