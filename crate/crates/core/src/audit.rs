//! Opt-in log of every file path the library opens for reading.
//!
//! The label-blindness check enables the log, runs the correlate and embed
//! stages, and asserts that the labels file never shows up.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

static ENABLED: AtomicBool = AtomicBool::new(false);
static READS: Mutex<Vec<PathBuf>> = Mutex::new(Vec::new());

pub fn enable() {
    ENABLED.store(true, Ordering::SeqCst);
}

pub fn disable() {
    ENABLED.store(false, Ordering::SeqCst);
}

/// Returns and clears the recorded paths.
pub fn take() -> Vec<PathBuf> {
    std::mem::take(&mut *READS.lock().unwrap())
}

pub fn record_read(path: &Path) {
    if ENABLED.load(Ordering::Relaxed) {
        let p = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        READS.lock().unwrap().push(p);
    }
}

/// `File::open` that records the path when auditing is enabled.
pub fn open(path: &Path) -> std::io::Result<std::fs::File> {
    record_read(path);
    std::fs::File::open(path)
}

pub fn read_to_string(path: &Path) -> std::io::Result<String> {
    record_read(path);
    std::fs::read_to_string(path)
}
