//! Indexed task execution.
//!
//! Monte Carlo work is expressed as `f(index)` over `0..count`. Results are
//! always returned in index order and each task draws from its own
//! substream, so any executor produces identical output.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
