//! Where independent runs execute. The core ships a sequential executor;
//! the lab crate adds a thread-pool one.

use alloc::boxed::Box;
use alloc::vec::Vec;

/// A unit of work handed to an [`Executor`].
pub type Job<'a, T> = Box<dyn FnOnce() -> T + Send + 'a>;

pub trait Executor {
    /// Runs every job and returns results in input order.
    fn run_all<'a, T: Send + 'a>(&self, jobs: Vec<Job<'a, T>>) -> Vec<T>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run_all<'a, T: Send + 'a>(&self, jobs: Vec<Job<'a, T>>) -> Vec<T> {
        jobs.into_iter().map(|job| job()).collect()
    }
}
