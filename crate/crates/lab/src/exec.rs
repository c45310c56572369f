//! Thread-pool executor for independent runs.

use rayon::prelude::*;
use yamabe_core::executor::{Executor, Job};

/// Runs jobs on the current rayon pool, preserving input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn run_all<'a, T: Send + 'a>(&self, jobs: Vec<Job<'a, T>>) -> Vec<T> {
        jobs.into_par_iter().map(|job| job()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order() {
        let jobs: Vec<Job<'_, usize>> = (0..16usize)
            .map(|i| Box::new(move || i * i) as Job<'_, usize>)
            .collect();
        assert_eq!(
            Rayon.run_all(jobs),
            (0..16).map(|i| i * i).collect::<Vec<_>>()
        );
    }
}
