//! Deterministic parallel reductions.
//!
//! Work is cut into a fixed list of tasks that does not depend on the worker
//! count. Task results are collected in task order and combined by a fixed
//! pairwise tree, so sums are bit-identical for any number of workers.

use rayon::prelude::*;

/// Enumeration budget and worker count shared by every brute-force routine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Largest number of states any single enumeration may visit.
    pub budget: u64,
    pub workers: usize,
}

pub const DEFAULT_BUDGET: u64 = 1 << 24;

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            workers: 1,
        }
    }
}

impl EvalConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1);
        self
    }
}

/// Evaluates `f` on every task index and returns results in task order.
pub fn map_tasks<T, F>(tasks: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 || tasks <= 1 {
        return (0..tasks).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..tasks).into_par_iter().map(&f).collect()),
        Err(_) => (0..tasks).map(f).collect(),
    }
}

/// Pairwise tree reduction with a shape fixed by the input length.
pub fn tree_reduce<T: Copy>(items: &[T], zero: T, add: impl Fn(T, T) -> T + Copy) -> T {
    match items.len() {
        0 => zero,
        1 => items[0],
        n => {
            let mid = n / 2;
            add(
                tree_reduce(&items[..mid], zero, add),
                tree_reduce(&items[mid..], zero, add),
            )
        }
    }
}

/// Sums `f(range)` over consecutive chunks of `0..total`.
pub fn chunked_sum<T, F>(total: u64, chunk: u64, workers: usize, zero: T, add: impl Fn(T, T) -> T + Copy, f: F) -> T
where
    T: Copy + Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let tasks = total.div_ceil(chunk) as usize;
    let parts = map_tasks(tasks, workers, |t| {
        let start = t as u64 * chunk;
        f(start..(start + chunk).min(total))
    });
    tree_reduce(&parts, zero, add)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_are_independent_of_worker_count() {
        let f = |r: std::ops::Range<u64>| r.map(|i| 1.0 / (1.0 + i as f64)).sum::<f64>();
        let a = chunked_sum(100_000, 1000, 1, 0.0, |x, y| x + y, f);
        let b = chunked_sum(100_000, 1000, 4, 0.0, |x, y| x + y, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(tree_reduce(&[] as &[i32], 0, |a, b| a + b), 0);
        assert_eq!(chunked_sum(0, 10, 2, 0u64, |a, b| a + b, |r| r.count() as u64), 0);
        assert_eq!(chunked_sum(7, 10, 2, 0u64, |a, b| a + b, |r| r.count() as u64), 7);
    }
}
