//! Fixed task partition for sample budgets.
//!
//! A budget of `n` trajectories is cut into tasks of [`TASK_SIZE`]
//! consecutive trajectory ids. The partition depends on `n` only; tasks are
//! executed on whatever rayon pool is current and collected back in task
//! order, so reductions over the returned vector are independent of the
//! number of workers.

use rayon::prelude::*;

pub const TASK_SIZE: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskRange {
    pub task: u64,
    /// First trajectory id (inclusive).
    pub start: u64,
    /// Last trajectory id (exclusive).
    pub end: u64,
}

impl TaskRange {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

pub fn partition(samples: u64) -> Vec<TaskRange> {
    let tasks = samples.div_ceil(TASK_SIZE);
    (0..tasks).map(|task| TaskRange { task, start: task * TASK_SIZE, end: ((task + 1) * TASK_SIZE).min(samples) }).collect()
}

/// Runs `f` once per task on the current pool; results come back in task order.
pub fn run_tasks<T, F>(samples: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(TaskRange) -> T + Sync + Send,
{
    partition(samples).into_par_iter().map(f).collect()
}
