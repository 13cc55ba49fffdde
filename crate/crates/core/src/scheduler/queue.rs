use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Deref;
use std::sync::{Condvar, Mutex};

use crate::radix::Bin;

/// A bin waiting for a worker, prioritized by its size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Task {
    pub bin: Bin,
    /// Size of the bin this one was split from; `None` for first-pass bins.
    pub parent_size: Option<usize>,
}

impl Task {
    #[inline]
    pub fn priority(&self) -> usize {
        self.bin.len()
    }
}

impl Ord for Task {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority()
            .cmp(&other.priority())
            .then_with(|| other.bin.start.cmp(&self.bin.start))
    }
}

impl PartialOrd for Task {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct State {
    heap: BinaryHeap<Task>,
    /// Tasks popped but not yet finished; they may still push children.
    active: usize,
    closed: bool,
    pushed: usize,
    finished: usize,
}

/// Blocking max-priority queue of [`Task`]s shared by worker threads.
///
/// `pop` hands out the largest task. It blocks while the queue is empty and
/// more work may still arrive, i.e. while the queue is open or some popped
/// task is still running (running tasks may push their children back).
/// Once closed, empty and idle, `pop` returns `None` to every caller.
#[derive(Default)]
pub struct TaskQueue {
    state: Mutex<State>,
    cond: Condvar,
}

/// A popped task; dropping it marks the task finished.
pub struct TaskGuard<'a> {
    queue: &'a TaskQueue,
    task: Task,
}

impl Deref for TaskGuard<'_> {
    type Target = Task;

    fn deref(&self) -> &Task {
        &self.task
    }
}

impl Drop for TaskGuard<'_> {
    fn drop(&mut self) {
        let mut st = self.queue.state.lock().unwrap();
        st.active -= 1;
        st.finished += 1;
        if st.active == 0 && st.heap.is_empty() {
            self.queue.cond.notify_all();
        }
    }
}

impl TaskQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, task: Task) {
        let mut st = self.state.lock().unwrap();
        st.heap.push(task);
        st.pushed += 1;
        drop(st);
        self.cond.notify_one();
    }

    /// Signals that no producer outside the running tasks will push again.
    pub fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.cond.notify_all();
    }

    pub fn pop(&self) -> Option<TaskGuard<'_>> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(task) = st.heap.pop() {
                st.active += 1;
                return Some(TaskGuard { queue: self, task });
            }
            if st.closed && st.active == 0 {
                return None;
            }
            st = self.cond.wait(st).unwrap();
        }
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (tasks pushed, tasks finished) so far.
    pub fn counts(&self) -> (usize, usize) {
        let st = self.state.lock().unwrap();
        (st.pushed, st.finished)
    }
}

/// Worker loop: runs `handle` on the largest task until `queue` is closed
/// and drained. Returns the number of tasks handled.
pub fn process_bins<F>(queue: &TaskQueue, mut handle: F) -> usize
where
    F: FnMut(Task),
{
    let mut n = 0;
    while let Some(task) = queue.pop() {
        handle(*task);
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radix::Parity;
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
    use std::thread;

    fn task(start: usize, len: usize) -> Task {
        Task {
            bin: Bin {
                start,
                end: start + len,
                next_byte: Some(0),
                parity: Parity::Primary,
            },
            parent_size: None,
        }
    }

    #[test]
    fn empty_closed_queue_terminates() {
        let q = TaskQueue::new();
        q.close();
        assert_eq!(process_bins(&q, |_| panic!("no tasks")), 0);
    }

    #[test]
    fn one_task_one_call() {
        let q = TaskQueue::new();
        q.push(task(0, 5));
        q.close();
        let mut seen = Vec::new();
        process_bins(&q, |t| seen.push(t));
        assert_eq!(seen, vec![task(0, 5)]);
        assert_eq!(q.counts(), (1, 1));
    }

    #[test]
    fn pops_largest_first() {
        let q = TaskQueue::new();
        for (i, len) in [3usize, 10, 1, 7, 10, 0].iter().enumerate() {
            q.push(task(i * 100, *len));
        }
        q.close();
        let mut order = Vec::new();
        process_bins(&q, |t| order.push(t.priority()));
        assert_eq!(order, vec![10, 10, 7, 3, 1, 0]);
    }

    #[test]
    fn running_task_children_keep_workers_alive() {
        // Each task of size s > 1 pushes two children of sizes s/2 and s - s/2.
        // Leaves are counted; the total must equal the root size.
        let q = TaskQueue::new();
        q.push(task(0, 4096));
        q.close();
        let leaves = AtomicUsize::new(0);
        let handled = AtomicUsize::new(0);
        thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    let n = process_bins(&q, |t| {
                        let len = t.priority();
                        if len == 1 {
                            leaves.fetch_add(1, AtomicOrdering::Relaxed);
                        } else {
                            q.push(task(t.bin.start, len / 2));
                            q.push(task(t.bin.start + len / 2, len - len / 2));
                        }
                    });
                    handled.fetch_add(n, AtomicOrdering::Relaxed);
                });
            }
        });
        assert_eq!(leaves.load(AtomicOrdering::Relaxed), 4096);
        let (pushed, finished) = q.counts();
        assert_eq!(pushed, 2 * 4096 - 1);
        assert_eq!(finished, pushed);
        assert_eq!(handled.load(AtomicOrdering::Relaxed), pushed);
    }

    #[test]
    fn many_tasks_each_executed_once() {
        let q = TaskQueue::new();
        let hits: Vec<AtomicUsize> = (0..10_000).map(|_| AtomicUsize::new(0)).collect();
        thread::scope(|s| {
            let workers: Vec<_> = (0..6)
                .map(|_| {
                    s.spawn(|| {
                        process_bins(&q, |t| {
                            hits[t.bin.start].fetch_add(1, AtomicOrdering::Relaxed);
                        })
                    })
                })
                .collect();
            // Producer pushes while workers are already blocked on pop.
            for i in 0..10_000 {
                q.push(task(i, i % 97));
            }
            q.close();
            let total: usize = workers.into_iter().map(|w| w.join().unwrap()).sum();
            assert_eq!(total, 10_000);
        });
        assert!(hits.iter().all(|h| h.load(AtomicOrdering::Relaxed) == 1));
    }
}
