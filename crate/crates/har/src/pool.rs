//! Fixed-size worker pool over a FIFO task queue. Tasks are share-nothing
//! closures; results come back in task order regardless of which worker ran
//! what.

use std::collections::VecDeque;
use std::sync::Mutex;

/// Run all tasks on `n_workers` threads and return their outputs in task
/// order. With one worker this degenerates to a sequential loop on a spawned
/// thread, so timing comparisons see the same per-task overhead.
pub fn run_tasks<T, F>(n_workers: usize, tasks: Vec<F>) -> Vec<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let n_workers = n_workers.max(1);
    let n_tasks = tasks.len();
    let queue: Mutex<VecDeque<(usize, F)>> = Mutex::new(tasks.into_iter().enumerate().collect());
    let results: Vec<Mutex<Option<T>>> = (0..n_tasks).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..n_workers.min(n_tasks) {
            scope.spawn(|| loop {
                let next = queue.lock().expect("task queue poisoned").pop_front();
                match next {
                    Some((index, task)) => {
                        let output = task();
                        *results[index].lock().expect("result slot poisoned") = Some(output);
                    }
                    None => break,
                }
            });
        }
    });

    results
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("worker exited without storing a result")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn results_come_back_in_task_order() {
        for workers in [1, 2, 4, 8] {
            let tasks: Vec<_> = (0..20)
                .map(|i| {
                    move || {
                        // stagger so completion order differs from submit order
                        std::thread::sleep(std::time::Duration::from_millis((20 - i) % 5));
                        i * i
                    }
                })
                .collect();
            let out = run_tasks(workers, tasks);
            assert_eq!(out, (0..20).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn every_task_runs_exactly_once() {
        let counter = AtomicUsize::new(0);
        let tasks: Vec<_> = (0..50)
            .map(|_| {
                let counter = &counter;
                move || counter.fetch_add(1, Ordering::SeqCst)
            })
            .collect();
        let out = run_tasks(4, tasks);
        assert_eq!(counter.load(Ordering::SeqCst), 50);
        let mut seen: Vec<usize> = out;
        seen.sort_unstable();
        assert_eq!(seen, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn empty_task_list_and_excess_workers() {
        let out: Vec<i32> = run_tasks(4, Vec::<fn() -> i32>::new());
        assert!(out.is_empty());
        let out = run_tasks(16, vec![|| 7]);
        assert_eq!(out, vec![7]);
        // zero workers is clamped to one
        let out = run_tasks(0, vec![|| 1, || 2]);
        assert_eq!(out, vec![1, 2]);
    }

    #[test]
    fn errors_propagate_as_values() {
        let tasks: Vec<_> = (0..4)
            .map(|i| move || if i == 2 { Err(format!("task {i}")) } else { Ok(i) })
            .collect();
        let out = run_tasks(2, tasks);
        assert_eq!(out[2], Err("task 2".into()));
        assert_eq!(out[0], Ok(0));
    }
}
