//! A small work-stealing pool used by the traversal passes.
//!
//! Workers are spawned for one `run` and joined before it returns. Each
//! worker owns a LIFO deque; idle workers steal from the shared injector
//! first and then from their peers. Termination is tracked with a count of
//! tasks that have been pushed but not yet finished.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use crossbeam::deque::{Injector, Steal, Stealer, Worker};
use crossbeam::utils::Backoff;

/// Handle a task uses to hand work back to the pool.
pub struct Spawner<'p, T> {
    local: &'p Worker<T>,
    pending: &'p AtomicUsize,
}

impl<T> Spawner<'_, T> {
    pub fn spawn(&self, task: T) {
        self.pending.fetch_add(1, Ordering::AcqRel);
        self.local.push(task);
    }
}

#[derive(Debug, Clone, Default)]
pub struct PoolStats {
    /// Time each worker spent running tasks.
    pub busy: Vec<Duration>,
}

/// Runs `roots` and everything they spawn on `threads` workers, blocking
/// until the pool is quiescent. `per_worker` builds each worker's private
/// state; it is handed back (in worker order) alongside the stats.
pub fn run<T, S, I, F>(threads: usize, roots: Vec<T>, per_worker: I, task: F) -> (Vec<S>, PoolStats)
where
    T: Send,
    S: Send,
    I: Fn(usize) -> S + Sync,
    F: Fn(T, &mut S, &Spawner<'_, T>) + Sync,
{
    assert!(threads >= 1, "pool needs at least one worker");
    let injector = Injector::new();
    let pending = AtomicUsize::new(roots.len());
    for r in roots {
        injector.push(r);
    }

    let locals: Vec<Worker<T>> = (0..threads).map(|_| Worker::new_lifo()).collect();
    let stealers: Vec<Stealer<T>> = locals.iter().map(|w| w.stealer()).collect();

    let results: Vec<(S, Duration)> = std::thread::scope(|scope| {
        let handles: Vec<_> = locals
            .into_iter()
            .enumerate()
            .map(|(index, local)| {
                let injector = &injector;
                let stealers = &stealers;
                let pending = &pending;
                let per_worker = &per_worker;
                let task = &task;
                scope.spawn(move || {
                    let mut state = per_worker(index);
                    let busy = worker_loop(index, &local, injector, stealers, pending, |t, sp| {
                        task(t, &mut state, sp)
                    });
                    (state, busy)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("traversal worker panicked"))
            .collect()
    });

    let mut states = Vec::with_capacity(threads);
    let mut busy = Vec::with_capacity(threads);
    for (s, b) in results {
        states.push(s);
        busy.push(b);
    }
    (states, PoolStats { busy })
}

fn worker_loop<T>(
    index: usize,
    local: &Worker<T>,
    injector: &Injector<T>,
    stealers: &[Stealer<T>],
    pending: &AtomicUsize,
    mut run_task: impl FnMut(T, &Spawner<'_, T>),
) -> Duration {
    let spawner = Spawner { local, pending };
    let backoff = Backoff::new();
    let mut busy = Duration::ZERO;
    loop {
        match local.pop().or_else(|| steal(index, local, injector, stealers)) {
            Some(t) => {
                backoff.reset();
                let start = Instant::now();
                run_task(t, &spawner);
                busy += start.elapsed();
                pending.fetch_sub(1, Ordering::AcqRel);
            }
            None => {
                if pending.load(Ordering::Acquire) == 0 {
                    return busy;
                }
                backoff.snooze();
                if backoff.is_completed() {
                    std::thread::yield_now();
                }
            }
        }
    }
}

fn steal<T>(
    index: usize,
    local: &Worker<T>,
    injector: &Injector<T>,
    stealers: &[Stealer<T>],
) -> Option<T> {
    loop {
        let mut retry = false;
        match injector.steal_batch_and_pop(local) {
            Steal::Success(t) => return Some(t),
            Steal::Retry => retry = true,
            Steal::Empty => {}
        }
        let n = stealers.len();
        for k in 1..n {
            match stealers[(index + k) % n].steal() {
                Steal::Success(t) => return Some(t),
                Steal::Retry => retry = true,
                Steal::Empty => {}
            }
        }
        if !retry {
            return None;
        }
    }
}
