//! Bounded worker pool with deterministic, index-ordered result assembly.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Run `f` over 0..n on up to `workers` threads; results come back in index
/// order no matter how the work was scheduled.
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order_at_any_worker_count() {
        let expect: Vec<usize> = (0..100).map(|i| i * i).collect();
        for workers in [1, 2, 4, 7] {
            let got = run_indexed(100, workers, |i| i * i);
            assert_eq!(got, expect, "workers = {workers}");
        }
    }

    #[test]
    fn empty_input() {
        let got: Vec<u8> = run_indexed(0, 4, |_| 0u8);
        assert!(got.is_empty());
    }
}
