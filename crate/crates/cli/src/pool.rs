//! Bounded worker pool with results in job order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::CliError;

/// Pool size: `THREADS` if set, otherwise the available parallelism.
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `job(0..count)` on up to `threads` workers and returns the results in
/// index order. After the first failure no new jobs start; the error of the
/// lowest failing index is returned.
pub fn run_ordered<T, F>(count: usize, threads: usize, job: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<T, CliError>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, count.max(1)) {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= count {
                    break;
                }
                let out = job(k);
                if out.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                slots.lock().unwrap()[k] = Some(out);
            });
        }
    });
    let mut results = Vec::with_capacity(count);
    for slot in slots.into_inner().unwrap() {
        match slot {
            Some(r) => results.push(r?),
            // skipped after an earlier failure, which the loop has already returned
            None => unreachable!("job skipped without a recorded failure"),
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let out = run_ordered(50, 4, |k| Ok(k * k)).unwrap();
        assert_eq!(out, (0..50).map(|k| k * k).collect::<Vec<_>>());
    }

    #[test]
    fn first_failure_wins() {
        let err = run_ordered(10, 1, |k| if k >= 3 { Err(CliError::Config(format!("{k}"))) } else { Ok(k) }).unwrap_err();
        assert_eq!(err.to_string(), "3");
    }
}
