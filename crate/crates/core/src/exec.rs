//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these fan out over the rayon global
//! pool, or over the pool installed by the caller. Without it they run
//! sequentially. Output order always matches input order, so callers see
//! identical results under either build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub fn map<'a, T, U, F>(items: &'a [T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&'a T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map a fallible `f` over `items`; the first error in input order wins.
pub fn try_map<'a, T, U, E, F>(items: &'a [T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&'a T) -> Result<U, E> + Sync + Send,
{
    // Collecting all results first keeps the reported error independent of
    // scheduling.
    map(items, f).into_iter().collect()
}

/// Keep the elements of `items` for which `pred` holds, preserving order.
pub fn filter<T, F>(items: &[T], pred: F) -> Vec<T>
where
    T: Sync + Send + Clone,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().filter(|t| pred(t)).cloned().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().filter(|t| pred(t)).cloned().collect()
    }
}

/// Run `f` with at most `workers` threads. `None` uses the ambient pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Worker count requested through `SDGDIV_WORKERS`, if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("SDGDIV_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let input: Vec<u64> = (0..5000).collect();
        let out = map(&input, |v| v * 3);
        let expected: Vec<u64> = input.iter().map(|v| v * 3).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn try_map_reports_first_error_in_order() {
        let input: Vec<i32> = (0..1000).collect();
        let out: Result<Vec<i32>, i32> =
            try_map(&input, |v| if *v % 250 == 249 { Err(*v) } else { Ok(*v) });
        assert_eq!(out, Err(249));
    }

    #[test]
    fn single_worker_pool_matches_default() {
        let input: Vec<u32> = (0..2000).collect();
        let a = with_workers(Some(1), || filter(&input, |v| v % 7 == 0));
        let b = filter(&input, |v| v % 7 == 0);
        assert_eq!(a, b);
    }
}
