//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it every helper degrades to a plain sequential loop. Output order
//! is always index order, so results never depend on scheduling.

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Number of workers the current pool would use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Evaluate `f(0..n)` and collect results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if rayon::current_num_threads() > 1 && n > 1 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Like [`map_indexed`], but only fans out when there are at least
/// `min_items` items. Small grids lose more to scheduling than they gain.
pub fn map_indexed_min<T, F>(n: usize, min_items: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n < min_items {
        (0..n).map(f).collect()
    } else {
        map_indexed(n, f)
    }
}

/// Fallible map. Every item runs; the error reported is the one with the
/// lowest index.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, (usize, E)>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    let results = map_indexed(n, f);
    let mut out = Vec::with_capacity(n);
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => return Err((k, e)),
        }
    }
    Ok(out)
}

/// Run `f` on a dedicated pool of `workers` threads. `workers == 0` keeps the
/// caller's pool. Without the `parallel` feature this just calls `f`.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => return pool.install(f),
                Err(e) => log::warn!("could not build a {workers}-thread pool ({e}); using the current one"),
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
