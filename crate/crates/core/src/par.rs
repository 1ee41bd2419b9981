//! Data-parallel search primitives. With the `parallel` feature the sweeps run
//! on rayon; the results are identical to the sequential fallback because
//! `find_first` respects the index order and max-reduction is order-free.

/// First index in `[0, count)` satisfying `pred`, in index order.
pub(crate) fn find_first_index<F>(count: u64, sequential: bool, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential {
        use rayon::prelude::*;
        return (0..count).into_par_iter().find_first(|&k| pred(k));
    }
    let _ = sequential;
    (0..count).find(|&k| pred(k))
}

/// Maximum of `score` over `[0, count)`; `None` for an empty range.
pub(crate) fn max_score<F>(count: u64, sequential: bool, score: F) -> Option<u64>
where
    F: Fn(u64) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(&score).max();
    }
    let _ = sequential;
    (0..count).map(score).max()
}
