//! Trial-level parallelism with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] distributes
//! independent trials over the rayon pool. Without it, or with
//! [`Execution::Sequential`], trials run in index order. Results are combined
//! with an associative, commutative merge so both paths agree exactly.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `f` over `0..n` and merges the results, stopping at the first error
/// seen (which error is reported is unspecified when several trials fail).
pub fn map_reduce<T, E, F, M>(n: u64, exec: Execution, identity: T, f: F, merge: M) -> Result<T, E>
where
    T: Send + Sync + Clone,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n)
            .into_par_iter()
            .map(&f)
            .try_reduce(|| identity.clone(), |a, b| Ok(merge(a, b))),
        _ => {
            let mut acc = identity;
            for i in 0..n {
                acc = merge(acc, f(i)?);
            }
            Ok(acc)
        }
    }
}
