//! Data-parallel map/reduce over index ranges, with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon pool; without it every request runs sequentially. Callers must
//! supply an associative, commutative `reduce` so both paths agree exactly.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

pub fn map_reduce<T, Id, M, R>(len: u64, exec: Execution, identity: Id, map: M, reduce: R) -> T
where
    T: Send,
    Id: Fn() -> T + Sync + Send,
    M: Fn(u64) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(map).reduce(identity, reduce)
        }
        _ => (0..len).map(map).fold(identity(), reduce),
    }
}

/// Like [`map_reduce`] but keeps every mapped value, in index order.
pub fn map_collect<T, M>(len: u64, exec: Execution, map: M) -> Vec<T>
where
    T: Send,
    M: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(map).collect()
        }
        _ => (0..len).map(map).collect(),
    }
}
