//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through these helpers. With the
//! `parallel` feature disabled, [`Execution::Parallel`] silently runs the
//! sequential path, so results never depend on the feature set.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps every item and folds the results with an associative `reduce`.
    pub fn map_reduce<T, R, M, F>(self, items: &[T], identity: R, map: M, reduce: F) -> R
    where
        T: Sync,
        R: Send + Sync + Clone,
        M: Fn(&T) -> R + Sync + Send,
        F: Fn(R, R) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items
                .par_iter()
                .map(&map)
                .reduce(|| identity.clone(), &reduce);
        }
        items.iter().map(map).fold(identity, reduce)
    }

    /// Order-preserving map.
    pub fn map<T, R, M>(self, items: &[T], map: M) -> Vec<R>
    where
        T: Sync,
        R: Send,
        M: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(map).collect();
        }
        items.iter().map(map).collect()
    }

    /// Order-preserving map over `start..end`.
    pub fn map_range<R, M>(self, start: u64, end: u64, map: M) -> Vec<R>
    where
        R: Send,
        M: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (start..end).into_par_iter().map(map).collect();
        }
        (start..end).map(map).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let items: Vec<u64> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let s = exec.map_reduce(&items, 0u64, |x| x * x, |a, b| a + b);
            assert_eq!(s, items.iter().map(|x| x * x).sum::<u64>());
            assert_eq!(exec.map(&items, |x| x + 1)[999], 1000);
            assert_eq!(exec.map_range(5, 10, |x| x), vec![5, 6, 7, 8, 9]);
        }
    }
}
