//! Execution mode for the data-parallel stages.
//!
//! With the `parallel` feature the map runs on rayon; without it every mode falls
//! back to a plain sequential loop. Results are always returned in input order, so
//! callers never observe the schedule.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// `threads = None` uses rayon's global pool.
    #[default]
    Parallel,
    Threads(usize),
}

impl Exec {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            None => Exec::Parallel,
            Some(0) => Exec::Parallel,
            Some(1) => Exec::Sequential,
            Some(n) => Exec::Threads(n),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Exec::Sequential
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.map_range(items.len(), |i| f(&items[i]))
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self {
                Exec::Sequential => (0..n).map(f).collect(),
                Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
                Exec::Threads(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
                    Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                    Err(_) => (0..n).map(f).collect(),
                },
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..10_000).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x);
        let b = Exec::Parallel.map(&xs, |x| x * x);
        let c = Exec::Threads(3).map(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
