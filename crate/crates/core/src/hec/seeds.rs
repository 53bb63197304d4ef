//! Initial subsets: every subset of `{0..n}` of size at most `S`, by size,
//! then lexicographically.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSubset {
    /// Ordinal in the enumeration; the empty seed is 0.
    pub index: u64,
    /// Positions in the ranked learner list, increasing.
    pub members: Vec<usize>,
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// `sum_{i=0}^{S} C(n, i)`.
pub fn seed_count(n: usize, max_size: usize) -> Result<u64> {
    if max_size > n {
        return Err(Error::SeedSizeTooLarge { max_size, learners: n });
    }
    (0..=max_size as u64).try_fold(0u64, |acc, i| {
        binomial(n as u64, i)
            .and_then(|c| acc.checked_add(c))
            .ok_or(Error::Overflow)
    })
}

/// Streaming enumerator; holds only the current combination.
#[derive(Debug, Clone)]
pub struct SeedEnumerator {
    n: usize,
    max_size: usize,
    current: Option<Vec<usize>>,
    index: u64,
}

pub fn enumerate_seeds(n: usize, max_size: usize) -> Result<SeedEnumerator> {
    if max_size > n {
        return Err(Error::SeedSizeTooLarge { max_size, learners: n });
    }
    Ok(SeedEnumerator {
        n,
        max_size,
        current: Some(Vec::new()),
        index: 0,
    })
}

impl SeedEnumerator {
    fn advance(&self, cur: &[usize]) -> Option<Vec<usize>> {
        let (n, k) = (self.n, cur.len());
        let mut next = cur.to_vec();
        // rightmost position that can still move right
        if let Some(i) = (0..k).rev().find(|&i| next[i] < n - k + i) {
            next[i] += 1;
            for j in i + 1..k {
                next[j] = next[j - 1] + 1;
            }
            return Some(next);
        }
        (k < self.max_size).then(|| (0..k + 1).collect())
    }
}

impl Iterator for SeedEnumerator {
    type Item = SeedSubset;

    fn next(&mut self) -> Option<SeedSubset> {
        let cur = self.current.take()?;
        self.current = self.advance(&cur);
        let out = SeedSubset {
            index: self.index,
            members: cur,
        };
        self.index += 1;
        Some(out)
    }
}
