//! Fixed-size subsets of `[n] = {1, ..., n}` and their lexicographic ranks.
//!
//! Ranks are 1-based: the first subset in lexicographic order, `{1, ..., k}`,
//! has rank 1 and the last, `{n-k+1, ..., n}`, has rank `C(n, k)`. The rank
//! of a `(t+1)`-subset is the integer written into MapReduce array cells.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest ground-set size accepted by the ranking functions.
///
/// `C(64, 32)` still fits in a `u64`, so every binomial below this limit is exact.
pub const DEFAULT_MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubsetError {
    #[error("element {element} outside ground set [1, {n}]")]
    OutOfRange { element: usize, n: usize },
    #[error("elements not strictly increasing: {0:?}")]
    Unsorted(Vec<usize>),
    #[error("duplicate element {0}")]
    Duplicate(usize),
    #[error("rank {rank} outside [1, {max}] for {k}-subsets of [{n}]")]
    RankOutOfRange {
        rank: u64,
        n: usize,
        k: usize,
        max: u64,
    },
    #[error("subset size {k} invalid for ground set of size {n}")]
    BadSize { n: usize, k: usize },
    #[error("ground set size {n} exceeds supported limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("binomial C({n}, {k}) overflows u64")]
    Overflow { n: usize, k: usize },
}

/// A set of positive integers stored in strictly increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct KSubset(Vec<usize>);

impl KSubset {
    /// Canonicalizes `elements` to sorted order. Zero and duplicates are rejected.
    pub fn new(mut elements: Vec<usize>) -> Result<Self, SubsetError> {
        elements.sort_unstable();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(SubsetError::Duplicate(w[0]));
        }
        if elements.first() == Some(&0) {
            return Err(SubsetError::OutOfRange { element: 0, n: 0 });
        }
        Ok(Self(elements))
    }

    /// Accepts only input that is already strictly increasing.
    pub fn from_sorted(elements: Vec<usize>) -> Result<Self, SubsetError> {
        if let Some(w) = elements.windows(2).find(|w| w[0] >= w[1]) {
            return Err(if w[0] == w[1] {
                SubsetError::Duplicate(w[0])
            } else {
                SubsetError::Unsorted(elements.clone())
            });
        }
        if elements.first() == Some(&0) {
            return Err(SubsetError::OutOfRange { element: 0, n: 0 });
        }
        Ok(Self(elements))
    }

    pub fn singleton(element: usize) -> Self {
        assert!(element > 0, "points are 1-based");
        Self(vec![element])
    }

    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.0.binary_search(&element).is_ok()
    }

    pub fn is_subset_of(&self, other: &KSubset) -> bool {
        self.0.iter().all(|&e| other.contains(e))
    }

    /// Returns `self ∪ {element}`.
    pub fn with(&self, element: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&element) {
            v.insert(pos, element);
        }
        Self(v)
    }

    /// Checks that every element lies in `[1, n]`.
    pub fn check_within(&self, n: usize) -> Result<(), SubsetError> {
        match self.0.iter().find(|&&e| e == 0 || e > n) {
            Some(&element) => Err(SubsetError::OutOfRange { element, n }),
            None => Ok(()),
        }
    }

    /// All `k`-subsets of this set, in lexicographic order.
    pub fn subsets_of_size(&self, k: usize) -> Vec<KSubset> {
        if k > self.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(KSubset(idx.iter().map(|&i| self.0[i]).collect()));
            if !next_combination(&mut idx, self.len()) {
                return out;
            }
        }
    }

    /// Braced form for a ground set of size `n`: concatenated digits when
    /// `n ≤ 9` (`{123}`), space-separated otherwise (`{1 12 13}`, `{10}`).
    pub fn render(&self, n: usize) -> String {
        let sep = if n <= 9 { "" } else { " " };
        let body: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        format!("{{{}}}", body.join(sep))
    }

    /// Inverse of [`KSubset::render`] for the same `n`.
    pub fn parse_braced(text: &str, n: usize) -> Option<Self> {
        let inner = text.trim().strip_prefix('{')?.strip_suffix('}')?;
        let elements: Option<Vec<usize>> = if n <= 9 {
            inner
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect()
        } else {
            inner.split_whitespace().map(|p| p.parse().ok()).collect()
        };
        let set = KSubset::from_sorted(elements?).ok()?;
        set.check_within(n).ok()?;
        Some(set)
    }
}

impl PartialOrd for KSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Position-wise comparison of the sorted element sequences.
impl Ord for KSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl TryFrom<Vec<usize>> for KSubset {
    type Error = SubsetError;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        KSubset::from_sorted(v)
    }
}

impl From<KSubset> for Vec<usize> {
    fn from(s: KSubset) -> Self {
        s.0
    }
}

/// Concatenated digits when every element is a single digit (`{123}`),
/// space-separated otherwise (`{1 12 13}`).
impl fmt::Display for KSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.0.iter().all(|&e| e < 10) {
            ""
        } else {
            " "
        };
        f.write_str("{")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// Advances 0-based indices to the next combination of `k` out of `n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[i] += 1;
    for j in i + 1..k {
        idx[j] = idx[j - 1] + 1;
    }
    true
}

/// `C(n, k)` with overflow detection. Returns 0 when `k > n`.
pub fn binomial(n: usize, k: usize) -> Result<u64, SubsetError> {
    if k > n {
        return Ok(0);
    }
    let k_small = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k_small {
        // acc * (n - k_small + i) / i stays integral at every step
        acc = acc * (n - k_small + i) as u128 / i as u128;
        if acc > u64::MAX as u128 {
            return Err(SubsetError::Overflow { n, k });
        }
    }
    Ok(acc as u64)
}

fn check_n(n: usize) -> Result<(), SubsetError> {
    if n > DEFAULT_MAX_N {
        return Err(SubsetError::TooLarge {
            n,
            limit: DEFAULT_MAX_N,
        });
    }
    Ok(())
}

/// 1-based lexicographic rank of `subset` among all `|subset|`-subsets of `[n]`.
pub fn rank_subset(n: usize, subset: &KSubset) -> Result<u64, SubsetError> {
    check_n(n)?;
    subset.check_within(n)?;
    let k = subset.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (i, &e) in subset.elements().iter().enumerate() {
        // count subsets that agree on the first i positions and have a smaller i-th element
        for smaller in prev + 1..e {
            rank += binomial(n - smaller, k - i - 1)?;
        }
        prev = e;
    }
    Ok(rank + 1)
}

/// Inverse of [`rank_subset`].
pub fn unrank_subset(n: usize, k: usize, rank: u64) -> Result<KSubset, SubsetError> {
    check_n(n)?;
    if k == 0 || k > n {
        return Err(SubsetError::BadSize { n, k });
    }
    let max = binomial(n, k)?;
    if rank == 0 || rank > max {
        return Err(SubsetError::RankOutOfRange { rank, n, k, max });
    }
    let mut remaining = rank - 1;
    let mut out = Vec::with_capacity(k);
    let mut candidate = 1usize;
    for i in 0..k {
        loop {
            let block = binomial(n - candidate, k - i - 1)?;
            if remaining < block {
                break;
            }
            remaining -= block;
            candidate += 1;
        }
        out.push(candidate);
        candidate += 1;
    }
    Ok(KSubset(out))
}

/// Every `k`-subset of `[n]` in lexicographic order.
pub fn enumerate_subsets(n: usize, k: usize) -> Result<Vec<KSubset>, SubsetError> {
    check_n(n)?;
    if k == 0 || k > n {
        return Err(SubsetError::BadSize { n, k });
    }
    let ground = KSubset((1..=n).collect());
    Ok(ground.subsets_of_size(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> KSubset {
        KSubset::from_sorted(v.to_vec()).unwrap()
    }

    #[test]
    fn ranks_from_worked_example() {
        assert_eq!(rank_subset(7, &set(&[1, 2, 3])).unwrap(), 1);
        assert_eq!(rank_subset(7, &set(&[1, 2, 4])).unwrap(), 2);
        assert_eq!(rank_subset(5, &set(&[2, 3, 4, 5])).unwrap(), 5);
        for n in 1..=10 {
            for k in 1..=n {
                let first: Vec<usize> = (1..=k).collect();
                assert_eq!(rank_subset(n, &set(&first)).unwrap(), 1);
            }
        }
    }

    #[test]
    fn unrank_endpoints() {
        assert_eq!(unrank_subset(7, 3, 1).unwrap(), set(&[1, 2, 3]));
        assert_eq!(unrank_subset(5, 4, 5).unwrap(), set(&[2, 3, 4, 5]));
        for n in 1..=10 {
            for k in 1..=n {
                let last: Vec<usize> = (n - k + 1..=n).collect();
                let max = binomial(n, k).unwrap();
                assert_eq!(unrank_subset(n, k, max).unwrap(), set(&last));
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let pairs = enumerate_subsets(7, 2).unwrap();
        assert_eq!(&pairs[..3], &[set(&[1, 2]), set(&[1, 3]), set(&[1, 4])]);
        let quads = enumerate_subsets(5, 4).unwrap();
        let expected: Vec<KSubset> = [
            [1, 2, 3, 4],
            [1, 2, 3, 5],
            [1, 2, 4, 5],
            [1, 3, 4, 5],
            [2, 3, 4, 5],
        ]
        .iter()
        .map(|s| set(s))
        .collect();
        assert_eq!(quads, expected);
        assert_eq!(enumerate_subsets(4, 4).unwrap(), vec![set(&[1, 2, 3, 4])]);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            rank_subset(5, &set(&[1, 6])),
            Err(SubsetError::OutOfRange { element: 6, n: 5 })
        ));
        assert!(matches!(
            KSubset::from_sorted(vec![3, 1]),
            Err(SubsetError::Unsorted(_))
        ));
        assert!(matches!(
            KSubset::from_sorted(vec![1, 1]),
            Err(SubsetError::Duplicate(1))
        ));
        assert!(matches!(
            KSubset::new(vec![2, 2]),
            Err(SubsetError::Duplicate(2))
        ));
        assert_eq!(KSubset::new(vec![3, 1, 2]).unwrap(), set(&[1, 2, 3]));
        assert!(matches!(
            unrank_subset(7, 3, 36),
            Err(SubsetError::RankOutOfRange { max: 35, .. })
        ));
        assert!(matches!(
            unrank_subset(7, 3, 0),
            Err(SubsetError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            enumerate_subsets(3, 4),
            Err(SubsetError::BadSize { .. })
        ));
        assert!(matches!(
            rank_subset(65, &set(&[1])),
            Err(SubsetError::TooLarge { .. })
        ));
    }

    #[test]
    fn binomial_table() {
        assert_eq!(binomial(7, 3).unwrap(), 35);
        assert_eq!(binomial(5, 6).unwrap(), 0);
        assert_eq!(binomial(0, 0).unwrap(), 1);
        assert_eq!(binomial(64, 32).unwrap(), 1_832_624_140_942_590_534);
        assert!(binomial(70, 35).is_err());
        // Pascal's rule against the multiplicative formula
        for n in 1..40 {
            for k in 1..n {
                assert_eq!(
                    binomial(n, k).unwrap(),
                    binomial(n - 1, k - 1).unwrap() + binomial(n - 1, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(set(&[1, 2, 3]).to_string(), "{123}");
        assert_eq!(set(&[1, 12, 13]).to_string(), "{1 12 13}");
        assert_eq!(set(&[1, 2]).render(15), "{1 2}");
        assert_eq!(set(&[10]).render(15), "{10}");
        assert_eq!(KSubset::parse_braced("{356}", 7).unwrap(), set(&[3, 5, 6]));
        assert_eq!(
            KSubset::parse_braced("{1 12 13}", 13).unwrap(),
            set(&[1, 12, 13])
        );
        assert_eq!(KSubset::parse_braced("{10}", 13).unwrap(), set(&[10]));
        assert!(KSubset::parse_braced("{321}", 7).is_none());
        assert!(KSubset::parse_braced("{128}", 7).is_none());
        assert!(KSubset::parse_braced("123", 7).is_none());
    }

    #[test]
    fn subsets_of_block() {
        let a = set(&[3, 5, 6]);
        assert_eq!(
            a.subsets_of_size(2),
            vec![set(&[3, 5]), set(&[3, 6]), set(&[5, 6])]
        );
        assert_eq!(a.with(4), set(&[3, 4, 5, 6]));
        assert!(set(&[3, 6]).is_subset_of(&a));
    }
}
