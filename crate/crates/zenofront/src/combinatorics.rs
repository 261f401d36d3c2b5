//! Enumeration kernels consumed by the solvers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatoricsError {
    #[error("count C({n}+{k}-1, {k}) overflows 64 bits")]
    Overflow { n: usize, k: usize },
    #[error("bitmask width {0} exceeds 63")]
    TooWide(usize),
    #[error("k = {k} exceeds m = {m}")]
    KTooLarge { m: usize, k: usize },
}

/// C(n, k) with overflow detection.
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

/// Number of k-multicombinations of n elements, C(n+k-1, k).
pub fn count_multicombinations(n: usize, k: usize) -> Result<u64, CombinatoricsError> {
    if n == 0 {
        return Ok(u64::from(k == 0));
    }
    binomial((n + k - 1) as u64, k as u64).ok_or(CombinatoricsError::Overflow { n, k })
}

/// Cursor over nondecreasing k-tuples of [0, n) in lexicographic order.
///
/// The solvers use the cursor form to avoid an allocation per tuple.
#[derive(Debug, Clone)]
pub struct MulticombinationCursor {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl MulticombinationCursor {
    pub fn new(n: usize, k: usize) -> Self {
        MulticombinationCursor { n, current: vec![0; k], done: n == 0 && k > 0 }
    }

    /// The current tuple, or `None` once exhausted.
    pub fn get(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.current.as_slice())
    }

    /// Moves to the successor; returns false when the stream is exhausted.
    pub fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        match self.current.iter().rposition(|&x| x + 1 < self.n) {
            Some(i) => {
                let v = self.current[i] + 1;
                for x in &mut self.current[i..] {
                    *x = v;
                }
                true
            }
            None => {
                self.done = true;
                false
            }
        }
    }
}

/// Iterator over all k-multicombinations of [0, n), lexicographic, each nondecreasing.
#[derive(Debug, Clone)]
pub struct Multicombinations {
    cursor: MulticombinationCursor,
    started: bool,
}

impl Iterator for Multicombinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.started {
            self.cursor.advance();
        }
        self.started = true;
        self.cursor.get().map(<[usize]>::to_vec)
    }
}

pub fn multicombinations(n: usize, k: usize) -> Multicombinations {
    Multicombinations { cursor: MulticombinationCursor::new(n, k), started: false }
}

/// Masks of width m with exactly k bits set, increasing (Gosper's successor).
#[derive(Debug, Clone)]
pub struct KSubsets {
    next: Option<u64>,
    limit: u64,
}

impl Iterator for KSubsets {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let x = self.next?;
        self.next = if x == 0 {
            None
        } else {
            let c = x & x.wrapping_neg();
            let r = x + c;
            let y = (((r ^ x) >> 2) / c) | r;
            (y < self.limit).then_some(y)
        };
        Some(x)
    }
}

pub fn k_subsets(m: usize, k: usize) -> Result<KSubsets, CombinatoricsError> {
    if m > 63 {
        return Err(CombinatoricsError::TooWide(m));
    }
    if k > m {
        return Err(CombinatoricsError::KTooLarge { m, k });
    }
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    Ok(KSubsets { next: Some(first), limit: 1u64 << m })
}

/// Sub-multisets of a multiset given by exponents over distinct elements.
///
/// Yields exponent vectors `e` with `0 <= e[i] <= bound[i]`, first index fastest.
#[derive(Debug, Clone)]
pub struct SubMultisets {
    bound: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl SubMultisets {
    pub fn new(bound: Vec<usize>) -> Self {
        let current = vec![0; bound.len()];
        SubMultisets { bound, current, done: false }
    }

    pub fn get(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.current.as_slice())
    }

    pub fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        for (x, &b) in self.current.iter_mut().zip(&self.bound) {
            if *x < b {
                *x += 1;
                return true;
            }
            *x = 0;
        }
        self.done = true;
        false
    }
}

impl Iterator for SubMultisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.get().map(<[usize]>::to_vec);
        self.advance();
        out
    }
}

/// Every sub-multiset of `ms` exactly once, as sorted element lists.
pub fn sub_multisets(ms: &[usize]) -> Result<impl Iterator<Item = Vec<usize>>, CombinatoricsError> {
    if ms.len() > 63 {
        return Err(CombinatoricsError::TooWide(ms.len()));
    }
    let (values, bound) = exponents(ms);
    Ok(SubMultisets::new(bound).map(move |e| {
        values.iter().zip(&e).flat_map(|(&v, &k)| std::iter::repeat_n(v, k)).collect()
    }))
}

/// Distinct values of `ms` (sorted) with their multiplicities.
pub fn exponents(ms: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut sorted = ms.to_vec();
    sorted.sort_unstable();
    let mut values: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for x in sorted {
        if values.last() == Some(&x) {
            *counts.last_mut().unwrap() += 1;
        } else {
            values.push(x);
            counts.push(1);
        }
    }
    (values, counts)
}

/// Multiset intersection of two sorted slices.
pub fn intersect_sorted(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Multiset difference `a \ b` of sorted slices; `b` must be a sub-multiset of `a`.
pub fn difference_sorted(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let mut j = 0;
    for &x in a {
        if j < b.len() && b[j] == x {
            j += 1;
        } else {
            out.push(x);
        }
    }
    debug_assert_eq!(j, b.len());
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn multicombination_examples() {
        assert_eq!(multicombinations(3, 1).collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(multicombinations(3, 3).count(), 10);
        assert_eq!(multicombinations(3, 4).count(), 15);
        assert_eq!(multicombinations(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(
            multicombinations(3, 2).collect::<Vec<_>>(),
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2], vec![2, 2]]
        );
    }

    #[test]
    fn counts() {
        assert_eq!(count_multicombinations(3, 2), Ok(6));
        assert_eq!(count_multicombinations(7, 7), Ok(1716));
        assert_eq!(count_multicombinations(1, 5), Ok(1));
        assert_eq!(count_multicombinations(3, 0), Ok(1));
        assert!(matches!(count_multicombinations(1000, 1000), Err(CombinatoricsError::Overflow { .. })));
    }

    #[test]
    fn seven_seven_matches_enumeration() {
        assert_eq!(multicombinations(7, 7).count() as u64, count_multicombinations(7, 7).unwrap());
    }

    #[test]
    fn k_subset_examples() {
        assert_eq!(k_subsets(3, 2).unwrap().collect::<Vec<_>>(), vec![0b011, 0b101, 0b110]);
        assert_eq!(k_subsets(4, 0).unwrap().collect::<Vec<_>>(), vec![0]);
        let masks: Vec<u64> = k_subsets(10, 5).unwrap().collect();
        assert_eq!(masks.len(), 252);
        assert!(masks.iter().all(|m| m.count_ones() == 5));
        assert_eq!(masks.iter().collect::<HashSet<_>>().len(), 252);
        assert_eq!(k_subsets(63, 63).unwrap().count(), 1);
        assert!(k_subsets(64, 1).is_err());
        assert!(k_subsets(3, 4).is_err());
    }

    #[test]
    fn sub_multiset_examples() {
        let s: Vec<Vec<usize>> = sub_multisets(&[1, 2]).unwrap().collect();
        assert_eq!(s.len(), 4);
        assert!(s.contains(&vec![]) && s.contains(&vec![1, 2]));
        assert_eq!(
            sub_multisets(&[1, 1]).unwrap().collect::<Vec<_>>(),
            vec![vec![], vec![1], vec![1, 1]]
        );
        assert_eq!(sub_multisets(&[1, 1, 2]).unwrap().count(), 6);
    }

    #[test]
    fn set_operations() {
        let mut out = Vec::new();
        intersect_sorted(&[0, 0, 1, 2, 2], &[0, 2, 2, 2], &mut out);
        assert_eq!(out, vec![0, 2, 2]);
        difference_sorted(&[0, 0, 1, 2, 2], &[0, 2], &mut out);
        assert_eq!(out, vec![0, 1, 2]);
    }
}
