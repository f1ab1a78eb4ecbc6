//! Subset bookkeeping for determinant storage.
//!
//! Determinants are bitmasks over at most [`MAX_ORBITALS`] orbitals. The
//! canonical storage order is colexicographic: `colex_rank` of a k-subset of
//! `{0..n}` is independent of `n`, so the subsets of the first `m` orbitals
//! always occupy ranks `0..C(m, k)`.

use alloc::vec::Vec;

pub const MAX_ORBITALS: usize = 64;

static BINOM: [[u64; MAX_ORBITALS + 1]; MAX_ORBITALS + 1] = {
    let mut table = [[0u64; MAX_ORBITALS + 1]; MAX_ORBITALS + 1];
    let mut n = 0;
    while n <= MAX_ORBITALS {
        table[n][0] = 1;
        let mut k = 1;
        while k <= n {
            table[n][k] = table[n - 1][k - 1].saturating_add(if k < n { table[n - 1][k] } else { 0 });
            k += 1;
        }
        n += 1;
    }
    table
};

/// `C(n, k)`, zero when `k > n`. Saturates instead of overflowing.
#[inline]
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n || n > MAX_ORBITALS {
        return 0;
    }
    BINOM[n][k] as usize
}

#[inline]
pub fn bit(p: usize) -> u64 {
    1u64 << p
}

/// Mask with the lowest `n` bits set.
#[inline]
pub fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Parity sign of moving orbital `p` to the front of the sorted set `set`
/// (`p` not in `set`): `(-1)^{#elements of set below p}`.
#[inline]
pub fn insertion_sign(set: u64, p: usize) -> f64 {
    if (set & low_mask(p)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Colexicographic rank of a subset.
#[inline]
pub fn colex_rank(mut mask: u64) -> usize {
    let mut rank = 0usize;
    let mut i = 1;
    while mask != 0 {
        let p = mask.trailing_zeros() as usize;
        rank += binomial(p, i);
        i += 1;
        mask &= mask - 1;
    }
    rank
}

/// Inverse of [`colex_rank`] for subsets of size `k`.
pub fn colex_unrank(mut rank: usize, k: usize) -> u64 {
    let mut mask = 0u64;
    for i in (1..=k).rev() {
        let mut p = i - 1;
        while binomial(p + 1, i) <= rank {
            p += 1;
        }
        rank -= binomial(p, i);
        mask |= bit(p);
    }
    mask
}

/// All k-subsets of `{0..n}` in colex order (Gosper's hack).
pub fn subsets(n: usize, k: usize) -> Subsets {
    Subsets { next: if k <= n { Some(low_mask(k)) } else { None }, limit: low_mask(n), empty: k == 0 }
}

pub struct Subsets {
    next: Option<u64>,
    limit: u64,
    empty: bool,
}

impl Iterator for Subsets {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        if self.empty {
            self.next = None;
            return Some(0);
        }
        let c = cur & cur.wrapping_neg();
        let r = cur.wrapping_add(c);
        self.next = if r == 0 || c == 0 {
            None
        } else {
            let n = (((r ^ cur) >> 2) / c) | r;
            if n & !self.limit != 0 {
                None
            } else {
                Some(n)
            }
        };
        Some(cur)
    }
}

/// Strictly increasing k-tuples of `{0..n}` in lexicographic order.
pub fn lex_tuples(n: usize, k: usize) -> LexTuples {
    LexTuples { cur: if k <= n { Some((0..k).collect()) } else { None }, n }
}

pub struct LexTuples {
    cur: Option<Vec<usize>>,
    n: usize,
}

impl Iterator for LexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

pub fn mask_from_indices(indices: &[usize]) -> u64 {
    indices.iter().fold(0, |m, &p| m | bit(p))
}

/// Set bits in increasing order.
pub fn indices(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// Sign of the permutation that sorts `tuple` (entries assumed distinct).
pub fn sort_sign(tuple: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..tuple.len() {
        for j in i + 1..tuple.len() {
            if tuple[i] > tuple[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
