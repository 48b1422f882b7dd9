//! Fraud-set tables: the reduced power set of an identity's images,
//! optionally truncated to at most `M` elements, ordered by subset size and
//! in revolving-door (minimal change) order within each size.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest identity a [`VertexSet`] can describe.
pub const MAX_VERTICES: usize = 64;

/// Set of image indices within one identity, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VertexSet(pub u64);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VERTICES);
        if n == MAX_VERTICES {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        VertexSet(indices.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_VERTICES && self.0 & (1u64 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Complement within a vertex set of size `n`.
    pub fn complement(self, n: usize) -> Self {
        VertexSet(!self.0 & Self::full(n).0)
    }

    /// True when the set is neither empty nor all of `0..n`.
    pub fn is_proper_nonempty(self, n: usize) -> bool {
        !self.is_empty() && self.0 & !Self::full(n).0 == 0 && self != Self::full(n)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

/// `2^n - 2`, the number of proper non-empty subsets of an `n`-set.
pub fn reduced_power_set_size(n: u32) -> u128 {
    match n {
        0 | 1 => 0,
        n if n < 128 => (1u128 << n) - 2,
        _ => u128::MAX,
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in revolving-door order, starting from
/// `{0, .., k-1}`. Consecutive subsets differ by swapping one element.
pub fn revolving_door(n: usize, k: usize) -> Vec<VertexSet> {
    assert!(n <= MAX_VERTICES, "revolving door supports at most {MAX_VERTICES} elements");
    let mut out = Vec::with_capacity(binomial(n as u64, k as u64) as usize);
    if k <= n {
        revolve(n, k, false, 0, &mut out);
    }
    out
}

// R(n, k) = R(n-1, k) followed by reverse(R(n-1, k-1)) with element n-1 added.
fn revolve(n: usize, k: usize, reversed: bool, fixed: u64, out: &mut Vec<VertexSet>) {
    if k == 0 {
        out.push(VertexSet(fixed));
        return;
    }
    if k == n {
        out.push(VertexSet(fixed | VertexSet::full(n).0));
        return;
    }
    let top = fixed | (1u64 << (n - 1));
    if reversed {
        revolve(n - 1, k - 1, false, top, out);
        revolve(n - 1, k, true, fixed, out);
    } else {
        revolve(n - 1, k, false, fixed, out);
        revolve(n - 1, k - 1, true, top, out);
    }
}

/// Ordered enumeration of admissible fraud sets for an identity of `n`
/// images: every subset of size `1..=min(m_cap, n - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FraudSetTable {
    n: usize,
    m_cap: usize,
    subsets: Vec<VertexSet>,
}

/// Build the fraud-set table for `n` images with at most `m_cap` fraud
/// images. Identities with fewer than two images get an empty table.
pub fn build_fraud_set_table(n: usize, m_cap: usize) -> Result<FraudSetTable> {
    if m_cap == 0 {
        return Err(Error::param("maximum fraud-set size", "must be at least 1"));
    }
    if n > MAX_VERTICES {
        return Err(Error::IdTooLarge { images: n, max: MAX_VERTICES });
    }
    let largest = m_cap.min(n.saturating_sub(1));
    let subsets = (1..=largest).flat_map(|k| revolving_door(n, k)).collect();
    Ok(FraudSetTable { n, m_cap, subsets })
}

impl FraudSetTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_cap(&self) -> usize {
        self.m_cap
    }

    pub fn subsets(&self) -> &[VertexSet] {
        &self.subsets
    }

    pub fn term_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

/// Fraud-set tables for every identity size up to a bound, shared read-only
/// across pair evaluations.
#[derive(Debug, Clone)]
pub struct TableSet {
    m_cap: usize,
    tables: Vec<FraudSetTable>,
}

impl TableSet {
    pub fn new(m_cap: usize, max_n: usize) -> Result<Self> {
        let tables = (0..=max_n).map(|n| build_fraud_set_table(n, m_cap)).collect::<Result<Vec<_>>>()?;
        Ok(Self { m_cap, tables })
    }

    pub fn m_cap(&self) -> usize {
        self.m_cap
    }

    pub fn max_n(&self) -> usize {
        self.tables.len() - 1
    }

    pub fn get(&self, n: usize) -> Option<&FraudSetTable> {
        self.tables.get(n)
    }
}
