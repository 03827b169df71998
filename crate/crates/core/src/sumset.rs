//! Exact computation of bounded-multiplicity sumsets.
//!
//! `h^(r)A` is the set of sums `Σ λ_i a_i` with `0 ≤ λ_i ≤ r` and `Σ λ_i = h`.
//! The engine builds every count layer `0..=h` at once by folding the
//! elements of `A` in one at a time. Small value ranges use dense bit rows
//! indexed relative to `c·min(A)`; anything wider falls back to sorted sets.
//!
//! [`brute_force_sumset`] enumerates multiplicity vectors directly and is the
//! oracle the engine is tested against.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;

/// Bits allowed for a dense table before switching to the sparse layers.
pub const DEFAULT_DENSE_BUDGET_BITS: u64 = 1 << 27;

/// Default ceiling on multiplicity vectors the brute-force oracle will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SumsetError {
    #[error("input set is empty")]
    EmptyInput,
    #[error("dilation factor must be nonzero")]
    ZeroScale,
    #[error("multiplicity bound r must be at least 1")]
    ZeroMultiplicity,
    #[error("a sum leaves the signed 64-bit range")]
    Overflow,
    #[error("h = {h} exceeds k*r = {capacity}")]
    OutOfRange { h: u64, capacity: u64 },
    #[error("enumeration needs {vectors} multiplicity vectors, cap is {cap}")]
    TooLarge { vectors: u128, cap: u128 },
    #[error("every h in H exceeds k*r = {capacity}")]
    EmptyResult { capacity: u64 },
}

/// A nonempty finite set of distinct integers, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct IntSet(Vec<i64>);

impl IntSet {
    /// Sorts and deduplicates `raw`.
    pub fn new(raw: impl IntoIterator<Item = i64>) -> Result<Self, SumsetError> {
        let mut v: Vec<i64> = raw.into_iter().collect();
        if v.is_empty() {
            return Err(SumsetError::EmptyInput);
        }
        v.sort_unstable();
        v.dedup();
        Ok(Self(v))
    }

    /// The interval `[lo, hi]`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self, SumsetError> {
        Self::new(lo..=hi)
    }

    pub fn elements(&self) -> &[i64] {
        &self.0
    }

    /// Cardinality `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> i64 {
        self.0[0]
    }

    pub fn max(&self) -> i64 {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, x: i64) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0)
    }

    pub fn all_positive(&self) -> bool {
        self.min() > 0
    }

    pub fn all_nonnegative(&self) -> bool {
        self.min() >= 0
    }

    /// `c ∗ A`.
    pub fn dilate(&self, c: i64) -> Result<Self, SumsetError> {
        if c == 0 {
            return Err(SumsetError::ZeroScale);
        }
        let scaled = self
            .0
            .iter()
            .map(|&a| a.checked_mul(c).ok_or(SumsetError::Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scaled)
    }

    /// `A ∖ {0}`, or `None` when that would be empty.
    pub fn without_zero(&self) -> Option<Self> {
        let rest: Vec<i64> = self.0.iter().copied().filter(|&a| a != 0).collect();
        (!rest.is_empty()).then_some(Self(rest))
    }

    /// `gcd(a_i - a_1)`; zero for singletons.
    pub fn difference_gcd(&self) -> u64 {
        let first = self.min();
        self.0.iter().map(|&a| a.abs_diff(first)).fold(0, gcd)
    }

    /// True when the differences from `min(A)` are coprime, i.e. `A` is not a
    /// translate of a proper dilation.
    pub fn is_gcd_normalized(&self) -> bool {
        self.difference_gcd() == 1
    }
}

impl TryFrom<Vec<i64>> for IntSet {
    type Error = SumsetError;

    fn try_from(v: Vec<i64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<IntSet> for Vec<i64> {
    fn from(s: IntSet) -> Self {
        s.0
    }
}

impl fmt::Display for IntSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braced(f, &self.0)
    }
}

pub(crate) fn write_braced<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    f.write_str("{")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("}")
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Same as [`IntSet::new`].
pub fn normalize_set(raw: &[i64]) -> Result<IntSet, SumsetError> {
    IntSet::new(raw.iter().copied())
}

/// `c ∗ A`; see [`IntSet::dilate`].
pub fn dilate(set: &IntSet, c: i64) -> Result<IntSet, SumsetError> {
    set.dilate(c)
}

/// Number of summands `h` and per-element multiplicity bound `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FoldParams {
    pub h: u32,
    pub r: u32,
}

impl FoldParams {
    pub fn new(h: u32, r: u32) -> Result<Self, SumsetError> {
        if r == 0 {
            return Err(SumsetError::ZeroMultiplicity);
        }
        Ok(Self { h, r })
    }
}

/// `k·r`, the largest `h` with `h^(r)A` nonempty.
pub fn capacity(k: usize, r: u32) -> u64 {
    k as u64 * r as u64
}

/// Which layer representation [`SumsetTable`] should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// Dense when the table fits in the given number of bits.
    Auto {
        budget_bits: u64,
    },
    Dense,
    Sparse,
}

impl Default for Representation {
    fn default() -> Self {
        Representation::Auto {
            budget_bits: DEFAULT_DENSE_BUDGET_BITS,
        }
    }
}

#[derive(Clone, Debug)]
enum Layers {
    /// Row `c`, bit `j` ↔ sum `c·min(A) + j`.
    Dense(Vec<Bits>),
    Sparse(Vec<BTreeSet<i64>>),
}

/// All layers `c^(r)A` for `0 ≤ c ≤ max_h`.
#[derive(Clone, Debug)]
pub struct SumsetTable {
    min_elem: i64,
    k: usize,
    r: u32,
    max_h: u32,
    layers: Layers,
}

impl SumsetTable {
    pub fn build(set: &IntSet, r: u32, max_h: u32) -> Result<Self, SumsetError> {
        Self::build_with(set, r, max_h, Representation::default())
    }

    pub fn build_with(
        set: &IntSet,
        r: u32,
        max_h: u32,
        repr: Representation,
    ) -> Result<Self, SumsetError> {
        if r == 0 {
            return Err(SumsetError::ZeroMultiplicity);
        }
        let k = set.len();
        // Layers beyond k·r are empty and never materialized.
        let top = (max_h as u64).min(capacity(k, r)) as u32;
        let magnitude = set.min().unsigned_abs().max(set.max().unsigned_abs());
        (top as u64)
            .checked_mul(magnitude)
            .filter(|&b| b <= i64::MAX as u64)
            .ok_or(SumsetError::Overflow)?;

        let span = set.max().abs_diff(set.min());
        let width = (top as u64)
            .checked_mul(span)
            .and_then(|w| w.checked_add(1));
        let dense_bits = width.and_then(|w| w.checked_mul(top as u64 + 1));
        let dense = match repr {
            Representation::Dense => true,
            Representation::Sparse => false,
            Representation::Auto { budget_bits } => {
                matches!(dense_bits, Some(b) if b <= budget_bits)
            }
        };

        let layers = if dense {
            let width = width
                .and_then(|w| usize::try_from(w).ok())
                .ok_or(SumsetError::Overflow)?;
            Layers::Dense(dense_layers(set, r, top, width))
        } else {
            Layers::Sparse(sparse_layers(set, r, top))
        };
        Ok(Self {
            min_elem: set.min(),
            k,
            r,
            max_h,
            layers,
        })
    }

    pub fn max_h(&self) -> u32 {
        self.max_h
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.layers, Layers::Dense(_))
    }

    fn stored(&self, h: u32) -> bool {
        if h as u64 > capacity(self.k, self.r) {
            return false;
        }
        assert!(
            h <= self.max_h,
            "layer {h} not built (max_h = {})",
            self.max_h
        );
        true
    }

    /// `h^(r)A` as a sorted vector; empty when `h > k·r`.
    pub fn layer(&self, h: u32) -> Vec<i64> {
        if !self.stored(h) {
            return Vec::new();
        }
        match &self.layers {
            Layers::Dense(rows) => {
                let offset = h as i64 * self.min_elem;
                rows[h as usize].ones().map(|j| offset + j as i64).collect()
            }
            Layers::Sparse(rows) => rows[h as usize].iter().copied().collect(),
        }
    }

    pub fn layer_len(&self, h: u32) -> usize {
        if !self.stored(h) {
            return 0;
        }
        match &self.layers {
            Layers::Dense(rows) => rows[h as usize].count_ones(),
            Layers::Sparse(rows) => rows[h as usize].len(),
        }
    }

    /// `⋃_{h ∈ hs} h^(r)A`, sorted.
    pub fn union(&self, hs: &[u32]) -> Vec<i64> {
        let mut out: Vec<i64> = Vec::new();
        for &h in hs {
            out.extend(self.layer(h));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn union_len(&self, hs: &[u32]) -> usize {
        match hs {
            [] => 0,
            [h] => self.layer_len(*h),
            _ => self.union(hs).len(),
        }
    }
}

fn dense_layers(set: &IntSet, r: u32, top: u32, width: usize) -> Vec<Bits> {
    let mut rows: Vec<Bits> = (0..=top).map(|_| Bits::zeros(width)).collect();
    rows[0].set(0);
    let base = set.min();
    let mut reach = 0u32;
    for &a in set.elements() {
        let b = a.abs_diff(base) as usize;
        reach = reach.saturating_add(r).min(top);
        for c in (1..=reach).rev() {
            let (lower, upper) = rows.split_at_mut(c as usize);
            let row = &mut upper[0];
            for l in 1..=r.min(c) {
                let src = &lower[(c - l) as usize];
                if !src.is_empty() {
                    row.or_shifted(src, l as usize * b);
                }
            }
        }
    }
    debug_assert!(rows.iter().all(|row| row.len() == width));
    rows
}

fn sparse_layers(set: &IntSet, r: u32, top: u32) -> Vec<BTreeSet<i64>> {
    let mut rows: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); top as usize + 1];
    rows[0].insert(0);
    let mut reach = 0u32;
    for &a in set.elements() {
        reach = reach.saturating_add(r).min(top);
        for c in (1..=reach).rev() {
            let (lower, upper) = rows.split_at_mut(c as usize);
            let row = &mut upper[0];
            for l in 1..=r.min(c) {
                // Magnitudes were bounded by the overflow check in build_with.
                let add = a * l as i64;
                row.extend(lower[(c - l) as usize].iter().map(|&s| s + add));
            }
        }
    }
    rows
}

/// `h^(r)A`; empty when `h > k·r`, `{0}` when `h = 0`.
pub fn generalized_fold_sumset(set: &IntSet, p: FoldParams) -> Result<Vec<i64>, SumsetError> {
    if p.r == 0 {
        return Err(SumsetError::ZeroMultiplicity);
    }
    if p.h as u64 > capacity(set.len(), p.r) {
        return Ok(Vec::new());
    }
    Ok(SumsetTable::build(set, p.r, p.h)?.layer(p.h))
}

/// `H^(r)A = ⋃_{h∈H} h^(r)A`.
pub fn generalized_union_sumset(set: &IntSet, hs: &[u32], r: u32) -> Result<Vec<i64>, SumsetError> {
    if r == 0 {
        return Err(SumsetError::ZeroMultiplicity);
    }
    let cap = capacity(set.len(), r);
    let max_h = hs.iter().copied().filter(|&h| h as u64 <= cap).max();
    let Some(max_h) = max_h else {
        return Err(SumsetError::EmptyResult { capacity: cap });
    };
    Ok(SumsetTable::build(set, r, max_h)?.union(hs))
}

/// `(min h^(r)A, max h^(r)A)` from the greedy multiplicity patterns: `r`
/// copies of the smallest `m` elements plus `ε` copies of the next one, and
/// symmetrically at the top, where `h = m·r + ε`.
pub fn sumset_extrema(set: &IntSet, p: FoldParams) -> Result<(i64, i64), SumsetError> {
    if p.r == 0 {
        return Err(SumsetError::ZeroMultiplicity);
    }
    let k = set.len();
    let cap = capacity(k, p.r);
    if p.h as u64 > cap {
        return Err(SumsetError::OutOfRange {
            h: p.h as u64,
            capacity: cap,
        });
    }
    let m = (p.h / p.r) as usize;
    let eps = (p.h % p.r) as i64;
    let r = p.r as i64;
    let a = set.elements();

    let weighted = |coef: i64, x: i64| coef.checked_mul(x).ok_or(SumsetError::Overflow);
    let mut lo = 0i64;
    let mut hi = 0i64;
    for i in 0..m {
        lo = lo
            .checked_add(weighted(r, a[i])?)
            .ok_or(SumsetError::Overflow)?;
        hi = hi
            .checked_add(weighted(r, a[k - 1 - i])?)
            .ok_or(SumsetError::Overflow)?;
    }
    if eps > 0 {
        lo = lo
            .checked_add(weighted(eps, a[m])?)
            .ok_or(SumsetError::Overflow)?;
        hi = hi
            .checked_add(weighted(eps, a[k - 1 - m])?)
            .ok_or(SumsetError::Overflow)?;
    }
    Ok((lo, hi))
}

/// Number of `λ ∈ [0,r]^k` with `Σ λ_i = h`.
pub fn multiplicity_vector_count(k: usize, h: u32, r: u32) -> u128 {
    let h = h as usize;
    let mut ways = vec![0u128; h + 1];
    ways[0] = 1;
    for _ in 0..k {
        let mut next = vec![0u128; h + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for l in 0..=(r as usize).min(h - s) {
                next[s + l] = next[s + l].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[h]
}

/// `h^(r)A` by direct enumeration of every multiplicity vector.
pub fn brute_force_sumset(set: &IntSet, p: FoldParams) -> Result<Vec<i64>, SumsetError> {
    brute_force_sumset_capped(set, p, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_sumset_capped(
    set: &IntSet,
    p: FoldParams,
    cap: u128,
) -> Result<Vec<i64>, SumsetError> {
    if p.r == 0 {
        return Err(SumsetError::ZeroMultiplicity);
    }
    let vectors = multiplicity_vector_count(set.len(), p.h, p.r);
    if vectors > cap {
        return Err(SumsetError::TooLarge { vectors, cap });
    }
    let mut out = BTreeSet::new();
    enumerate(set.elements(), p.r, p.h, 0, &mut out)?;
    Ok(out.into_iter().collect())
}

fn enumerate(
    rest: &[i64],
    r: u32,
    remaining: u32,
    acc: i64,
    out: &mut BTreeSet<i64>,
) -> Result<(), SumsetError> {
    let Some((&a, tail)) = rest.split_first() else {
        if remaining == 0 {
            out.insert(acc);
        }
        return Ok(());
    };
    let tail_room = (tail.len() as u64) * r as u64;
    let lo = (remaining as u64).saturating_sub(tail_room) as u32;
    let hi = r.min(remaining);
    for lambda in lo..=hi {
        let next = (lambda as i64)
            .checked_mul(a)
            .and_then(|x| x.checked_add(acc))
            .ok_or(SumsetError::Overflow)?;
        enumerate(tail, r, remaining - lambda, next, out)?;
    }
    Ok(())
}
