//! Projective point indexing and budgeted, partitioned enumeration.
//!
//! Points of PG(k-1, Q), Q = q^level, are represented by their normalized
//! vector: first nonzero coordinate equal to 1. Index layout: points whose
//! leading 1 sits at position j form block j, holding Q^{k-1-j} points; within
//! a block the trailing coordinates are read as a big-endian base-Q number,
//! digit i standing for `subfield_element(level, i)`.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldTower};

pub const DEFAULT_BUDGET: u64 = 1 << 24;

static BUDGET: AtomicU64 = AtomicU64::new(DEFAULT_BUDGET);

/// Maximum number of items any single enumeration may visit.
pub fn enumeration_budget() -> u64 {
    BUDGET.load(Ordering::Relaxed)
}

pub fn set_enumeration_budget(budget: u64) {
    BUDGET.store(budget.max(1), Ordering::Relaxed);
}

pub fn check_budget(needed: u128) -> Result<()> {
    let budget = enumeration_budget();
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed: needed.min(u64::MAX as u128) as u64, budget });
    }
    Ok(())
}

/// (Q^k - 1)/(Q - 1), saturating.
pub fn point_count(base: u64, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..k {
        total = total.saturating_add(pow);
        pow = pow.saturating_mul(base as u128);
    }
    total
}

/// Indexer for PG(k-1, q^level).
pub struct Projective<'t> {
    tower: &'t FieldTower,
    level: u32,
    k: usize,
    base: u64,
    block_start: Vec<u64>,
    count: u64,
}

impl<'t> Projective<'t> {
    /// Fails if the point count exceeds the enumeration budget.
    pub fn new(tower: &'t FieldTower, level: u32, k: usize) -> Result<Self> {
        if !tower.divides_m(level) {
            return Err(Error::NotDivisor { e: level, m: tower.m() });
        }
        if k == 0 {
            return Err(Error::Dimension("projective space of a zero-dimensional space".into()));
        }
        let base = tower.q_pow(level);
        check_budget(point_count(base, k))?;
        let mut block_start = Vec::with_capacity(k + 1);
        let mut acc = 0u64;
        for j in 0..k {
            block_start.push(acc);
            acc += base.pow((k - 1 - j) as u32);
        }
        block_start.push(acc);
        Ok(Projective { tower, level, k, base, block_start, count: acc })
    }

    pub fn count(&self) -> u64 {
        self.count
    }
    pub fn k(&self) -> usize {
        self.k
    }

    /// Writes the normalized representative of point `idx` into `out`.
    pub fn point_into(&self, idx: u64, out: &mut [Fe]) {
        debug_assert!(idx < self.count);
        let j = self.block_start.partition_point(|&s| s <= idx) - 1;
        out[..j].fill(Fe::ZERO);
        out[j] = Fe::ONE;
        let mut rest = idx - self.block_start[j];
        for pos in (j + 1..self.k).rev() {
            out[pos] = self.tower.subfield_element(self.level, rest % self.base);
            rest /= self.base;
        }
    }

    pub fn point(&self, idx: u64) -> Vec<Fe> {
        let mut out = vec![Fe::ZERO; self.k];
        self.point_into(idx, &mut out);
        out
    }

    /// Index of the point spanned by `v` over F_{q^level}, or `None` for zero.
    /// Entries must lie in F_{q^level}.
    pub fn index_of(&self, v: &[Fe]) -> Option<u64> {
        let j = v.iter().position(|x| !x.is_zero())?;
        let inv = self.tower.inv_nonzero(v[j]);
        let mut idx = 0u64;
        for &x in &v[j + 1..] {
            idx = idx * self.base + self.tower.subfield_index(self.tower.mul(x, inv), self.level);
        }
        Some(self.block_start[j] + idx)
    }
}

/// Indices per parallel work unit. Fixed so that partial results do not
/// depend on the number of workers.
const CHUNK: u64 = 1 << 12;

/// Folds `body` over `0..count` in fixed chunks, in parallel on the current
/// rayon pool. `merge` must be associative and commutative for the result to
/// be independent of scheduling.
pub fn par_fold<A, I, F, M>(count: u64, identity: I, body: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, Range<u64>) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = identity();
            body(&mut acc, c * CHUNK..((c + 1) * CHUNK).min(count));
            acc
        })
        .reduce(&identity, merge)
}

/// Element-wise sum of two count vectors of equal length.
pub fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}
