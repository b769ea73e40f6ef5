//! Exact linear algebra over a subfield F_{q^e} of the tower.
//!
//! Subspaces are always stored as their reduced row-echelon basis, so two
//! spans of the same space compare equal structurally. Vectors of
//! F_{q^m}^k are viewed over F_{q^e} by flattening: coordinate j of the
//! F_{q^m} vector occupies positions j·(m/e)..(j+1)·(m/e) of the flat one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Arith, Fe, FieldTower};

/// Dense row-major matrix whose entries lie in F_{q^level}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatF {
    rows: usize,
    cols: usize,
    level: u32,
    data: Vec<Fe>,
}

fn check_level(tower: &FieldTower, level: u32) -> Result<()> {
    if !tower.divides_m(level) {
        return Err(Error::NotDivisor { e: level, m: tower.m() });
    }
    Ok(())
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MatF {
    pub fn new(tower: &FieldTower, level: u32, rows: usize, cols: usize, data: Vec<Fe>) -> Result<Self> {
        check_level(tower, level)?;
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {rows}×{cols} matrix", data.len())));
        }
        if data.iter().any(|&x| x.0 >= tower.order() || !tower.in_subfield(x, level)) {
            return Err(Error::Format(format!("matrix entry outside F_(q^{level})")));
        }
        Ok(MatF { rows, cols, level, data })
    }

    pub fn from_rows(tower: &FieldTower, level: u32, rows: &[Vec<Fe>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(tower, level, rows.len(), cols, rows.concat())
    }

    pub fn zeros(level: u32, rows: usize, cols: usize) -> Self {
        MatF { rows, cols, level, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn identity(level: u32, n: usize) -> Self {
        let mut m = Self::zeros(level, n, n);
        for i in 0..n {
            m.data[i * n + i] = Fe::ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn level(&self) -> u32 {
        self.level
    }
    pub fn data(&self) -> &[Fe] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fe {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Fe] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Fe> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Fe>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> MatF {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        MatF { rows: self.cols, cols: self.rows, level: self.level, data }
    }

    /// Product over the smallest level containing both factors.
    pub fn mul(&self, tower: &FieldTower, rhs: &MatF) -> Result<MatF> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}×{} times {}×{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let level = self.level / gcd(self.level, rhs.level) * rhs.level;
        let ar = tower.arith(level);
        let mut data = vec![Fe::ZERO; self.rows * rhs.cols];
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let cell = &mut data[i * rhs.cols + j];
                    *cell = ar.add(*cell, ar.mul(a, rhs.get(t, j)));
                }
            }
        }
        Ok(MatF { rows: self.rows, cols: rhs.cols, level, data })
    }

    /// Reduced row-echelon form; zero rows are kept at the bottom.
    pub fn rref(&self, tower: &FieldTower) -> MatF {
        let mut out = self.clone();
        rref_in_place(tower.arith(self.level), &mut out.data, self.rows, self.cols);
        out
    }

    pub fn rank(&self, tower: &FieldTower) -> usize {
        let mut scratch = self.data.clone();
        rank_in_place(tower.arith(self.level), &mut scratch, self.rows, self.cols)
    }

    /// Right kernel {x : M x = 0} over F_{q^level}.
    pub fn kernel(&self, tower: &FieldTower) -> Subspace {
        let ar = tower.arith(self.level);
        let mut r = self.data.clone();
        let pivots = rref_in_place(ar, &mut r, self.rows, self.cols);
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let basis: Vec<Vec<Fe>> = (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = vec![Fe::ZERO; self.cols];
                v[f] = Fe::ONE;
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = ar.neg(r[i * self.cols + f]);
                }
                v
            })
            .collect();
        Subspace::canonical(ar, self.level, self.cols, basis)
    }
}

/// In-place RREF of a row-major `rows × cols` block; returns pivot columns.
pub(crate) fn rref_in_place(ar: Arith, data: &mut [Fe], rows: usize, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !data[r * cols + col].is_zero()) else {
            continue;
        };
        if piv != rank {
            for c in 0..cols {
                data.swap(piv * cols + c, rank * cols + c);
            }
        }
        let inv = ar.inv(data[rank * cols + col]);
        for c in col..cols {
            data[rank * cols + c] = ar.mul(data[rank * cols + c], inv);
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let f = data[r * cols + col];
            if f.is_zero() {
                continue;
            }
            let nf = ar.neg(f);
            for c in col..cols {
                let v = data[rank * cols + c];
                data[r * cols + c] = ar.add(data[r * cols + c], ar.mul(nf, v));
            }
        }
        pivots.push(col);
        rank += 1;
    }
    pivots
}

/// Rank by forward elimination only; clobbers `data`.
pub(crate) fn rank_in_place(ar: Arith, data: &mut [Fe], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !data[r * cols + col].is_zero()) else {
            continue;
        };
        if piv != rank {
            for c in col..cols {
                data.swap(piv * cols + c, rank * cols + c);
            }
        }
        let inv = ar.inv(data[rank * cols + col]);
        for r in rank + 1..rows {
            let f = data[r * cols + col];
            if f.is_zero() {
                continue;
            }
            let nf = ar.neg(ar.mul(f, inv));
            for c in col..cols {
                let v = data[rank * cols + c];
                data[r * cols + c] = ar.add(data[r * cols + c], ar.mul(nf, v));
            }
        }
        rank += 1;
    }
    rank
}

/// A subspace of F_{q^e}^len in canonical (RREF) form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    level: u32,
    len: usize,
    basis: Vec<Vec<Fe>>,
    pivots: Vec<usize>,
}

/// Ambient description used in files: vectors of F_{q^m}^k viewed over F_{q^e}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambient {
    pub k: usize,
    pub m: u32,
    pub e: u32,
}

/// Serialized subspace: `{ambient: {k, m, e}, basis: [[..]]}`, basis in RREF order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceRecord {
    pub ambient: Ambient,
    pub basis: Vec<Vec<Fe>>,
}

impl Subspace {
    fn canonical(ar: Arith, level: u32, len: usize, vectors: Vec<Vec<Fe>>) -> Self {
        let rows = vectors.len();
        let mut data: Vec<Fe> = vectors.concat();
        let pivots = rref_in_place(ar, &mut data, rows, len);
        let basis = (0..pivots.len()).map(|i| data[i * len..(i + 1) * len].to_vec()).collect();
        Subspace { level, len, basis, pivots }
    }

    /// F_{q^level}-span of `vectors`, each of length `len`.
    pub fn span<I>(tower: &FieldTower, level: u32, len: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Fe>>,
    {
        check_level(tower, level)?;
        let vectors: Vec<Vec<Fe>> = vectors.into_iter().collect();
        for v in &vectors {
            if v.len() != len {
                return Err(Error::Dimension(format!("vector of length {} in F^{len}", v.len())));
            }
            if v.iter().any(|&x| x.0 >= tower.order() || !tower.in_subfield(x, level)) {
                return Err(Error::Format(format!("entry outside F_(q^{level})")));
            }
        }
        Ok(Self::canonical(tower.arith(level), level, len, vectors))
    }

    pub fn zero(level: u32, len: usize) -> Self {
        Subspace { level, len, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(level: u32, len: usize) -> Self {
        let basis = (0..len)
            .map(|i| (0..len).map(|j| if i == j { Fe::ONE } else { Fe::ZERO }).collect())
            .collect();
        Subspace { level, len, basis, pivots: (0..len).collect() }
    }

    pub fn level(&self) -> u32 {
        self.level
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }
    pub fn basis(&self) -> &[Vec<Fe>] {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Residue of `v` after eliminating against the basis pivots.
    pub fn reduce(&self, tower: &FieldTower, v: &[Fe]) -> Vec<Fe> {
        let ar = tower.arith(self.level);
        let mut w = v.to_vec();
        for (b, &pc) in self.basis.iter().zip(&self.pivots) {
            let f = w[pc];
            if f.is_zero() {
                continue;
            }
            let nf = ar.neg(f);
            for (x, &y) in w.iter_mut().zip(b) {
                *x = ar.add(*x, ar.mul(nf, y));
            }
        }
        w
    }

    pub fn contains(&self, tower: &FieldTower, v: &[Fe]) -> Result<bool> {
        if v.len() != self.len {
            return Err(Error::Dimension(format!("vector of length {} in F^{}", v.len(), self.len)));
        }
        Ok(self.reduce(tower, v).iter().all(|x| x.is_zero()))
    }

    fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.level != other.level || self.len != other.len {
            return Err(Error::Dimension(format!(
                "ambient F_(q^{})^{} vs F_(q^{})^{}",
                self.level, self.len, other.level, other.len
            )));
        }
        Ok(())
    }

    pub fn sum(&self, tower: &FieldTower, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        let vectors = self.basis.iter().chain(&other.basis).cloned().collect();
        Ok(Self::canonical(tower.arith(self.level), self.level, self.len, vectors))
    }

    /// Zassenhaus: reduce [u | u] and [w | 0]; rows with zero left half
    /// span the intersection in their right half.
    pub fn intersect(&self, tower: &FieldTower, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        let n = self.len;
        let ar = tower.arith(self.level);
        let rows = self.dim() + other.dim();
        let mut data = Vec::with_capacity(rows * 2 * n);
        for u in &self.basis {
            data.extend_from_slice(u);
            data.extend_from_slice(u);
        }
        for w in &other.basis {
            data.extend_from_slice(w);
            data.extend(std::iter::repeat(Fe::ZERO).take(n));
        }
        let pivots = rref_in_place(ar, &mut data, rows, 2 * n);
        let vectors = pivots
            .iter()
            .enumerate()
            .filter(|&(_, &pc)| pc >= n)
            .map(|(i, _)| data[i * 2 * n + n..(i + 1) * 2 * n].to_vec())
            .collect();
        Ok(Self::canonical(ar, self.level, n, vectors))
    }

    pub fn is_subspace_of(&self, tower: &FieldTower, other: &Subspace) -> Result<bool> {
        self.same_ambient(other)?;
        Ok(self.basis.iter().all(|b| other.reduce(tower, b).iter().all(|x| x.is_zero())))
    }

    /// Σ c_i b_i with c_i the coefficients.
    pub fn combine(&self, tower: &FieldTower, coeffs: &[Fe]) -> Vec<Fe> {
        let ar = tower.arith(self.level);
        let mut out = vec![Fe::ZERO; self.len];
        for (b, &c) in self.basis.iter().zip(coeffs) {
            if c.is_zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(b) {
                *o = ar.add(*o, ar.mul(c, x));
            }
        }
        out
    }

    pub fn to_record(&self, tower: &FieldTower) -> Result<SubspaceRecord> {
        let per = (tower.m() / self.level) as usize;
        if self.len % per != 0 {
            return Err(Error::Dimension("length is not a multiple of m/e".into()));
        }
        Ok(SubspaceRecord {
            ambient: Ambient { k: self.len / per, m: tower.m(), e: self.level },
            basis: self.basis.clone(),
        })
    }

    pub fn from_record(tower: &FieldTower, rec: &SubspaceRecord) -> Result<Self> {
        let a = rec.ambient;
        if a.m != tower.m() {
            return Err(Error::Format(format!("subspace over m = {} in a tower with m = {}", a.m, tower.m())));
        }
        check_level(tower, a.e)?;
        let len = a.k * (a.m / a.e) as usize;
        Self::span(tower, a.e, len, rec.basis.iter().cloned())
    }
}

/// F_{q^e}-coordinates of a vector of F_{q^m}^k, block per coordinate.
pub fn flatten(tower: &FieldTower, v: &[Fe], e: u32) -> Result<Vec<Fe>> {
    check_level(tower, e)?;
    let per = (tower.m() / e) as usize;
    let mut out = vec![Fe::ZERO; v.len() * per];
    flatten_into(tower, v, e, &mut out);
    Ok(out)
}

/// Like [`flatten`] into a caller buffer of length `v.len()·m/e`; `e` must divide m.
#[inline]
pub fn flatten_into(tower: &FieldTower, v: &[Fe], e: u32, out: &mut [Fe]) {
    let per = (tower.m() / e) as usize;
    for (x, chunk) in v.iter().zip(out.chunks_exact_mut(per)) {
        tower.coords_into(*x, e, chunk);
    }
}

pub fn unflatten(tower: &FieldTower, w: &[Fe], e: u32) -> Result<Vec<Fe>> {
    check_level(tower, e)?;
    let per = (tower.m() / e) as usize;
    if w.len() % per != 0 {
        return Err(Error::Dimension(format!("flat length {} is not a multiple of {per}", w.len())));
    }
    w.chunks_exact(per).map(|c| tower.from_coords(c, e)).collect()
}

/// The same point set re-based over F_{q^e}, if `u` (given over F_q) is
/// F_{q^e}-linear. Closure under one generator λ of F_{q^e} suffices since
/// F_{q^e} = F_p[λ].
pub fn restrict_level(tower: &FieldTower, u: &Subspace, e: u32) -> Result<Option<Subspace>> {
    check_level(tower, e)?;
    if u.level() != 1 {
        return Err(Error::Precondition("restrict_level expects a subspace over F_q".into()));
    }
    if e == 1 {
        return Ok(Some(u.clone()));
    }
    let lambda = tower.subfield_generator(e)?;
    let mut originals = Vec::with_capacity(u.dim());
    for b in u.basis() {
        let v = unflatten(tower, b, 1)?;
        let scaled: Vec<Fe> = v.iter().map(|&x| tower.mul(lambda, x)).collect();
        if !u.contains(tower, &flatten(tower, &scaled, 1)?)? {
            return Ok(None);
        }
        originals.push(v);
    }
    let per = (tower.m() / e) as usize;
    let k = u.len() / tower.m() as usize;
    let flat: Result<Vec<_>> = originals.iter().map(|v| flatten(tower, v, e)).collect();
    let out = Subspace::span(tower, e, k * per, flat?)?;
    debug_assert_eq!(out.dim() * e as usize, u.dim());
    Ok(Some(out))
}

/// The F_q-subspace with the same vectors as `u`, given over F_{q^e}.
pub fn lift_level(tower: &FieldTower, u: &Subspace) -> Result<Subspace> {
    let e = u.level();
    if e == 1 {
        return Ok(u.clone());
    }
    let fq_basis = tower.fq_basis(e)?.to_vec();
    let per = (tower.m() / e) as usize;
    let k = u.len() / per;
    let mut vectors = Vec::with_capacity(u.dim() * e as usize);
    for b in u.basis() {
        let v = unflatten(tower, b, e)?;
        for &beta in &fq_basis {
            let scaled: Vec<Fe> = v.iter().map(|&x| tower.mul(beta, x)).collect();
            vectors.push(flatten(tower, &scaled, 1)?);
        }
    }
    Subspace::span(tower, 1, k * tower.m() as usize, vectors)
}

/// ⟨U⟩_{F_{q^m}} as a level-m subspace of F_{q^m}^k.
pub fn fqm_span(tower: &FieldTower, u: &Subspace) -> Result<Subspace> {
    let per = (tower.m() / u.level()) as usize;
    let k = u.len() / per;
    let vectors: Result<Vec<_>> = u.basis().iter().map(|b| unflatten(tower, b, u.level())).collect();
    Subspace::span(tower, tower.m(), k, vectors?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, tower: &FieldTower, e: u32, len: usize) -> Vec<Fe> {
        (0..len).map(|_| tower.subfield_element(e, rng.gen_range(0..tower.q_pow(e)))).collect()
    }

    /// Rank by brute force: the log_q of the number of distinct vectors in the
    /// row span, obtained by enumerating every coefficient combination.
    fn brute_rank(tower: &FieldTower, e: u32, rows: &[Vec<Fe>]) -> usize {
        let q = tower.q_pow(e);
        let mut seen = std::collections::HashSet::new();
        for idx in 0..q.pow(rows.len() as u32) {
            let mut rest = idx;
            let mut acc = vec![Fe::ZERO; rows[0].len()];
            for row in rows {
                let c = tower.subfield_element(e, rest % q);
                rest /= q;
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a = tower.add(*a, tower.mul(c, x));
                }
            }
            seen.insert(acc);
        }
        let mut size = seen.len() as u64;
        let mut r = 0;
        while size > 1 {
            size /= q;
            r += 1;
        }
        r
    }

    #[test]
    fn rref_examples() {
        let t = FieldTower::new(2, 1, 2).unwrap();
        let id = MatF::identity(1, 3);
        assert_eq!(id.rref(&t), id);
        let m = MatF::from_rows(&t, 1, &[vec![Fe(1), Fe(1)], vec![Fe(1), Fe(1)]]).unwrap();
        assert_eq!(m.rref(&t).to_rows(), vec![vec![Fe(1), Fe(1)], vec![Fe(0), Fe(0)]]);
    }

    #[test]
    fn rank_matches_brute_force_over_f3() {
        let t = FieldTower::new(3, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let rows: Vec<Vec<Fe>> = (0..4).map(|_| random_vec(&mut rng, &t, 1, 6)).collect();
            let m = MatF::from_rows(&t, 1, &rows).unwrap();
            let r = m.rref(&t);
            assert_eq!(r.rank(&t), m.rank(&t));
            assert_eq!(r.rref(&t), r);
            assert_eq!(m.rank(&t), brute_rank(&t, 1, &rows));
        }
    }

    #[test]
    fn kernel_rank_nullity_over_f4() {
        // F_4 is level 2 of the tower F_2 ⊂ F_4.
        let t = FieldTower::new(2, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let rows: Vec<Vec<Fe>> = (0..rng.gen_range(1..5)).map(|_| random_vec(&mut rng, &t, 2, 6)).collect();
            let m = MatF::from_rows(&t, 2, &rows).unwrap();
            let ker = m.kernel(&t);
            assert_eq!(ker.dim() + m.rank(&t), 6);
            // exhaustive null-vector count: 4^dim(ker) vectors of F_4^6 map to zero
            let mut nulls = 0u64;
            for idx in 0..4u64.pow(6) {
                let x: Vec<Fe> = (0..6).map(|i| t.subfield_element(2, (idx >> (2 * i)) & 3)).collect();
                let zero = (0..m.rows()).all(|i| {
                    m.row(i).iter().zip(&x).fold(Fe::ZERO, |a, (&p, &q)| t.add(a, t.mul(p, q))).is_zero()
                });
                if zero {
                    nulls += 1;
                    assert!(ker.contains(&t, &x).unwrap());
                }
            }
            assert_eq!(nulls, 4u64.pow(ker.dim() as u32));
        }
        let zero_map = MatF::zeros(1, 2, 3);
        assert_eq!(zero_map.kernel(&t), Subspace::full(1, 3));
        let ones = MatF::from_rows(&t, 1, &[vec![Fe(1), Fe(1)]]).unwrap();
        let ker = ones.kernel(&t);
        assert_eq!(ker.basis(), &[vec![Fe(1), Fe(1)]]);
    }

    #[test]
    fn grassmann_identity_with_membership_scan() {
        let t = FieldTower::new(2, 1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all: Vec<Vec<Fe>> = (0u32..256).map(|x| (0..8).map(|i| Fe((x >> i) & 1)).collect()).collect();
        for _ in 0..200 {
            let du = rng.gen_range(0..6);
            let dw = rng.gen_range(0..6);
            let u = Subspace::span(&t, 1, 8, (0..du).map(|_| random_vec(&mut rng, &t, 1, 8))).unwrap();
            let w = Subspace::span(&t, 1, 8, (0..dw).map(|_| random_vec(&mut rng, &t, 1, 8))).unwrap();
            let cap = u.intersect(&t, &w).unwrap();
            let cup = u.sum(&t, &w).unwrap();
            assert_eq!(cap.dim() + cup.dim(), u.dim() + w.dim());
            let scan = all
                .iter()
                .filter(|v| u.contains(&t, v).unwrap() && w.contains(&t, v).unwrap())
                .count();
            assert_eq!(scan, 1 << cap.dim());
            assert_eq!(u.intersect(&t, &u).unwrap(), u);
            assert_eq!(u.intersect(&t, &Subspace::full(1, 8)).unwrap(), u);
        }
    }

    #[test]
    fn canonical_under_change_of_basis() {
        let t = FieldTower::new(3, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let gens: Vec<Vec<Fe>> = (0..3).map(|_| random_vec(&mut rng, &t, 2, 4)).collect();
            let u = Subspace::span(&t, 2, 4, gens.clone()).unwrap();
            let mixed: Vec<Vec<Fe>> = (0..5)
                .map(|_| {
                    let c = random_vec(&mut rng, &t, 2, 3);
                    (0..4)
                        .map(|j| (0..3).fold(Fe::ZERO, |a, i| t.add(a, t.mul(c[i], gens[i][j]))))
                        .collect()
                })
                .chain(gens.iter().cloned())
                .collect();
            assert_eq!(Subspace::span(&t, 2, 4, mixed).unwrap(), u);
        }
    }

    #[test]
    fn flatten_round_trip_and_line_dimension() {
        let t = FieldTower::new(3, 1, 2).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                let v = vec![Fe(a), Fe(b)];
                let f = flatten(&t, &v, 1).unwrap();
                assert_eq!(f.len(), 4);
                assert_eq!(unflatten(&t, &f, 1).unwrap(), v);
            }
        }
        assert!(flatten(&t, &[Fe(0), Fe(0)], 1).unwrap().iter().all(|x| x.is_zero()));
        let t = FieldTower::new(2, 1, 4).unwrap();
        let v = vec![Fe(3), Fe(7)];
        let line = Subspace::span(
            &t,
            1,
            8,
            (0..16).map(|l| flatten(&t, &[t.mul(Fe(l), v[0]), t.mul(Fe(l), v[1])], 1).unwrap()),
        )
        .unwrap();
        assert_eq!(line.dim(), 4);
    }

    #[test]
    fn restrict_and_lift() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let gens: Vec<Vec<Fe>> = (0..2).map(|_| random_vec(&mut rng, &t, 2, 4)).collect();
            let w = Subspace::span(&t, 2, 4, gens).unwrap();
            let u = lift_level(&t, &w).unwrap();
            assert_eq!(u.dim(), 2 * w.dim());
            assert_eq!(restrict_level(&t, &u, 1).unwrap(), Some(u.clone()));
            let back = restrict_level(&t, &u, 2).unwrap().expect("F_4-linear by construction");
            assert_eq!(back, w);
        }
        // {(x, x^2)} is not F_4-linear.
        let basis: Vec<Vec<Fe>> = (0..4)
            .map(|i| {
                let b = t.pow(t.primitive(), i);
                flatten(&t, &[b, t.frobenius(b, 1)], 1).unwrap()
            })
            .collect();
        let u = Subspace::span(&t, 1, 8, basis).unwrap();
        assert_eq!(restrict_level(&t, &u, 2).unwrap(), None);
        assert_eq!(restrict_level(&t, &u, 4).unwrap(), None);
        assert!(matches!(restrict_level(&t, &u, 3), Err(Error::NotDivisor { .. })));
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let t = FieldTower::new(2, 1, 2).unwrap();
        let a = Subspace::full(1, 4);
        let b = Subspace::full(1, 3);
        assert!(matches!(a.intersect(&t, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn record_round_trip() {
        let t = FieldTower::new(2, 1, 4).unwrap();
        let u = Subspace::span(&t, 1, 8, [flatten(&t, &[Fe(1), Fe(2)], 1).unwrap()]).unwrap();
        let rec = u.to_record(&t).unwrap();
        assert_eq!(rec.ambient, Ambient { k: 2, m: 4, e: 1 });
        let json = serde_json::to_string(&rec).unwrap();
        let back: SubspaceRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Subspace::from_record(&t, &back).unwrap(), u);
    }
}
