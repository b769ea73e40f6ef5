//! The field tower F_p ⊆ F_q ⊆ F_{q^e} ⊆ F_{q^m}, realized inside a single
//! field of order p^{rm} with q = p^r.
//!
//! Elements are integers whose base-p digits (little-endian) are the
//! coefficients of the element in the power basis of the modulus.
//! Multiplication goes through discrete-log tables base the root of the
//! modulus (or the least primitive element when that root is not one).
//! Addition is XOR in characteristic 2 and Zech logarithms otherwise.
//!
//! Every intermediate field F_{q^e}, e | m, is the fixed field of
//! a ↦ a^{q^e}. For each such e the tower caches a basis of F_{q^m} over
//! F_{q^e} together with the change of coordinates used by [`FieldTower::coords`].

use serde::{Deserialize, Serialize};

use crate::conway;
use crate::error::{Error, Result};
use crate::poly;

/// Largest field order the tower will tabulate.
pub const TABLE_BUDGET: u64 = 1 << 22;

const NO_LOG: u32 = u32::MAX;

/// An element of the top field F_{q^m}, in the integer encoding above.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Serialized form of a tower: enough to rebuild it bit-exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDescriptor {
    pub p: u32,
    pub r: u32,
    pub m: u32,
    /// Monic modulus over F_p, little-endian by degree, degree r·m.
    pub modulus: Vec<u32>,
}

/// Cached data for viewing F_{q^m} as a vector space over F_{q^e}.
#[derive(Clone, Debug)]
struct Level {
    /// (p^{rm} - 1)/(q^e - 1): logs of F_{q^e}^* are exactly its multiples.
    step: u32,
    /// ζ with F_{q^m} = ⊕_j F_{q^e} ζ^j.
    generator: Fe,
    powers: Vec<Fe>,
    /// F_p-basis γ^l (l < re) of F_{q^e}, γ = primitive^step.
    sub_basis: Vec<Fe>,
    /// Inverse of the F_p-matrix whose column j·re + l holds the digits of ζ^j β_l.
    inverse: Vec<Vec<u32>>,
    /// Element of F_{q^e} for each base-p coordinate vector over `sub_basis`.
    sub_table: Vec<Fe>,
    /// Coordinates are the raw digits (r = e = 1 and ζ = x).
    identity: bool,
    /// F_q-basis γ^j (j < e) of F_{q^e}.
    fq_basis: Vec<Fe>,
}

/// Exact arithmetic in F_{p^{rm}} with its subfield lattice.
///
/// Immutable after construction and `Sync`; share one instance freely.
#[derive(Clone, Debug)]
pub struct FieldTower {
    p: u32,
    r: u32,
    m: u32,
    degree: u32,
    order: u32,
    q: u32,
    modulus: Vec<u32>,
    primitive: Fe,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
    half: u32,
    pow_p: Vec<u32>,
    levels: Vec<Option<Level>>,
}

/// Scalar arithmetic for one level of the tower. Linear algebra over a
/// subfield only ever sees elements of that subfield, so prime levels use
/// plain modular arithmetic on the encodings.
#[derive(Clone, Copy)]
pub enum Arith<'a> {
    Binary,
    Prime(u32),
    Tower(&'a FieldTower),
}

impl Arith<'_> {
    #[inline]
    pub fn add(self, a: Fe, b: Fe) -> Fe {
        match self {
            Arith::Binary => Fe(a.0 ^ b.0),
            Arith::Prime(p) => {
                let s = a.0 + b.0;
                Fe(if s >= p { s - p } else { s })
            }
            Arith::Tower(t) => t.add(a, b),
        }
    }

    #[inline]
    pub fn neg(self, a: Fe) -> Fe {
        match self {
            Arith::Binary => a,
            Arith::Prime(p) => Fe(if a.0 == 0 { 0 } else { p - a.0 }),
            Arith::Tower(t) => t.neg(a),
        }
    }

    #[inline]
    pub fn sub(self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(self, a: Fe, b: Fe) -> Fe {
        match self {
            Arith::Binary => Fe(a.0 & b.0),
            Arith::Prime(p) => Fe((a.0 as u64 * b.0 as u64 % p as u64) as u32),
            Arith::Tower(t) => t.mul(a, b),
        }
    }

    #[inline]
    pub fn inv(self, a: Fe) -> Fe {
        debug_assert!(!a.is_zero());
        match self {
            Arith::Binary => a,
            Arith::Prime(p) => Fe(poly::inv_mod(a.0, p)),
            Arith::Tower(t) => t.inv_nonzero(a),
        }
    }
}

fn checked_order(p: u32, degree: u32) -> Result<u32> {
    let budget_err = || Error::TableBudget {
        order: (p as u64).saturating_pow(degree),
        budget: TABLE_BUDGET,
    };
    let order = (p as u64).checked_pow(degree).ok_or_else(budget_err)?;
    if order > TABLE_BUDGET {
        return Err(budget_err());
    }
    Ok(order as u32)
}

impl FieldTower {
    /// Builds F_{p^{rm}} with the shipped Conway polynomial of degree r·m.
    pub fn new(p: u32, r: u32, m: u32) -> Result<Self> {
        Self::with_modulus(p, r, m, None)
    }

    /// Builds the tower, optionally over a caller-supplied monic modulus.
    pub fn with_modulus(p: u32, r: u32, m: u32, modulus: Option<Vec<u32>>) -> Result<Self> {
        if !poly::is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if r == 0 || m == 0 {
            return Err(Error::Precondition("r and m must be positive".into()));
        }
        let degree = r.checked_mul(m).ok_or(Error::TableBudget { order: u64::MAX, budget: TABLE_BUDGET })?;
        let order = checked_order(p, degree)?;
        let modulus = match modulus {
            Some(f) => {
                if f.iter().any(|&c| c >= p) {
                    return Err(Error::InvalidModulus("coefficient out of range".into()));
                }
                if f.len() != degree as usize + 1 || f[degree as usize] != 1 {
                    return Err(Error::InvalidModulus(format!("expected a monic polynomial of degree {degree}")));
                }
                if !poly::is_irreducible(&f, p) {
                    return Err(Error::InvalidModulus("polynomial is reducible".into()));
                }
                f
            }
            None => conway::lookup(p, degree)
                .ok_or(Error::NoDefaultModulus { p, degree })?
                .to_vec(),
        };

        let pow_p: Vec<u32> = (0..=degree).map(|i| (p as u64).pow(i).min(u32::MAX as u64) as u32).collect();
        let q = pow_p[r as usize];
        let mut tower = FieldTower {
            p,
            r,
            m,
            degree,
            order,
            q,
            modulus,
            primitive: Fe::ONE,
            exp: Vec::new(),
            log: Vec::new(),
            zech: Vec::new(),
            half: (order - 1) / 2,
            pow_p,
            levels: Vec::new(),
        };
        tower.build_tables()?;
        tower.build_levels()?;
        Ok(tower)
    }

    pub fn from_descriptor(d: &TowerDescriptor) -> Result<Self> {
        Self::with_modulus(d.p, d.r, d.m, Some(d.modulus.clone()))
    }

    pub fn descriptor(&self) -> TowerDescriptor {
        TowerDescriptor { p: self.p, r: self.r, m: self.m, modulus: self.modulus.clone() }
    }

    fn digit_add(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        let (p, mut a, mut b) = (self.p, a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn to_poly(&self, mut v: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.degree as usize);
        while v > 0 {
            out.push(v % self.p);
            v /= self.p;
        }
        out
    }

    fn from_poly(&self, c: &[u32]) -> u32 {
        c.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    fn build_tables(&mut self) -> Result<()> {
        let (p, d, n1) = (self.p, self.degree as usize, self.order - 1);
        let top = self.pow_p[d - 1];
        // reduction[t] = -t·(f - x^D), the correction when the shift overflows.
        let reduction: Vec<u32> = (0..p)
            .map(|t| {
                let c: Vec<u32> = self.modulus[..d].iter().map(|&f| (p - (t * f) % p) % p).collect();
                self.from_poly(&c)
            })
            .collect();
        let times_x = |v: u32| -> u32 {
            let t = v / top;
            let shifted = (v % top) * p;
            if t == 0 {
                shifted
            } else {
                self.digit_add(shifted, reduction[t as usize])
            }
        };

        let root = times_x(1);
        let mut exp = Vec::with_capacity(2 * n1 as usize);
        let mut v = 1u32;
        loop {
            exp.push(v);
            v = times_x(v);
            if v == 1 || exp.len() > n1 as usize {
                break;
            }
        }
        if exp.len() != n1 as usize {
            // The root of the modulus is not primitive: use the least primitive element.
            let factors = poly::prime_factors(n1 as u64);
            let g = (2..self.order)
                .find(|&g| {
                    let gp = self.to_poly(g);
                    factors
                        .iter()
                        .all(|&l| poly::pow_poly_mod(&gp, n1 as u64 / l, &self.modulus, p) != [1])
                })
                .ok_or_else(|| Error::InvalidModulus("no primitive element found".into()))?;
            let gp = self.to_poly(g);
            exp.clear();
            let mut cur: Vec<u32> = vec![1];
            for _ in 0..n1 {
                exp.push(self.from_poly(&cur));
                cur = poly::mul_mod(&cur, &gp, &self.modulus, p);
            }
            self.primitive = Fe(g);
        } else {
            self.primitive = Fe(root);
        }

        let mut log = vec![NO_LOG; self.order as usize];
        for (i, &e) in exp.iter().enumerate() {
            if log[e as usize] != NO_LOG {
                return Err(Error::Invariant("primitive element has a short order".into()));
            }
            log[e as usize] = i as u32;
        }
        exp.extend_from_within(..);
        self.exp = exp;
        self.log = log;

        if p != 2 {
            // zech[i] = log(1 + g^i)
            self.zech = (0..n1 as usize)
                .map(|i| {
                    let v = self.exp[i];
                    let d0 = v % p;
                    let w = v - d0 + (d0 + 1) % p;
                    if w == 0 {
                        NO_LOG
                    } else {
                        self.log[w as usize]
                    }
                })
                .collect();
        }
        Ok(())
    }

    fn build_levels(&mut self) -> Result<()> {
        let (m, r, p, d) = (self.m, self.r, self.p, self.degree as usize);
        let mut levels = vec![None; m as usize + 1];
        for e in (1..=m).filter(|e| m % e == 0) {
            let sub_order = self.pow_p[(r * e) as usize];
            let step = (self.order - 1) / (sub_order - 1);
            let gamma = self.exp_at(step as u64);
            let fq_basis: Vec<Fe> = (0..e).map(|j| self.pow(gamma, j as u64)).collect();
            if e == m {
                levels[e as usize] = Some(Level {
                    step,
                    generator: Fe::ONE,
                    powers: vec![Fe::ONE],
                    sub_basis: Vec::new(),
                    inverse: Vec::new(),
                    sub_table: Vec::new(),
                    identity: false,
                    fq_basis,
                });
                continue;
            }
            let re = (r * e) as usize;
            let sub_basis: Vec<Fe> = (0..re).map(|l| self.pow(gamma, l as u64)).collect();
            let count = (m / e) as usize;
            let mut found = None;
            for z in 1..self.order {
                let zeta = Fe(z);
                let powers: Vec<Fe> = (0..count).map(|j| self.pow(zeta, j as u64)).collect();
                let mut columns = Vec::with_capacity(d);
                for &zp in &powers {
                    for &b in &sub_basis {
                        columns.push(self.digits(self.mul(zp, b)));
                    }
                }
                let matrix: Vec<Vec<u32>> = (0..d).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
                if let Some(inverse) = poly::invert_matrix(&matrix, p) {
                    found = Some((zeta, powers, matrix, inverse));
                    break;
                }
            }
            let (generator, powers, matrix, inverse) =
                found.ok_or_else(|| Error::Invariant(format!("no basis of F_(q^m) over F_(q^{e})")))?;
            let identity = re == 1 && (0..d).all(|i| (0..d).all(|j| matrix[i][j] == u32::from(i == j)));
            let sub_table = (0..sub_order)
                .map(|idx| {
                    let mut acc = Fe::ZERO;
                    let mut rest = idx;
                    for &b in &sub_basis {
                        let c = rest % p;
                        rest /= p;
                        acc = self.add(acc, self.mul(Fe(c), b));
                    }
                    acc
                })
                .collect();
            levels[e as usize] = Some(Level {
                step,
                generator,
                powers,
                sub_basis,
                inverse,
                sub_table,
                identity,
                fq_basis,
            });
        }
        self.levels = levels;
        Ok(())
    }

    fn level(&self, e: u32) -> Result<&Level> {
        self.levels
            .get(e as usize)
            .and_then(Option::as_ref)
            .ok_or(Error::NotDivisor { e, m: self.m })
    }

    fn level_unchecked(&self, e: u32) -> &Level {
        self.levels[e as usize].as_ref().expect("e divides m")
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    /// q = p^r.
    pub fn q(&self) -> u32 {
        self.q
    }
    /// Order of the top field, p^{rm}.
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    pub fn primitive(&self) -> Fe {
        self.primitive
    }

    pub fn divides_m(&self, e: u32) -> bool {
        e > 0 && self.m % e == 0
    }

    /// Divisors of m in increasing order.
    pub fn divisors(&self) -> Vec<u32> {
        (1..=self.m).filter(|e| self.m % e == 0).collect()
    }

    /// q^e as u64.
    pub fn q_pow(&self, e: u32) -> u64 {
        (self.q as u64).pow(e)
    }

    pub fn arith(&self, e: u32) -> Arith<'_> {
        if self.r * e == 1 {
            if self.p == 2 {
                Arith::Binary
            } else {
                Arith::Prime(self.p)
            }
        } else {
            Arith::Tower(self)
        }
    }

    #[inline]
    fn exp_at(&self, i: u64) -> Fe {
        Fe(self.exp[(i % (self.order as u64 - 1)) as usize])
    }

    /// Discrete log base [`Self::primitive`]; `None` for zero.
    pub fn log(&self, a: Fe) -> Option<u32> {
        (!a.is_zero()).then(|| self.log[a.0 as usize])
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        let la = self.log[a.0 as usize];
        let lb = self.log[b.0 as usize];
        let diff = if lb >= la { lb - la } else { lb + (self.order - 1) - la };
        match self.zech[diff as usize] {
            NO_LOG => Fe::ZERO,
            z => Fe(self.exp[(la + z) as usize]),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 || a.0 == 0 {
            return a;
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.half) as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.inv_nonzero(a))
    }

    #[inline]
    pub(crate) fn inv_nonzero(&self, a: Fe) -> Fe {
        let l = self.log[a.0 as usize];
        Fe(self.exp[((self.order - 1 - l) % (self.order - 1)) as usize])
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let n1 = self.order as u64 - 1;
        self.exp_at(self.log[a.0 as usize] as u64 * (e % n1) % n1)
    }

    /// a^{q^i}.
    pub fn frobenius(&self, a: Fe, i: u32) -> Fe {
        if a.is_zero() {
            return a;
        }
        let n1 = self.order as u64 - 1;
        if n1 == 0 {
            return a;
        }
        let mut e = 1u64;
        for _ in 0..i % self.m {
            e = e * self.q as u64 % n1;
        }
        self.exp_at(self.log[a.0 as usize] as u64 * e % n1)
    }

    /// Tr_{q^m/q^e}(a) = Σ_{i < m/e} a^{q^{ei}}.
    pub fn rel_trace(&self, a: Fe, e: u32) -> Result<Fe> {
        self.level(e)?;
        Ok((0..self.m / e).fold(Fe::ZERO, |acc, i| self.add(acc, self.frobenius(a, e * i))))
    }

    /// Absolute trace to F_q.
    pub fn trace(&self, a: Fe) -> Fe {
        (0..self.m).fold(Fe::ZERO, |acc, i| self.add(acc, self.frobenius(a, i)))
    }

    /// Whether `a` lies in F_{q^e}.
    #[inline]
    pub fn in_subfield(&self, a: Fe, e: u32) -> bool {
        a.is_zero() || self.log[a.0 as usize] % self.level_unchecked(e).step == 0
    }

    /// A primitive element of F_{q^e}; in particular F_p[γ] = F_{q^e}.
    pub fn subfield_generator(&self, e: u32) -> Result<Fe> {
        Ok(self.exp_at(self.level(e)?.step as u64))
    }

    /// The i-th element of F_{q^e}, i < q^e: 0, then γ^{i-1}.
    #[inline]
    pub fn subfield_element(&self, e: u32, i: u64) -> Fe {
        if i == 0 {
            Fe::ZERO
        } else {
            self.exp_at((i - 1) * self.level_unchecked(e).step as u64)
        }
    }

    /// Inverse of [`Self::subfield_element`].
    pub fn subfield_index(&self, a: Fe, e: u32) -> u64 {
        if a.is_zero() {
            0
        } else {
            (self.log[a.0 as usize] / self.level_unchecked(e).step) as u64 + 1
        }
    }

    /// F_q-basis of F_{q^e}.
    pub fn fq_basis(&self, e: u32) -> Result<&[Fe]> {
        Ok(&self.level(e)?.fq_basis)
    }

    /// Basis (1, ζ, …, ζ^{m/e-1}) of F_{q^m} over F_{q^e}.
    pub fn relative_basis(&self, e: u32) -> Result<&[Fe]> {
        Ok(&self.level(e)?.powers)
    }

    pub fn relative_generator(&self, e: u32) -> Result<Fe> {
        Ok(self.level(e)?.generator)
    }

    /// Base-p digits of the encoding, length r·m.
    pub fn digits(&self, a: Fe) -> Vec<u32> {
        let mut v = a.0;
        (0..self.degree)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> Fe {
        Fe(self.from_poly(digits))
    }

    /// Whether F_q-coordinates coincide with the base-p digits of the encoding
    /// (r = 1 and the relative basis over F_q is the power basis of the modulus).
    pub fn fq_coords_are_digits(&self) -> bool {
        self.r == 1 && (self.m == 1 || self.level_unchecked(1).identity)
    }

    /// Coordinates of `a` over F_{q^e} in the cached relative basis.
    pub fn coords(&self, a: Fe, e: u32) -> Result<Vec<Fe>> {
        let lv = self.level(e)?;
        let mut out = vec![Fe::ZERO; lv.powers.len()];
        self.coords_into(a, e, &mut out);
        Ok(out)
    }

    /// Like [`Self::coords`] but writes into `out` (length m/e); `e` must divide m.
    #[inline]
    pub fn coords_into(&self, a: Fe, e: u32, out: &mut [Fe]) {
        if e == self.m {
            out[0] = a;
            return;
        }
        let lv = self.level_unchecked(e);
        let p = self.p;
        if lv.identity {
            let mut v = a.0;
            for o in out.iter_mut() {
                *o = Fe(v % p);
                v /= p;
            }
            return;
        }
        let digits = self.digits(a);
        let re = lv.sub_basis.len();
        for (j, o) in out.iter_mut().enumerate() {
            let mut idx = 0u64;
            for l in (0..re).rev() {
                let row = &lv.inverse[j * re + l];
                let c = row.iter().zip(&digits).fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % p as u64);
                idx = idx * p as u64 + c;
            }
            *o = lv.sub_table[idx as usize];
        }
    }

    /// Inverse of [`Self::coords`].
    pub fn from_coords(&self, coords: &[Fe], e: u32) -> Result<Fe> {
        let lv = self.level(e)?;
        if coords.len() != lv.powers.len() {
            return Err(Error::Dimension(format!("expected {} coordinates", lv.powers.len())));
        }
        Ok(coords
            .iter()
            .zip(&lv.powers)
            .fold(Fe::ZERO, |acc, (&c, &z)| self.add(acc, self.mul(c, z))))
    }

    /// Every element of F_{q^e}, in [`Self::subfield_element`] order.
    pub fn subfield_elements(&self, e: u32) -> Result<Vec<Fe>> {
        self.level(e)?;
        Ok((0..self.q_pow(e)).map(|i| self.subfield_element(e, i)).collect())
    }
}
