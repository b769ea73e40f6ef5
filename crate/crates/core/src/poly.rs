//! Dense polynomials and small matrices over a prime field F_p.
//!
//! Only what the field tower needs at construction time: reduction,
//! modular exponentiation, gcd-based irreducibility and primitivity tests,
//! and matrix inversion for change-of-basis maps.

/// Coefficients little-endian by degree. Always trimmed: no trailing zeros.
pub type Poly = Vec<u32>;

fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(a: u32, mut e: u32, p: u32) -> u32 {
    let (mut base, mut acc) = (a as u64 % p as u64, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

pub fn sub(a: &[u32], b: &[u32], p: u32) -> Poly {
    let len = a.len().max(b.len());
    let out = (0..len)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(out)
}

pub fn mul(a: &[u32], b: &[u32], p: u32) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    trim(out.into_iter().map(|c| c as u32).collect())
}

/// Remainder of `a` modulo a nonzero `f`.
pub fn rem(a: &[u32], f: &[u32], p: u32) -> Poly {
    let df = degree(f).expect("division by zero polynomial");
    let lead_inv = inv_mod(f[df], p) as u64;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    while let Some(dr) = r.iter().rposition(|&c| c != 0) {
        if dr < df {
            break;
        }
        let factor = r[dr] * lead_inv % p as u64;
        let shift = dr - df;
        for (i, &c) in f.iter().enumerate().take(df + 1) {
            let sub = factor * c as u64 % p as u64;
            r[shift + i] = (r[shift + i] + p as u64 - sub) % p as u64;
        }
    }
    trim(r.into_iter().map(|c| c as u32).collect())
}

pub fn mul_mod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Poly {
    rem(&mul(a, b, p), f, p)
}

pub fn pow_poly_mod(base: &[u32], mut e: u64, f: &[u32], p: u32) -> Poly {
    let mut acc: Poly = vec![1];
    let mut b = rem(base, f, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(&acc, &b, f, p);
        }
        e >>= 1;
        if e > 0 {
            b = mul_mod(&b, &b, f, p);
        }
    }
    rem(&acc, f, p)
}

pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Poly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rabin-style test: `f` of degree D is irreducible iff
/// gcd(f, x^{p^i} - x) = 1 for every 1 <= i <= D/2.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let Some(d) = degree(f) else { return false };
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x: Poly = vec![0, 1];
    let mut frob = x.clone();
    for _ in 1..=d / 2 {
        frob = pow_poly_mod(&frob, p as u64, f, p);
        let g = gcd(f, &sub(&frob, &x, p), p);
        if degree(&g) != Some(0) {
            return false;
        }
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

/// `f` irreducible of degree D and `x` has multiplicative order p^D - 1 mod `f`.
pub fn is_primitive(f: &[u32], p: u32) -> bool {
    let Some(d) = degree(f) else { return false };
    if !is_irreducible(f, p) {
        return false;
    }
    let order = (p as u64).pow(d as u32) - 1;
    let x: Poly = vec![0, 1];
    if order == 1 {
        return rem(&x, f, p) == [1];
    }
    prime_factors(order)
        .into_iter()
        .all(|l| pow_poly_mod(&x, order / l, f, p) != [1])
}

/// Evaluates `g` at the residue class `y` modulo `f` (Horner).
pub fn compose_mod(g: &[u32], y: &[u32], f: &[u32], p: u32) -> Poly {
    let mut acc: Poly = Vec::new();
    for &c in g.iter().rev() {
        acc = mul_mod(&acc, y, f, p);
        let mut with_c = acc.clone();
        if with_c.is_empty() {
            with_c.push(0);
        }
        with_c[0] = (with_c[0] + c) % p;
        acc = trim(with_c);
    }
    acc
}

/// Inverse of a square matrix over F_p, or `None` if singular.
pub fn invert_matrix(m: &[Vec<u32>], p: u32) -> Option<Vec<Vec<u32>>> {
    let n = m.len();
    let mut a: Vec<Vec<u32>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u32::from(i == j)));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, piv);
        let inv = inv_mod(a[col][col], p) as u64;
        for c in 0..2 * n {
            a[col][c] = (a[col][c] as u64 * inv % p as u64) as u32;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col] as u64;
                for c in 0..2 * n {
                    let s = f * a[col][c] as u64 % p as u64;
                    a[r][c] = ((a[r][c] as u64 + p as u64 - s) % p as u64) as u32;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn rank_matrix(m: &[Vec<u32>], p: u32) -> usize {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][col] != 0) else { continue };
        a.swap(rank, piv);
        let inv = inv_mod(a[rank][col], p) as u64;
        for r in rank + 1..rows {
            if a[r][col] != 0 {
                let f = a[r][col] as u64 * inv % p as u64;
                for c in col..cols {
                    let s = f * a[rank][c] as u64 % p as u64;
                    a[r][c] = ((a[r][c] as u64 + p as u64 - s) % p as u64) as u32;
                }
            }
        }
        rank += 1;
    }
    rank
}
