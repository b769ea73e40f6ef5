//! Conway polynomials C_{p,n} for small characteristic.
//!
//! The shipped table covers p in {2, 3, 5, 7} and every degree n <= 20 with
//! p^n within the field-table budget. [`search`] re-derives any entry from
//! the definition and is what the table tests compare against.

use crate::poly::{self, Poly};

/// Coefficients little-endian by degree, monic.
static TABLE: &[(u32, u32, &[u32])] = &include!("conway_table.in");

/// Shipped Conway polynomial of degree `n` over F_p.
pub fn lookup(p: u32, n: u32) -> Option<&'static [u32]> {
    TABLE
        .iter()
        .find(|&&(tp, tn, _)| tp == p && tn == n)
        .map(|&(_, _, c)| c)
}

/// Every `(p, n)` pair present in the shipped table.
pub fn entries() -> impl Iterator<Item = (u32, u32)> {
    TABLE.iter().map(|&(p, n, _)| (p, n))
}

/// Computes C_{p,n} from the definition: the least primitive polynomial of
/// degree `n`, in the alternating-sign lexicographic order, whose root raised
/// to (p^n - 1)/(p^d - 1) is a root of C_{p,d} for every proper divisor d.
///
/// `lower(d)` must return C_{p,d}. Cost grows quickly with `n`; meant for
/// table regeneration and tests.
pub fn search(p: u32, n: u32, lower: &dyn Fn(u32) -> Poly) -> Poly {
    let order = (p as u64).pow(n) - 1;
    let divisors: Vec<(u32, Poly)> = (1..n).filter(|d| n % d == 0).map(|d| (d, lower(d))).collect();
    let x: Poly = vec![0, 1];
    let total = (p as u64).pow(n);
    for idx in 0..total {
        // Digit i of idx (most significant first) is the signed coefficient
        // (-1)^(n-j) a_j for j = n-1-i.
        let mut f = vec![0u32; n as usize + 1];
        f[n as usize] = 1;
        let mut rest = idx;
        for j in 0..n {
            let s = (rest % p as u64) as u32;
            rest /= p as u64;
            // j counts from the least significant digit: it encodes degree j.
            let sign_negative = (n - j) % 2 == 1;
            f[j as usize] = if sign_negative { (p - s) % p } else { s };
        }
        if f[0] == 0 {
            continue;
        }
        if !poly::is_primitive(&f, p) {
            continue;
        }
        let compatible = divisors.iter().all(|(d, cd)| {
            let exp = order / ((p as u64).pow(*d) - 1);
            let y = poly::pow_poly_mod(&x, exp, &f, p);
            poly::compose_mod(cd, &y, &f, p).is_empty()
        });
        if compatible {
            return f;
        }
    }
    unreachable!("a Conway polynomial exists for every (p, n)")
}

/// Recomputes C_{p,n} together with all C_{p,d}, d | n.
pub fn search_with_divisors(p: u32, n: u32) -> Poly {
    let mut cache: std::collections::BTreeMap<u32, Poly> = Default::default();
    for d in (1..=n).filter(|d| n % d == 0) {
        let snapshot = cache.clone();
        let f = search(p, d, &|dd| snapshot[&dd].clone());
        cache.insert(d, f);
    }
    cache.remove(&n).unwrap()
}
