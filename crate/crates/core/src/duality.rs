//! Orthogonality in F_{q^m}^k: ⊥ for the dot product σ over F_{q^m}, and ⊥'
//! for σ'(x, y) = Tr_{q^m/q}(σ(x, y)) on the F_q-flattening.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::code::RankMetricCode;
use crate::error::{Error, Result};
use crate::field::{Fe, FieldTower};
use crate::linalg::{lift_level, MatF, Subspace};
use crate::system::QSystem;

pub struct DualityContext {
    tower: Arc<FieldTower>,
    k: usize,
    /// Γ[s][t] = Tr(b_s b_t) for the F_q-basis (b_t) of F_{q^m}.
    gram: Vec<Vec<Fe>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightDualCheck {
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

impl DualityContext {
    /// Fails if σ' has a nonzero radical, which cannot happen for a correct tower.
    pub fn new(tower: Arc<FieldTower>, k: usize) -> Result<Self> {
        let basis = tower.relative_basis(1)?.to_vec();
        let gram: Vec<Vec<Fe>> = basis
            .iter()
            .map(|&a| basis.iter().map(|&b| tower.trace(tower.mul(a, b))).collect())
            .collect();
        let m = basis.len();
        if MatF::from_rows(&tower, 1, &gram)?.rank(&tower) != m {
            return Err(Error::Invariant("trace form is degenerate".into()));
        }
        Ok(DualityContext { tower, k, gram })
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }
    pub fn k(&self) -> usize {
        self.k
    }

    /// W^⊥ for an F_{q^m}-subspace W of F_{q^m}^k (level m).
    pub fn perp(&self, w: &Subspace) -> Result<Subspace> {
        let t = &*self.tower;
        if w.level() != t.m() || w.len() != self.k {
            return Err(Error::Dimension("perp expects an F_(q^m)-subspace of F_(q^m)^k".into()));
        }
        if w.is_zero() {
            return Ok(Subspace::full(t.m(), self.k));
        }
        Ok(MatF::from_rows(t, t.m(), w.basis())?.kernel(t))
    }

    /// U^⊥' for an F_q-subspace U of F_q^{km}: the kernel of the matrix whose
    /// row for u is (u_1^T Γ | … | u_k^T Γ).
    pub fn perp_prime(&self, u: &Subspace) -> Result<Subspace> {
        let t = &*self.tower;
        let m = t.m() as usize;
        let km = self.k * m;
        if u.level() != 1 || u.len() != km {
            return Err(Error::Dimension("perp_prime expects an F_q-subspace of F_q^(km)".into()));
        }
        if u.is_zero() {
            return Ok(Subspace::full(1, km));
        }
        let ar = t.arith(1);
        let rows: Vec<Vec<Fe>> = u
            .basis()
            .iter()
            .map(|b| {
                let mut row = vec![Fe::ZERO; km];
                for j in 0..self.k {
                    let block = &b[j * m..(j + 1) * m];
                    for c in 0..m {
                        row[j * m + c] = block
                            .iter()
                            .zip(&self.gram)
                            .fold(Fe::ZERO, |acc, (&x, g)| ar.add(acc, ar.mul(x, g[c])));
                    }
                }
                row
            })
            .collect();
        Ok(MatF::from_rows(t, 1, &rows)?.kernel(t))
    }

    /// dim(U^⊥' ∩ W^⊥) against dim(U ∩ W) + km - n - m·dim_{q^m}(W).
    pub fn check_weight_dual(&self, u: &Subspace, w: &Subspace) -> Result<WeightDualCheck> {
        let t = &*self.tower;
        let m = t.m() as i64;
        let u_dual = self.perp_prime(u)?;
        let w_perp_flat = lift_level(t, &self.perp(w)?)?;
        let w_flat = lift_level(t, w)?;
        let lhs = u_dual.intersect(t, &w_perp_flat)?.dim() as i64;
        let rhs = u.intersect(t, &w_flat)?.dim() as i64 + self.k as i64 * m - u.dim() as i64 - m * w.dim() as i64;
        Ok(WeightDualCheck { lhs, rhs, holds: lhs == rhs })
    }

    /// The system of a geometric dual: U^⊥' for the system U of a code.
    pub fn dual_system(&self, code: &RankMetricCode) -> Result<QSystem> {
        if code.k() != self.k || code.tower().descriptor() != self.tower.descriptor() {
            return Err(Error::Dimension("code does not match the duality context".into()));
        }
        let u = QSystem::from_code(code)?;
        let profile = u.profile()?;
        if profile.max_weight >= code.m() {
            return Err(Error::Precondition(format!(
                "the system has a point of weight {} = m; its dual is not a system of the same k",
                profile.max_weight
            )));
        }
        QSystem::new(self.tower.clone(), self.k, self.perp_prime(u.space())?)
    }
}

/// A code whose system is U^⊥' for the system U of `code`: an [km-n, k] code.
pub fn geometric_dual(code: &RankMetricCode) -> Result<RankMetricCode> {
    let ctx = DualityContext::new(code.tower().clone(), code.k())?;
    ctx.dual_system(code)?.to_code()
}
