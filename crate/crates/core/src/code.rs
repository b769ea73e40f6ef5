//! Rank-metric codes given by a k×n generator matrix over F_{q^m}.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Arith, Fe, FieldTower, TowerDescriptor};
use crate::linalg::{flatten_into, rank_in_place, MatF, Subspace};
use crate::projective::{add_counts, par_fold, Projective};

/// Computes rank weights with reusable scratch space.
pub struct RankWeigher<'t> {
    tower: &'t FieldTower,
    scratch: Vec<Fe>,
}

impl<'t> RankWeigher<'t> {
    pub fn new(tower: &'t FieldTower) -> Self {
        RankWeigher { tower, scratch: Vec::new() }
    }

    /// dim_{F_q} of the F_q-span of the entries of `c`.
    pub fn weight(&mut self, c: &[Fe]) -> usize {
        let t = self.tower;
        let m = t.m() as usize;
        if t.p() == 2 && t.fq_coords_are_digits() {
            // The encoding is the coordinate vector over F_2.
            return xor_rank(c.iter().map(|x| x.0 as u64));
        }
        self.scratch.clear();
        self.scratch.resize(c.len() * m, Fe::ZERO);
        if t.fq_coords_are_digits() {
            let p = t.p();
            for (x, row) in c.iter().zip(self.scratch.chunks_exact_mut(m)) {
                let mut v = x.0;
                for d in row.iter_mut() {
                    *d = Fe(v % p);
                    v /= p;
                }
            }
            rank_in_place(Arith::Prime(p), &mut self.scratch, c.len(), m)
        } else {
            flatten_into(t, c, 1, &mut self.scratch);
            rank_in_place(t.arith(1), &mut self.scratch, c.len(), m)
        }
    }
}

/// Rank of a set of vectors over F_2 given as bit masks.
pub fn xor_rank(vals: impl Iterator<Item = u64>) -> usize {
    let mut basis = [0u64; 64];
    let mut rank = 0;
    for v in vals {
        let mut x = v;
        while x != 0 {
            let hb = 63 - x.leading_zeros() as usize;
            if basis[hb] == 0 {
                basis[hb] = x;
                rank += 1;
                break;
            }
            x ^= basis[hb];
        }
    }
    rank
}

/// Rank weight of a vector over F_{q^m}.
pub fn rank_weight(tower: &FieldTower, c: &[Fe]) -> usize {
    RankWeigher::new(tower).weight(c)
}

/// Counts A_w of codewords of rank weight w, for w = 0..=min(m, n).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightDistribution {
    pub counts: Vec<u64>,
}

impl WeightDistribution {
    pub fn nonzero_weights(&self) -> Vec<usize> {
        (1..self.counts.len()).filter(|&w| self.counts[w] > 0).collect()
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("weight,count\n");
        for (w, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{w},{c}\n"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingletonCheck {
    /// mk
    pub lhs: u64,
    /// max(m,n)·(min(m,n) - d + 1)
    pub rhs: u64,
    pub holds: bool,
    pub is_mrd: bool,
}

/// An F_{q^m}-linear code with a full-rank generator matrix.
#[derive(Clone, Debug)]
pub struct RankMetricCode {
    tower: Arc<FieldTower>,
    generator: MatF,
    provenance: Option<serde_json::Value>,
    dist: OnceLock<WeightDistribution>,
}

/// On-disk code: `{tower, k, n, generator, request?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub tower: TowerDescriptor,
    pub k: usize,
    pub n: usize,
    pub generator: Vec<Vec<Fe>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<serde_json::Value>,
}

impl RankMetricCode {
    pub fn new(tower: Arc<FieldTower>, generator: MatF) -> Result<Self> {
        if generator.level() != tower.m() {
            return Err(Error::InvalidCode("generator must be declared over F_(q^m)".into()));
        }
        if generator.rows() == 0 || generator.cols() == 0 {
            return Err(Error::InvalidCode("k and n must be positive".into()));
        }
        if generator.rank(&tower) != generator.rows() {
            return Err(Error::InvalidCode("generator rows are F_(q^m)-linearly dependent".into()));
        }
        Ok(RankMetricCode { tower, generator, provenance: None, dist: OnceLock::new() })
    }

    pub fn from_rows(tower: Arc<FieldTower>, rows: &[Vec<Fe>]) -> Result<Self> {
        let g = MatF::from_rows(&tower, tower.m(), rows)?;
        Self::new(tower, g)
    }

    pub fn with_provenance(mut self, request: serde_json::Value) -> Self {
        self.provenance = Some(request);
        self
    }

    pub fn provenance(&self) -> Option<&serde_json::Value> {
        self.provenance.as_ref()
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }
    pub fn k(&self) -> usize {
        self.generator.rows()
    }
    pub fn n(&self) -> usize {
        self.generator.cols()
    }
    pub fn m(&self) -> usize {
        self.tower.m() as usize
    }
    pub fn generator(&self) -> &MatF {
        &self.generator
    }

    /// xG for a message x of length k.
    pub fn encode(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        if x.len() != self.k() {
            return Err(Error::Dimension(format!("message of length {} for k = {}", x.len(), self.k())));
        }
        let mut out = vec![Fe::ZERO; self.n()];
        self.encode_into(x, &mut out);
        Ok(out)
    }

    fn encode_into(&self, x: &[Fe], out: &mut [Fe]) {
        let t = &*self.tower;
        out.fill(Fe::ZERO);
        for (i, &xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(self.generator.row(i)) {
                *o = t.add(*o, t.mul(xi, g));
            }
        }
    }

    pub fn rank_weight(&self, c: &[Fe]) -> Result<usize> {
        if c.len() != self.n() {
            return Err(Error::Dimension(format!("word of length {} for n = {}", c.len(), self.n())));
        }
        Ok(rank_weight(&self.tower, c))
    }

    /// Exact distribution from one representative per point of PG(k-1, q^m),
    /// each orbit weighted by q^m - 1. Cached after the first call.
    pub fn weight_distribution(&self) -> Result<&WeightDistribution> {
        if let Some(d) = self.dist.get() {
            return Ok(d);
        }
        let d = self.compute_distribution()?;
        Ok(self.dist.get_or_init(|| d))
    }

    fn compute_distribution(&self) -> Result<WeightDistribution> {
        let t = &*self.tower;
        let pg = Projective::new(t, t.m(), self.k())?;
        let top = self.m().min(self.n());
        let (k, n) = (self.k(), self.n());
        let mut counts = par_fold(
            pg.count(),
            || vec![0u64; top + 1],
            |acc, range| {
                let mut weigher = RankWeigher::new(t);
                let mut x = vec![Fe::ZERO; k];
                let mut c = vec![Fe::ZERO; n];
                for idx in range {
                    pg.point_into(idx, &mut x);
                    self.encode_into(&x, &mut c);
                    acc[weigher.weight(&c)] += 1;
                }
            },
            add_counts,
        );
        let scale = t.order() as u64 - 1;
        for c in counts.iter_mut() {
            *c *= scale;
        }
        counts[0] += 1;
        Ok(WeightDistribution { counts })
    }

    pub fn minimum_distance(&self) -> Result<usize> {
        let d = self.weight_distribution()?;
        d.nonzero_weights()
            .first()
            .copied()
            .ok_or_else(|| Error::Invariant("code without nonzero codewords".into()))
    }

    /// The two nonzero weights (ascending), if there are exactly two.
    pub fn two_weights(&self) -> Result<Option<(usize, usize)>> {
        let w = self.weight_distribution()?.nonzero_weights();
        Ok((w.len() == 2).then(|| (w[0], w[1])))
    }

    pub fn is_two_weight(&self) -> Result<bool> {
        Ok(self.two_weights()?.is_some())
    }

    /// Contains a codeword of weight n.
    pub fn is_antipodal(&self) -> Result<bool> {
        let d = self.weight_distribution()?;
        Ok(d.counts.get(self.n()).is_some_and(|&c| c > 0))
    }

    /// F_q-linear independence of the n columns of G.
    pub fn is_nondegenerate(&self) -> bool {
        self.column_space().dim() == self.n()
    }

    /// F_q-span of the columns of G, flattened into F_q^{km}.
    pub fn column_space(&self) -> Subspace {
        let t = &*self.tower;
        let k = self.k();
        let flat_len = k * self.m();
        let columns = (0..self.n()).map(|j| {
            let mut v = vec![Fe::ZERO; flat_len];
            flatten_into(t, &self.generator.column(j), 1, &mut v);
            v
        });
        Subspace::span(t, 1, flat_len, columns).expect("flattened columns lie in F_q")
    }

    pub fn singleton_check(&self) -> Result<SingletonCheck> {
        let d = self.minimum_distance()? as u64;
        let (m, n, k) = (self.m() as u64, self.n() as u64, self.k() as u64);
        let lhs = m * k;
        let rhs = m.max(n) * (m.min(n) + 1).saturating_sub(d);
        Ok(SingletonCheck { lhs, rhs, holds: lhs <= rhs, is_mrd: lhs == rhs })
    }

    /// The code {cA : c ∈ C} for A over F_q of full column rank. If GA loses
    /// rank, the result is generated by a basis of its row space.
    pub fn puncture(&self, a: &MatF) -> Result<RankMetricCode> {
        let t = &*self.tower;
        if a.level() != 1 {
            return Err(Error::Precondition("puncturing matrix must be over F_q".into()));
        }
        if a.rows() != self.n() {
            return Err(Error::Dimension(format!("puncturing matrix has {} rows for n = {}", a.rows(), self.n())));
        }
        if a.cols() == 0 || a.rank(t) != a.cols() {
            return Err(Error::Precondition("puncturing matrix must have full column rank".into()));
        }
        let ga = self.generator.mul(t, a)?;
        let rows: Vec<Vec<Fe>> = ga.rref(t).to_rows().into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
        let g = if rows.len() == self.k() { ga } else { MatF::from_rows(t, t.m(), &rows)? };
        RankMetricCode::new(self.tower.clone(), g)
    }

    /// Equality as F_{q^m}-subspaces of F_{q^m}^n.
    pub fn same_row_space(&self, other: &RankMetricCode) -> bool {
        if self.tower.descriptor() != other.tower.descriptor() || self.n() != other.n() {
            return false;
        }
        let t = &*self.tower;
        let span = |g: &MatF| Subspace::span(t, t.m(), g.cols(), g.to_rows()).expect("validated generator");
        span(&self.generator) == span(&other.generator)
    }

    pub fn to_file(&self) -> CodeFile {
        CodeFile {
            tower: self.tower.descriptor(),
            k: self.k(),
            n: self.n(),
            generator: self.generator.to_rows(),
            request: self.provenance.clone(),
        }
    }

    /// Builds the tower described in the file.
    pub fn from_file(file: &CodeFile) -> Result<Self> {
        let tower = Arc::new(FieldTower::from_descriptor(&file.tower)?);
        Self::from_file_in(tower, file)
    }

    /// Uses `tower`, which must match the file's descriptor.
    pub fn from_file_in(tower: Arc<FieldTower>, file: &CodeFile) -> Result<Self> {
        if tower.descriptor() != file.tower {
            return Err(Error::Format("code file tower does not match".into()));
        }
        if file.generator.len() != file.k || file.generator.iter().any(|r| r.len() != file.n) {
            return Err(Error::Format(format!("generator is not {}×{}", file.k, file.n)));
        }
        let mut code = Self::from_rows(tower, &file.generator)?;
        code.provenance = file.request.clone();
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("code serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

impl PartialEq for RankMetricCode {
    /// Same tower and identical generator matrix.
    fn eq(&self, other: &Self) -> bool {
        self.tower.descriptor() == other.tower.descriptor() && self.generator == other.generator
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u32, r: u32, m: u32) -> Arc<FieldTower> {
        Arc::new(FieldTower::new(p, r, m).unwrap())
    }

    /// Rank weight by counting the distinct F_q-combinations of the entries.
    fn span_size_weight(t: &FieldTower, c: &[Fe]) -> usize {
        let q = t.q() as u64;
        let fq: Vec<Fe> = (0..q).map(|i| t.subfield_element(1, i)).collect();
        let mut seen = std::collections::HashSet::new();
        for idx in 0..q.pow(c.len() as u32) {
            let mut rest = idx;
            let mut acc = Fe::ZERO;
            for &x in c {
                acc = t.add(acc, t.mul(fq[(rest % q) as usize], x));
                rest /= q;
            }
            seen.insert(acc);
        }
        let mut size = seen.len() as u64;
        let mut w = 0;
        while size > 1 {
            size /= q;
            w += 1;
        }
        w
    }

    /// Distribution from every message vector, no projective shortcut.
    fn full_distribution(code: &RankMetricCode) -> Vec<u64> {
        let t = code.tower();
        let qm = t.order() as u64;
        let mut counts = vec![0u64; code.m().min(code.n()) + 1];
        for idx in 0..qm.pow(code.k() as u32) {
            let mut rest = idx;
            let x: Vec<Fe> = (0..code.k())
                .map(|_| {
                    let v = Fe((rest % qm) as u32);
                    rest /= qm;
                    v
                })
                .collect();
            counts[span_size_weight(t, &code.encode(&x).unwrap())] += 1;
        }
        counts
    }

    fn gabidulin_4_2() -> RankMetricCode {
        let t = tower(2, 1, 4);
        let g = t.primitive();
        let pts: Vec<Fe> = (0..4).map(|i| t.pow(g, i)).collect();
        let rows = vec![pts.clone(), pts.iter().map(|&x| t.frobenius(x, 1)).collect()];
        RankMetricCode::from_rows(t, &rows).unwrap()
    }

    fn random_code(rng: &mut ChaCha8Rng, t: &Arc<FieldTower>, k: usize, n: usize) -> RankMetricCode {
        loop {
            let rows: Vec<Vec<Fe>> =
                (0..k).map(|_| (0..n).map(|_| Fe(rng.gen_range(0..t.order()))).collect()).collect();
            if let Ok(c) = RankMetricCode::from_rows(t.clone(), &rows) {
                return c;
            }
        }
    }

    #[test]
    fn rank_weight_examples() {
        let t = tower(2, 1, 4);
        assert_eq!(rank_weight(&t, &[Fe::ZERO; 4]), 0);
        assert_eq!(rank_weight(&t, &[Fe::ONE; 4]), 1);
        let g = t.primitive();
        let v: Vec<Fe> = (0..4).map(|i| t.pow(g, i)).collect();
        assert_eq!(rank_weight(&t, &v), 4);
        for (p, r, m) in [(3, 1, 3), (2, 2, 2), (5, 1, 2)] {
            let t = tower(p, r, m);
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            for _ in 0..200 {
                let c: Vec<Fe> = (0..4).map(|_| Fe(rng.gen_range(0..t.order()))).collect();
                assert_eq!(rank_weight(&t, &c), span_size_weight(&t, &c));
            }
        }
    }

    #[test]
    fn gabidulin_distribution() {
        let c = gabidulin_4_2();
        let d = c.weight_distribution().unwrap();
        assert_eq!(d.counts, vec![1, 0, 0, 225, 30]);
        assert_eq!(d.counts, full_distribution(&c));
        assert_eq!(c.minimum_distance().unwrap(), 3);
        assert_eq!(c.two_weights().unwrap(), Some((3, 4)));
        assert!(c.is_antipodal().unwrap());
        assert!(c.is_nondegenerate());
        assert_eq!(c.singleton_check().unwrap(), SingletonCheck { lhs: 8, rhs: 8, holds: true, is_mrd: true });
    }

    #[test]
    fn one_dimensional_codes() {
        let t = tower(2, 1, 4);
        let c = RankMetricCode::from_rows(t.clone(), &[vec![Fe::ONE]]).unwrap();
        assert_eq!(c.weight_distribution().unwrap().counts, vec![1, 15]);
        let g = t.primitive();
        let c = RankMetricCode::from_rows(t, &[vec![Fe::ONE, g]]).unwrap();
        assert_eq!(c.weight_distribution().unwrap().nonzero_weights(), vec![2]);
        assert!(!c.is_two_weight().unwrap());
    }

    #[test]
    fn projective_shortcut_matches_full_enumeration() {
        let t = tower(3, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = random_code(&mut rng, &t, 2, 3);
            assert_eq!(c.weight_distribution().unwrap().counts, full_distribution(&c));
        }
    }

    #[test]
    fn nondegeneracy() {
        let t = tower(2, 1, 4);
        let id = RankMetricCode::new(t.clone(), MatF::identity(4, 3)).unwrap();
        assert!(id.is_nondegenerate());
        let g = t.primitive();
        let rows = vec![vec![Fe::ONE, g, Fe::ONE], vec![Fe::ZERO, Fe::ONE, Fe::ZERO]];
        let dup = RankMetricCode::from_rows(t, &rows).unwrap();
        assert!(!dup.is_nondegenerate());
        assert!(dup.weight_distribution().is_ok());
    }

    #[test]
    fn singleton_arithmetic() {
        // [6,2,2] over F_{3^4}: 8 <= 6·3.
        let t = tower(3, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = random_code(&mut rng, &t, 2, 6);
        let s = c.singleton_check().unwrap();
        assert!(s.holds);
        let d = c.minimum_distance().unwrap() as u64;
        assert_eq!(s.rhs, 6 * (4 + 1 - d));
    }

    #[test]
    fn invalid_generators_rejected() {
        let t = tower(2, 1, 4);
        assert!(RankMetricCode::from_rows(t.clone(), &[vec![Fe(1), Fe(2)], vec![Fe(1), Fe(2)]]).is_err());
        assert!(RankMetricCode::new(t.clone(), MatF::identity(1, 2)).is_err());
        let c = gabidulin_4_2();
        assert!(c.rank_weight(&[Fe::ONE]).is_err());
    }

    #[test]
    fn puncture_basics() {
        let t = tower(2, 1, 4);
        let c = gabidulin_4_2();
        let same = c.puncture(&MatF::identity(1, 4)).unwrap();
        assert_eq!(same, c);
        let drop_last = MatF::new(
            &t,
            1,
            4,
            3,
            (0..4).flat_map(|i| (0..3).map(move |j| if i == j { Fe::ONE } else { Fe::ZERO })).collect(),
        )
        .unwrap();
        let p = c.puncture(&drop_last).unwrap();
        for i in 0..2 {
            assert_eq!(p.generator().row(i), &c.generator().row(i)[..3]);
        }
        let deficient = MatF::new(&t, 1, 4, 2, vec![Fe(1), Fe(1), Fe(0), Fe(0), Fe(0), Fe(0), Fe(0), Fe(0)]).unwrap();
        assert!(matches!(c.puncture(&deficient), Err(Error::Precondition(_))));
    }

    #[test]
    fn file_round_trip() {
        let c = gabidulin_4_2().with_provenance(serde_json::json!({"kind": "gabidulin"}));
        let json = c.to_json();
        let back = RankMetricCode::from_json(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.provenance(), c.provenance());
        assert_eq!(c.weight_distribution().unwrap().to_csv(), "weight,count\n0,1\n1,0\n2,0\n3,225\n4,30\n");
    }

    #[test]
    fn same_row_space_ignores_basis() {
        let c = gabidulin_4_2();
        let t = c.tower().clone();
        let rows = c.generator().to_rows();
        let summed: Vec<Fe> = rows[0].iter().zip(&rows[1]).map(|(&a, &b)| t.add(a, b)).collect();
        let other = RankMetricCode::from_rows(t, &[summed, rows[1].clone()]).unwrap();
        assert!(c.same_row_space(&other));
        assert_ne!(c, other);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distribution_sanity(seed in any::<u64>(), k in 1usize..3, n in 1usize..5) {
            let t = tower(3, 1, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_code(&mut rng, &t, k, n.max(k));
            let d = c.weight_distribution().unwrap();
            prop_assert_eq!(d.counts[0], 1);
            prop_assert_eq!(d.total(), 9u128.pow(k as u32));
            for &a in &d.counts[1..] {
                prop_assert_eq!(a % 8, 0);
            }
            prop_assert!(c.singleton_check().unwrap().holds);
            if c.is_nondegenerate() {
                prop_assert!(d.counts[c.m().min(c.n())] > 0);
            }
        }

        #[test]
        fn scalar_invariance(seed in any::<u64>()) {
            let t = tower(2, 1, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<Fe> = (0..5).map(|_| Fe(rng.gen_range(0..16))).collect();
            let w = rank_weight(&t, &c);
            for l in 1..16 {
                let s: Vec<Fe> = c.iter().map(|&x| t.mul(Fe(l), x)).collect();
                prop_assert_eq!(rank_weight(&t, &s), w);
            }
        }
    }
}
