//! q-systems: F_q-subspaces U of F_{q^m}^k, their linear sets, point and
//! hyperplane intersection data, and scatteredness.

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::code::{xor_rank, RankMetricCode, RankWeigher};
use crate::error::{Error, Result};
use crate::field::{Fe, FieldTower, TowerDescriptor};
use crate::linalg::{
    flatten_into, fqm_span, lift_level, rank_in_place, restrict_level, unflatten, MatF, Subspace, SubspaceRecord,
};
use crate::projective::{add_counts, check_budget, par_fold, point_count, Projective};

static PROFILES_CHECKED: AtomicU64 = AtomicU64::new(0);
static PROFILE_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Process-wide tally of (profiles checked against the linear-set
/// identities, identity violations).
pub fn profile_identity_stats() -> (u64, u64) {
    (PROFILES_CHECKED.load(Ordering::Relaxed), PROFILE_VIOLATIONS.load(Ordering::Relaxed))
}

/// An F_q-subspace of F_{q^m}^k, stored flattened over F_q.
#[derive(Clone, Debug)]
pub struct QSystem {
    tower: Arc<FieldTower>,
    k: usize,
    space: Subspace,
    full_span: bool,
}

impl PartialEq for QSystem {
    fn eq(&self, other: &Self) -> bool {
        self.tower.descriptor() == other.tower.descriptor() && self.k == other.k && self.space == other.space
    }
}

/// Counts N_i of points of PG(k-1, q^m) of weight i, i = 0..=n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSetProfile {
    pub n: usize,
    pub counts: Vec<u64>,
    pub size: u64,
    pub max_weight: usize,
    pub min_positive_weight: Option<usize>,
}

impl LinearSetProfile {
    /// Positive weights that occur.
    pub fn positive_weights(&self) -> Vec<usize> {
        (1..self.counts.len()).filter(|&i| self.counts[i] > 0).collect()
    }

    /// Every weight that occurs, including 0.
    pub fn weights(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&i| self.counts[i] > 0).collect()
    }
}

struct CountMap<'a>(&'a [u64]);

impl Serialize for CountMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (i, c) in self.0.iter().enumerate() {
            map.serialize_entry(&i.to_string(), c)?;
        }
        map.end()
    }
}

struct CountVec(Vec<u64>);

impl<'de> Deserialize<'de> for CountVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = CountVec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from decimal indices 0..=n to counts")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> std::result::Result<CountVec, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = a.next_entry::<String, u64>()? {
                    let i: usize = key.parse().map_err(|_| de::Error::custom(format!("bad index {key:?}")))?;
                    entries.push((i, value));
                }
                let mut out = vec![None; entries.len()];
                for (i, v) in entries {
                    let slot = out.get_mut(i).ok_or_else(|| de::Error::custom("indices must be 0..len"))?;
                    if slot.replace(v).is_some() {
                        return Err(de::Error::custom(format!("duplicate index {i}")));
                    }
                }
                Ok(CountVec(out.into_iter().map(|v| v.expect("all indices present")).collect()))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Serialize)]
struct ProfileOut<'a> {
    n: usize,
    counts: CountMap<'a>,
    size: u64,
    max_weight: usize,
    min_positive_weight: Option<usize>,
}

#[derive(Deserialize)]
struct ProfileIn {
    n: usize,
    counts: CountVec,
    size: u64,
    max_weight: usize,
    min_positive_weight: Option<usize>,
}

impl Serialize for LinearSetProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProfileOut {
            n: self.n,
            counts: CountMap(&self.counts),
            size: self.size,
            max_weight: self.max_weight,
            min_positive_weight: self.min_positive_weight,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearSetProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = ProfileIn::deserialize(d)?;
        Ok(LinearSetProfile {
            n: p.n,
            counts: p.counts.0,
            size: p.size,
            max_weight: p.max_weight,
            min_positive_weight: p.min_positive_weight,
        })
    }
}

/// Counts of dim_{F_q}(U ∩ H) over all F_{q^m}-hyperplanes H, index 0..=n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneSpectrum {
    pub counts: Vec<u64>,
}

impl HyperplaneSpectrum {
    pub fn max_intersection(&self) -> usize {
        (0..self.counts.len()).rev().find(|&i| self.counts[i] > 0).unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("intersection_dim,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{i},{c}\n"));
        }
        s
    }
}

/// Outcome of the subfield-linearity consequence for systems whose positive
/// point weights all equal e.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubfieldLinearity {
    /// The weight or length hypotheses do not hold; nothing is claimed.
    NotApplicable { reason: String },
    /// Weight and length hypotheses hold but q < m.
    Skipped { reason: String },
    Holds,
    Violated { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linearity {
    /// Largest divisor t of m with U F_{q^t}-linear.
    pub t: u32,
    pub e_min: Option<usize>,
    pub subfield_linearity: SubfieldLinearity,
}

/// Scratch state for repeated point-weight evaluations.
pub struct PointWeigher<'a> {
    sys: &'a QSystem,
    /// Rows spanning the annihilator of U in F_q^{km}.
    h: Vec<Fe>,
    h_rows: usize,
    masks: Option<Vec<u64>>,
    betas: Vec<Fe>,
    flat: Vec<Fe>,
    image: Vec<Fe>,
    scaled: Vec<Fe>,
}

impl<'a> PointWeigher<'a> {
    fn new(sys: &'a QSystem) -> Self {
        let t = &*sys.tower;
        let km = sys.flat_len();
        let ann = if sys.space.is_zero() {
            Subspace::full(1, km)
        } else {
            MatF::from_rows(t, 1, sys.space.basis()).expect("basis over F_q").kernel(t)
        };
        let h_rows = ann.dim();
        let h: Vec<Fe> = ann.basis().concat();
        let masks = (t.p() == 2 && t.fq_coords_are_digits() && km <= 64).then(|| {
            ann.basis()
                .iter()
                .map(|row| row.iter().enumerate().fold(0u64, |a, (i, x)| a | ((x.0 as u64) << i)))
                .collect()
        });
        PointWeigher {
            sys,
            h,
            h_rows,
            masks,
            betas: t.relative_basis(1).expect("1 divides m").to_vec(),
            flat: vec![Fe::ZERO; km],
            image: Vec::new(),
            scaled: vec![Fe::ZERO; sys.k],
        }
    }

    /// dim_{F_q}(U ∩ ⟨v⟩_{F_{q^m}}) for nonzero v: m minus the rank of the
    /// annihilator applied to an F_q-basis of ⟨v⟩.
    pub fn weight(&mut self, v: &[Fe]) -> usize {
        let t = &*self.sys.tower;
        let m = t.m() as usize;
        if self.h_rows == 0 {
            return m;
        }
        if let Some(masks) = &self.masks {
            let images = self.betas.iter().map(|&b| {
                let flat = v
                    .iter()
                    .enumerate()
                    .fold(0u64, |a, (j, &x)| a | ((t.mul(b, x).0 as u64) << (j * m)));
                masks
                    .iter()
                    .enumerate()
                    .fold(0u64, |a, (r, &h)| a | (((h & flat).count_ones() as u64 & 1) << r))
            });
            return m - xor_rank(images);
        }
        let ar = t.arith(1);
        let km = self.flat.len();
        self.image.clear();
        self.image.resize(m * self.h_rows, Fe::ZERO);
        for (ti, &b) in self.betas.iter().enumerate() {
            for (s, &x) in self.scaled.iter_mut().zip(v) {
                *s = t.mul(b, x);
            }
            flatten_into(t, &self.scaled, 1, &mut self.flat);
            for r in 0..self.h_rows {
                let row = &self.h[r * km..(r + 1) * km];
                self.image[ti * self.h_rows + r] =
                    row.iter().zip(&self.flat).fold(Fe::ZERO, |a, (&h, &f)| ar.add(a, ar.mul(h, f)));
            }
        }
        m - rank_in_place(ar, &mut self.image, m, self.h_rows)
    }
}

/// On-disk subspace: `{tower, k, subspace, request?, maximal?}`. The
/// subspace record may be given over any level; it is stored over F_q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub tower: TowerDescriptor,
    pub k: usize,
    pub subspace: SubspaceRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximal: Option<bool>,
}

impl QSystem {
    /// `space` must be a level-1 subspace of F_q^{km}.
    pub fn new(tower: Arc<FieldTower>, k: usize, space: Subspace) -> Result<Self> {
        if k == 0 {
            return Err(Error::Dimension("k must be positive".into()));
        }
        if space.level() != 1 || space.len() != k * tower.m() as usize {
            return Err(Error::Dimension(format!(
                "expected an F_q-subspace of F_q^{}, got level {} length {}",
                k * tower.m() as usize,
                space.level(),
                space.len()
            )));
        }
        let full_span = fqm_span(&tower, &space)?.dim() == k;
        Ok(QSystem { tower, k, space, full_span })
    }

    /// F_q-span of vectors of F_{q^m}^k.
    pub fn from_vectors(tower: Arc<FieldTower>, k: usize, vectors: &[Vec<Fe>]) -> Result<Self> {
        let km = k * tower.m() as usize;
        let flat = vectors
            .iter()
            .map(|v| {
                if v.len() != k {
                    return Err(Error::Dimension(format!("vector of length {} in F_(q^m)^{k}", v.len())));
                }
                let mut f = vec![Fe::ZERO; km];
                flatten_into(&tower, v, 1, &mut f);
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        let space = Subspace::span(&tower, 1, km, flat)?;
        Self::new(tower, k, space)
    }

    /// The F_q-span of the columns of a nondegenerate code's generator.
    pub fn from_code(code: &RankMetricCode) -> Result<Self> {
        if !code.is_nondegenerate() {
            return Err(Error::Degenerate);
        }
        Self::new(code.tower().clone(), code.k(), code.column_space())
    }

    /// Generator whose columns are the canonical F_q-basis of U.
    pub fn to_code(&self) -> Result<RankMetricCode> {
        if !self.full_span {
            return Err(Error::NotSpanning);
        }
        let columns = self.basis_vectors();
        let rows: Vec<Vec<Fe>> = (0..self.k).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        RankMetricCode::from_rows(self.tower.clone(), &rows)
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile {
            tower: self.tower.descriptor(),
            k: self.k,
            subspace: self.space.to_record(&self.tower).expect("flat length is km"),
            request: None,
            maximal: None,
        }
    }

    /// Builds the tower described in the file.
    pub fn from_file(file: &SystemFile) -> Result<Self> {
        let tower = Arc::new(FieldTower::from_descriptor(&file.tower)?);
        if file.subspace.ambient.k != file.k {
            return Err(Error::Format("subspace ambient k differs from the file's k".into()));
        }
        let space = lift_level(&tower, &Subspace::from_record(&tower, &file.subspace)?)?;
        Self::new(tower, file.k, space)
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn m(&self) -> usize {
        self.tower.m() as usize
    }
    /// dim_{F_q} U.
    pub fn n(&self) -> usize {
        self.space.dim()
    }
    pub fn space(&self) -> &Subspace {
        &self.space
    }
    pub fn full_span(&self) -> bool {
        self.full_span
    }
    fn flat_len(&self) -> usize {
        self.k * self.m()
    }

    /// Basis of U as vectors of F_{q^m}^k.
    pub fn basis_vectors(&self) -> Vec<Vec<Fe>> {
        self.space
            .basis()
            .iter()
            .map(|b| unflatten(&self.tower, b, 1).expect("flat length is km"))
            .collect()
    }

    pub fn point_weigher(&self) -> PointWeigher<'_> {
        PointWeigher::new(self)
    }

    /// w_U(⟨v⟩) = dim_{F_q}(U ∩ ⟨v⟩_{F_{q^m}}).
    pub fn point_weight(&self, v: &[Fe]) -> Result<usize> {
        if v.len() != self.k {
            return Err(Error::Dimension(format!("vector of length {} in F_(q^m)^{}", v.len(), self.k)));
        }
        if v.iter().all(|x| x.is_zero()) {
            return Err(Error::Precondition("point weight of the zero vector".into()));
        }
        Ok(self.point_weigher().weight(v))
    }

    /// Point-weight counts over PG(k-1, q^m); the linear-set identities are
    /// checked before returning.
    pub fn profile(&self) -> Result<LinearSetProfile> {
        let t = &*self.tower;
        let pg = Projective::new(t, t.m(), self.k)?;
        let n = self.n();
        let counts = par_fold(
            pg.count(),
            || vec![0u64; n + 1],
            |acc, range| {
                let mut w = self.point_weigher();
                let mut x = vec![Fe::ZERO; self.k];
                for idx in range {
                    pg.point_into(idx, &mut x);
                    acc[w.weight(&x)] += 1;
                }
            },
            add_counts,
        );
        let size = pg.count() - counts[0];
        let positive: Vec<usize> = (1..=n).filter(|&i| counts[i] > 0).collect();
        let profile = LinearSetProfile {
            n,
            size,
            max_weight: (0..=n).rev().find(|&i| counts[i] > 0).unwrap_or(0),
            min_positive_weight: positive.first().copied(),
            counts,
        };
        check_identities(t.q() as u128, &profile, pg.count())?;
        Ok(profile)
    }

    /// Counts of dim_{F_q}(U ∩ x^⊥) over points x, via
    /// dim(U ∩ x^⊥) = n - w((x·u_1, …, x·u_n)).
    pub fn hyperplane_spectrum(&self) -> Result<HyperplaneSpectrum> {
        let t = &*self.tower;
        let pg = Projective::new(t, t.m(), self.k)?;
        let n = self.n();
        let basis = self.basis_vectors();
        let counts = par_fold(
            pg.count(),
            || vec![0u64; n + 1],
            |acc, range| {
                let mut weigher = RankWeigher::new(t);
                let mut x = vec![Fe::ZERO; self.k];
                let mut c = vec![Fe::ZERO; n];
                for idx in range {
                    pg.point_into(idx, &mut x);
                    for (cj, b) in c.iter_mut().zip(&basis) {
                        *cj = x.iter().zip(b).fold(Fe::ZERO, |a, (&xi, &bi)| t.add(a, t.mul(xi, bi)));
                    }
                    acc[n - weigher.weight(&c)] += 1;
                }
            },
            add_counts,
        );
        Ok(HyperplaneSpectrum { counts })
    }

    /// Restriction of U to level e, or `NotLinear`.
    pub fn restrict(&self, e: u32) -> Result<Subspace> {
        restrict_level(&self.tower, &self.space, e)?.ok_or(Error::NotLinear { e })
    }

    /// Every point has F_{q^e}-weight at most 1, i.e. F_q-weight at most e.
    /// U must be F_{q^e}-linear.
    pub fn is_scattered(&self, e: u32) -> Result<bool> {
        let w = self.restrict(e)?;
        let collision_cost = point_count(self.tower.q_pow(e), w.dim());
        let profile_cost = point_count(self.tower.order() as u64, self.k);
        if collision_cost <= profile_cost {
            check_budget(collision_cost)?;
            Ok(self.distinct_points(&w).is_some())
        } else {
            Ok(self.profile()?.max_weight <= e as usize)
        }
    }

    /// Point indices of one representative per F_{q^e}-line of `w` (level e),
    /// or `None` if two of them span the same F_{q^m}-point.
    pub(crate) fn distinct_points(&self, w: &Subspace) -> Option<HashSet<u64>> {
        let t = &*self.tower;
        let e = w.level();
        let pg = Projective::new(t, t.m(), self.k).ok()?;
        let basis: Vec<Vec<Fe>> = w.basis().iter().map(|b| unflatten(t, b, e).expect("level-e flat")).collect();
        let mut seen = HashSet::new();
        let mut ok = true;
        for_each_rep(t, e, &basis, |v| {
            ok = seen.insert(pg.index_of(v).expect("representatives are nonzero"));
            ok
        });
        ok.then_some(seen)
    }

    /// No vector v ∉ U makes U + ⟨v⟩_{F_q} scattered. U must be scattered.
    pub fn is_maximally_scattered(&self) -> Result<bool> {
        self.is_maximally_scattered_at(1)
    }

    /// Level-e version: U must be F_{q^e}-linear and F_{q^e}-scattered, and
    /// extensions are by one F_{q^e}-dimension.
    pub fn is_maximally_scattered_at(&self, e: u32) -> Result<bool> {
        let t = &*self.tower;
        let w = self.restrict(e)?;
        let len = w.len();
        check_budget((t.q() as u128).saturating_pow(self.flat_len() as u32))?;
        let pg = Projective::new(t, t.m(), self.k)?;
        let Some(lu) = self.distinct_points(&w) else {
            return Err(Error::Precondition("maximal scatteredness of a non-scattered subspace".into()));
        };
        if w.dim() == len {
            return Ok(true);
        }
        let mut is_pivot = vec![false; len];
        for &c in w.pivots() {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..len).filter(|&i| !is_pivot[i]).collect();
        let quotient = Projective::new(t, e, free.len())?;
        let basis: Vec<Vec<Fe>> = w.basis().iter().map(|b| unflatten(t, b, e).expect("level-e flat")).collect();
        let scalars = t.subfield_elements(e)?;
        let extendable = par_fold(
            quotient.count(),
            || false,
            |found, range| {
                let mut coeffs = vec![Fe::ZERO; free.len()];
                let mut flat = vec![Fe::ZERO; len];
                let mut batch = HashSet::new();
                for idx in range {
                    if *found {
                        return;
                    }
                    quotient.point_into(idx, &mut coeffs);
                    flat.fill(Fe::ZERO);
                    for (&pos, &c) in free.iter().zip(&coeffs) {
                        flat[pos] = c;
                    }
                    let v = unflatten(t, &flat, e).expect("level-e flat");
                    *found |= extends(t, &pg, &scalars, &basis, &v, &lu, &mut batch);
                }
            },
            |a, b| a || b,
        );
        Ok(!extendable)
    }

    /// Largest t | m with U F_{q^t}-linear, the least positive point weight,
    /// and the status of the subfield-linearity consequence.
    pub fn field_of_linearity(&self) -> Result<Linearity> {
        let t_max = self
            .tower
            .divisors()
            .into_iter()
            .rev()
            .find(|&e| restrict_level(&self.tower, &self.space, e).ok().flatten().is_some())
            .unwrap_or(1);
        let profile = self.profile()?;
        let subfield_linearity = self.subfield_linearity_status(&profile, t_max)?;
        Ok(Linearity { t: t_max, e_min: profile.min_positive_weight, subfield_linearity })
    }

    fn subfield_linearity_status(&self, profile: &LinearSetProfile, t_max: u32) -> Result<SubfieldLinearity> {
        let (q, m, k, n) = (self.tower.q() as usize, self.m(), self.k, self.n());
        let Some(e) = profile.min_positive_weight else {
            return Ok(SubfieldLinearity::NotApplicable { reason: "U = {0}".into() });
        };
        if profile.positive_weights() != [e] {
            return Ok(SubfieldLinearity::NotApplicable { reason: "more than one positive point weight".into() });
        }
        if n > (k - 1) * m {
            return Ok(SubfieldLinearity::NotApplicable { reason: "n > (k-1)m".into() });
        }
        if q < m {
            return Ok(SubfieldLinearity::Skipped { reason: "hypothesis q >= m not met".into() });
        }
        let e = e as u32;
        if !self.tower.divides_m(e) || n % e as usize != 0 {
            return Ok(SubfieldLinearity::Violated { reason: format!("e = {e} does not divide both m and n") });
        }
        if t_max % e != 0 {
            return Ok(SubfieldLinearity::Violated { reason: format!("U is not F_(q^{e})-linear (t = {t_max})") });
        }
        if !self.is_scattered(e)? {
            return Ok(SubfieldLinearity::Violated { reason: format!("U is not F_(q^{e})-scattered") });
        }
        Ok(SubfieldLinearity::Holds)
    }
}

fn check_identities(q: u128, p: &LinearSetProfile, points: u64) -> Result<()> {
    PROFILES_CHECKED.fetch_add(1, Ordering::Relaxed);
    let theta = |i: usize| -> u128 { (0..i).map(|j| q.pow(j as u32)).sum() };
    let n = p.n;
    let covered: u128 = p.counts.iter().map(|&c| c as u128).sum();
    let weighted: u128 = p.counts.iter().enumerate().map(|(i, &c)| c as u128 * theta(i)).sum();
    let positive: u128 = p.counts[1..].iter().map(|&c| c as u128).sum();
    let failure = if p.size as u128 > theta(n) {
        Some(format!("|L_U| = {} exceeds (q^n-1)/(q-1) = {}", p.size, theta(n)))
    } else if covered != points as u128 || positive != p.size as u128 {
        Some(format!("N_0 + … + N_n = {covered} over {points} points, |L_U| = {}", p.size))
    } else if weighted != theta(n) {
        Some(format!("Σ N_i (q^i-1)/(q-1) = {weighted}, expected {}", theta(n)))
    } else {
        None
    };
    if let Some(msg) = failure {
        PROFILE_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        return Err(Error::Invariant(msg));
    }
    Ok(())
}

/// Calls `f` on Σ c_i b_i for one representative coefficient vector per
/// F_{q^e}-line (first nonzero coefficient 1); stops when `f` returns false.
pub(crate) fn for_each_rep(tower: &FieldTower, e: u32, basis: &[Vec<Fe>], mut f: impl FnMut(&[Fe]) -> bool) {
    let Some(len) = basis.first().map(Vec::len) else { return };
    let qe = tower.q_pow(e);
    let mut v = vec![Fe::ZERO; len];
    for lead in 0..basis.len() {
        let tail = basis.len() - lead - 1;
        for idx in 0..qe.pow(tail as u32) {
            v.copy_from_slice(&basis[lead]);
            let mut rest = idx;
            for b in basis[lead + 1..].iter().rev() {
                let c = tower.subfield_element(e, rest % qe);
                rest /= qe;
                if !c.is_zero() {
                    for (x, &y) in v.iter_mut().zip(b) {
                        *x = tower.add(*x, tower.mul(c, y));
                    }
                }
            }
            if !f(&v) {
                return;
            }
        }
    }
}

/// Whether W + ⟨v⟩ stays scattered, W scattered with basis `basis` over the
/// field `scalars` and point set `occupied`: the points of w + v, w ∈ W, must
/// be new and pairwise distinct. `batch` is scratch space.
pub(crate) fn extends(
    tower: &FieldTower,
    pg: &Projective,
    scalars: &[Fe],
    basis: &[Vec<Fe>],
    v: &[Fe],
    occupied: &HashSet<u64>,
    batch: &mut HashSet<u64>,
) -> bool {
    batch.clear();
    let mut ok = true;
    for_each_vector(tower, scalars, basis, v, |w| {
        ok = pg.index_of(w).is_some_and(|p| !occupied.contains(&p) && batch.insert(p));
        ok
    });
    ok
}

/// Calls `f` on offset + Σ c_i b_i for every coefficient vector over
/// `scalars`; stops when `f` returns false.
pub(crate) fn for_each_vector(tower: &FieldTower, fq: &[Fe], basis: &[Vec<Fe>], offset: &[Fe], mut f: impl FnMut(&[Fe]) -> bool) {
    let q = fq.len() as u64;
    let mut v = offset.to_vec();
    for idx in 0..q.pow(basis.len() as u32) {
        v.copy_from_slice(offset);
        let mut rest = idx;
        for b in basis {
            let c = fq[(rest % q) as usize];
            rest /= q;
            if !c.is_zero() {
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = tower.add(*x, tower.mul(c, y));
                }
            }
        }
        if !f(&v) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{flatten, lift_level};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u32, r: u32, m: u32) -> Arc<FieldTower> {
        Arc::new(FieldTower::new(p, r, m).unwrap())
    }

    /// {(x, x^{q^s})} over an F_q-basis of F_{q^m}.
    fn graph(t: &Arc<FieldTower>, s: u32) -> QSystem {
        let vs: Vec<Vec<Fe>> = t
            .relative_basis(1)
            .unwrap()
            .iter()
            .map(|&b| vec![b, t.frobenius(b, s)])
            .collect();
        QSystem::from_vectors(t.clone(), 2, &vs).unwrap()
    }

    fn random_system(rng: &mut ChaCha8Rng, t: &Arc<FieldTower>, k: usize, n: usize) -> QSystem {
        let vs: Vec<Vec<Fe>> = (0..n).map(|_| (0..k).map(|_| Fe(rng.gen_range(0..t.order()))).collect()).collect();
        QSystem::from_vectors(t.clone(), k, &vs).unwrap()
    }

    /// Point weight by scanning every λ ∈ F_{q^m} for λv ∈ U.
    fn scan_weight(sys: &QSystem, v: &[Fe]) -> usize {
        let t = sys.tower();
        let hits = (0..t.order())
            .filter(|&l| {
                let w: Vec<Fe> = v.iter().map(|&x| t.mul(Fe(l), x)).collect();
                sys.space().contains(t, &flatten(t, &w, 1).unwrap()).unwrap()
            })
            .count() as u64;
        let mut d = 0;
        let mut s = hits;
        while s > 1 {
            s /= t.q() as u64;
            d += 1;
        }
        d
    }

    #[test]
    fn pseudoregulus_profile_and_spectrum() {
        let t = tower(2, 1, 4);
        let u = graph(&t, 1);
        assert_eq!(u.n(), 4);
        assert!(u.full_span());
        assert_eq!(u.point_weight(&[Fe::ONE, Fe::ONE]).unwrap(), 1);
        let p = u.profile().unwrap();
        assert_eq!(p.counts, vec![2, 15, 0, 0, 0]);
        assert_eq!(p.size, 15);
        let s = u.hyperplane_spectrum().unwrap();
        assert_eq!(s.counts, vec![2, 15, 0, 0, 0]);
        assert!(u.is_scattered(1).unwrap());
        assert!(u.is_maximally_scattered().unwrap());
        let lin = u.field_of_linearity().unwrap();
        assert_eq!(lin.t, 1);
        assert_eq!(lin.e_min, Some(1));
    }

    #[test]
    fn square_graph_profile() {
        let t = tower(2, 1, 4);
        let vs: Vec<Vec<Fe>> = t.relative_basis(1).unwrap().iter().map(|&b| vec![b, t.mul(b, b)]).collect();
        let u = QSystem::from_vectors(t, 2, &vs).unwrap();
        let p = u.profile().unwrap();
        assert_eq!((p.counts[0], p.counts[1], p.size), (2, 15, 15));
    }

    #[test]
    fn point_weights_match_scan() {
        for (p, r, m, k) in [(2, 1, 3, 2), (3, 1, 2, 2), (2, 2, 2, 2), (2, 1, 2, 3)] {
            let t = tower(p, r, m);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for n in 0..=(k * m as usize) {
                let u = random_system(&mut rng, &t, k, n);
                let pg = Projective::new(&t, t.m(), k).unwrap();
                for i in 0..pg.count() {
                    let v = pg.point(i);
                    assert_eq!(u.point_weight(&v).unwrap(), scan_weight(&u, &v));
                }
                u.profile().unwrap();
            }
        }
    }

    #[test]
    fn full_space_and_trivial_points() {
        let t = tower(3, 1, 2);
        let full = QSystem::new(t.clone(), 2, Subspace::full(1, 4)).unwrap();
        let p = full.profile().unwrap();
        assert_eq!(p.counts[2], 10);
        assert_eq!(p.counts.iter().sum::<u64>(), 10);
        let axis = QSystem::from_vectors(t.clone(), 2, &[vec![Fe(1), Fe(0)], vec![Fe(3), Fe(0)]]).unwrap();
        assert!(!axis.full_span());
        assert_eq!(axis.point_weight(&[Fe(0), Fe(1)]).unwrap(), 0);
        assert!(!axis.is_scattered(1).unwrap());
        assert!(matches!(axis.to_code(), Err(Error::NotSpanning)));
        assert!(axis.point_weight(&[Fe(0), Fe(0)]).is_err());
    }

    #[test]
    fn eq6_bridge_and_round_trip() {
        let t = tower(2, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut done = 0;
        while done < 20 {
            let rows: Vec<Vec<Fe>> = (0..2).map(|_| (0..4).map(|_| Fe(rng.gen_range(0..16))).collect()).collect();
            let Ok(code) = RankMetricCode::from_rows(t.clone(), &rows) else { continue };
            let Ok(u) = QSystem::from_code(&code) else { continue };
            done += 1;
            let pg = Projective::new(&t, 4, 2).unwrap();
            let mut spectrum = vec![0u64; 5];
            for i in 0..pg.count() {
                let x = pg.point(i);
                let perp = crate::duality::DualityContext::new(t.clone(), 2)
                    .unwrap()
                    .perp(&Subspace::span(&t, 4, 2, [x.clone()]).unwrap())
                    .unwrap();
                let cap = u.space().intersect(&t, &lift_level(&t, &perp).unwrap()).unwrap().dim();
                assert_eq!(code.rank_weight(&code.encode(&x).unwrap()).unwrap(), 4 - cap);
                spectrum[cap] += 1;
            }
            assert_eq!(u.hyperplane_spectrum().unwrap().counts, spectrum);
            let back = u.to_code().unwrap();
            assert_eq!(back.weight_distribution().unwrap(), code.weight_distribution().unwrap());
            let d = code.minimum_distance().unwrap();
            assert_eq!(d, 4 - u.hyperplane_spectrum().unwrap().max_intersection());
        }
    }

    #[test]
    fn identity_generator_system() {
        let t = tower(2, 1, 4);
        let code = RankMetricCode::new(t.clone(), MatF::identity(4, 2)).unwrap();
        let u = QSystem::from_code(&code).unwrap();
        let expected = QSystem::from_vectors(t, 2, &[vec![Fe(1), Fe(0)], vec![Fe(0), Fe(1)]]).unwrap();
        assert_eq!(u, expected);
        // x^⊥ meets F_2^2 in a line iff x is one of the 3 points of PG(1, 2).
        let s = u.hyperplane_spectrum().unwrap();
        assert_eq!(s.counts, vec![14, 3, 0]);
        assert_eq!(code.minimum_distance().unwrap(), 2 - s.max_intersection());
    }

    #[test]
    fn subfield_linear_system() {
        // {(x, x^4)} is F_4-linear and F_4-scattered.
        let t = tower(2, 1, 4);
        let u = graph(&t, 2);
        assert_eq!(u.n(), 4);
        let lin = u.field_of_linearity().unwrap();
        assert_eq!(lin.t, 2);
        assert_eq!(lin.e_min, Some(2));
        assert!(u.is_scattered(2).unwrap());
        assert!(!u.is_scattered(1).unwrap());
        assert!(matches!(lin.subfield_linearity, SubfieldLinearity::Skipped { .. }));
        assert!(matches!(graph(&t, 1).is_scattered(2), Err(Error::NotLinear { e: 2 })));
    }

    #[test]
    fn maximal_scatteredness_scan() {
        let t = tower(2, 1, 2);
        let one = QSystem::from_vectors(t.clone(), 2, &[vec![Fe(1), Fe(0)]]).unwrap();
        assert!(one.is_scattered(1).unwrap());
        assert!(!one.is_maximally_scattered().unwrap());
        let t4 = tower(2, 1, 4);
        let u = graph(&t4, 1);
        let sub = QSystem::new(
            t4.clone(),
            2,
            Subspace::span(&t4, 1, 8, u.space().basis()[..3].iter().cloned()).unwrap(),
        )
        .unwrap();
        assert!(!sub.is_maximally_scattered().unwrap());
        let not_scattered = QSystem::new(t4, 2, Subspace::full(1, 8)).unwrap();
        assert!(matches!(not_scattered.is_maximally_scattered(), Err(Error::Precondition(_))));
    }

    #[test]
    fn scattered_check_paths_agree() {
        let t = tower(2, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 1..=6 {
            for _ in 0..10 {
                let u = random_system(&mut rng, &t, 2, n);
                let by_profile = u.profile().unwrap().max_weight <= 1;
                assert_eq!(u.is_scattered(1).unwrap(), by_profile);
            }
        }
    }

    #[test]
    fn profile_json_shape() {
        let t = tower(2, 1, 4);
        let p = graph(&t, 1).profile().unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"n":4,"counts":{"0":2,"1":15,"2":0,"3":0,"4":0},"size":15,"max_weight":1,"min_positive_weight":1}"#
        );
        let back: LinearSetProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn system_file_round_trip() {
        let t = tower(2, 1, 4);
        let u = graph(&t, 2);
        let json = serde_json::to_string(&u.to_file()).unwrap();
        let back = QSystem::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, u);
        let mut f = u.to_file();
        f.subspace = u.restrict(2).unwrap().to_record(&t).unwrap();
        assert_eq!(f.subspace.ambient.e, 2);
        assert_eq!(QSystem::from_file(&f).unwrap(), u);
    }

    #[test]
    fn maximal_at_subfield_level() {
        let t = tower(2, 1, 4);
        let u = graph(&t, 2);
        assert!(u.is_maximally_scattered_at(2).unwrap());
        let half = QSystem::new(t.clone(), 2, lift_level(&t, &Subspace::span(&t, 2, 4, [u.restrict(2).unwrap().basis()[0].clone()]).unwrap()).unwrap()).unwrap();
        assert!(!half.is_maximally_scattered_at(2).unwrap());
    }
}
