//! Concrete instances: Gabidulin codes, pseudoregulus-type and
//! subfield-scattered subspaces, two-weight codes as geometric duals of
//! scattered subspaces, a strictly F_q-linear subspace with even point
//! weights, and seeded scattered-subspace search.
//!
//! Every output is re-verified by enumeration before it is returned; a
//! failed self-check is an `Error::Certification`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{rank_weight, RankMetricCode};
use crate::duality::DualityContext;
use crate::error::{Error, Result};
use crate::field::{Fe, FieldTower};
use crate::linalg::{flatten, fqm_span, lift_level, Subspace};
use crate::projective::{check_budget, Projective};
use crate::system::{extends, QSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Gabidulin,
    Pseudoregulus,
    SubfieldScattered,
    DualTwoWeight,
    RemarkExample,
    ScatteredSearch,
    ExistenceFamily,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Gabidulin,
        Kind::Pseudoregulus,
        Kind::SubfieldScattered,
        Kind::DualTwoWeight,
        Kind::RemarkExample,
        Kind::ScatteredSearch,
        Kind::ExistenceFamily,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Gabidulin => "gabidulin",
            Kind::Pseudoregulus => "pseudoregulus",
            Kind::SubfieldScattered => "subfield_scattered",
            Kind::DualTwoWeight => "dual_two_weight",
            Kind::RemarkExample => "remark_example",
            Kind::ScatteredSearch => "scattered_search",
            Kind::ExistenceFamily => "existence_family",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Format(format!("unknown construction kind {s:?}")))
    }
}

/// Parameters of a construction; unused fields are omitted. Embedded in
/// every output for provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionRequest {
    pub kind: Kind,
    pub p: u32,
    pub r: u32,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConstructionRequest {
    pub fn new(kind: Kind, p: u32, r: u32, m: u32) -> Self {
        ConstructionRequest { kind, p, r, m, k: None, n: None, e: None, d: None, seed: None, restarts: None, note: None }
    }

    fn need<T: Copy>(&self, v: Option<T>, name: &str) -> Result<T> {
        v.ok_or_else(|| Error::Precondition(format!("{} requires --{name}", self.kind)))
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RESTARTS: u32 = 32;

#[derive(Clone, Debug)]
pub enum Construction {
    Code(RankMetricCode),
    Family(Vec<RankMetricCode>),
    System { system: QSystem, maximal: Option<bool> },
    /// A randomized search exhausted its restarts.
    NotFound,
}

/// Independent per-index seeds from one base seed (splitmix64 mixing).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(index))
}

fn certify(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Certification(what()))
    }
}

fn check_subfield(tower: &FieldTower, e: u32) -> Result<()> {
    if !tower.divides_m(e) {
        return Err(Error::NotDivisor { e, m: tower.m() });
    }
    Ok(())
}

/// G[i][j] = points[j]^{q^i}. Default points (1, g, …, g^{n-1}) for the
/// primitive element g. The result must be MRD.
pub fn gabidulin(tower: &Arc<FieldTower>, n: usize, k: usize, points: Option<&[Fe]>) -> Result<RankMetricCode> {
    let m = tower.m() as usize;
    if k == 0 || k > n || n > m {
        return Err(Error::Precondition(format!("gabidulin needs 1 <= k <= n <= m, got k = {k}, n = {n}, m = {m}")));
    }
    let pts: Vec<Fe> = match points {
        Some(p) if p.len() == n => p.to_vec(),
        Some(p) => return Err(Error::Dimension(format!("{} evaluation points for n = {n}", p.len()))),
        None => (0..n).map(|j| tower.pow(tower.primitive(), j as u64)).collect(),
    };
    if rank_weight(tower, &pts) != n {
        return Err(Error::Precondition("evaluation points are F_q-linearly dependent".into()));
    }
    let rows: Vec<Vec<Fe>> = (0..k).map(|i| pts.iter().map(|&x| tower.frobenius(x, i as u32)).collect()).collect();
    let code = RankMetricCode::from_rows(tower.clone(), &rows)?;
    let d = code.minimum_distance()?;
    certify(d == n - k + 1 && code.singleton_check()?.is_mrd, || {
        format!("gabidulin [{n},{k}] has d = {d}, expected {}", n - k + 1)
    })?;
    Ok(code)
}

/// Level-e subspace {(x_1, x_1^{q^e}, …, x_{k/2}, x_{k/2}^{q^e})} of
/// F_{q^m}^k, of F_{q^e}-dimension (k/2)(m/e). Basis vectors are ordered
/// round-robin over the pairs, so every prefix of length >= k spans.
pub fn pseudoregulus_at(tower: &FieldTower, k: usize, e: u32) -> Result<Subspace> {
    check_subfield(tower, e)?;
    if k == 0 || k % 2 == 1 {
        return Err(Error::Precondition(format!("pseudoregulus needs even k, got {k}")));
    }
    Subspace::span(tower, e, k * (tower.m() / e) as usize, pseudoregulus_vectors(tower, k, e)?)
}

fn pseudoregulus_vectors(tower: &FieldTower, k: usize, e: u32) -> Result<Vec<Vec<Fe>>> {
    let basis = tower.relative_basis(e)?.to_vec();
    let mut out = Vec::with_capacity(basis.len() * k / 2);
    for &b in &basis {
        for pair in 0..k / 2 {
            let mut v = vec![Fe::ZERO; k];
            v[2 * pair] = b;
            v[2 * pair + 1] = tower.frobenius(b, e);
            out.push(flatten(tower, &v, e)?);
        }
    }
    Ok(out)
}

/// The scattered subspace {(x_1, x_1^q, …)} over F_q of dimension km/2;
/// spanning when m > 1.
pub fn pseudoregulus(tower: &Arc<FieldTower>, k: usize) -> Result<QSystem> {
    let sys = QSystem::new(tower.clone(), k, pseudoregulus_at(tower, k, 1)?)?;
    let km = k * tower.m() as usize;
    certify(sys.n() * 2 == km && sys.is_scattered(1)?, || {
        "pseudoregulus is not a scattered subspace of dimension km/2".into()
    })?;
    Ok(sys)
}

/// An F_{q^e}-scattered subspace of F_{q^e}-dimension `target` (level e):
/// a round-robin prefix of the pseudoregulus for even k, seeded search for odd k.
pub fn scattered_at_level(tower: &Arc<FieldTower>, k: usize, e: u32, target: usize, seed: u64) -> Result<Subspace> {
    check_subfield(tower, e)?;
    if k % 2 == 0 {
        let all = pseudoregulus_vectors(tower, k, e)?;
        if target > all.len() {
            return Err(Error::Precondition(format!(
                "F_(q^{e})-dimension {target} exceeds the scattered bound km/(2e) = {}",
                all.len()
            )));
        }
        return Subspace::span(tower, e, k * (tower.m() / e) as usize, all.into_iter().take(target));
    }
    match scattered_search(tower, k, e, target, seed, DEFAULT_RESTARTS)? {
        Some(found) => Ok(found.subspace),
        None => Err(Error::Certification(format!(
            "no F_(q^{e})-scattered subspace of dimension {target} found in {DEFAULT_RESTARTS} restarts"
        ))),
    }
}

/// F_{q^e}-scattered spanning W of F_{q^e}-dimension `target`, and the code of
/// W viewed over F_q: an [e·target, k] code, with weights {n-e, n} when k = 2.
pub fn subfield_scattered(
    tower: &Arc<FieldTower>,
    e: u32,
    k: usize,
    target: usize,
    seed: u64,
) -> Result<(Subspace, RankMetricCode)> {
    check_subfield(tower, e)?;
    let m = tower.m() as usize;
    if e as usize >= m {
        return Err(Error::Precondition(format!("subfield_scattered needs e < m, got e = {e}, m = {m}")));
    }
    if 2 * e as usize * target > k * m {
        return Err(Error::Precondition(format!("target {target} exceeds km/(2e) = {}", k * m / (2 * e as usize))));
    }
    let w = scattered_at_level(tower, k, e, target, seed)?;
    if fqm_span(tower, &w)?.dim() != k {
        return Err(Error::NotSpanning);
    }
    let sys = QSystem::new(tower.clone(), k, lift_level(tower, &w)?)?;
    certify(sys.is_scattered(e)?, || format!("output is not F_(q^{e})-scattered"))?;
    let code = sys.to_code()?;
    if k == 2 {
        let n = code.n();
        let expected = vec![n - e as usize, n];
        let got = code.weight_distribution()?.nonzero_weights();
        certify(got == expected, || format!("weights {got:?}, expected {expected:?}"))?;
    }
    Ok((w, code))
}

/// The code of U^⊥' for U = W over F_q, W F_{q^e}-scattered (level e): an
/// [km-n, k, m-e] code with weights {m-e, m}, whose system meets every
/// hyperplane in dimension (k-1)m-n or (k-1)m-n+e.
pub fn dual_of_scattered(tower: &Arc<FieldTower>, k: usize, w: &Subspace) -> Result<RankMetricCode> {
    let e = w.level() as usize;
    let m = tower.m() as usize;
    let u = lift_level(tower, w)?;
    let n = u.dim();
    let ctx = DualityContext::new(tower.clone(), k)?;
    let sys = QSystem::new(tower.clone(), k, ctx.perp_prime(&u)?)?;
    let code = sys.to_code()?;
    let weights = code.weight_distribution()?.nonzero_weights();
    certify(weights == [m - e, m], || format!("dual code weights {weights:?}, expected [{}, {m}]", m - e))?;
    certify(code.is_nondegenerate(), || "dual code is degenerate".into())?;
    let low = ((k - 1) * m) as i64 - n as i64;
    let spectrum = sys.hyperplane_spectrum()?;
    let bad: Vec<usize> = (0..spectrum.counts.len())
        .filter(|&i| spectrum.counts[i] > 0 && i as i64 != low && i as i64 != low + e as i64)
        .collect();
    certify(bad.is_empty(), || format!("hyperplane intersections {bad:?} outside {{{low}, {}}}", low + e as i64))?;
    Ok(code)
}

/// Geometric dual of an F_{q^e}-scattered spanning subspace of F_q-dimension n.
pub fn dual_two_weight(tower: &Arc<FieldTower>, e: u32, k: usize, n: usize, seed: u64) -> Result<RankMetricCode> {
    check_subfield(tower, e)?;
    let m = tower.m() as usize;
    if e as usize >= m || k < 2 {
        return Err(Error::Precondition(format!("dual_two_weight needs e < m and k >= 2, got e = {e}, k = {k}")));
    }
    if n % e as usize != 0 || 2 * n > k * m {
        return Err(Error::Precondition(format!("n = {n} must be a multiple of e = {e} and at most km/2")));
    }
    let w = scattered_at_level(tower, k, e, n / e as usize, seed)?;
    if fqm_span(tower, &w)?.dim() != k {
        return Err(Error::NotSpanning);
    }
    dual_of_scattered(tower, k, &w)
}

/// U = S_1 × S_2 in F_{q^16}^2 with S_1 = ⟨1, λ⟩_{F_q}, λ the least element
/// generating F_{q^4} over F_q, and S_2 = ⟨1, ζ, ζ^2⟩_{F_{q^4}} for the
/// power basis (1, ζ, ζ^2, ζ^3) of F_{q^16} over F_{q^4}. dim U = 14, point
/// weights in {0, 2, 12}, and U is not F_{q^t}-linear for any t > 1.
pub fn remark_example(tower: &Arc<FieldTower>) -> Result<QSystem> {
    if tower.m() != 16 {
        return Err(Error::Precondition(format!("remark_example needs m = 16, got {}", tower.m())));
    }
    let lambda = (1..tower.order())
        .map(Fe)
        .find(|&x| tower.in_subfield(x, 4) && !tower.in_subfield(x, 2))
        .expect("F_(q^4) has elements outside F_(q^2)");
    let zeta_powers = tower.relative_basis(4)?.to_vec();
    let fq4 = tower.fq_basis(4)?.to_vec();
    let mut vectors = vec![vec![Fe::ONE, Fe::ZERO], vec![lambda, Fe::ZERO]];
    for &z in &zeta_powers[..3] {
        for &b in &fq4 {
            vectors.push(vec![Fe::ZERO, tower.mul(b, z)]);
        }
    }
    let sys = QSystem::from_vectors(tower.clone(), 2, &vectors)?;
    certify(sys.n() == 14, || format!("dim U = {}, expected 14", sys.n()))?;
    let weights = sys.profile()?.weights();
    certify(weights.iter().all(|w| [0, 2, 12].contains(w)), || format!("point weights {weights:?}"))?;
    for e in tower.divisors().into_iter().filter(|&e| e > 1) {
        certify(sys.restrict(e).is_err(), || format!("U is F_(q^{e})-linear"))?;
    }
    Ok(sys)
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    /// Level-e basis in RREF.
    pub subspace: Subspace,
    /// Index of the winning restart.
    pub restart: u32,
    /// No one-step F_{q^e}-extension stays scattered; `None` if the scan
    /// exceeds the enumeration budget.
    pub maximal: Option<bool>,
}

/// Candidate draws per dimension before backtracking.
const DRAWS_PER_STEP: usize = 64;

/// Randomized greedy search with backtracking for an F_{q^e}-scattered
/// subspace of F_{q^e}-dimension `target`. Restarts run in parallel; the
/// lowest successful restart index wins. The scattered bound is not consulted.
pub fn scattered_search(
    tower: &Arc<FieldTower>,
    k: usize,
    e: u32,
    target: usize,
    seed: u64,
    restarts: u32,
) -> Result<Option<SearchResult>> {
    check_subfield(tower, e)?;
    if k == 0 || target == 0 {
        return Err(Error::Precondition("scattered_search needs k >= 1 and target >= 1".into()));
    }
    check_budget((tower.order() as u128).saturating_pow(k as u32))?;
    let pg = Projective::new(tower, tower.m(), k)?;
    let scalars = tower.subfield_elements(e)?;
    let found = (0..restarts).into_par_iter().find_map_first(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        search_once(tower, &pg, &scalars, k, target, &mut rng).map(|b| (i, b))
    });
    let Some((restart, basis)) = found else { return Ok(None) };
    let flat: Result<Vec<_>> = basis.iter().map(|v| flatten(tower, v, e)).collect();
    let w = Subspace::span(tower, e, k * (tower.m() / e) as usize, flat?)?;
    let sys = QSystem::new(tower.clone(), k, lift_level(tower, &w)?)?;
    certify(w.dim() == target && sys.is_scattered(e)?, || "search output is not scattered".into())?;
    let maximal = match sys.is_maximally_scattered_at(e) {
        Ok(b) => Some(b),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(err) => return Err(err),
    };
    Ok(Some(SearchResult { subspace: w, restart, maximal }))
}

fn search_once(
    tower: &FieldTower,
    pg: &Projective,
    scalars: &[Fe],
    k: usize,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<Fe>>> {
    let mut basis: Vec<Vec<Fe>> = Vec::with_capacity(target);
    let mut added: Vec<Vec<u64>> = Vec::with_capacity(target);
    let mut occupied = HashSet::new();
    let mut batch = HashSet::new();
    let mut backtracks = 0usize;
    while basis.len() < target {
        let mut accepted = false;
        for _ in 0..DRAWS_PER_STEP {
            let v: Vec<Fe> = (0..k).map(|_| Fe(rng.gen_range(0..tower.order()))).collect();
            if extends(tower, pg, scalars, &basis, &v, &occupied, &mut batch) {
                let points: Vec<u64> = batch.iter().copied().collect();
                occupied.extend(points.iter().copied());
                added.push(points);
                basis.push(v);
                accepted = true;
                break;
            }
        }
        if !accepted {
            backtracks += 1;
            if basis.is_empty() || backtracks > 4 * target {
                return None;
            }
            basis.pop();
            for p in added.pop().expect("one point batch per basis vector") {
                occupied.remove(&p);
            }
        }
    }
    Some(basis)
}

/// Nondegenerate two-weight [n, k, d] codes for every n = km - t(m-d),
/// t = 1..=mk/(2(m-d)), as duals of F_{q^{m-d}}-scattered subspaces of
/// F_{q^{m-d}}-dimension t. Ordered by increasing n.
pub fn existence_family(tower: &Arc<FieldTower>, k: usize, d: usize, seed: u64) -> Result<Vec<RankMetricCode>> {
    let m = tower.m() as usize;
    if d == 0 || d >= m {
        return Err(Error::Precondition(format!("existence_family needs 0 < d < m, got d = {d}, m = {m}")));
    }
    let e = m - d;
    if m % e != 0 || (m * k / e) % 2 != 0 || (m * k) % e != 0 {
        return Err(Error::Precondition(format!("m - d = {e} must divide m and mk/(m-d) must be even")));
    }
    if k < 2 {
        return Err(Error::Precondition("existence_family needs k >= 2".into()));
    }
    let mut codes = Vec::new();
    for t in (1..=m * k / (2 * e)).rev() {
        let w = scattered_at_level(tower, k, e as u32, t, derive_seed(seed, t as u64))?;
        let code = dual_of_scattered(tower, k, &w)?;
        certify(code.n() == k * m - t * e && code.minimum_distance()? == d && code.is_two_weight()?, || {
            format!("family member for t = {t} is not a two-weight [{}, {k}, {d}] code", k * m - t * e)
        })?;
        codes.push(code);
    }
    Ok(codes)
}

/// Executes a request; outputs carry the request as provenance.
pub fn run(req: &ConstructionRequest) -> Result<Construction> {
    let tower = Arc::new(FieldTower::new(req.p, req.r, req.m)?);
    run_in(&tower, req)
}

/// Like [`run`] over an existing tower, which must match (p, r, m).
pub fn run_in(tower: &Arc<FieldTower>, req: &ConstructionRequest) -> Result<Construction> {
    if (tower.p(), tower.r(), tower.m()) != (req.p, req.r, req.m) {
        return Err(Error::Precondition("tower does not match the request".into()));
    }
    let provenance = serde_json::to_value(req)?;
    let seed = req.seed.unwrap_or(DEFAULT_SEED);
    let tag = |c: RankMetricCode| c.with_provenance(provenance.clone());
    Ok(match req.kind {
        Kind::Gabidulin => {
            let n = req.need(req.n, "n")?;
            Construction::Code(tag(gabidulin(tower, n, req.need(req.k, "k")?, None)?))
        }
        Kind::Pseudoregulus => {
            let system = pseudoregulus(tower, req.need(req.k, "k")?)?;
            Construction::System { system, maximal: Some(true) }
        }
        Kind::SubfieldScattered => {
            let (e, k) = (req.need(req.e, "e")?, req.need(req.k, "k")?);
            let target = match req.n {
                Some(n) if n % e as usize == 0 => n / e as usize,
                Some(n) => return Err(Error::Precondition(format!("n = {n} is not a multiple of e = {e}"))),
                None => k * req.m as usize / (2 * e as usize),
            };
            Construction::Code(tag(subfield_scattered(tower, e, k, target, seed)?.1))
        }
        Kind::DualTwoWeight => {
            let (e, k, n) = (req.need(req.e, "e")?, req.need(req.k, "k")?, req.need(req.n, "n")?);
            Construction::Code(tag(dual_two_weight(tower, e, k, n, seed)?))
        }
        Kind::RemarkExample => Construction::System { system: remark_example(tower)?, maximal: None },
        Kind::ScatteredSearch => {
            let (k, e) = (req.need(req.k, "k")?, req.e.unwrap_or(1));
            let target = match req.n {
                Some(n) => n,
                None => k * req.m as usize / (2 * e as usize),
            };
            let restarts = req.restarts.unwrap_or(DEFAULT_RESTARTS);
            match scattered_search(tower, k, e, target, seed, restarts)? {
                Some(found) => Construction::System {
                    system: QSystem::new(tower.clone(), k, lift_level(tower, &found.subspace)?)?,
                    maximal: found.maximal,
                },
                None => Construction::NotFound,
            }
        }
        Kind::ExistenceFamily => {
            let (k, d) = (req.need(req.k, "k")?, req.need(req.d, "d")?);
            Construction::Family(existence_family(tower, k, d, seed)?.into_iter().map(tag).collect())
        }
    })
}

impl Construction {
    /// Code file, array of code files, or system file, with the request embedded.
    pub fn to_json(&self, req: &ConstructionRequest) -> Result<String> {
        let value = match self {
            Construction::Code(c) => serde_json::to_value(c.to_file())?,
            Construction::Family(cs) => serde_json::to_value(cs.iter().map(|c| c.to_file()).collect::<Vec<_>>())?,
            Construction::System { system, maximal } => {
                let mut f = system.to_file();
                f.request = Some(serde_json::to_value(req)?);
                f.maximal = *maximal;
                serde_json::to_value(f)?
            }
            Construction::NotFound => serde_json::json!({ "found": false, "request": req }),
        };
        Ok(serde_json::to_string_pretty(&value)?)
    }
}
