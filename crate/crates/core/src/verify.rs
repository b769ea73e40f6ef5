//! Executable checks of the two-weight classification results.
//!
//! Each checker returns a [`Verdict`]. A verdict whose hypotheses hold but
//! whose conclusion fails is a counterexample and carries the complete
//! instance (tower, generator, puncturing matrix) so it can be replayed.
//! Conclusions that need q >= m are marked conditional; when q < m they are
//! still computed but a failure is only a warning.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::code::RankMetricCode;
use crate::construct::{self, derive_seed, Construction, ConstructionRequest, Kind};
use crate::duality::DualityContext;
use crate::error::{Error, Result};
use crate::field::{Fe, FieldTower};
use crate::linalg::{fqm_span, MatF, Subspace};
use crate::system::QSystem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    /// Depends on q >= m.
    pub conditional: bool,
}

/// Deterministic work counters (no wall-clock time, so reports are
/// reproducible byte for byte).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub instances: u64,
    pub cases: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem_id: String,
    pub instance: String,
    pub hypotheses_met: bool,
    pub failed_hypotheses: Vec<String>,
    pub checks: Vec<Check>,
    /// Only meaningful when `hypotheses_met`.
    pub conclusion_holds: bool,
    pub warnings: Vec<String>,
    pub payload: Value,
    pub stats: Stats,
}

impl Verdict {
    pub fn is_counterexample(&self) -> bool {
        self.hypotheses_met && !self.conclusion_holds
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.holds)
    }
}

pub const ANTIPODAL: &str = "antipodal_two_weight";
pub const CLASSIFICATION: &str = "two_weight_classification";
pub const MINSIZE: &str = "linear_set_minimum_size";
pub const PUNCTURE: &str = "puncture_of_maximally_scattered_dual";
pub const GABIDULIN: &str = "gabidulin_mrd";
pub const WEIGHT_DUAL: &str = "weight_dual_identity";
pub const STRICTLY_LINEAR: &str = "strictly_linear_even_weights";
pub const DUAL_TWO_WEIGHT: &str = "dual_of_scattered_two_weight";
pub const EXISTENCE: &str = "two_weight_existence";
pub const PSEUDOREGULUS: &str = "scattered_bound_pseudoregulus";
pub const SEARCH_BOUND: &str = "scattered_bound_search";
pub const IDENTITIES: &str = "linear_set_identities";

struct Judge {
    q_ge_m: bool,
    failed: Vec<String>,
    checks: Vec<Check>,
    warnings: Vec<String>,
}

impl Judge {
    fn new(tower: &FieldTower) -> Self {
        Judge { q_ge_m: tower.q() >= tower.m(), failed: Vec::new(), checks: Vec::new(), warnings: Vec::new() }
    }

    fn hypothesis(&mut self, name: &str, ok: bool) -> bool {
        if !ok {
            self.failed.push(name.to_string());
        }
        ok
    }

    fn check(&mut self, name: &str, holds: bool) {
        self.checks.push(Check { name: name.to_string(), holds, conditional: false });
    }

    fn conditional(&mut self, name: &str, holds: bool) {
        self.checks.push(Check { name: name.to_string(), holds, conditional: true });
    }

    fn finish(mut self, theorem_id: &str, instance: String, payload: Value, stats: Stats) -> Verdict {
        let hypotheses_met = self.failed.is_empty();
        let mut conclusion_holds = hypotheses_met;
        let has_conditional = self.checks.iter().any(|c| c.conditional);
        if hypotheses_met && has_conditional && !self.q_ge_m {
            self.warnings.push("q < m: conclusions that assume q >= m are reported, not judged".into());
        }
        for c in &self.checks {
            if c.holds {
                continue;
            }
            if c.conditional && !self.q_ge_m {
                self.warnings.push(format!("{} fails with q < m", c.name));
            } else {
                conclusion_holds = false;
            }
        }
        Verdict {
            theorem_id: theorem_id.to_string(),
            instance,
            hypotheses_met,
            failed_hypotheses: self.failed,
            checks: self.checks,
            conclusion_holds,
            warnings: self.warnings,
            payload,
            stats,
        }
    }
}

fn label(tower: &FieldTower) -> String {
    format!("q={} m={}", tower.q(), tower.m())
}

fn code_label(code: &RankMetricCode, d: Option<usize>) -> String {
    let t = code.tower();
    match d {
        Some(d) => format!("[{},{},{}] {}", code.n(), code.k(), d, label(t)),
        None => format!("[{},{}] {}", code.n(), code.k(), label(t)),
    }
}

/// F_{q^e}-linear and F_{q^e}-scattered; false when e does not divide m.
fn scattered_over(sys: &QSystem, e: usize) -> Result<bool> {
    if e == 0 || sys.m() % e != 0 {
        return Ok(false);
    }
    match sys.is_scattered(e as u32) {
        Err(Error::NotLinear { .. }) => Ok(false),
        r => r,
    }
}

/// Antipodal two-weight codes: n <= m, k = 2, (n-d) | n, and for q >= m also
/// (n-d) | m with the system F_{q^{n-d}}-scattered.
pub fn check_antipodal(code: &RankMetricCode) -> Result<Verdict> {
    let t = code.tower();
    let (n, k, m) = (code.n(), code.k(), code.m());
    let weights = code.weight_distribution()?.nonzero_weights();
    let mut j = Judge::new(t);
    j.hypothesis("nondegenerate", code.is_nondegenerate());
    let two = j.hypothesis("two-weight", weights.len() == 2);
    j.hypothesis("antipodal", weights.contains(&n));
    let d = weights.first().copied();
    let mut payload = json!({ "code": code.to_file(), "weights": weights });
    if !j.failed.is_empty() {
        return Ok(j.finish(ANTIPODAL, code_label(code, d), payload, Stats { instances: 1, cases: 0 }));
    }
    let d = weights[0];
    let g = n - d;
    j.check("n <= m", n <= m);
    j.check("k = 2", k == 2);
    j.check("(n-d) | n", n % g == 0);
    j.check("larger weight = min(m,n)", two && weights[1] == m.min(n));
    j.conditional("(n-d) | m", m % g == 0);
    let sys = QSystem::from_code(code)?;
    j.conditional("system is F_(q^(n-d))-scattered", scattered_over(&sys, g)?);
    payload["n_minus_d"] = json!(g);
    payload["ell"] = if n % g == 0 { json!(n / g) } else { Value::Null };
    Ok(j.finish(ANTIPODAL, code_label(code, Some(d)), payload, Stats { instances: 1, cases: 0 }))
}

/// Nondegenerate two-weight codes; antipodal inputs are routed to
/// [`check_antipodal`]. Otherwise (m-d) | m, (m-d) | n, km/2 <= n <= km-(m-d),
/// and U^⊥' is F_{q^{m-d}}-scattered.
pub fn classify_two_weight(code: &RankMetricCode) -> Result<Verdict> {
    let t = code.tower();
    let (n, k, m) = (code.n(), code.k(), code.m());
    let weights = code.weight_distribution()?.nonzero_weights();
    let mut j = Judge::new(t);
    j.hypothesis("nondegenerate", code.is_nondegenerate());
    j.hypothesis("two-weight", weights.len() == 2);
    let d = weights.first().copied();
    let mut payload = json!({ "code": code.to_file(), "weights": weights });
    if !j.failed.is_empty() {
        return Ok(j.finish(CLASSIFICATION, code_label(code, d), payload, Stats { instances: 1, cases: 0 }));
    }
    if weights.contains(&n) {
        let mut v = check_antipodal(code)?;
        v.warnings.insert(0, "antipodal: routed to the antipodal classification".into());
        return Ok(v);
    }
    let d = weights[0];
    let e = m - d;
    j.check("larger weight = min(m,n)", weights[1] == m.min(n));
    j.conditional("(m-d) | m", m % e == 0);
    j.conditional("(m-d) | n", n % e == 0);
    j.conditional("n >= mk/2", 2 * n >= m * k);
    j.conditional("km/(2(m-d)) <= n/(m-d)", k * m <= 2 * n);
    j.conditional("n/(m-d) <= mk/(m-d) - 1", n + e <= m * k);
    let sys = QSystem::from_code(code)?;
    let ctx = DualityContext::new(t.clone(), k)?;
    let dual = QSystem::new(t.clone(), k, ctx.perp_prime(sys.space())?)?;
    j.conditional("U^⊥' is F_(q^(m-d))-scattered", scattered_over(&dual, e)?);
    payload["m_minus_d"] = json!(e);
    payload["dual_dim"] = json!(dual.n());
    payload["h"] = json!(fqm_span(t, dual.space())?.dim());
    Ok(j.finish(CLASSIFICATION, code_label(code, Some(d)), payload, Stats { instances: 1, cases: 0 }))
}

/// Draws per sample before giving up on the weight-1 hypothesis.
const MINSIZE_DRAWS: usize = 1000;

/// Seeded random rank-n systems in F_{q^m}^2 with a weight-1 point satisfy
/// |L_U| >= q^{n-1} + 1. Rank 1 is excluded.
pub fn check_minsize(tower: &Arc<FieldTower>, n: usize, samples: usize, seed: u64) -> Result<Verdict> {
    let m = tower.m() as usize;
    let q = tower.q() as u64;
    let mut j = Judge::new(tower);
    j.hypothesis("rank n >= 2 (rank-1 systems excluded)", n >= 2);
    j.hypothesis("n <= 2m", n <= 2 * m);
    let instance = format!("PG(1,q^m) rank {n} {}", label(tower));
    if !j.failed.is_empty() {
        return Ok(j.finish(MINSIZE, instance, json!({}), Stats::default()));
    }
    let bound = q.pow(n as u32 - 1) + 1;
    let drawn: Vec<Result<Option<(QSystem, u64, usize)>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            for draw in 1..=MINSIZE_DRAWS {
                let vs: Vec<Vec<Fe>> =
                    (0..n).map(|_| (0..2).map(|_| Fe(rng.gen_range(0..tower.order()))).collect()).collect();
                let sys = QSystem::from_vectors(tower.clone(), 2, &vs)?;
                if sys.n() != n {
                    continue;
                }
                let p = sys.profile()?;
                if p.counts[1] > 0 {
                    return Ok(Some((sys, p.size, draw)));
                }
            }
            Ok(None)
        })
        .collect();
    let mut sizes = Vec::new();
    let mut draws = 0usize;
    let mut failures = Vec::new();
    let mut skipped = 0usize;
    for r in drawn {
        match r? {
            Some((sys, size, d)) => {
                draws += d;
                sizes.push(size);
                if size < bound {
                    failures.push(serde_json::to_value(sys.to_file())?);
                }
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        j.warnings.push(format!("{skipped} samples found no system with a weight-1 point"));
    }
    j.check("|L_U| >= q^(n-1)+1 for every sample", failures.is_empty());
    let payload = json!({
        "bound": bound,
        "min_size": sizes.iter().min(),
        "max_size": sizes.iter().max(),
        "draws": draws,
        "counterexamples": failures,
    });
    let stats = Stats { instances: 1, cases: sizes.len() as u64 };
    Ok(j.finish(MINSIZE, instance, payload, stats))
}

/// Full enumeration of puncturing matrices is used when there are at most
/// this many candidates; otherwise `trials` random matrices are drawn.
pub const PUNCTURE_EXHAUSTIVE_LIMIT: u128 = 1 << 16;

#[derive(Default)]
struct PunctureTally {
    two_weight_extension: u64,
    many_weights: u64,
    dimension_drop: u64,
    violations: Vec<Value>,
}

/// For C nondegenerate with d = m - 1 and U^⊥' maximally scattered, every
/// puncture C·A (A over F_q of full column rank n' < n) that keeps dimension k
/// is two-weight with U'^⊥' F_{q^e}-scattered for some e > 1, or has more
/// than three nonzero weights.
pub fn check_puncture_theorem(code: &RankMetricCode, trials: usize, seed: u64) -> Result<Verdict> {
    let t = code.tower();
    let (n, k, m) = (code.n(), code.k(), code.m());
    let mut j = Judge::new(t);
    let instance = code_label(code, code.minimum_distance().ok());
    j.hypothesis("nondegenerate", code.is_nondegenerate());
    j.hypothesis("d = m - 1", code.minimum_distance()? + 1 == m);
    let ctx = DualityContext::new(t.clone(), k)?;
    let sys = QSystem::from_code(code)?;
    let dual = QSystem::new(t.clone(), k, ctx.perp_prime(sys.space())?)?;
    let maximal = match scattered_over(&dual, 1)? {
        false => Ok(false),
        true => dual.is_maximally_scattered(),
    };
    match maximal {
        Ok(ok) => {
            j.hypothesis("U^⊥' maximally scattered", ok);
        }
        Err(Error::BudgetExceeded { .. }) => {
            j.hypothesis("U^⊥' maximally scattered (not certified within the budget)", false);
        }
        Err(err) => return Err(err),
    }
    if !j.failed.is_empty() {
        return Ok(j.finish(PUNCTURE, instance, json!({ "code": code.to_file() }), Stats { instances: 1, cases: 0 }));
    }

    let q = t.q() as u128;
    let candidates: u128 = (k..n).map(|np| q.saturating_pow((n * np) as u32)).fold(0u128, |a, b| a.saturating_add(b));
    let exhaustive = candidates <= PUNCTURE_EXHAUSTIVE_LIMIT;
    let mut tally = PunctureTally::default();
    let mut cases = 0u64;
    if exhaustive {
        for np in k..n {
            let total = q.pow((n * np) as u32) as u64;
            for idx in 0..total {
                let a = matrix_from_index(t, n, np, idx)?;
                if a.rank(t) == np {
                    cases += 1;
                    classify_puncture(code, &ctx, &a, &mut tally)?;
                }
            }
        }
    } else if n > k {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while (cases as usize) < trials {
            let np = rng.gen_range(k..n);
            let data: Vec<Fe> = (0..n * np).map(|_| t.subfield_element(1, rng.gen_range(0..t.q_pow(1)))).collect();
            let a = MatF::new(t, 1, n, np, data)?;
            if a.rank(t) == np {
                cases += 1;
                classify_puncture(code, &ctx, &a, &mut tally)?;
            }
        }
    }
    if cases == 0 {
        j.warnings.push(format!("no puncture with k <= n' < n = {n} exists; the statement holds vacuously"));
    }
    j.conditional("every dimension-k puncture lies in an allowed branch", tally.violations.is_empty());
    let payload = json!({
        "code": code.to_file(),
        "mode": if exhaustive { "exhaustive" } else { "sampled" },
        "two_weight_extension": tally.two_weight_extension,
        "more_than_three_weights": tally.many_weights,
        "excluded_dimension_drop": tally.dimension_drop,
        "counterexamples": tally.violations,
    });
    Ok(j.finish(PUNCTURE, instance, payload, Stats { instances: 1, cases }))
}

fn matrix_from_index(t: &FieldTower, rows: usize, cols: usize, mut idx: u64) -> Result<MatF> {
    let q = t.q_pow(1);
    let mut data = vec![Fe::ZERO; rows * cols];
    for x in data.iter_mut().rev() {
        *x = t.subfield_element(1, idx % q);
        idx /= q;
    }
    MatF::new(t, 1, rows, cols, data)
}

fn classify_puncture(code: &RankMetricCode, ctx: &DualityContext, a: &MatF, tally: &mut PunctureTally) -> Result<()> {
    let t = code.tower();
    let m = code.m();
    let punctured = code.puncture(a)?;
    if punctured.k() < code.k() {
        tally.dimension_drop += 1;
        return Ok(());
    }
    let weights = punctured.weight_distribution()?.nonzero_weights();
    if weights.len() > 3 {
        tally.many_weights += 1;
        return Ok(());
    }
    if weights.len() == 2 {
        let e = m - weights[0];
        let sys = QSystem::from_code(&punctured)?;
        let dual = QSystem::new(t.clone(), code.k(), ctx.perp_prime(sys.space())?)?;
        if e > 1 && scattered_over(&dual, e)? {
            tally.two_weight_extension += 1;
            return Ok(());
        }
    }
    tally.violations.push(json!({
        "a": a.to_rows(),
        "punctured": punctured.to_file(),
        "weights": weights,
    }));
    Ok(())
}

fn tower(p: u32, r: u32, m: u32) -> Result<Arc<FieldTower>> {
    Ok(Arc::new(FieldTower::new(p, r, m)?))
}

/// Gabidulin [n, k] code: d = n - k + 1, MRD; for k = 2, n = m also
/// two-weight and antipodal.
pub fn check_gabidulin(tower: &Arc<FieldTower>, n: usize, k: usize) -> Result<Verdict> {
    let code = construct::gabidulin(tower, n, k, None)?;
    let dist = code.weight_distribution()?.clone();
    let d = code.minimum_distance()?;
    let mut j = Judge::new(tower);
    j.check("d = n - k + 1", d + k == n + 1);
    j.check("MRD", code.singleton_check()?.is_mrd);
    if k == 2 && n == tower.m() as usize {
        j.check("two-weight", code.is_two_weight()?);
        j.check("antipodal", code.is_antipodal()?);
    }
    let payload = json!({ "code": code.to_file(), "distribution": dist.counts });
    Ok(j.finish(GABIDULIN, code_label(&code, Some(d)), payload, Stats { instances: 1, cases: 0 }))
}

/// dim(U^⊥' ∩ W^⊥) = dim(U ∩ W) + km - n - m·dim W on random pairs.
pub fn check_weight_dual(tower: &Arc<FieldTower>, k: usize, pairs: usize, seed: u64) -> Result<Verdict> {
    let ctx = DualityContext::new(tower.clone(), k)?;
    let m = tower.m();
    let km = k * m as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let random = |rng: &mut ChaCha8Rng, level: u32, len: usize, gens: usize| {
        let vs: Vec<Vec<Fe>> = (0..gens)
            .map(|_| (0..len).map(|_| tower.subfield_element(level, rng.gen_range(0..tower.q_pow(level)))).collect())
            .collect();
        Subspace::span(tower, level, len, vs)
    };
    for _ in 0..pairs {
        let (gu, gw) = (rng.gen_range(0..=km), rng.gen_range(0..=k));
        let u = random(&mut rng, 1, km, gu)?;
        let w = random(&mut rng, m, k, gw)?;
        let c = ctx.check_weight_dual(&u, &w)?;
        if !c.holds {
            failures.push(json!({ "u": u.to_record(tower)?, "w": w.to_record(tower)?, "lhs": c.lhs, "rhs": c.rhs }));
        }
    }
    let mut j = Judge::new(tower);
    j.check("identity holds for every pair", failures.is_empty());
    let instance = format!("k={k} {}", label(tower));
    let payload = json!({ "pairs": pairs, "counterexamples": failures });
    Ok(j.finish(WEIGHT_DUAL, instance, payload, Stats { instances: 1, cases: pairs as u64 }))
}

/// The strictly F_q-linear subspace of F_{q^16}^2 with point weights {0, 2, 12}.
pub fn check_strictly_linear(tower: &Arc<FieldTower>) -> Result<Verdict> {
    let sys = construct::remark_example(tower)?;
    let profile = sys.profile()?;
    let mut j = Judge::new(tower);
    j.check("dim U = 14", sys.n() == 14);
    j.check("point weights are {0, 2, 12}", profile.weights() == [0, 2, 12]);
    let linear: Vec<u32> = tower.divisors().into_iter().filter(|&e| e > 1 && sys.restrict(e).is_ok()).collect();
    j.check("not F_(q^e)-linear for any e > 1", linear.is_empty());
    let payload = json!({ "profile": profile, "linear_over": linear });
    Ok(j.finish(STRICTLY_LINEAR, label(tower), payload, Stats { instances: 1, cases: 0 }))
}

/// Every geometric dual of a spanning F_{q^e}-scattered subspace, over all
/// e | m, e < m and admissible dimensions, has weights exactly {m-e, m}, and
/// is MRD exactly when km = (km-n)(e+1).
pub fn check_dual_two_weight(tower: &Arc<FieldTower>, k: usize, seed: u64) -> Result<Verdict> {
    let m = tower.m() as usize;
    let mut j = Judge::new(tower);
    let mut outcomes = Vec::new();
    let mut all = true;
    let mut mrd_law = true;
    let mut job = 0u64;
    for e in tower.divisors().into_iter().filter(|&e| (e as usize) < m) {
        let eu = e as usize;
        for t in k..=k * m / (2 * eu) {
            job += 1;
            let n = t * eu;
            let code = match construct::dual_two_weight(tower, e, k, n, derive_seed(seed, job)) {
                Ok(c) => c,
                Err(err @ Error::Certification(_)) => {
                    all = false;
                    outcomes.push(json!({ "e": e, "n": n, "error": err.to_string() }));
                    continue;
                }
                Err(err) => return Err(err),
            };
            let weights = code.weight_distribution()?.nonzero_weights();
            let ok = weights == [m - eu, m] && code.is_nondegenerate();
            all &= ok;
            let mrd = code.singleton_check()?.is_mrd;
            mrd_law &= mrd == (k * m == (k * m - n) * (eu + 1));
            outcomes.push(json!({ "e": e, "n": n, "length": code.n(), "weights": weights, "mrd": mrd, "holds": ok }));
        }
    }
    j.check("weights are exactly {m-e, m} and the code is nondegenerate", all);
    j.check("MRD exactly when km = (km-n)(e+1)", mrd_law);
    let cases = outcomes.len() as u64;
    let payload = json!({ "outcomes": outcomes });
    Ok(j.finish(DUAL_TWO_WEIGHT, format!("k={k} {}", label(tower)), payload, Stats { instances: cases, cases }))
}

/// Existence family for (k, d) with each member classified. Returns the
/// existence verdict followed by one classification verdict per code.
pub fn check_existence(tower: &Arc<FieldTower>, k: usize, d: usize, seed: u64) -> Result<Vec<Verdict>> {
    let m = tower.m() as usize;
    let e = m - d.min(m);
    let codes = construct::existence_family(tower, k, d, seed)?;
    let expected: Vec<usize> = (1..=m * k / (2 * e)).rev().map(|t| k * m - t * e).collect();
    let lengths: Vec<usize> = codes.iter().map(|c| c.n()).collect();
    let mut j = Judge::new(tower);
    j.check("one code for every admissible length", lengths == expected);
    let mut ok = true;
    for c in &codes {
        ok &= c.is_nondegenerate() && c.is_two_weight()? && c.minimum_distance()? == d;
    }
    j.check("every code is nondegenerate two-weight with minimum distance d", ok);
    let payload = json!({ "lengths": lengths, "codes": codes.iter().map(|c| c.to_file()).collect::<Vec<_>>() });
    let instance = format!("k={k} d={d} {}", label(tower));
    let n = codes.len() as u64;
    let mut out = vec![j.finish(EXISTENCE, instance, payload, Stats { instances: n, cases: n })];
    for c in &codes {
        out.push(classify_two_weight(c)?);
    }
    Ok(out)
}

/// Pseudoregulus-type subspace: dimension km/2 and scattered.
pub fn check_pseudoregulus(tower: &Arc<FieldTower>, k: usize) -> Result<Verdict> {
    let sys = construct::pseudoregulus(tower, k)?;
    let mut j = Judge::new(tower);
    j.check("dim = km/2", 2 * sys.n() == k * tower.m() as usize);
    j.check("scattered", scattered_over(&sys, 1)?);
    let payload = json!({ "system": sys.to_file() });
    Ok(j.finish(PSEUDOREGULUS, format!("k={k} {}", label(tower)), payload, Stats { instances: 1, cases: 0 }))
}

/// `runs` single-restart searches alternating between the bound km/(2e)
/// and one above it; no run may return a subspace above the bound.
pub fn check_search_bound(tower: &Arc<FieldTower>, k: usize, e: u32, runs: usize, seed: u64) -> Result<Verdict> {
    let bound = k * tower.m() as usize / (2 * e as usize);
    let results: Vec<Result<Option<usize>>> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let target = bound + i % 2;
            let found = construct::scattered_search(tower, k, e, target, derive_seed(seed, i as u64), 1)?;
            Ok(found.map(|f| f.subspace.dim()))
        })
        .collect();
    let mut found = 0u64;
    let mut max_dim = 0usize;
    for r in results {
        if let Some(dim) = r? {
            found += 1;
            max_dim = max_dim.max(dim);
        }
    }
    let mut j = Judge::new(tower);
    j.check("no search returns a scattered subspace above km/(2e)", max_dim <= bound);
    let payload = json!({ "e": e, "bound": bound, "runs": runs, "found": found, "max_dim": max_dim });
    let instance = format!("k={k} e={e} {}", label(tower));
    Ok(j.finish(SEARCH_BOUND, instance, payload, Stats { instances: found, cases: runs as u64 }))
}

/// One unit of a verification suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Job {
    Gabidulin { p: u32, r: u32, m: u32, n: usize, k: usize },
    WeightDual { p: u32, r: u32, m: u32, k: usize, pairs: usize },
    StrictlyLinear { p: u32, r: u32 },
    DualTwoWeight { p: u32, r: u32, m: u32, k: usize },
    Existence { p: u32, r: u32, m: u32, k: usize, d: usize },
    /// Classify every code produced by a construction request.
    Classify { request: ConstructionRequest },
    Pseudoregulus { p: u32, r: u32, m: u32, k: usize },
    SearchBound { p: u32, r: u32, m: u32, k: usize, e: u32, runs: usize },
    Minsize { p: u32, r: u32, m: u32, n: usize, samples: usize },
    /// The code whose system is the dual of the pseudoregulus-type subspace.
    Puncture { p: u32, r: u32, m: u32, k: usize, trials: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub jobs: Vec<Job>,
}

impl SuiteConfig {
    pub fn empty(seed: u64) -> Self {
        SuiteConfig { seed, jobs: Vec::new() }
    }

    /// The acceptance grid.
    pub fn default_suite(seed: u64) -> Self {
        use Job::*;
        let mut jobs = vec![Gabidulin { p: 2, r: 1, m: 4, n: 4, k: 2 }];
        for (p, m, k) in [(2, 3, 2), (3, 2, 2), (2, 2, 3)] {
            jobs.push(WeightDual { p, r: 1, m, k, pairs: 500 });
        }
        jobs.push(StrictlyLinear { p: 2, r: 1 });
        for (p, r, m, k) in [
            (2, 1, 2, 2),
            (2, 1, 2, 3),
            (2, 1, 2, 4),
            (2, 1, 3, 2),
            (2, 1, 4, 2),
            (2, 1, 4, 4),
            (2, 1, 6, 2),
            (2, 1, 8, 2),
            (3, 1, 2, 2),
            (3, 1, 2, 3),
            (3, 1, 2, 4),
            (3, 1, 3, 2),
            (3, 1, 4, 2),
            (2, 2, 2, 2),
            (5, 1, 2, 2),
        ] {
            jobs.push(DualTwoWeight { p, r, m, k });
        }
        for (p, m, k, d) in [(3, 4, 2, 2), (2, 2, 2, 1), (2, 4, 2, 2), (2, 6, 2, 3), (2, 6, 2, 4), (2, 2, 3, 1)] {
            jobs.push(Existence { p, r: 1, m, k, d });
        }
        for (p, r, m, e, k, n) in [
            (3, 1, 2, 1, 2, 2),
            (3, 1, 3, 1, 2, 2),
            (3, 1, 3, 1, 2, 3),
            (2, 2, 2, 1, 2, 2),
            (2, 2, 4, 1, 2, 4),
            (2, 2, 4, 2, 2, 4),
            (5, 1, 4, 1, 2, 3),
            (5, 1, 4, 2, 2, 4),
            (3, 1, 2, 1, 4, 4),
            (2, 1, 4, 1, 2, 4),
        ] {
            let mut req = ConstructionRequest::new(Kind::SubfieldScattered, p, r, m);
            (req.e, req.k, req.n) = (Some(e), Some(k), Some(n));
            jobs.push(Classify { request: req });
        }
        for (p, m) in [(2, 2), (2, 4), (3, 2)] {
            for k in [2, 4] {
                jobs.push(Pseudoregulus { p, r: 1, m, k });
            }
        }
        for (p, m, k, e) in [(2, 2, 3, 1), (2, 3, 2, 1), (3, 2, 3, 1), (2, 4, 2, 2)] {
            jobs.push(SearchBound { p, r: 1, m, k, e, runs: 250 });
        }
        jobs.push(Minsize { p: 2, r: 1, m: 4, n: 3, samples: 100 });
        jobs.push(Puncture { p: 2, r: 1, m: 2, k: 2, trials: 0 });
        SuiteConfig { seed, jobs }
    }
}

fn run_job(job: &Job, seed: u64) -> Result<Vec<Verdict>> {
    Ok(match job {
        Job::Gabidulin { p, r, m, n, k } => vec![check_gabidulin(&tower(*p, *r, *m)?, *n, *k)?],
        Job::WeightDual { p, r, m, k, pairs } => vec![check_weight_dual(&tower(*p, *r, *m)?, *k, *pairs, seed)?],
        Job::StrictlyLinear { p, r } => vec![check_strictly_linear(&tower(*p, *r, 16)?)?],
        Job::DualTwoWeight { p, r, m, k } => vec![check_dual_two_weight(&tower(*p, *r, *m)?, *k, seed)?],
        Job::Existence { p, r, m, k, d } => check_existence(&tower(*p, *r, *m)?, *k, *d, seed)?,
        Job::Classify { request } => {
            let mut req = request.clone();
            req.seed.get_or_insert(seed);
            match construct::run(&req)? {
                Construction::Code(c) => vec![classify_two_weight(&c)?],
                Construction::Family(cs) => cs.iter().map(classify_two_weight).collect::<Result<_>>()?,
                _ => return Err(Error::Precondition(format!("{} does not produce codes", req.kind))),
            }
        }
        Job::Pseudoregulus { p, r, m, k } => vec![check_pseudoregulus(&tower(*p, *r, *m)?, *k)?],
        Job::SearchBound { p, r, m, k, e, runs } => {
            vec![check_search_bound(&tower(*p, *r, *m)?, *k, *e, *runs, seed)?]
        }
        Job::Minsize { p, r, m, n, samples } => vec![check_minsize(&tower(*p, *r, *m)?, *n, *samples, seed)?],
        Job::Puncture { p, r, m, k, trials } => {
            let t = tower(*p, *r, *m)?;
            let w = construct::pseudoregulus_at(&t, *k, 1)?;
            let ctx = DualityContext::new(t.clone(), *k)?;
            let code = QSystem::new(t.clone(), *k, ctx.perp_prime(&w)?)?.to_code()?;
            vec![check_puncture_theorem(&code, *trials, seed)?]
        }
    })
}

fn job_name(job: &Job) -> String {
    serde_json::to_value(job)
        .ok()
        .and_then(|v| v.get("check").and_then(|c| c.as_str()).map(str::to_string))
        .unwrap_or_default()
}

/// A job that failed with an error. Self-check and identity failures are
/// counterexamples; anything else means the job's hypotheses could not be set up.
fn error_verdict(job: &Job, err: &Error) -> Verdict {
    let judged = matches!(err, Error::Certification(_) | Error::Invariant(_));
    Verdict {
        theorem_id: job_name(job),
        instance: serde_json::to_string(job).unwrap_or_default(),
        hypotheses_met: judged,
        failed_hypotheses: if judged { Vec::new() } else { vec![err.to_string()] },
        checks: Vec::new(),
        conclusion_holds: false,
        warnings: Vec::new(),
        payload: json!({ "error": err.to_string(), "job": job }),
        stats: Stats::default(),
    }
}

/// Runs all jobs (in parallel, merged in job order) and, for a non-empty
/// suite, appends a verdict that no linear-set identity failed along the way.
pub fn run_suite(config: &SuiteConfig) -> Vec<Verdict> {
    let per_job: Vec<(Vec<Verdict>, bool)> = config
        .jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| match run_job(job, derive_seed(config.seed, i as u64)) {
            Ok(v) => (v, false),
            Err(err) => {
                let identity = matches!(err, Error::Invariant(_));
                (vec![error_verdict(job, &err)], identity)
            }
        })
        .collect();
    if per_job.is_empty() {
        return Vec::new();
    }
    let identity_failures = per_job.iter().filter(|(_, bad)| *bad).count();
    let mut report: Vec<Verdict> = per_job.into_iter().flat_map(|(v, _)| v).collect();
    let mut j = Judge { q_ge_m: true, failed: Vec::new(), checks: Vec::new(), warnings: Vec::new() };
    j.check("no profile violated the linear-set identities", identity_failures == 0);
    let payload = json!({ "jobs_with_violations": identity_failures });
    let stats = Stats { instances: config.jobs.len() as u64, cases: 0 };
    report.push(j.finish(IDENTITIES, "suite".into(), payload, stats));
    report
}

pub fn report_json(report: &[Verdict]) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// 1 if any verdict is a counterexample, else 0.
pub fn exit_code(report: &[Verdict]) -> i32 {
    i32::from(report.iter().any(Verdict::is_counterexample))
}
