//! Check-by-check verification at a pair (N, p), producing [`VerificationReport`]s.
//!
//! Ideal-dependent checks run at the least precision M at which the quotients they read are
//! exact, then again at M+1 and with five more Hecke generators. A check FAILs only when an
//! asserted equality is refuted at certified precision.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{merel_log, merel_valuation, padic_log, primes_upto, Layer};
use crate::eisenstein::{eisenstein_recursion, Eisen, Localized, Quantity, Spaces};
use crate::error::{Error, Result};
use crate::group_ring::{graded_jadic, zeta_element, GroupRing, GroupRingElt};
use crate::hecke::{hecke_prime_family, Heilbronn};
use crate::k2::{
    k_model, residue, steinberg_pair, steinberg_relation, survey_fixture, survey_hecke_mode,
    survey_identity, GenericTarget, IdentityFixture, IdentitySurvey, Membership, RelationSpan, SpanMode,
};
use crate::linalg::{cokernel_invariants, left_kernel, matmul, smith, span_invariants, Howell, Mat};
use crate::modsym::{degeneracy, genus, LevelDescriptor, ManinSpace, Model, Sign};
use crate::zq::ResidueRing;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Highest n for which T_n·x₀ is compared with the formal Eisenstein series.
pub const Q_EXPANSION_BOUND: u64 = 30;

/// Extra Hecke generators in the Sturm robustness re-run.
pub const STURM_EXTRA: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Mazur,
    Hida,
    EisensteinQuotient,
    Winding,
    Bridge,
    SharifiShadows,
}

impl CheckId {
    pub const ALL: [CheckId; 6] = [
        CheckId::Mazur,
        CheckId::Hida,
        CheckId::EisensteinQuotient,
        CheckId::Winding,
        CheckId::Bridge,
        CheckId::SharifiShadows,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckId::Mazur => "mazur",
            CheckId::Hida => "hida",
            CheckId::EisensteinQuotient => "eisenstein_quotient",
            CheckId::Winding => "winding",
            CheckId::Bridge => "bridge",
            CheckId::SharifiShadows => "sharifi_shadows",
        }
    }

    pub fn anchor(&self) -> &'static str {
        match self {
            CheckId::Mazur => "sending ξ([a]) to a ⊗ 1",
            CheckId::Hida => "The kernel of the homomorphism H̃_{Γ₁} → H̃_{Γ₂} is J_{Γ₁→Γ₂}·H̃_{Γ₁}",
            CheckId::EisensteinQuotient => "Λ⁽ᵖ⁾/(ζ⁽ᵖ⁾) ≅ T̃⁽ᵖ⁾/Ĩ₀",
            CheckId::Winding => "Ĩ₀/Ĩ₀² ≅ H̃₊⁽ᵖ⁾/Ĩ₀·H̃₊⁽ᵖ⁾",
            CheckId::Bridge => "H₊⁽ᵖ⁾/(I₀+J)·H₊⁽ᵖ⁾ ≅ I·H₊/I²·H₊",
            CheckId::SharifiShadows => "∂′ is the residue symbol",
        }
    }

    fn tag(&self) -> u64 {
        *self as u64 + 1
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "mazur" => CheckId::Mazur,
            "hida" => CheckId::Hida,
            "eisenstein_quotient" | "eisenstein" | "quotient" => CheckId::EisensteinQuotient,
            "winding" => CheckId::Winding,
            "bridge" | "bridge_and_thm18" => CheckId::Bridge,
            "sharifi_shadows" | "sharifi" => CheckId::SharifiShadows,
            _ => return Err(Error::Parse(format!("unknown check `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: CheckId,
    #[serde(rename = "N")]
    pub n: u64,
    pub p: u64,
    pub t: u32,
    pub s: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub status: Status,
    pub invariants: Vec<i64>,
    pub v: u32,
    pub merel_log: u64,
    pub timings_ms: u64,
    pub seed: u64,
    pub version: String,
    pub anchor: String,
    pub detail: BTreeMap<String, String>,
}

impl VerificationReport {
    /// The report without its wall time, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        VerificationReport { timings_ms: 0, ..self.clone() }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (N={}, p={}, t={}, s={}, M={}): {}", self.check, self.n, self.p, self.t, self.s, self.m, self.status)?;
        writeln!(f, "  statement: {}", self.anchor)?;
        writeln!(f, "  invariants: {:?}", self.invariants)?;
        writeln!(f, "  v = {}, merel_log = {}", self.v, self.merel_log)?;
        for (k, v) in &self.detail {
            writeln!(f, "  {k}: {v}")?;
        }
        write!(f, "  {} ms, seed {}, version {}", self.timings_ms, self.seed, self.version)
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    /// Re-run at M+1 and with extra Hecke generators.
    pub robustness: bool,
    /// Random probes per space for operator identities.
    pub probes: usize,
    /// Replaces the bundled ℓ = 5 identity in the equivalence check.
    pub fixture: Option<IdentityFixture>,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 20_240_601, robustness: true, probes: 100, fixture: None }
    }
}

fn rng_for(seed: u64, check: CheckId, n: u64, p: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (n << 32) ^ (p << 12) ^ check.tag())
}

/// Measured outcome of one run of a check.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Outcome {
    status: Status,
    invariants: Vec<i64>,
    detail: BTreeMap<String, String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { status: Status::Pass, invariants: vec![], detail: BTreeMap::new() }
    }

    fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.detail.insert(key.into(), value.to_string());
    }

    /// An exact comparison: false refutes the statement.
    fn check(&mut self, key: &str, ok: bool) {
        self.note(key, ok);
        if !ok {
            self.status = Status::Fail;
        }
    }

    fn inconclusive(&mut self, key: &str, why: impl fmt::Display) {
        self.note(key, why);
        self.status = self.status.worst(Status::Inconclusive);
    }

    fn stable_against(&self, other: &Outcome) -> bool {
        self.status == other.status && self.invariants == other.invariants
    }
}

fn exps(inv: &crate::linalg::ModuleInvariants) -> String {
    format!("{:?}", inv.exps)
}

// ---------------------------------------------------------------------------
// Eisenstein-component checks sharing one cache of precomputed runs.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EisenCheck {
    Quotient,
    Winding,
    Bridge,
}

impl EisenCheck {
    const ALL: [EisenCheck; 3] = [EisenCheck::Quotient, EisenCheck::Winding, EisenCheck::Bridge];

    fn needs(&self) -> &'static [Quantity] {
        match self {
            EisenCheck::Quotient => &[Quantity::Tilde, Quantity::Abs, Quantity::Lambda],
            EisenCheck::Winding => &[Quantity::Tilde, Quantity::TildeSquare, Quantity::Abs, Quantity::Lambda],
            EisenCheck::Bridge => &[Quantity::AbsBridge, Quantity::Zero, Quantity::ZeroSquare],
        }
    }

    fn eval(&self, e: &Eisen) -> Result<Outcome> {
        match self {
            EisenCheck::Quotient => quotient_outcome(e),
            EisenCheck::Winding => Ok(winding_outcome(e)),
            EisenCheck::Bridge => Ok(bridge_outcome(e)),
        }
    }
}

fn quotient_outcome(e: &Eisen) -> Result<Outcome> {
    let mut out = Outcome::new();
    let layer = &e.spaces.layer;
    let quotient = e.tilde.quotient();
    let lz = e.lambda_zeta();
    out.invariants = quotient.exps_i64();
    out.note("tilde_quotient", exps(&quotient));
    out.note("lambda_mod_zeta", exps(&lz));
    out.check("elementary_divisors_match", quotient == lz);
    let (ker, onto) = e.tilde_map();
    out.check("diamond_map_onto", onto);
    out.check("diamond_map_kernel_is_zeta", ker.same_span(&e.zeta_ideal()));
    let lzn = e.lambda_zeta_nu();
    out.note("lambda_mod_zeta_nu", exps(&lzn));
    match e.abs_map() {
        Some((k, onto)) => {
            let aq = e.abs_quotient();
            out.note("absolute_quotient", exps(&aq));
            out.check("absolute_matches_zeta_nu", aq == lzn);
            out.check("absolute_map_onto", onto);
            out.check("absolute_map_kernel_is_zeta_nu", k.same_span(&e.zeta_nu_ideal()));
        }
        None => out.inconclusive("absolute_generator", "no Hecke generator of the absolute part found"),
    }
    out.check("quotients_finite", lz.free_rank(e.spaces.m) == 0 && lzn.free_rank(e.spaces.m) == 0);
    out.check("q_expansion_recursion", eisenstein_recursion(&e.gr, layer, Q_EXPANSION_BOUND));
    out.check("q_expansion_matches_hecke", e.q_expansion_matches(Q_EXPANSION_BOUND)?);
    let n = layer.n();
    let ds: Vec<u64> = [2, 3, 5, 7, n - 1].into_iter().filter(|&d| d < n).collect();
    out.check("diamonds_match_group_ring", e.diamonds_factor(&ds)?);
    out.check("cuspidality_ideal", e.cuspidality_ideal_matches());
    Ok(out)
}

fn winding_outcome(e: &Eisen) -> Outcome {
    let mut out = Outcome::new();
    let q = e.tilde.quotient();
    let sq = e.tilde.square_quotient();
    let graded_exp = sq.order_exp() - q.order_exp();
    out.invariants = e.tilde.graded().exps_i64();
    out.note("graded_order_exp", graded_exp);
    out.note("quotient_order_exp", q.order_exp());
    out.check("graded_order_equals_quotient_order", graded_exp == q.order_exp());
    out.check("locally_principal", e.tilde.ideal_generators(std::slice::from_ref(&e.dg)) == 1);
    out.check("tilde_quotient_is_lambda_mod_zeta", q == e.lambda_zeta());
    if e.u0.is_none() {
        out.inconclusive("absolute_generator", "no Hecke generator of the absolute part found");
    }
    let aq = e.abs_quotient();
    out.note("absolute_quotient", exps(&aq));
    out.check("absolute_quotient_is_lambda_mod_zeta_nu", aq == e.lambda_zeta_nu());
    out
}

fn bridge_outcome(e: &Eisen) -> Outcome {
    let mut out = Outcome::new();
    let left = e.abs_bridge_quotient();
    let right = e.zero.graded();
    out.invariants = right.exps_i64();
    out.note("absolute_mod_I0_plus_J", exps(&left));
    out.note("graded_level_zero", exps(&right));
    out.check("bridge_orders_equal", left.order_exp() == right.order_exp());
    out.check("bridge_divisors_equal", left == right);
    out.check("degeneracy_bijective", e.bridge_bijective());
    out
}

struct Snapshot {
    certified: [bool; 3],
    outcomes: Vec<Result<Outcome>>,
}

/// Eisenstein runs at (M, extra), computed once per pair and shared between checks.
struct PairCache {
    n: u64,
    p: u64,
    snaps: HashMap<(u32, u64), std::result::Result<Snapshot, Error>>,
}

impl PairCache {
    fn new(n: u64, p: u64) -> Self {
        PairCache { n, p, snaps: HashMap::new() }
    }

    fn get(&mut self, m: u32, extra: u64) -> std::result::Result<&Snapshot, Error> {
        let (n, p) = (self.n, self.p);
        let snap = self.snaps.entry((m, extra)).or_insert_with(|| {
            let spaces = Spaces::new(n, p, m)?;
            let e = Eisen::new(&spaces, extra)?;
            let certified = EisenCheck::ALL.map(|c| e.certified_for(c.needs()));
            let outcomes = EisenCheck::ALL.iter().map(|c| c.eval(&e)).collect();
            Ok(Snapshot { certified, outcomes })
        });
        snap.as_ref().map_err(|e| e.clone())
    }

    /// Least certified precision, the base outcome and robustness notes.
    fn run(&mut self, check: EisenCheck, robustness: bool) -> Result<(u32, Outcome)> {
        let idx = EisenCheck::ALL.iter().position(|&c| c == check).unwrap();
        let t = Layer::new(self.n, self.p, None)?.t;
        let mut m = t + 2;
        loop {
            match self.get(m, 0) {
                Err(Error::Precondition(msg)) if msg.starts_with("p^M too large") => {
                    let mut out = Outcome::new();
                    out.inconclusive("precision_guard", format!("no certified precision below M={m}"));
                    return Ok((m - 1, out));
                }
                Err(e) => return Err(e),
                Ok(s) if s.certified[idx] => break,
                Ok(_) => m += 1,
            }
        }
        let mut base = self.get(m, 0)?.outcomes[idx].clone()?;
        if robustness {
            match self.get(m + 1, 0) {
                Ok(s) => {
                    let again = s.outcomes[idx].clone()?;
                    record_stability(&mut base, "precision_stable", &again);
                }
                Err(_) => base.note("precision_stable", format!("unavailable: p^{} exceeds the word-size modulus", m + 1)),
            }
            let again = self.get(m, STURM_EXTRA)?.outcomes[idx].clone()?;
            record_stability(&mut base, "sturm_stable", &again);
        }
        Ok((m, base))
    }
}

fn record_stability(base: &mut Outcome, key: &str, again: &Outcome) {
    let stable = base.stable_against(again);
    base.note(key, stable);
    if !stable {
        if again.status == Status::Fail || base.status == Status::Pass {
            base.status = Status::Fail;
        } else {
            base.status = base.status.worst(again.status);
        }
    }
}

// ---------------------------------------------------------------------------
// Individual procedures.

struct Params {
    layer: Layer,
    s: u32,
    v: u32,
    merel: u64,
}

fn params(n: u64, p: u64, s: Option<u32>) -> Result<Params> {
    let layer = Layer::new(n, p, s)?;
    let s = layer.s;
    Ok(Params { v: merel_valuation(n, p, s)?, merel: merel_log(n, p, s)?, s, layer })
}

fn report(check: CheckId, pr: &Params, m: u32, out: Outcome, start: Instant, seed: u64) -> VerificationReport {
    VerificationReport {
        check,
        n: pr.layer.n(),
        p: pr.layer.p,
        t: pr.layer.t,
        s: pr.s,
        m,
        status: out.status,
        invariants: out.invariants,
        v: pr.v,
        merel_log: pr.merel,
        timings_ms: start.elapsed().as_millis() as u64,
        seed,
        version: VERSION.to_string(),
        anchor: check.anchor().to_string(),
        detail: out.detail,
    }
}

fn mazur_outcome(n: u64, p: u64, m: u32, extra: u64, rng: &mut ChaCha8Rng) -> Result<(bool, Outcome)> {
    let layer = Layer::new(n, p, None)?;
    let t = layer.t;
    let sp = Spaces::level_zero(n, p, m)?;
    let loc = Localized::new(&sp, extra)?;
    let r = loc.ring();
    let iw = &loc.ideal.module;
    let q = loc.quotient();
    let certified = q.exps.iter().all(|&e| e < m);
    let mut out = Outcome::new();
    out.invariants = q.exps_i64();
    out.check("quotient_is_cyclic_of_order_p^t", q.exps == vec![t]);
    let xi: Vec<Vec<u64>> = (1..n as i64).map(|a| Ok(loc.comp.project(&sp.xi_zero(a)?))).collect::<Result<_>>()?;
    let logs: Vec<u64> = (1..n as i64).map(|a| padic_log(&layer.units, a, p, t)).collect::<Result<_>>()?;
    let g = layer.units.g as usize;
    let xg = &xi[g - 1];
    let combo = |lam: &[u64]| -> Vec<u64> {
        let mut acc = vec![0; loc.dim()];
        for (c, x) in lam.iter().zip(&xi) {
            if *c != 0 {
                for (y, &z) in acc.iter_mut().zip(x) {
                    *y = r.add(*y, r.mul(*c, z));
                }
            }
        }
        acc
    };
    let hom = (0..xi.len()).all(|i| {
        let d: Vec<u64> = xi[i].iter().zip(xg).map(|(&a, &b)| r.sub(a, r.mul(logs[i], b))).collect();
        iw.contains(&d)
    });
    out.check("xi_is_log_times_generator", hom);
    let top: Vec<u64> = xg.iter().map(|&x| r.mul(x, r.ppow(t - 1))).collect();
    out.check("xi_surjective", !iw.contains(&top));
    let pt = layer.pt();
    let mut agree = 0;
    let trials = 100;
    for i in 0..trials {
        let mut lam: Vec<u64> = (0..xi.len()).map(|_| rng.gen_range(0..r.q)).collect();
        let sum = |lam: &[u64]| lam.iter().zip(&logs).fold(0, |acc, (&c, &l)| (acc + c % pt * l) % pt);
        if i % 2 == 0 {
            let s = sum(&lam);
            lam[g - 1] = r.sub(lam[g - 1], s);
        }
        let admissible = sum(&lam) == 0;
        if iw.contains(&combo(&lam)) == admissible {
            agree += 1;
        }
    }
    out.note("random_lambda_agreement", format!("{agree}/{trials}"));
    out.check("membership_criterion", agree == trials);
    Ok((certified, out))
}

/// Mazur's description of H₊/I·H₊ through ξ and the membership criterion on random λ.
pub fn verify_mazur(n: u64, p: u64, opts: &Options) -> Result<VerificationReport> {
    let start = Instant::now();
    let pr = params(n, p, None)?;
    let seed = opts.seed;
    let mut rng = rng_for(seed, CheckId::Mazur, n, p);
    let mut m = pr.layer.t + 1;
    let mut base = loop {
        if ResidueRing::new(p, m, n).is_err() {
            let mut out = Outcome::new();
            out.inconclusive("precision_guard", format!("no certified precision below M={m}"));
            return Ok(report(CheckId::Mazur, &pr, m - 1, out, start, seed));
        }
        let (ok, out) = mazur_outcome(n, p, m, 0, &mut rng.clone())?;
        if ok {
            break out;
        }
        m += 1;
    };
    if opts.robustness {
        if ResidueRing::new(p, m + 1, n).is_ok() {
            let again = mazur_outcome(n, p, m + 1, 0, &mut rng.clone())?.1;
            record_stability(&mut base, "precision_stable", &again);
        } else {
            base.note("precision_stable", format!("unavailable: p^{} exceeds the word-size modulus", m + 1));
        }
        let again = mazur_outcome(n, p, m, STURM_EXTRA, &mut rng)?.1;
        record_stability(&mut base, "sturm_stable", &again);
    }
    Ok(report(CheckId::Mazur, &pr, m, base, start, seed))
}

/// Rows spanning the Z_p-kernel of `a` reduced mod p^M, provided `a` has the given rank:
/// the rows of the Smith transform past the pivots.
fn exact_kernel(a: &Mat, r: &ResidueRing, rank: usize) -> Option<Mat> {
    let s = smith(a, r, true, false);
    if s.diag.len() != rank {
        return None;
    }
    let rows = s.u.unwrap().to_rows();
    Some(Mat::from_rows(&rows[rank..], a.rows))
}

fn free_of_rank(rows: &Mat, r: &ResidueRing, rank: usize) -> bool {
    span_invariants(rows, r).exps == vec![r.m; rank]
}

fn hida_outcome(n: u64, p: u64, m: u32) -> Result<Outcome> {
    let sp = Spaces::new(n, p, m)?;
    let r = sp.ring;
    let mut out = Outcome::new();
    if sp.tilde.has_torsion() || sp.zero.has_torsion() {
        out.inconclusive("torsion", "relative homology has torsion at this precision");
        return Ok(out);
    }
    let (d1, d0) = (sp.tilde.dim(), sp.zero.dim());
    let deg = degeneracy(&sp.tilde, &sp.zero)?;
    let dg = sp.tilde.diamond_matrix(sp.layer.units.g as i64)?;
    let jm = dg.sub(&Mat::identity(d1), &r);
    out.check("J_maps_to_zero", matmul(&jm, &deg, &r).is_zero());

    let onto = cokernel_invariants(&deg, &r).is_zero();
    out.check("relative_degeneracy_onto", onto);
    let rel_rank = d1 - d0;
    out.check("relative_kernel_is_JH", free_of_rank(&jm, &r, rel_rank));

    let (g1, g0) = (genus(&sp.tilde.level) as usize, genus(&sp.zero.level) as usize);
    let mut abs_rank = 0;
    match exact_kernel(&sp.tilde.boundary_matrix(), &r, d1 - g1) {
        None => out.inconclusive("absolute", "boundary rank not detected at this precision"),
        Some(h1) => {
            let img = matmul(&h1, &deg, &r);
            if smith(&img, &r, false, false).diag.len() != g0 {
                out.inconclusive("absolute", "degeneracy rank on absolute homology not detected");
            } else {
                abs_rank = g1 - g0;
                let jabs = matmul(&h1, &jm, &r);
                out.check("absolute_kernel_is_JH", free_of_rank(&jabs, &r, abs_rank));
                out.note("genus", format!("{g1} -> {g0}"));
            }
        }
    }

    let same = degeneracy(&sp.zero, &sp.zero)?;
    out.check("trivial_chain_kernel_zero", left_kernel(&same, &r).rows == 0);
    out.invariants = vec![rel_rank as i64, abs_rank as i64];
    out.note("dims", format!("{d1} -> {d0}"));
    Ok(out)
}

/// ∂((T_ℓ − ℓ − ⟨ℓ⟩)·x) = 0 on the C^∞ boundary, and T_ℓ, T_ℓ′, ⟨d⟩ commute, on random x.
fn probe_space(space: &ManinSpace, probes: usize, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
    let r = space.ring;
    let n = space.n();
    let primes: Vec<u64> = primes_upto(13).into_iter().filter(|&l| l != n).collect();
    let fams: Vec<Heilbronn> = primes.iter().map(|&l| hecke_prime_family(space, l)).collect::<Result<_>>()?;
    let bd = space.boundary_matrix();
    let hecke = |i: usize, v: &[u64]| -> Result<Vec<u64>> {
        space.apply_family_vec(v, &fams[i]).map_err(|e| Error::Precondition(format!("Hecke image left the model at {}", e.0)))
    };
    let (mut comm, mut cusp) = (0, 0);
    for _ in 0..probes {
        let v: Vec<u64> = (0..space.dim()).map(|_| rng.gen_range(0..r.q)).collect();
        let i = rng.gen_range(0..primes.len());
        let j = (i + rng.gen_range(1..primes.len())) % primes.len();
        let d = rng.gen_range(2..n) as i64;
        let ab = hecke(i, &hecke(j, &v)?)?;
        let ba = hecke(j, &hecke(i, &v)?)?;
        let ad = hecke(i, &space.diamond_vec(d, &v)?)?;
        let da = space.diamond_vec(d, &hecke(i, &v)?)?;
        comm += (ab == ba && ad == da) as usize;
        let l = primes[i];
        let tv = hecke(i, &v)?;
        let dv = space.diamond_vec(l as i64, &v)?;
        let w: Vec<u64> = (0..v.len()).map(|k| r.sub(r.sub(tv[k], r.mul(l % r.q, v[k])), dv[k])).collect();
        cusp += bd.vec_mul(&w, &r).iter().all(|&x| x == 0) as usize;
    }
    Ok((comm, cusp))
}

/// The kernel of H̃ at Γ₁⁽ᵖ⁾(N) → Γ₀(N) is ([g]−1)·H̃, relative and absolute; with operator probes.
pub fn verify_hida(n: u64, p: u64, opts: &Options) -> Result<VerificationReport> {
    let start = Instant::now();
    let pr = params(n, p, None)?;
    let m = pr.layer.t + 1;
    let mut base = hida_outcome(n, p, m)?;
    if opts.robustness {
        match ResidueRing::new(p, m + 1, n) {
            Ok(_) => {
                let again = hida_outcome(n, p, m + 1)?;
                record_stability(&mut base, "precision_stable", &again);
            }
            Err(_) => base.note("precision_stable", "unavailable"),
        }
        base.note("sturm_stable", "not ideal-dependent");
    }
    if opts.probes > 0 {
        let mut rng = rng_for(opts.seed, CheckId::Hida, n, p);
        let ring = ResidueRing::new(p, m, n)?;
        let levels = [("tilde", LevelDescriptor::gamma1p(&pr.layer)), ("zero", LevelDescriptor::gamma0(n)?)];
        for (name, lev) in levels {
            let space = ManinSpace::new(&lev, ring, Model::Relative, Sign::Plus)?;
            let (comm, cusp) = probe_space(&space, opts.probes, &mut rng)?;
            base.note(&format!("probes_{name}_commute"), format!("{comm}/{}", opts.probes));
            base.note(&format!("probes_{name}_cusp"), format!("{cusp}/{}", opts.probes));
            if comm != opts.probes || cusp != opts.probes {
                base.status = Status::Fail;
            }
        }
    }
    Ok(report(CheckId::Hida, &pr, m, base, start, opts.seed))
}

fn eisen_report(check: CheckId, which: EisenCheck, n: u64, p: u64, opts: &Options, cache: &mut PairCache) -> Result<VerificationReport> {
    let start = Instant::now();
    let pr = params(n, p, None)?;
    let (m, out) = cache.run(which, opts.robustness)?;
    Ok(report(check, &pr, m, out, start, opts.seed))
}

/// T̃/Ĩ₀ ≅ Λ/(ζ) and T/I₀ ≅ Λ/(ζ, ν) via [d] ↦ ⟨d⟩, with the q-expansion cross-checks.
pub fn verify_eisenstein_quotient(n: u64, p: u64, opts: &Options) -> Result<VerificationReport> {
    eisen_report(CheckId::EisensteinQuotient, EisenCheck::Quotient, n, p, opts, &mut PairCache::new(n, p))
}

/// Ĩ₀ is locally principal with |Ĩ₀/Ĩ₀²| = |T̃/Ĩ₀|, and the winding quotients match Λ.
pub fn verify_winding(n: u64, p: u64, opts: &Options) -> Result<VerificationReport> {
    eisen_report(CheckId::Winding, EisenCheck::Winding, n, p, opts, &mut PairCache::new(n, p))
}

/// Value of x in (J + ζ)/(J² + ζ) as a multiple of [g] − 1, if it lies there.
fn j_class(gr: &GroupRing, sub: &Howell, j: &GroupRingElt, x: &GroupRingElt, order: u64) -> Option<u64> {
    let r = gr.ring;
    (0..order).find(|&k| sub.contains(&gr.sub(x, &gr.scale(j, k % r.q)).coeffs))
}

/// The log ⊗ log evaluation of the correction term in J·K̄/J²·K̄.
fn correction_outcome(n: u64, p: u64, s: u32, v: u32, rng: &mut ChaCha8Rng, out: &mut Outcome) -> Result<()> {
    let layer = Layer::new(n, p, Some(s))?;
    let gr = GroupRing::for_layer(&layer, s)?;
    let r = gr.ring;
    let z = zeta_element(n, p, s)?;
    let j = gr.j_gen();
    let j2 = gr.mul(&j, &j);
    let mut rows = gr.mult_matrix(&z).to_rows();
    rows.extend(gr.mult_matrix(&j2).to_rows());
    let sub = Howell::new(&rows, gr.order, &r);
    let pv = p.pow(v);
    let scaled = |k: u64| gr.scale(&j, k % r.q).coeffs;
    let order_ok = sub.contains(&scaled(pv)) && (v == 0 || !sub.contains(&scaled(pv / p)));
    out.check("correction_generator_order_p^v", order_ok);
    let one = gr.one();
    let linear = (0..gr.order).all(|k| j_class(&gr, &sub, &j, &gr.sub(&gr.basis(k), &one), pv) == Some(k as u64 % pv));
    out.check("correction_log_linear", linear);
    let logs: Vec<u64> = (1..n as i64).map(|a| layer.log(a)).collect::<Result<_>>()?;
    let half = r.inv(2).unwrap();
    let g = layer.units.g as usize;
    let functional = |lam: &[u64]| -> u64 {
        let q: u64 = lam.iter().zip(&logs).fold(0, |acc, (&c, &l)| r.add(acc, r.mul(c, r.mul(l, l))));
        r.neg(r.mul(half, q))
    };
    let mut agree = true;
    let mut symmetric = true;
    for _ in 0..50 {
        let mut lam: Vec<u64> = (0..logs.len()).map(|_| rng.gen_range(0..r.q)).collect();
        let total = lam.iter().zip(&logs).fold(0, |acc, (&c, &l)| r.add(acc, r.mul(c, l)));
        lam[g - 1] = r.sub(lam[g - 1], total);
        let mut x = gr.zero();
        for (a, (&c, &l)) in lam.iter().zip(&logs).enumerate() {
            let sigma = gr.sub(&gr.basis(layer.class(a as u64 + 1)), &one);
            x = gr.add(&x, &gr.scale(&sigma, r.mul(r.neg(half), r.mul(c, l))));
        }
        let f = functional(&lam);
        agree &= j_class(&gr, &sub, &j, &x, pv) == Some(f % pv);
        let a = rng.gen_range(1..n as usize);
        let mut moved = lam.clone();
        let c = moved[a - 1];
        moved[a - 1] = 0;
        let b = n as usize - a;
        moved[b - 1] = r.add(moved[b - 1], c);
        symmetric &= functional(&moved) == f;
    }
    out.check("correction_matches_log_log", agree);
    out.check("correction_sign_invariant", symmetric);
    let mut lam = vec![0; logs.len()];
    for (i, &l) in logs.iter().enumerate() {
        if l % p == 0 {
            lam[i] = rng.gen_range(0..r.q);
        }
    }
    let vanish_mod = p.pow(s.min(2));
    out.check("correction_vanishes_on_p_divisible_logs", functional(&lam) % vanish_mod == 0);
    Ok(())
}

fn graded_at(n: u64, p: u64, s: u32, extra: u64) -> Result<crate::linalg::ModuleInvariants> {
    let sp = Spaces::level_zero(n, p, s)?;
    Ok(Localized::new(&sp, extra)?.graded())
}

fn bridge_report(n: u64, p: u64, s: Option<u32>, opts: &Options, cache: &mut PairCache) -> Result<VerificationReport> {
    let start = Instant::now();
    let pr = params(n, p, s)?;
    let s = pr.s;
    let (m, mut out) = cache.run(EisenCheck::Bridge, opts.robustness)?;
    let graded = graded_at(n, p, s, 0)?;
    out.invariants = graded.exps_i64();
    out.note("graded_mod_p^s", exps(&graded));
    out.check("graded_order_is_p^v", graded.order_exp() == pr.v);
    if opts.robustness {
        let again = graded_at(n, p, s, STURM_EXTRA)?;
        out.check("graded_sturm_stable", again == graded);
    }
    let jk = graded_jadic(&k_model(n, p, s)?, 1)?;
    out.note("jk_graded", exps(&jk));
    out.check("jk_graded_order_is_p^v", jk.order_exp() == pr.v);
    let mut rng = rng_for(opts.seed, CheckId::Bridge, n, p);
    correction_outcome(n, p, s, pr.v, &mut rng, &mut out)?;
    let mut mono = true;
    for s2 in 1..s {
        let v2 = merel_valuation(n, p, s2)?;
        mono &= v2 == pr.v.min(s2) && graded_at(n, p, s2, 0)?.order_exp() == v2;
    }
    out.check("monotone_in_s", mono);
    Ok(report(CheckId::Bridge, &pr, m, out, start, opts.seed))
}

/// The bridge isomorphism, |I·H̄₊/I²·H̄₊| = p^v = |J·K̄/J²·K̄|, and the correction functional.
pub fn verify_bridge_and_thm18(n: u64, p: u64, s: u32, opts: &Options) -> Result<VerificationReport> {
    bridge_report(n, p, Some(s), opts, &mut PairCache::new(n, p))
}

fn survey_note(out: &mut Outcome, key: &str, sv: &IdentitySurvey) {
    let refuted = if sv.refuted.is_empty() { String::new() } else { format!(", refuted at v={:?}", sv.refuted) };
    let status = if !sv.refuted.is_empty() {
        "Refuted"
    } else if sv.status == Membership::Verified {
        "Verified"
    } else {
        "Inconclusive"
    };
    out.note(
        key,
        format!("{status} ({} by certificate, {} by window, {} unproved{refuted})", sv.by_certificate, sv.by_window, sv.failed.len()),
    );
}

fn sharifi_outcome(n: u64, p: u64, s: u32, fixture: Option<&IdentityFixture>) -> Result<Outcome> {
    let mut out = Outcome::new();
    let ring = ResidueRing::new(p, s, n)?;
    let layer = Layer::new(n, p, Some(s))?;
    let units = &layer.units;
    let span = RelationSpan::full(n, p, s, SpanMode::Plain)?;
    let pair = |a: i64, b: i64| steinberg_pair(n, a, b, ring);
    let (mut identities, mut members) = (true, true);
    let nn = n as i64;
    for u in 1..nn {
        for v in 1..nn {
            identities &= pair(u, v).add(&pair(v, -u)).is_zero();
            identities &= pair(-u, v) == pair(u, v);
            identities &= pair(u, -u).is_zero();
            if (u + v) % nn != 0 {
                let e = pair(u, v).add(&pair(v, -u - v)).add(&pair(-u - v, u));
                let rel = steinberg_relation(n, u, v, ring)?;
                identities &= e == rel && residue(&e, units)? == 0;
                members &= span.membership(&e) == Membership::Verified;
            }
        }
    }
    out.check("manin_relation_identities", identities);
    if members {
        out.note("manin_relations", "Verified");
    } else {
        out.inconclusive("manin_relations", "Inconclusive");
    }

    let tilde = ManinSpace::new(&LevelDescriptor::gamma1p(&layer), ring, Model::Relative, Sign::Plus)?;
    let mut square = true;
    for u in 1..nn {
        for v in 1..nn {
            if (u + v) % nn == 0 {
                continue;
            }
            let label = tilde.level.label(u, v);
            let mut lhs = 0;
            for (cusp, sign) in tilde.boundary_of_label(label) {
                let l = padic_log(units, units.gpow(cusp as u64) as i64, p, s)?;
                lhs = ring.add(lhs, ring.mul(ring.reduce(sign), l));
            }
            square &= lhs == residue(&pair(u, v), units)?;
        }
    }
    out.check("boundary_is_residue", square);

    let bundled = IdentityFixture::l5();
    let fixture = fixture.unwrap_or(&bundled);
    let required = required_surveys(n, p, s, fixture)?;
    for (key, sv) in &required {
        survey_note(&mut out, key, sv);
    }
    for (key, sv) in &required {
        if !sv.refuted.is_empty() {
            out.status = Status::Fail;
        } else if sv.status != Membership::Verified {
            out.inconclusive(&format!("{key}_status"), "not derivable");
        }
    }
    let l5 = survey_identity(GenericTarget::Hecke(5), n, p, s, &[(2, 5)], true)?;
    survey_note(&mut out, "hecke_l5", &l5);
    let mut counts: Vec<i64> = required.iter().map(|(_, sv)| sv.failed.len() as i64).collect();
    counts.push(l5.failed.len() as i64);
    for l in [2, 3, 5, 7] {
        if l == n {
            continue;
        }
        let sv = survey_hecke_mode(l, n, p, s, SpanMode::ModNorm, &[(1, n as i64), (2, 3)], true)?;
        survey_note(&mut out, &format!("mod_norm_l{l}"), &sv);
    }
    out.invariants = counts;

    // derivations over Z/p^{s+1} reduce to Z/p^s, so every Verified item must survive
    let up = s + 1;
    let upper = ResidueRing::new(p, up, n)?;
    let span_up = RelationSpan::full(n, p, up, SpanMode::Plain)?;
    let mut stable = !members
        || (1..nn).all(|u| {
            (1..nn).filter(|v| (u + v) % nn != 0).all(|v| {
                steinberg_relation(n, u, v, upper).is_ok_and(|e| span_up.membership(&e) == Membership::Verified)
            })
        });
    let again = required_surveys(n, p, up, fixture)?;
    for ((_, a), (_, b)) in required.iter().zip(&again) {
        stable &= a.status != Membership::Verified || b.status == Membership::Verified;
    }
    out.note("precision_stable", stable);
    if !stable && out.status == Status::Pass {
        out.status = Status::Inconclusive;
    }
    Ok(out)
}

fn required_surveys(n: u64, p: u64, s: u32, fixture: &IdentityFixture) -> Result<Vec<(&'static str, IdentitySurvey)>> {
    Ok(vec![
        ("hecke_l2", survey_identity(GenericTarget::Hecke(2), n, p, s, &[(2, 3)], false)?),
        ("hecke_l3", survey_identity(GenericTarget::Hecke(3), n, p, s, &[(3, 3), (6, 3)], false)?),
        ("fixture_equivalence", survey_fixture(fixture, n, p, s, &[(1, 5)], false)?),
    ])
}

/// Symbol-level shadows: ϖ̃ respects the Manin relations, the boundary is the residue symbol,
/// the ℓ = 2, 3 identities and the ℓ = 5 fixture equivalence are derivable.
pub fn verify_sharifi_shadows(n: u64, p: u64, s: u32, opts: &Options) -> Result<VerificationReport> {
    let start = Instant::now();
    let pr = params(n, p, Some(s))?;
    let out = sharifi_outcome(n, p, pr.s, opts.fixture.as_ref())?;
    Ok(report(CheckId::SharifiShadows, &pr, pr.s, out, start, opts.seed))
}

/// One check at (N, p, s); `s` defaults to t and only matters for the bridge and symbol checks.
pub fn verify(check: CheckId, n: u64, p: u64, s: Option<u32>, opts: &Options) -> Result<VerificationReport> {
    let s = match s {
        Some(s) => s,
        None => Layer::new(n, p, None)?.t,
    };
    match check {
        CheckId::Mazur => verify_mazur(n, p, opts),
        CheckId::Hida => verify_hida(n, p, opts),
        CheckId::EisensteinQuotient => verify_eisenstein_quotient(n, p, opts),
        CheckId::Winding => verify_winding(n, p, opts),
        CheckId::Bridge => verify_bridge_and_thm18(n, p, s, opts),
        CheckId::SharifiShadows => verify_sharifi_shadows(n, p, s, opts),
    }
}

/// The listed checks at (N, p) for each s, sharing Eisenstein computations.
pub fn verify_battery(n: u64, p: u64, checks: &[CheckId], ss: &[u32], opts: &Options) -> Result<Vec<VerificationReport>> {
    let mut cache = PairCache::new(n, p);
    let mut out = vec![];
    for &c in checks {
        match c {
            CheckId::Mazur => out.push(verify_mazur(n, p, opts)?),
            CheckId::Hida => out.push(verify_hida(n, p, opts)?),
            CheckId::EisensteinQuotient => out.push(eisen_report(c, EisenCheck::Quotient, n, p, opts, &mut cache)?),
            CheckId::Winding => out.push(eisen_report(c, EisenCheck::Winding, n, p, opts, &mut cache)?),
            CheckId::Bridge => {
                for &s in ss {
                    out.push(bridge_report(n, p, Some(s), opts, &mut cache)?);
                }
            }
            CheckId::SharifiShadows => {
                for &s in ss {
                    out.push(verify_sharifi_shadows(n, p, s, opts)?);
                }
            }
        }
    }
    Ok(out)
}

/// Every check at (N, p, t).
pub fn verify_all(n: u64, p: u64, opts: &Options) -> Result<Vec<VerificationReport>> {
    let t = Layer::new(n, p, None)?.t;
    verify_battery(n, p, &CheckId::ALL, &[t], opts)
}

/// Whether all (1, v) instances of the generated ℓ identity are derivable at (N, p, s).
pub fn identity_status(l: u64, n: u64, p: u64, s: u32) -> Result<IdentitySurvey> {
    let windows: &[(u64, i64)] = match l {
        2 => &[(2, 3)],
        3 => &[(3, 3), (6, 3)],
        _ => &[(1, 5), (2, 5)],
    };
    survey_identity(GenericTarget::Hecke(l), n, p, s, windows, false)
}
