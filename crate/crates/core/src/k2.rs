//! Steinberg symbols on cyclotomic units of Q(ζ_N) with coefficients in Z/p^s.
//!
//! Symbols live in the exterior square of the free group on u_a = 1 − ζ^a
//! (1 ≤ a ≤ (N−1)/2); torsion (signs and roots of unity) is dropped on expansion.
//! Relations come in families. The plain presentation uses the Steinberg
//! family S(u,v) in Q(ζ_N). The extended presentations work at level mN
//! (the field Q(ζ_mN)) and add the distribution relations for μ_q, q | m.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::OnceLock;

use crate::arith::{inv_mod, is_prime, padic_log, unit_group, UnitStructure};
use crate::error::{Error, Result};
use crate::group_ring::{zeta_element, GroupRing, LambdaPresentation};
use crate::hecke::heilbronn;
use crate::linalg::{SparseQuotient, SparseVec};
use crate::zq::ResidueRing;

fn half(n: u64) -> u64 {
    (n - 1) / 2
}

/// Representative a ∈ 1..=(N−1)/2 of ±b.
pub fn fold(n: u64, b: i64) -> u64 {
    let r = b.rem_euclid(n as i64) as u64;
    if r <= half(n) {
        r
    } else {
        n - r
    }
}

/// (−1)^minus · ζ^zeta · ∏ u_a^{u[a−1]}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycUnit {
    pub n: u64,
    pub minus: u8,
    pub zeta: u64,
    pub u: Vec<i64>,
}

impl CycUnit {
    pub fn one(n: u64) -> Self {
        CycUnit { n, minus: 0, zeta: 0, u: vec![0; half(n) as usize] }
    }

    /// 1 − ζ^b in canonical form.
    pub fn new(n: u64, b: i64) -> Result<Self> {
        let r = b.rem_euclid(n as i64) as u64;
        if r == 0 {
            return Err(Error::Precondition(format!("1 - zeta^{b} vanishes mod {n}")));
        }
        let mut x = Self::one(n);
        if r <= half(n) {
            x.u[r as usize - 1] = 1;
        } else {
            // 1 − ζ^{−a} = −ζ^{−a}(1 − ζ^a)
            x.minus = 1;
            x.zeta = r;
            x.u[(n - r) as usize - 1] = 1;
        }
        Ok(x)
    }

    pub fn root(n: u64, k: i64) -> Self {
        let mut x = Self::one(n);
        x.zeta = k.rem_euclid(n as i64) as u64;
        x
    }

    pub fn mul(&self, o: &Self) -> Self {
        CycUnit {
            n: self.n,
            minus: self.minus ^ o.minus,
            zeta: (self.zeta + o.zeta) % self.n,
            u: self.u.iter().zip(&o.u).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn inv(&self) -> Self {
        self.pow(-1)
    }

    pub fn pow(&self, e: i64) -> Self {
        CycUnit {
            n: self.n,
            minus: (self.minus as i64 * e).rem_euclid(2) as u8,
            zeta: (self.zeta as i64 * e).rem_euclid(self.n as i64) as u64,
            u: self.u.iter().map(|a| a * e).collect(),
        }
    }

    /// (1−ζ)-adic valuation.
    pub fn valuation(&self) -> i64 {
        self.u.iter().sum()
    }

    pub fn is_torsion(&self) -> bool {
        self.u.iter().all(|&a| a == 0)
    }
}

pub fn wedge_dim(n: u64) -> usize {
    let h = half(n) as usize;
    h * (h.saturating_sub(1)) / 2
}

fn wedge_index(n: u64, a: u64, b: u64) -> usize {
    debug_assert!(1 <= a && a < b && b <= half(n));
    let h = half(n) as usize;
    let (a, b) = (a as usize, b as usize);
    (a - 1) * (2 * h - a) / 2 + (b - a - 1)
}

/// Z/p^s-combination of the wedge basis ⟨u_a, u_b⟩, a < b.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolElt {
    pub n: u64,
    pub ring: ResidueRing,
    pub coef: Vec<u64>,
}

impl SymbolElt {
    pub fn zero(n: u64, ring: ResidueRing) -> Self {
        SymbolElt { n, ring, coef: vec![0; wedge_dim(n)] }
    }

    /// ⟨u_a, u_b⟩ for a, b in 1..=(N−1)/2.
    pub fn basis(n: u64, ring: ResidueRing, a: u64, b: u64) -> Self {
        let mut e = Self::zero(n, ring);
        e.add_pair(a, b, 1);
        e
    }

    fn add_pair(&mut self, a: u64, b: u64, c: i64) {
        if a == b || c == 0 {
            return;
        }
        let r = self.ring;
        let (i, c) = if a < b { (wedge_index(self.n, a, b), c) } else { (wedge_index(self.n, b, a), -c) };
        self.coef[i] = r.add(self.coef[i], r.reduce(c));
    }

    /// Adds c·⟨1−ζ^a, 1−ζ^b⟩; symbols with a vanishing entry are dropped.
    pub fn add_steinberg(&mut self, a: i64, b: i64, c: i64) {
        let n = self.n as i64;
        if a.rem_euclid(n) == 0 || b.rem_euclid(n) == 0 {
            return;
        }
        self.add_pair(fold(self.n, a), fold(self.n, b), c);
    }

    pub fn add(&self, o: &Self) -> Self {
        let r = self.ring;
        SymbolElt { coef: self.coef.iter().zip(&o.coef).map(|(&a, &b)| r.add(a, b)).collect(), ..self.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let r = self.ring;
        SymbolElt { coef: self.coef.iter().zip(&o.coef).map(|(&a, &b)| r.sub(a, b)).collect(), ..self.clone() }
    }

    pub fn scale(&self, c: i64) -> Self {
        let r = self.ring;
        let c = r.reduce(c);
        SymbolElt { coef: self.coef.iter().map(|&a| r.mul(a, c)).collect(), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|&x| x == 0)
    }

    /// Nonzero terms (a, b, coefficient) with a < b.
    pub fn terms(&self) -> Vec<(u64, u64, u64)> {
        let h = half(self.n);
        let mut out = vec![];
        for a in 1..=h {
            for b in a + 1..=h {
                let x = self.coef[wedge_index(self.n, a, b)];
                if x != 0 {
                    out.push((a, b, x));
                }
            }
        }
        out
    }

    /// σ_a: ⟨1−ζ^x, 1−ζ^y⟩ ↦ ⟨1−ζ^{a⁻¹x}, 1−ζ^{a⁻¹y}⟩.
    pub fn galois(&self, a: i64) -> Result<Self> {
        let ai = inv_mod(a, self.n).ok_or(Error::NotUnit(a))? as i64;
        let mut out = Self::zero(self.n, self.ring);
        for (x, y, c) in self.terms() {
            out.add_steinberg(ai * x as i64, ai * y as i64, self.ring.lift(c));
        }
        Ok(out)
    }

    /// ν·e = Σ_a σ_a e over (Z/N)^×.
    pub fn norm(&self) -> Self {
        let mut out = Self::zero(self.n, self.ring);
        for (x, y, c) in self.terms() {
            let c = self.ring.lift(c);
            for a in 1..self.n as i64 {
                out.add_steinberg(a * x as i64, a * y as i64, c);
            }
        }
        out
    }
}

/// ⟨x, y⟩ expanded bilinearly; torsion components are dropped.
pub fn symbol(x: &CycUnit, y: &CycUnit, ring: ResidueRing) -> SymbolElt {
    let mut out = SymbolElt::zero(x.n, ring);
    for (i, &e) in x.u.iter().enumerate() {
        if e == 0 {
            continue;
        }
        for (j, &f) in y.u.iter().enumerate() {
            if f != 0 {
                out.add_pair(i as u64 + 1, j as u64 + 1, e * f);
            }
        }
    }
    out
}

/// ⟨1−ζ^a, 1−ζ^b⟩, or zero when an entry vanishes.
pub fn steinberg_pair(n: u64, a: i64, b: i64, ring: ResidueRing) -> SymbolElt {
    let mut out = SymbolElt::zero(n, ring);
    out.add_steinberg(a, b, 1);
    out
}

/// S(u,v) = ⟨ζ^v·u_u/u_{u+v}, u_v/u_{u+v}⟩.
pub fn steinberg_relation(n: u64, u: i64, v: i64, ring: ResidueRing) -> Result<SymbolElt> {
    let uu = CycUnit::new(n, u)?;
    let uv = CycUnit::new(n, v)?;
    let us = CycUnit::new(n, u + v)?;
    let x = CycUnit::root(n, v).mul(&uu).mul(&us.inv());
    let y = uv.mul(&us.inv());
    Ok(symbol(&x, &y, ring))
}

/// Residue symbol: ⟨u_a, u_b⟩ ↦ log a − log b in Z/p^s.
pub fn residue(e: &SymbolElt, units: &UnitStructure) -> Result<u64> {
    let r = e.ring;
    let mut acc = 0;
    for (a, b, c) in e.terms() {
        let la = padic_log(units, a as i64, r.p, r.m)?;
        let lb = padic_log(units, b as i64, r.p, r.m)?;
        acc = r.add(acc, r.mul(c, r.sub(la % r.q, lb % r.q)));
    }
    Ok(acc)
}

/// The image of (T_ℓ − ℓ⟨ℓ⟩ − 1)[u,v] under [a,b] ↦ ⟨1−ζ^a, 1−ζ^b⟩, with T_ℓ = ⟨ℓ⟩·Σ_h[(u,v)h]
/// over the Heilbronn family of the hecke module and ⟨j⟩[u,v] = [j⁻¹u, j⁻¹v].
pub fn hecke_identity_elt(l: u64, u: i64, v: i64, n: u64, ring: ResidueRing) -> Result<SymbolElt> {
    if !is_prime(l) || l == n {
        return Err(Error::Precondition(format!("need a prime l != N, got {l}")));
    }
    let li = inv_mod(l as i64, n).unwrap() as i64;
    let (u, v) = (li * u, li * v);
    let mut out = SymbolElt::zero(n, ring);
    for (f1, f2, c) in identity_forms(l)? {
        out.add_steinberg(f1.0 * u + f1.1 * v, f2.0 * u + f2.1 * v, c);
    }
    Ok(out)
}

/// Σ_h⟨(u,v)h⟩ = ⟨ℓu,ℓv⟩ + ℓ⟨u,v⟩ in the fixture grammar.
pub fn generated_identity(l: u64) -> Result<IdentityFixture> {
    let terms = identity_forms(l)?;
    let (lhs, rhs): (Vec<_>, Vec<_>) = terms.into_iter().partition(|t| t.2 > 0);
    let term = |(first, second, coef): ((i64, i64), (i64, i64), i64)| FixtureTerm { coef: coef.abs(), first, second };
    Ok(IdentityFixture { lhs: lhs.into_iter().map(term).collect(), rhs: rhs.into_iter().map(term).collect() })
}

/// Terms of Σ_h[(u,v)h] − [ℓu,ℓv] − ℓ[u,v] as pairs of linear forms in (u,v).
fn identity_forms(l: u64) -> Result<Vec<((i64, i64), (i64, i64), i64)>> {
    let l = l as i64;
    let mut out: Vec<_> = heilbronn(l as u64)?.into_iter().map(|h| ((h[0], h[2]), (h[1], h[3]), 1)).collect();
    out.push(((l, 0), (0, l), -1));
    out.push(((1, 0), (0, 1), -l));
    Ok(out)
}

pub const L5_FIXTURE: &str = include_str!("../data/l5_identity.txt");

/// c·⟨1−ζ^{a u + b v}, 1−ζ^{c u + d v}⟩.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureTerm {
    pub coef: i64,
    pub first: (i64, i64),
    pub second: (i64, i64),
}

/// A symbol identity lhs = rhs in the variables u, v.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityFixture {
    pub lhs: Vec<FixtureTerm>,
    pub rhs: Vec<FixtureTerm>,
}

fn parse_form(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Parse(format!("bad linear form `{s}`"));
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let (mut a, mut b) = (0, 0);
    let mut rest = s.as_str();
    while !rest.is_empty() {
        let (sign, r) = match rest.as_bytes()[0] {
            b'+' => (1, &rest[1..]),
            b'-' => (-1, &rest[1..]),
            _ => (1, rest),
        };
        let digits = r.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        let k: i64 = if digits == 0 { 1 } else { r[..digits].parse().map_err(|_| bad())? };
        match r.as_bytes()[digits] {
            b'u' => a += sign * k,
            b'v' => b += sign * k,
            _ => return Err(bad()),
        }
        rest = &r[digits + 1..];
    }
    Ok((a, b))
}

impl IdentityFixture {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lhs = vec![];
        let mut rhs = vec![];
        let mut right = false;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "=" {
                if right {
                    return Err(Error::Parse(format!("line {}: second `=`", no + 1)));
                }
                right = true;
                continue;
            }
            let bad = |m: &str| Error::Parse(format!("line {}: {m}", no + 1));
            let sign = match line.as_bytes()[0] {
                b'+' => 1,
                b'-' => -1,
                _ => return Err(bad("missing sign")),
            };
            let open = line.find('(').ok_or_else(|| bad("missing `(`"))?;
            let close = line.rfind(')').ok_or_else(|| bad("missing `)`"))?;
            let count = line[1..open].trim();
            let count: i64 = if count.is_empty() { 1 } else { count.parse().map_err(|_| bad("bad count"))? };
            let inner = &line[open + 1..close];
            let (f1, f2) = inner.split_once(',').ok_or_else(|| bad("expected two forms"))?;
            let term = FixtureTerm { coef: sign * count, first: parse_form(f1)?, second: parse_form(f2)? };
            if right {
                rhs.push(term);
            } else {
                lhs.push(term);
            }
        }
        if !right {
            return Err(Error::Parse("missing `=` line".into()));
        }
        Ok(IdentityFixture { lhs, rhs })
    }

    pub fn l5() -> Self {
        Self::parse(L5_FIXTURE).expect("bundled fixture parses")
    }

    /// Signed terms of lhs − rhs.
    pub fn difference_terms(&self) -> Vec<((i64, i64), (i64, i64), i64)> {
        let l = self.lhs.iter().map(|t| (t.first, t.second, t.coef));
        let r = self.rhs.iter().map(|t| (t.first, t.second, -t.coef));
        l.chain(r).collect()
    }

    /// lhs − rhs evaluated at (u, v).
    pub fn element(&self, n: u64, u: i64, v: i64, ring: ResidueRing) -> SymbolElt {
        let mut out = SymbolElt::zero(n, ring);
        for (f1, f2, c) in self.difference_terms() {
            out.add_steinberg(f1.0 * u + f1.1 * v, f2.0 * u + f2.1 * v, c);
        }
        out
    }
}

impl std::fmt::Display for IdentityFixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn form(x: (i64, i64)) -> String {
            let mono = |k: i64, s: &str, lead: bool| -> String {
                match (k, lead) {
                    (0, _) => String::new(),
                    (1, true) => s.to_string(),
                    (1, false) => format!("+{s}"),
                    (-1, _) => format!("-{s}"),
                    (k, true) => format!("{k}{s}"),
                    (k, false) => format!("{k:+}{s}"),
                }
            };
            let a = mono(x.0, "u", true);
            let b = mono(x.1, "v", a.is_empty());
            if a.is_empty() && b.is_empty() {
                "0".into()
            } else {
                a + &b
            }
        }
        let line = |f: &mut std::fmt::Formatter<'_>, t: &FixtureTerm| {
            let s = if t.coef < 0 { '-' } else { '+' };
            let c = if t.coef.abs() == 1 { String::new() } else { t.coef.abs().to_string() };
            writeln!(f, "{s}{c} ({}, {})", form(t.first), form(t.second))
        };
        for t in &self.lhs {
            line(f, t)?;
        }
        writeln!(f, "=")?;
        for t in &self.rhs {
            line(f, t)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Relation families over an abstract exponent group.

/// Exponent of a root of unity ω; the generator attached to x is 1 − ω^x.
trait Exp: Copy + Eq + Ord + Hash + Debug {
    fn add(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn is_zero(self) -> bool;
    fn times(self, q: u64) -> Self;
    /// ω^x · μ_q^k.
    fn twist(self, q: u64, k: u64) -> Self;
    fn canon(self) -> Self {
        let m = self.neg();
        if m < self {
            m
        } else {
            self
        }
    }
}

/// Residue mod n = m·N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Res {
    j: u32,
    n: u32,
}

impl Res {
    fn new(j: i64, n: u64) -> Self {
        Res { j: j.rem_euclid(n as i64) as u32, n: n as u32 }
    }
}

impl Exp for Res {
    fn add(self, o: Self) -> Self {
        Res { j: ((self.j as u64 + o.j as u64) % self.n as u64) as u32, n: self.n }
    }
    fn neg(self) -> Self {
        Res { j: (self.n - self.j) % self.n, n: self.n }
    }
    fn is_zero(self) -> bool {
        self.j == 0
    }
    fn times(self, q: u64) -> Self {
        Res { j: ((self.j as u64 * q) % self.n as u64) as u32, n: self.n }
    }
    fn twist(self, q: u64, k: u64) -> Self {
        let n = self.n as u64;
        Res { j: ((self.j as u64 + k * (n / q)) % n) as u32, n: self.n }
    }
}

/// μ_m^r · ζ^{a u + b v} with u, v indeterminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Form {
    r: i32,
    a: i32,
    b: i32,
    m: i32,
}

impl Form {
    fn new(r: i64, a: i64, b: i64, m: u64) -> Self {
        Form { r: r.rem_euclid(m as i64) as i32, a: a as i32, b: b as i32, m: m as i32 }
    }

    fn specialize(self, n: u64, u: i64, v: i64) -> Res {
        let big = (self.m as u64 * n) as i64;
        let j = self.r as i64 * n as i64 + self.m as i64 * (self.a as i64 * u + self.b as i64 * v);
        Res::new(j.rem_euclid(big), big as u64)
    }
}

impl Exp for Form {
    fn add(self, o: Self) -> Self {
        Form { r: (self.r + o.r) % self.m, a: self.a + o.a, b: self.b + o.b, m: self.m }
    }
    fn neg(self) -> Self {
        Form { r: (self.m - self.r) % self.m, a: -self.a, b: -self.b, m: self.m }
    }
    fn is_zero(self) -> bool {
        self.r == 0 && self.a == 0 && self.b == 0
    }
    fn times(self, q: u64) -> Self {
        let q = q as i32;
        Form { r: (self.r * q) % self.m, a: self.a * q, b: self.b * q, m: self.m }
    }
    fn twist(self, q: u64, k: u64) -> Self {
        let step = self.m / q as i32;
        Form { r: (self.r + k as i32 * step) % self.m, ..self }
    }
}

/// A generating relation of K₂ ⊗ Z_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Rel<E> {
    /// ⟨ω^B(1−ω^A)/(1−ω^{A+B}), (1−ω^B)/(1−ω^{A+B})⟩.
    Steinberg(E, E),
    /// ⟨(1−ω^{qx}) / ∏_k (1−μ_q^k ω^x), 1−ω^g⟩.
    Distribution(E, u64, E),
}

type Wedge<E> = BTreeMap<(E, E), i64>;

fn wedge_into<E: Exp>(x: &[(E, i64)], y: &[(E, i64)], c: i64, out: &mut Wedge<E>) {
    for &(i, e) in x {
        for &(j, f) in y {
            let (i, j) = (i.canon(), j.canon());
            if i == j {
                continue;
            }
            let (key, k) = if i < j { ((i, j), e * f * c) } else { ((j, i), -e * f * c) };
            let slot = out.entry(key).or_insert(0);
            *slot += k;
            if *slot == 0 {
                out.remove(&key);
            }
        }
    }
}

impl<E: Exp> Rel<E> {
    fn expand(&self) -> Wedge<E> {
        let mut out = Wedge::new();
        match *self {
            Rel::Steinberg(a, b) => {
                let c = a.add(b);
                wedge_into(&[(a, 1), (c, -1)], &[(b, 1), (c, -1)], 1, &mut out);
            }
            Rel::Distribution(x, q, g) => {
                let mut r = vec![(x.times(q), 1)];
                for k in 0..q {
                    r.push((x.twist(q, k), -1));
                }
                wedge_into(&r, &[(g, 1)], 1, &mut out);
            }
        }
        out
    }

    /// Every exponent whose generator the relation needs to be nonzero.
    fn exponents(&self) -> Vec<E> {
        match *self {
            Rel::Steinberg(a, b) => vec![a, b, a.add(b)],
            Rel::Distribution(x, q, g) => {
                let mut v = vec![x, x.times(q), g];
                v.extend((0..q).map(|k| x.twist(q, k)));
                v
            }
        }
    }
}

fn prime_divisors(m: u64) -> Vec<u64> {
    (2..=m).filter(|&q| m % q == 0 && is_prime(q)).collect()
}

/// All family relations whose exponents lie in the window.
fn window_relations<E: Exp>(window: &HashSet<E>, m: u64) -> Vec<Rel<E>> {
    let mut elems: Vec<E> = window.iter().copied().filter(|e| !e.is_zero()).collect();
    elems.sort();
    let mut out = vec![];
    for (i, &a) in elems.iter().enumerate() {
        for &b in &elems[i..] {
            let c = a.add(b);
            if !c.is_zero() && window.contains(&c) {
                out.push(Rel::Steinberg(a, b));
            }
        }
    }
    let mut gens: Vec<E> = elems.iter().map(|e| e.canon()).collect();
    gens.sort();
    gens.dedup();
    for q in prime_divisors(m) {
        for &x in &elems {
            if x.neg() < x {
                continue;
            }
            let qx = x.times(q);
            let twists_ok = (0..q).all(|k| {
                let t = x.twist(q, k);
                !t.is_zero() && window.contains(&t)
            });
            if qx.is_zero() || !window.contains(&qx) || !twists_ok {
                continue;
            }
            for &g in &gens {
                out.push(Rel::Distribution(x, q, g));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Concrete spans.

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SpanMode {
    Plain,
    ModNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Membership {
    Verified,
    Inconclusive,
}

/// Row-reduced span of derivable relations at level m·N, over an exponent window.
pub struct RelationSpan {
    pub n: u64,
    pub m: u64,
    pub ring: ResidueRing,
    pub mode: SpanMode,
    cols: HashMap<(Res, Res), u32>,
    quot: SparseQuotient,
    relations: usize,
}

impl RelationSpan {
    /// Level-N span of the Steinberg family S(u,v) over all u, v (plus ν·e in mod-norm mode).
    pub fn full(n: u64, p: u64, s: u32, mode: SpanMode) -> Result<Self> {
        Self::extended(n, p, s, mode, 1)
    }

    /// Span at level m·N over every exponent.
    pub fn extended(n: u64, p: u64, s: u32, mode: SpanMode, m: u64) -> Result<Self> {
        let big = m * n;
        let window: Vec<i64> = (1..big as i64).collect();
        Self::window(n, p, s, mode, m, &window)
    }

    /// Span at level m·N generated by the relations among the given exponents mod m·N.
    pub fn window(n: u64, p: u64, s: u32, mode: SpanMode, m: u64, window: &[i64]) -> Result<Self> {
        unit_group(n)?;
        let ring = ResidueRing::new(p, s, 6 * n)?;
        if !matches!(m, 1 | 2 | 3 | 6) {
            return Err(Error::Precondition(format!("level multiplier {m} not in {{1,2,3,6}}")));
        }
        if mode == SpanMode::ModNorm && m > 2 {
            return Err(Error::Precondition("the norm mode needs the field Q(zeta_N) itself".into()));
        }
        let big = m * n;
        let set: HashSet<Res> =
            window.iter().flat_map(|&j| [Res::new(j, big), Res::new(-j, big)]).filter(|e| !e.is_zero()).collect();
        let rels = window_relations(&set, m);
        let mut rows: Vec<Wedge<Res>> = rels.iter().map(|r| r.expand()).collect();
        if mode == SpanMode::ModNorm {
            let mut gens: Vec<Res> = set.iter().map(|e| e.canon()).collect();
            gens.sort();
            gens.dedup();
            let units: Vec<u64> = (1..big).filter(|&c| gcd(c, big) == 1).collect();
            let mut seen = HashSet::new();
            for (i, &x) in gens.iter().enumerate() {
                for &y in &gens[i + 1..] {
                    // ν·⟨x, y⟩ depends only on the orbit of the pair
                    let key = units.iter().map(|&c| orbit_key(x.times(c), y.times(c))).min().unwrap();
                    if !seen.insert(key) {
                        continue;
                    }
                    let mut w = Wedge::new();
                    for &c in &units {
                        wedge_into(&[(x.times(c), 1)], &[(y.times(c), 1)], 1, &mut w);
                    }
                    rows.push(w);
                }
            }
        }
        let mut cols = HashMap::new();
        for row in &rows {
            for k in row.keys() {
                let next = cols.len() as u32;
                cols.entry(*k).or_insert(next);
            }
        }
        let mut quot = SparseQuotient::new(cols.len(), ring);
        for row in &rows {
            let v = to_sparse(row, &cols, &ring);
            quot.add_relation(&v);
        }
        quot.finish();
        Ok(RelationSpan { n, m, ring, mode, cols, quot, relations: rows.len() })
    }

    pub fn relation_count(&self) -> usize {
        self.relations
    }

    /// Dimension of the ambient symbol space spanned by relation supports.
    pub fn support_dim(&self) -> usize {
        self.cols.len()
    }

    /// Whether the element lies in the span; the element is embedded by ζ_N = ω^m.
    pub fn membership(&self, e: &SymbolElt) -> Membership {
        assert_eq!(e.n, self.n, "level mismatch");
        let big = self.m * self.n;
        let mut v: SparseVec = vec![];
        for (a, b, c) in e.terms() {
            let c = self.ring.reduce_u(c);
            if c == 0 {
                continue;
            }
            let x = Res::new((a * self.m) as i64, big).canon();
            let y = Res::new((b * self.m) as i64, big).canon();
            let (key, c) = if x < y { ((x, y), c) } else { ((y, x), self.ring.neg(c)) };
            match self.cols.get(&key) {
                Some(&col) => v.push((col, c)),
                None => return Membership::Inconclusive,
            }
        }
        v.sort_unstable_by_key(|e| e.0);
        if self.quot.is_zero(&v) {
            Membership::Verified
        } else {
            Membership::Inconclusive
        }
    }
}

fn orbit_key(x: Res, y: Res) -> (Res, Res) {
    let (x, y) = (x.canon(), y.canon());
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn to_sparse(row: &Wedge<Res>, cols: &HashMap<(Res, Res), u32>, ring: &ResidueRing) -> SparseVec {
    let mut v: SparseVec = row.iter().map(|(k, &c)| (cols[k], ring.reduce(c))).filter(|e| e.1 != 0).collect();
    v.sort_unstable_by_key(|e| e.0);
    v
}

/// relation_span(N, p, s, mode): the Steinberg-family span at level N.
pub fn relation_span(n: u64, p: u64, s: u32, mode: SpanMode) -> Result<RelationSpan> {
    RelationSpan::full(n, p, s, mode)
}

pub fn membership(e: &SymbolElt, span: &RelationSpan) -> Membership {
    span.membership(e)
}

/// Exponents {k·N + m(a + b·v) : k < m, |a|, |b| ≤ bound} at u = 1.
pub fn local_window(n: u64, m: u64, v: i64, bound: i64) -> Vec<i64> {
    let mut out = vec![];
    for k in 0..m as i64 {
        for a in -bound..=bound {
            for b in -bound..=bound {
                let j = (k * n as i64 + m as i64 * (a + b * v)).rem_euclid((m * n) as i64);
                if j != 0 {
                    out.push(j);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Generic certificates: integer relations among symbols of linear forms in (u, v).

/// Which symbol element a certificate proves to be a relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum GenericTarget {
    /// Σ_h⟨(u,v)h⟩ − ⟨ℓu,ℓv⟩ − ℓ⟨u,v⟩.
    Hecke(u64),
    /// Hecke(5) minus the bundled ℓ = 5 fixture.
    FixtureL5,
}

impl GenericTarget {
    fn terms(&self) -> Result<Vec<((i64, i64), (i64, i64), i64)>> {
        match *self {
            GenericTarget::Hecke(l) => identity_forms(l),
            GenericTarget::FixtureL5 => {
                let mut t = identity_forms(5)?;
                let fx = IdentityFixture::l5();
                t.extend(fx.difference_terms().into_iter().map(|(a, b, c)| (a, b, -c)));
                Ok(t)
            }
        }
    }

    fn element(&self, m: u64) -> Result<Wedge<Form>> {
        let mut out = Wedge::new();
        for (f1, f2, c) in self.terms()? {
            let x = Form::new(0, f1.0, f1.1, m);
            let y = Form::new(0, f2.0, f2.1, m);
            wedge_into(&[(x, 1)], &[(y, 1)], c, &mut out);
        }
        Ok(out)
    }
}

/// target = (1/denom)·Σ coef·relation, exactly, in the free exterior square on 1 − μ_m^r ζ^{au+bv}.
#[derive(Clone, Debug)]
pub struct GenericCertificate {
    pub target: GenericTarget,
    pub m: u64,
    pub bound: i64,
    pub denom: i64,
    terms: Vec<(Rel<Form>, i64)>,
    exps: Vec<Form>,
}

const CERT_PRIME: u64 = 2_147_483_647;

fn ratrec(x: u64, p: u64) -> Option<(i64, i64)> {
    let (mut r0, mut r1) = (p as i128, x as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while 2 * r1 * r1 > p as i128 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if s1 == 0 || 2 * s1 * s1 > p as i128 {
        return None;
    }
    let (num, den) = if s1 < 0 { (-r1, -s1) } else { (r1, s1) };
    Some((num as i64, den as i64))
}

impl GenericCertificate {
    /// Searches for a certificate among relations of forms with |a|, |b| ≤ bound at level m.
    pub fn derive(target: GenericTarget, m: u64, bound: i64) -> Result<Option<Self>> {
        let mut window = HashSet::new();
        for r in 0..m as i64 {
            for a in -bound..=bound {
                for b in -bound..=bound {
                    let f = Form::new(r, a, b, m);
                    if !f.is_zero() {
                        window.insert(f);
                    }
                }
            }
        }
        let rels = window_relations(&window, m);
        let goal = target.element(m)?;
        let rows: Vec<Wedge<Form>> = rels.iter().map(|r| r.expand()).collect();
        let mut cols: HashMap<(Form, Form), u32> = HashMap::new();
        for row in rows.iter().chain(std::iter::once(&goal)) {
            for k in row.keys() {
                let next = cols.len() as u32;
                cols.entry(*k).or_insert(next);
            }
        }
        let p = CERT_PRIME;
        let red = |c: i64| c.rem_euclid(p as i64) as u64;
        let sparse = |w: &Wedge<Form>| -> Vec<(u32, u64)> {
            let mut v: Vec<(u32, u64)> = w.iter().map(|(k, &c)| (cols[k], red(c))).collect();
            v.sort_unstable();
            v
        };
        let mut elim = TrackedElimination::new(cols.len(), rows.len(), p);
        for (i, row) in rows.iter().enumerate() {
            elim.insert(&sparse(row), i as u32);
        }
        let Some(comb) = elim.solve(&sparse(&goal)) else {
            return Ok(None);
        };
        let mut fracs = vec![];
        for (i, x) in comb {
            let Some((num, den)) = ratrec(x, p) else {
                return Ok(None);
            };
            fracs.push((i, num, den));
        }
        let denom = fracs.iter().fold(1i64, |acc, &(_, _, d)| acc / gcd(acc as u64, d as u64) as i64 * d);
        let terms: Vec<(Rel<Form>, i64)> =
            fracs.iter().map(|&(i, num, den)| (rels[i as usize], num * (denom / den))).collect();
        let mut exps: Vec<Form> = terms.iter().flat_map(|(r, _)| r.exponents()).collect();
        for (f1, f2, _) in target.terms()? {
            exps.push(Form::new(0, f1.0, f1.1, m));
            exps.push(Form::new(0, f2.0, f2.1, m));
        }
        exps.sort();
        exps.dedup();
        let cert = GenericCertificate { target, m, bound, denom, terms, exps };
        if !cert.check_exact()? {
            return Ok(None);
        }
        Ok(Some(cert))
    }

    /// Exact integer check of denom·target = Σ coef·relation.
    pub fn check_exact(&self) -> Result<bool> {
        let mut acc: BTreeMap<(Form, Form), i128> = BTreeMap::new();
        for (rel, c) in &self.terms {
            for (k, x) in rel.expand() {
                *acc.entry(k).or_insert(0) += *c as i128 * x as i128;
            }
        }
        for (k, x) in self.target.element(self.m)? {
            *acc.entry(k).or_insert(0) -= self.denom as i128 * x as i128;
        }
        Ok(acc.values().all(|&x| x == 0))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether the certificate specializes to genuine relations at (N, u, v) with p ∤ denom.
    pub fn covers(&self, n: u64, p: u64, u: i64, v: i64) -> bool {
        self.denom % p as i64 != 0 && self.exps.iter().all(|f| !f.specialize(n, u, v).is_zero())
    }

    /// Number of relations of each family used.
    pub fn family_counts(&self) -> (usize, usize) {
        let s = self.terms.iter().filter(|(r, _)| matches!(r, Rel::Steinberg(..))).count();
        (s, self.terms.len() - s)
    }
}

/// Sparse Gaussian elimination over F_p that records each pivot row as a combination of inputs.
struct TrackedElimination {
    p: u64,
    pivots: Vec<Option<(Vec<(u32, u64)>, Vec<(u32, u64)>)>>,
    acc: Vec<u64>,
    tag: Vec<u64>,
}

impl TrackedElimination {
    fn new(ncols: usize, ntags: usize, p: u64) -> Self {
        TrackedElimination { p, pivots: vec![None; ncols], acc: vec![0; ncols], tag: vec![0; ntags] }
    }

    fn inv(&self, x: u64) -> u64 {
        crate::arith::pow_mod(x, self.p - 2, self.p)
    }

    /// Reduces v (with its combination) against the pivots; returns (residual, combination).
    fn reduce(&mut self, v: &[(u32, u64)], comb: &[(u32, u64)]) -> (Vec<(u32, u64)>, Vec<(u32, u64)>) {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let p = self.p;
        let mut touched = vec![];
        let mut heap = BinaryHeap::new();
        let mut seen = HashSet::new();
        for &(c, x) in v {
            self.acc[c as usize] = (self.acc[c as usize] + x) % p;
            if seen.insert(c) {
                touched.push(c);
                heap.push(Reverse(c));
            }
        }
        let mut tags = vec![];
        let mut tseen = HashSet::new();
        for &(t, x) in comb {
            self.tag[t as usize] = (self.tag[t as usize] + x) % p;
            if tseen.insert(t) {
                tags.push(t);
            }
        }
        let mut residual = vec![];
        while let Some(Reverse(c)) = heap.pop() {
            let f = self.acc[c as usize];
            if f == 0 {
                continue;
            }
            let Some((row, rc)) = &self.pivots[c as usize] else {
                residual.push((c, f));
                self.acc[c as usize] = 0;
                continue;
            };
            let nf = p - f;
            for &(j, y) in row {
                self.acc[j as usize] = (self.acc[j as usize] + nf * y) % p;
                if seen.insert(j) {
                    touched.push(j);
                    heap.push(Reverse(j));
                }
            }
            for &(t, y) in rc {
                self.tag[t as usize] = (self.tag[t as usize] + nf * y) % p;
                if tseen.insert(t) {
                    tags.push(t);
                }
            }
        }
        for c in touched {
            self.acc[c as usize] = 0;
        }
        let mut out = vec![];
        for t in tags {
            let x = self.tag[t as usize];
            self.tag[t as usize] = 0;
            if x != 0 {
                out.push((t, x));
            }
        }
        residual.sort_unstable();
        (residual, out)
    }

    fn insert(&mut self, v: &[(u32, u64)], id: u32) {
        let (res, comb) = self.reduce(v, &[(id, 1)]);
        let Some(&(c, x)) = res.first() else {
            return;
        };
        let inv = self.inv(x);
        let p = self.p;
        let row = res.iter().map(|&(j, y)| (j, y * inv % p)).collect();
        let rc = comb.iter().map(|&(j, y)| (j, y * inv % p)).collect();
        self.pivots[c as usize] = Some((row, rc));
    }

    /// Coefficients λ with v = Σ λ_i input_i, if v is in the span.
    fn solve(&mut self, v: &[(u32, u64)]) -> Option<Vec<(u32, u64)>> {
        let (res, comb) = self.reduce(v, &[]);
        if !res.is_empty() {
            return None;
        }
        // v − Σ f·row = 0 with row = Σ rc·input, and comb = −Σ f·rc
        Some(comb.into_iter().map(|(t, x)| (t, (self.p - x) % self.p)).collect())
    }
}

/// Certificates used by the verifier, derived once per process.
pub fn standard_certificate(target: GenericTarget) -> Option<&'static GenericCertificate> {
    static L2: OnceLock<Option<GenericCertificate>> = OnceLock::new();
    static L3: OnceLock<Option<GenericCertificate>> = OnceLock::new();
    static F5: OnceLock<Option<GenericCertificate>> = OnceLock::new();
    let (cell, m, bound) = match target {
        GenericTarget::Hecke(2) => (&L2, 2, 3),
        GenericTarget::Hecke(3) => (&L3, 3, 3),
        GenericTarget::FixtureL5 => (&F5, 1, 5),
        _ => return None,
    };
    cell.get_or_init(|| GenericCertificate::derive(target, m, bound).ok().flatten()).as_ref()
}

// ---------------------------------------------------------------------------
// Per-level identity checks.

/// Outcome of checking a family of identities over all (u, v).
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IdentitySurvey {
    pub status: Membership,
    pub total: usize,
    pub by_certificate: usize,
    pub by_window: usize,
    /// Values of v left unproved.
    pub failed: Vec<i64>,
    /// Values of v whose element has nonzero residue, so it is not a relation at all.
    pub refuted: Vec<i64>,
}

/// Checks a generic target at every (1, v); by Galois equivariance this covers all (u, v).
/// Values of v the certificate does not cover are tried in local windows at level m·N;
/// with `stop_early` the survey ends at the first value left unproved.
pub fn survey_identity(
    target: GenericTarget,
    n: u64,
    p: u64,
    s: u32,
    windows: &[(u64, i64)],
    stop_early: bool,
) -> Result<IdentitySurvey> {
    let ring = ResidueRing::new(p, s, 6 * n)?;
    let cert = standard_certificate(target);
    survey_elements(n, p, s, SpanMode::Plain, windows, stop_early, cert, |v| target_element(target, n, 1, v, ring))
}

/// The bundled or a user-supplied ℓ = 5 fixture against the generated identity, at every (1, v).
pub fn survey_fixture(
    fixture: &IdentityFixture,
    n: u64,
    p: u64,
    s: u32,
    windows: &[(u64, i64)],
    stop_early: bool,
) -> Result<IdentitySurvey> {
    if *fixture == IdentityFixture::l5() {
        return survey_identity(GenericTarget::FixtureL5, n, p, s, windows, stop_early);
    }
    let ring = ResidueRing::new(p, s, 6 * n)?;
    survey_elements(n, p, s, SpanMode::Plain, windows, stop_early, None, |v| {
        Ok(target_element(GenericTarget::Hecke(5), n, 1, v, ring)?.sub(&fixture.element(n, 1, v, ring)))
    })
}

/// Survey of (T_ℓ − ℓ⟨ℓ⟩ − 1)[1, v] over all v in windowed spans of the given mode.
pub fn survey_hecke_mode(l: u64, n: u64, p: u64, s: u32, mode: SpanMode, windows: &[(u64, i64)], stop_early: bool) -> Result<IdentitySurvey> {
    let ring = ResidueRing::new(p, s, 6 * n)?;
    survey_elements(n, p, s, mode, windows, stop_early, None, |v| hecke_identity_elt(l, 1, v, n, ring))
}

#[allow(clippy::too_many_arguments)]
fn survey_elements(
    n: u64,
    p: u64,
    s: u32,
    mode: SpanMode,
    windows: &[(u64, i64)],
    stop_early: bool,
    cert: Option<&GenericCertificate>,
    element: impl Fn(i64) -> Result<SymbolElt>,
) -> Result<IdentitySurvey> {
    let units = unit_group(n)?;
    // the residue symbol only exists for s ≤ t
    let has_residue = s <= units.t(p);
    let mut out =
        IdentitySurvey { status: Membership::Verified, total: 0, by_certificate: 0, by_window: 0, failed: vec![], refuted: vec![] };
    for v in 1..n as i64 {
        out.total += 1;
        if cert.is_some_and(|c| c.covers(n, p, 1, v)) {
            out.by_certificate += 1;
            continue;
        }
        let e = element(v)?;
        if e.is_zero() {
            out.by_window += 1;
            continue;
        }
        if has_residue && residue(&e, &units)? != 0 {
            out.refuted.push(v);
            out.failed.push(v);
            if stop_early {
                break;
            }
            continue;
        }
        let mut ok = false;
        for &(m, bound) in windows {
            let span = RelationSpan::window(n, p, s, mode, m, &local_window(n, m, v, bound))?;
            if span.membership(&e) == Membership::Verified {
                ok = true;
                break;
            }
        }
        if ok {
            out.by_window += 1;
        } else {
            out.failed.push(v);
            if stop_early {
                break;
            }
        }
    }
    if !out.failed.is_empty() {
        out.status = Membership::Inconclusive;
    }
    Ok(out)
}

/// The concrete element of a generic target at (u, v).
pub fn target_element(target: GenericTarget, n: u64, u: i64, v: i64, ring: ResidueRing) -> Result<SymbolElt> {
    let mut out = SymbolElt::zero(n, ring);
    for (f1, f2, c) in target.terms()? {
        out.add_steinberg(f1.0 * u + f1.1 * v, f2.0 * u + f2.1 * v, c);
    }
    Ok(out)
}

/// Λ⁽ᵖ⁾/(ζ⁽ᵖ⁾), the module model of K⁽ᵖ⁾.
pub fn k_model(n: u64, p: u64, m: u32) -> Result<LambdaPresentation> {
    let layer = crate::arith::Layer::new(n, p, None)?;
    let gr = GroupRing::for_layer(&layer, m)?;
    let z = zeta_element(n, p, m)?;
    Ok(LambdaPresentation::cyclic(gr, &z))
}
