//! Eisenstein data at a pair (N, p): the localized plus-homology of Γ₀(N) and Γ₁⁽ᵖ⁾(N),
//! the ideals I, Ĩ₀, I₀ and J acting on it, and the Λ⁽ᵖ⁾-structure of the quotients.
//!
//! W̃ denotes the Eisenstein component of H̃₊ at level Γ₁⁽ᵖ⁾(N), W₀ the one of H₊ at Γ₀(N),
//! and U = ker ∂ ⊆ W̃ the absolute part. W̃ is cyclic over its Hecke algebra, so W̃ ≅ T̃ and
//! T̃/Ĩ₀ ≅ W̃/Ĩ₀W̃; the same holds for U once a generator u₀ is found.

use crate::arith::{inv_mod, primes_upto, Layer};
use crate::component::{cyclic_structure, eta_values, Component, Cyclic, IdealModule};
use crate::error::{Error, Result};
use crate::group_ring::{nu_element, zeta_element, GroupRing, GroupRingElt};
use crate::hecke::sturm_bound;
use crate::linalg::{cokernel_invariants, left_kernel, smith, subquotient_invariants, Howell, Mat, ModuleInvariants};
use crate::modsym::{LevelDescriptor, ManinSpace, Model, Sign};
use crate::zq::ResidueRing;

/// Plus-part relative Manin spaces at both levels, at precision M.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub layer: Layer,
    pub m: u32,
    pub ring: ResidueRing,
    pub tilde: ManinSpace,
    pub zero: ManinSpace,
}

impl Spaces {
    pub fn new(n: u64, p: u64, m: u32) -> Result<Self> {
        let layer = Layer::new(n, p, None)?;
        let ring = ResidueRing::new(p, m, n)?;
        let tilde = ManinSpace::new(&LevelDescriptor::gamma1p(&layer), ring, Model::Relative, Sign::Plus)?;
        let zero = ManinSpace::new(&LevelDescriptor::gamma0(n)?, ring, Model::Relative, Sign::Plus)?;
        Ok(Spaces { layer, m, ring, tilde, zero })
    }

    /// Only the Γ₀(N) space (used at the reduced precision s).
    pub fn level_zero(n: u64, p: u64, m: u32) -> Result<ManinSpace> {
        let ring = ResidueRing::new(p, m, n)?;
        ManinSpace::new(&LevelDescriptor::gamma0(n)?, ring, Model::Relative, Sign::Plus)
    }
}

/// Primes ℓ ≤ Sturm bound + extra, together with N.
pub fn ideal_primes(space: &ManinSpace, extra: u64) -> Vec<u64> {
    let mut ps = primes_upto(sturm_bound(space) + extra);
    if !ps.contains(&space.n()) {
        ps.push(space.n());
    }
    ps
}

/// A localized space with a cyclic vector x₀ and the Eisenstein ideal module I·W.
#[derive(Clone, Debug)]
pub struct Localized<'a> {
    pub comp: Component<'a>,
    pub cyc: Cyclic,
    pub label: u32,
    pub primes: Vec<u64>,
    pub ideal: IdealModule,
    pub square: Howell,
}

impl<'a> Localized<'a> {
    pub fn new(space: &'a ManinSpace, extra: u64) -> Result<Self> {
        let comp = Component::new(space, &[2, 3])?;
        let primes = ideal_primes(space, extra);
        let (cyc, label) = cyclic_structure(&comp, &primes)?;
        let ideal = IdealModule::new(&cyc, eta_values(&comp, label, &primes)?);
        let square = ideal.square(&cyc);
        Ok(Localized { comp, cyc, label, primes, ideal, square })
    }

    pub fn ring(&self) -> ResidueRing {
        self.comp.ring
    }

    pub fn dim(&self) -> usize {
        self.comp.dim()
    }

    pub fn x0(&self) -> &[u64] {
        &self.cyc.x0
    }

    /// W/I·W.
    pub fn quotient(&self) -> ModuleInvariants {
        cokernel_invariants(&self.ideal.module.as_mat(), &self.ring())
    }

    /// I·W/I²·W.
    pub fn graded(&self) -> ModuleInvariants {
        subquotient_invariants(&self.ideal.module.as_mat(), &self.square.as_mat(), &self.ring())
    }

    /// W/I²·W.
    pub fn square_quotient(&self) -> ModuleInvariants {
        cokernel_invariants(&self.square.as_mat(), &self.ring())
    }

    /// Minimal number of generators of I·W over the local Hecke algebra, whose maximal ideal
    /// is generated by I, p and the listed operators.
    pub fn ideal_generators(&self, ops: &[Mat]) -> usize {
        let r = self.ring();
        let mut b = self.square.rows.clone();
        let p = r.p % r.q;
        b.extend(self.ideal.module.rows.iter().map(|w| w.iter().map(|&x| r.mul(x, p)).collect()));
        for op in ops {
            let id = Mat::identity(self.dim()).reduce_mod(&r);
            let t = op.sub(&id, &r);
            b.extend(self.ideal.module.rows.iter().map(|w| t.vec_mul(w, &r)));
        }
        let inv = subquotient_invariants(&self.ideal.module.as_mat(), &Mat::from_rows(&b, self.dim()), &r);
        inv.exps.len()
    }
}

/// Z/p^M-span of an ideal of Λ given by generators.
pub fn lambda_ideal(gr: &GroupRing, gens: &[&GroupRingElt]) -> Howell {
    let mut rows = vec![];
    for a in gens {
        rows.extend(gr.mult_matrix(a).to_rows());
    }
    Howell::new(&rows, gr.order, &gr.ring)
}

/// The map Λ → M/N, [g]^k ↦ ⟨g⟩^k·x: its kernel in Λ-coordinates, and whether it is onto M/N.
pub fn lambda_map(gr: &GroupRing, dg: &Mat, x: &[u64], module: &Howell, sub: &Howell) -> (Howell, bool) {
    let r = gr.ring;
    let n = gr.order;
    let mut rows = Vec::with_capacity(n + sub.rows.len());
    let mut cur = x.to_vec();
    for _ in 0..n {
        let next = dg.vec_mul(&cur, &r);
        rows.push(cur);
        cur = next;
    }
    rows.extend(sub.rows.iter().cloned());
    let onto = Howell::new(&rows, x.len(), &r).contains_all(module);
    let k = left_kernel(&Mat::from_rows(&rows, x.len()), &r);
    let ker: Vec<Vec<u64>> = k.to_rows().into_iter().map(|v| v[..n].to_vec()).collect();
    (Howell::new(&ker, n, &r), onto)
}

/// a_n(E₀) = Σ_{d | n, (d,N)=1} d·[d] in Λ.
pub fn eisenstein_coefficient(gr: &GroupRing, layer: &Layer, n: u64) -> GroupRingElt {
    let r = gr.ring;
    let mut a = gr.zero();
    for d in 1..=n {
        if n % d == 0 && d % layer.n() != 0 {
            let k = layer.class(d);
            a.coeffs[k] = r.add(a.coeffs[k], d % r.q);
        }
    }
    a
}

/// Checks the Hecke recursion of the formal Eisenstein series up to `bound`:
/// multiplicativity, a_{ℓ^{k+1}} = a_ℓ·a_{ℓ^k} − ℓ[ℓ]·a_{ℓ^{k−1}} for ℓ ≠ N, and a_{N^k} = 1.
pub fn eisenstein_recursion(gr: &GroupRing, layer: &Layer, bound: u64) -> bool {
    let a: Vec<GroupRingElt> = (0..=bound).map(|n| if n == 0 { gr.zero() } else { eisenstein_coefficient(gr, layer, n) }).collect();
    let n = layer.n();
    for x in 2..=bound {
        for y in 2..=bound / x {
            if gcd(x, y) == 1 && a[(x * y) as usize] != gr.mul(&a[x as usize], &a[y as usize]) {
                return false;
            }
        }
    }
    for l in primes_upto(bound) {
        let mut pk = l;
        while pk * l <= bound {
            let next = (pk * l) as usize;
            let expect = if l == n {
                gr.one()
            } else {
                let br = gr.scale(&gr.basis(layer.class(l)), l % gr.ring.q);
                gr.sub(&gr.mul(&a[l as usize], &a[pk as usize]), &gr.mul(&br, &a[(pk / l) as usize]))
            };
            if a[next] != expect {
                return false;
            }
            pk *= l;
        }
    }
    true
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Quotients whose exactness a check depends on. Each is exact once its largest exponent is below M.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    /// W̃/Ĩ₀W̃.
    Tilde,
    /// W̃/Ĩ₀²W̃.
    TildeSquare,
    /// W₀/IW₀.
    Zero,
    /// W₀/I²W₀.
    ZeroSquare,
    /// U/I₀U.
    Abs,
    /// U/(I₀ + J)U.
    AbsBridge,
    /// Λ/(ζ) and Λ/(ζ, ν).
    Lambda,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Tilde,
        Quantity::TildeSquare,
        Quantity::Zero,
        Quantity::ZeroSquare,
        Quantity::Abs,
        Quantity::AbsBridge,
        Quantity::Lambda,
    ];
}

/// The Eisenstein data at (N, p) and precision M.
#[derive(Clone, Debug)]
pub struct Eisen<'a> {
    pub spaces: &'a Spaces,
    pub tilde: Localized<'a>,
    pub zero: Localized<'a>,
    pub gr: GroupRing,
    pub zeta: GroupRingElt,
    pub nu: GroupRingElt,
    /// ⟨g⟩ on W̃.
    pub dg: Mat,
    /// ∂ on W̃ has a saturated image, so U is computed exactly.
    pub saturated: bool,
    /// Rows spanning U = ker ∂ ⊆ W̃.
    pub abs: Mat,
    pub u0: Option<Vec<u64>>,
    /// I₀·U and (I₀ + J)·U.
    pub iu: Howell,
    pub iju: Howell,
    /// Degeneracy W̃ → W₀ (rows = images of coordinate vectors).
    pub deg: Mat,
}

impl<'a> Eisen<'a> {
    pub fn new(spaces: &'a Spaces, extra: u64) -> Result<Self> {
        let layer = &spaces.layer;
        let (n, p, m) = (layer.n(), layer.p, spaces.m);
        let r = spaces.ring;
        let tilde = Localized::new(&spaces.tilde, extra)?;
        let zero = Localized::new(&spaces.zero, extra)?;
        let gr = GroupRing::for_layer(layer, m)?;
        let zeta = zeta_element(n, p, m)?;
        let nu = nu_element(p, layer.t, m)?;
        let dg = tilde.comp.diamond(layer.units.g)?;
        let bd = tilde.comp.boundary()?;
        let saturated = smith(&bd, &r, false, false).diag.iter().all(|&e| e == 0);
        let abs = left_kernel(&bd, &r);
        let abs_rows = abs.to_rows();
        let iu = tilde.ideal.times(&tilde.cyc, &abs_rows);
        let mut ij = iu.rows.clone();
        let id = Mat::identity(tilde.dim());
        let jm = dg.sub(&id, &r);
        ij.extend(abs_rows.iter().map(|u| jm.vec_mul(u, &r)));
        let iju = Howell::new(&ij, tilde.dim(), &r);
        let u0 = find_generator(&tilde.cyc, &abs_rows);
        let mut deg = Mat::zeros(tilde.dim(), zero.dim());
        let lev0 = &spaces.zero.level;
        let lev1 = &spaces.tilde.level;
        for j in 0..tilde.dim() {
            let (c, d) = lev1.rep(tilde.comp.coordinate_label(j));
            let mut v = vec![0; spaces.zero.dim()];
            spaces.zero.add_label(&mut v, lev0.label_u(c, d), 1);
            deg.row_mut(j).copy_from_slice(&zero.comp.project(&v));
        }
        Ok(Eisen { spaces, tilde, zero, gr, zeta, nu, dg, saturated, abs, u0, iu, iju, deg })
    }

    pub fn ring(&self) -> ResidueRing {
        self.spaces.ring
    }

    fn full(&self, dim: usize) -> Howell {
        let r = self.ring();
        Howell::new(&Mat::identity(dim).reduce_mod(&r).to_rows(), dim, &r)
    }

    pub fn abs_span(&self) -> Howell {
        Howell::new(&self.abs.to_rows(), self.tilde.dim(), &self.ring())
    }

    /// U/I₀U.
    pub fn abs_quotient(&self) -> ModuleInvariants {
        subquotient_invariants(&self.abs, &self.iu.as_mat(), &self.ring())
    }

    /// U/(I₀ + J)U.
    pub fn abs_bridge_quotient(&self) -> ModuleInvariants {
        subquotient_invariants(&self.abs, &self.iju.as_mat(), &self.ring())
    }

    pub fn zeta_ideal(&self) -> Howell {
        lambda_ideal(&self.gr, &[&self.zeta])
    }

    pub fn zeta_nu_ideal(&self) -> Howell {
        lambda_ideal(&self.gr, &[&self.zeta, &self.nu])
    }

    /// Λ/(ζ).
    pub fn lambda_zeta(&self) -> ModuleInvariants {
        cokernel_invariants(&self.zeta_ideal().as_mat(), &self.gr.ring)
    }

    /// Λ/(ζ, ν).
    pub fn lambda_zeta_nu(&self) -> ModuleInvariants {
        cokernel_invariants(&self.zeta_nu_ideal().as_mat(), &self.gr.ring)
    }

    /// Kernel of [d] ↦ ⟨d⟩x₀ into W̃/Ĩ₀W̃, and surjectivity.
    pub fn tilde_map(&self) -> (Howell, bool) {
        let full = self.full(self.tilde.dim());
        lambda_map(&self.gr, &self.dg, self.tilde.x0(), &full, &self.tilde.ideal.module)
    }

    /// Kernel of [d] ↦ ⟨d⟩u₀ into U/I₀U, and surjectivity.
    pub fn abs_map(&self) -> Option<(Howell, bool)> {
        let u0 = self.u0.as_ref()?;
        Some(lambda_map(&self.gr, &self.dg, u0, &self.abs_span(), &self.iu))
    }

    pub fn invariants_of(&self, q: Quantity) -> Vec<ModuleInvariants> {
        match q {
            Quantity::Tilde => vec![self.tilde.quotient()],
            Quantity::TildeSquare => vec![self.tilde.square_quotient()],
            Quantity::Zero => vec![self.zero.quotient()],
            Quantity::ZeroSquare => vec![self.zero.square_quotient()],
            Quantity::Abs => vec![self.abs_quotient()],
            Quantity::AbsBridge => vec![self.abs_bridge_quotient()],
            Quantity::Lambda => vec![self.lambda_zeta(), self.lambda_zeta_nu()],
        }
    }

    /// Largest exponent among the listed quotients.
    pub fn max_exponent(&self, qs: &[Quantity]) -> u32 {
        qs.iter().flat_map(|&q| self.invariants_of(q)).flat_map(|i| i.exps).max().unwrap_or(0)
    }

    /// Every listed quotient is exact at this precision.
    pub fn certified_for(&self, qs: &[Quantity]) -> bool {
        let needs_abs = qs.iter().any(|q| matches!(q, Quantity::Abs | Quantity::AbsBridge));
        (self.saturated || !needs_abs) && self.max_exponent(qs) < self.spaces.m
    }

    pub fn certified(&self) -> bool {
        self.certified_for(&Quantity::ALL)
    }

    /// ⟨d⟩ on W̃ equals ⟨g⟩^{class(d)} for the listed d.
    pub fn diamonds_factor(&self, ds: &[u64]) -> Result<bool> {
        let r = self.ring();
        for &d in ds {
            let direct = self.tilde.comp.diamond(d)?;
            let mut pw = Mat::identity(self.tilde.dim()).reduce_mod(&r);
            for _ in 0..self.spaces.layer.class(d) {
                pw = pw.mul(&self.dg, &r);
            }
            if direct != pw {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// T_n·x₀ ≡ a_n(E₀)·x₀ modulo Ĩ₀W̃ for 1 ≤ n ≤ bound, with a_n acting through [d] ↦ ⟨d⟩.
    pub fn q_expansion_matches(&self, bound: u64) -> Result<bool> {
        let r = self.ring();
        let layer = &self.spaces.layer;
        let n = layer.n();
        let comp = &self.tilde.comp;
        let mut tl: Vec<(u64, Mat, Mat)> = vec![];
        for l in primes_upto(bound) {
            tl.push((l, comp.hecke(l)?, comp.diamond(if l == n { 1 } else { l })?));
        }
        let x0 = self.tilde.x0().to_vec();
        let apply = |v: &[u64], l: u64, k: u32| -> Vec<u64> {
            let (_, t, d) = tl.iter().find(|e| e.0 == l).unwrap();
            let mut prev = v.to_vec();
            let mut cur = t.vec_mul(v, &r);
            if k == 0 {
                return prev;
            }
            for _ in 1..k {
                let mut next = t.vec_mul(&cur, &r);
                if l != n {
                    let dv = d.vec_mul(&prev, &r);
                    let c = l % r.q;
                    for (x, y) in next.iter_mut().zip(dv) {
                        *x = r.sub(*x, r.mul(c, y));
                    }
                }
                prev = cur;
                cur = next;
            }
            cur
        };
        let mut powers = vec![Mat::identity(self.tilde.dim()).reduce_mod(&r)];
        for k in 1..self.gr.order {
            powers.push(powers[k - 1].mul(&self.dg, &r));
        }
        for m in 1..=bound {
            let mut v = x0.clone();
            let mut rest = m;
            for &(l, _, _) in &tl {
                let mut k = 0;
                while rest % l == 0 {
                    rest /= l;
                    k += 1;
                }
                if k > 0 {
                    v = apply(&v, l, k);
                }
            }
            let a = eisenstein_coefficient(&self.gr, layer, m);
            for (k, &c) in a.coeffs.iter().enumerate() {
                if c != 0 {
                    let w = powers[k].vec_mul(&x0, &r);
                    for (x, y) in v.iter_mut().zip(w) {
                        *x = r.sub(*x, r.mul(c, y));
                    }
                }
            }
            if !self.tilde.ideal.module.contains(&v) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// (ζ, −(N−1)/(24p^t)·ν) = (ζ, ν) as ideals of Λ.
    pub fn cuspidality_ideal_matches(&self) -> bool {
        let c = cuspidal_constant(&self.spaces.layer, &self.gr.ring);
        let cnu = self.gr.scale(&self.nu, c);
        lambda_ideal(&self.gr, &[&self.zeta, &cnu]).same_span(&self.zeta_nu_ideal())
    }

    /// The degeneracy map sends U into I·W₀ and (I₀ + J)U into I²·W₀, and U + I²W₀ = I·W₀.
    pub fn bridge_bijective(&self) -> bool {
        let r = self.ring();
        let iw = &self.zero.ideal.module;
        let img: Vec<Vec<u64>> = self.abs.to_rows().iter().map(|u| self.deg.vec_mul(u, &r)).collect();
        if !img.iter().all(|w| iw.contains(w)) {
            return false;
        }
        if !self.iju.rows.iter().all(|u| self.zero.square.contains(&self.deg.vec_mul(u, &r))) {
            return false;
        }
        let mut rows = img;
        rows.extend(self.zero.square.rows.iter().cloned());
        Howell::new(&rows, self.zero.dim(), &r).same_span(iw)
    }

    /// The class of ξ([a]) in W₀.
    pub fn xi_class(&self, a: i64) -> Result<Vec<u64>> {
        Ok(self.zero.comp.project(&self.spaces.zero.xi_zero(a)?))
    }
}

/// A Hecke generator of the submodule spanned by `rows`, searched among the rows and their pairwise sums.
fn find_generator(cyc: &Cyclic, rows: &[Vec<u64>]) -> Option<Vec<u64>> {
    let r = cyc.ring;
    let target = Howell::new(rows, cyc.dim, &r);
    let cands = target.rows.clone();
    let gen = |v: &Vec<u64>| cyc.submodule(std::slice::from_ref(v)).same_span(&target);
    if target.rows.is_empty() {
        return Some(vec![0; cyc.dim]);
    }
    for v in &cands {
        if gen(v) {
            return Some(v.clone());
        }
    }
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let v: Vec<u64> = cands[i].iter().zip(&cands[j]).map(|(&a, &b)| r.add(a, b)).collect();
            if gen(&v) {
                return Some(v);
            }
        }
    }
    let all = cands.iter().fold(vec![0; cyc.dim], |acc, v| acc.iter().zip(v).map(|(&a, &b)| r.add(a, b)).collect());
    gen(&all).then_some(all)
}

/// Runs `f` on Eisenstein data at the least precision M ≥ t + 2 (or `start`) at which the listed
/// quotients are exact. Fails when the modulus p^M would overflow.
pub fn with_certified<R>(
    n: u64,
    p: u64,
    start: Option<u32>,
    extra: u64,
    needs: &[Quantity],
    f: impl FnOnce(&Eisen) -> R,
) -> Result<R> {
    let layer = Layer::new(n, p, None)?;
    let mut m = start.unwrap_or(layer.t + 2);
    loop {
        let spaces = Spaces::new(n, p, m)?;
        let e = Eisen::new(&spaces, extra)?;
        if e.certified_for(needs) {
            return Ok(f(&e));
        }
        m += 1;
        if ResidueRing::new(p, m, n).is_err() {
            return Err(Error::Precondition(format!("precision guard exhausted at M={}", m - 1)));
        }
    }
}

/// −(N−1)/(24·p^t) mod p^M.
pub fn cuspidal_constant(layer: &Layer, r: &ResidueRing) -> u64 {
    let num = ((layer.n() - 1) / layer.pt()) as i64;
    let inv24 = inv_mod(24, r.q).expect("p ≥ 5");
    r.neg(r.mul(r.reduce(num), inv24))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eleven_five() {
        with_certified(11, 5, None, 0, &Quantity::ALL, |e| {
            assert_eq!(e.tilde.quotient(), e.lambda_zeta());
            assert_eq!(e.zero.quotient().exps, vec![1]);
            let (ker, onto) = e.tilde_map();
            assert!(onto && ker.same_span(&e.zeta_ideal()));
            assert!(e.cuspidality_ideal_matches());
        })
        .unwrap();
    }

    #[test]
    fn recursion_holds() {
        let layer = Layer::new(31, 5, None).unwrap();
        let gr = GroupRing::for_layer(&layer, 3).unwrap();
        assert!(eisenstein_recursion(&gr, &layer, 64));
        assert_eq!(eisenstein_coefficient(&gr, &layer, 31), gr.one());
    }
}
