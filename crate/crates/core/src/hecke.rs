//! Hecke and diamond operators via Heilbronn matrices, matrix-span Hecke
//! algebras and Eisenstein ideals.

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::linalg::{subquotient_invariants, Howell, Mat, ModuleInvariants};
use crate::modsym::{DegenerateMismatch, ManinSpace};
use crate::zq::ResidueRing;

pub type Heilbronn = Vec<[i64; 4]>;

/// Continued-fraction Heilbronn family for a prime ℓ (four matrices for ℓ = 2).
pub fn heilbronn(l: u64) -> Result<Heilbronn> {
    if !is_prime(l) {
        return Err(Error::Precondition(format!("{l} is not prime")));
    }
    if l == 2 {
        return Ok(vec![[1, 0, 0, 2], [2, 0, 0, 1], [2, 1, 0, 1], [1, 0, 1, 2]]);
    }
    let p = l as i64;
    let mut out = vec![[1, 0, 0, p]];
    for r in -(p - 1) / 2..=(p - 1) / 2 {
        let (mut x1, mut x2, mut y1, mut y2) = (p, -r, 0i64, 1i64);
        let (mut a, mut b) = (-p, r);
        out.push([x1, x2, y1, y2]);
        while b != 0 {
            let q = (a as f64 / b as f64).round() as i64;
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push([x1, x2, y1, y2]);
        }
    }
    Ok(out)
}

/// Merel's family {ad − bc = n, a > b ≥ 0, d > c ≥ 0}.
pub fn heilbronn_merel(n: u64) -> Heilbronn {
    let n = n as i64;
    let mut out = vec![];
    for a in 1..=n {
        for b in 0..a {
            // d = (n + b·c)/a and d > c  ⇔  c·(a − b) < n
            let cmax = (n - 1) / (a - b);
            for c in 0..=cmax {
                let num = n + b * c;
                if num % a == 0 {
                    out.push([a, b, c, num / a]);
                }
            }
        }
    }
    out
}

/// T_ℓ = ⟨ℓ⟩·H_ℓ for ℓ ∤ N, where H_ℓ is the Heilbronn operator on the symbol model.
pub fn hecke_prime_family(space: &ManinSpace, l: u64) -> Result<Heilbronn> {
    let n = space.n();
    if l == n {
        return Ok(heilbronn_merel(n));
    }
    let fam = heilbronn(l)?;
    // fold ⟨ℓ⟩ into the family: [x] ↦ Σ [ℓ⁻¹x·h]
    let li = crate::arith::inv_mod(l as i64, n).unwrap() as i64;
    Ok(fam.into_iter().map(|h| [li * h[0], li * h[1], li * h[2], li * h[3]]).collect())
}

fn mismatch(e: DegenerateMismatch) -> Error {
    Error::Precondition(format!("Heilbronn image leaves the relative model at cusp class {}", e.0))
}

/// Matrix of T_n (rows are images of basis vectors).
pub fn hecke_matrix(space: &ManinSpace, n: u64) -> Result<Mat> {
    let r = space.ring;
    let level = space.n();
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    if n == 1 {
        return Ok(Mat::identity(space.dim()));
    }
    if is_prime(n) {
        let fam = hecke_prime_family(space, n)?;
        return space.family_matrix(&fam).map_err(mismatch);
    }
    // factor n
    let mut m = n;
    let mut l = 2;
    while m % l != 0 {
        l += 1;
    }
    let mut k = 0;
    while m % l == 0 {
        m /= l;
        k += 1;
    }
    if m > 1 {
        let a = hecke_matrix(space, l.pow(k))?;
        let b = hecke_matrix(space, m)?;
        return Ok(a.mul(&b, &r));
    }
    // prime power ℓ^k
    let tl = hecke_matrix(space, l)?;
    if l == level {
        let mut acc = tl.clone();
        for _ in 1..k {
            acc = acc.mul(&tl, &r);
        }
        return Ok(acc);
    }
    let dl = space.diamond_matrix(l as i64)?.scale(l % r.q, &r);
    let mut prev = Mat::identity(space.dim());
    let mut cur = tl.clone();
    for _ in 1..k {
        let next = cur.mul(&tl, &r).sub(&prev.mul(&dl, &r), &r);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// A commutative algebra of n×n matrices, given by a spanning basis closed under products.
#[derive(Clone, Debug)]
pub struct HeckeAlgebraBasis {
    pub ring: ResidueRing,
    pub n: usize,
    pub generators: Vec<Mat>,
    pub basis: Vec<Mat>,
    span: Howell,
}

fn flat(m: &Mat) -> Vec<u64> {
    m.data.clone()
}

impl HeckeAlgebraBasis {
    /// Closure of the unital algebra generated by the given matrices.
    pub fn generate(generators: Vec<Mat>, n: usize, ring: ResidueRing) -> Result<Self> {
        let mut basis = vec![Mat::identity(n)];
        let mut span = Howell::new(&[flat(&basis[0])], n * n, &ring);
        let mut frontier = basis.clone();
        let mut rounds = 0;
        while !frontier.is_empty() {
            rounds += 1;
            if rounds > 4 * n * n + 8 {
                return Err(Error::Precondition("algebra closure did not stabilize".into()));
            }
            let mut next = vec![];
            for f in &frontier {
                for g in &generators {
                    let prod = f.mul(g, &ring);
                    if !span.contains(&flat(&prod)) {
                        basis.push(prod.clone());
                        let rows: Vec<Vec<u64>> = basis.iter().map(flat).collect();
                        span = Howell::new(&rows, n * n, &ring);
                        next.push(prod);
                    }
                }
            }
            frontier = next;
        }
        Ok(HeckeAlgebraBasis { ring, n, generators, basis, span })
    }

    pub fn contains(&self, m: &Mat) -> bool {
        self.span.contains(&flat(m))
    }

    pub fn span(&self) -> &Howell {
        &self.span
    }

    pub fn rank(&self) -> usize {
        self.span.invariants().free_rank(self.ring.m)
    }

    pub fn invariants(&self) -> ModuleInvariants {
        self.span.invariants()
    }

    pub fn commutative(&self) -> bool {
        let r = &self.ring;
        for (i, a) in self.generators.iter().enumerate() {
            for b in &self.generators[i + 1..] {
                if a.mul(b, r) != b.mul(a, r) {
                    return false;
                }
            }
        }
        true
    }

    /// Ideal generated by the given elements.
    pub fn ideal(&self, gens: &[Mat], kind: IdealKind) -> IdealBasis {
        let mut rows = vec![];
        let mut elems = vec![];
        for g in gens {
            for b in &self.basis {
                let m = g.mul(b, &self.ring);
                rows.push(flat(&m));
                elems.push(m);
            }
        }
        let span = Howell::new(&rows, self.n * self.n, &self.ring);
        IdealBasis { kind, generators: gens.to_vec(), span }
    }

    /// Invariants of algebra / ideal.
    pub fn quotient_invariants(&self, ideal: &IdealBasis) -> ModuleInvariants {
        subquotient_invariants(&self.span.as_mat(), &ideal.span.as_mat(), &self.ring)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealKind {
    IMazur,
    I0Tilde,
    I0,
}

#[derive(Clone, Debug)]
pub struct IdealBasis {
    pub kind: IdealKind,
    pub generators: Vec<Mat>,
    pub span: Howell,
}

/// Σ ηᵢ·M for a submodule M given by rows (row-vector convention: v ↦ v·η).
pub fn ideal_action(gens: &[Mat], module_rows: &Mat, ring: &ResidueRing) -> Mat {
    let mut rows = vec![];
    for g in gens {
        let img = module_rows.mul(g, ring);
        rows.extend(img.to_rows());
    }
    Mat::from_rows(&rows, module_rows.cols)
}

/// The Sturm bound for weight 2: index(Γ)/6, rounded up, plus one.
pub fn sturm_bound(space: &ManinSpace) -> u64 {
    (space.level.label_count() as u64).div_ceil(6) + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Layer;
    use crate::modsym::{LevelDescriptor, Model, Sign};

    fn det(h: &[i64; 4]) -> i64 {
        h[0] * h[3] - h[1] * h[2]
    }

    #[test]
    fn heilbronn_families() {
        let h2 = heilbronn(2).unwrap();
        assert_eq!(h2.len(), 4);
        assert!(h2.contains(&[1, 0, 0, 2]) && h2.contains(&[2, 0, 0, 1]));
        for l in [3u64, 5, 7, 11, 13] {
            assert!(heilbronn(l).unwrap().iter().all(|h| det(h) == l as i64));
        }
        assert!(heilbronn(9).is_err());
        let sizes: Vec<usize> = [2u64, 3, 5, 7].iter().map(|&l| heilbronn_merel(l).len()).collect();
        assert_eq!(sizes, vec![4, 7, 15, 25]);
        assert!(heilbronn_merel(11).iter().all(|h| det(h) == 11));
    }

    #[test]
    fn cremona_and_merel_agree() {
        let layer = Layer::new(31, 5, None).unwrap();
        let r = ResidueRing::raw(5, 3).unwrap();
        for lev in [LevelDescriptor::gamma0(31).unwrap(), LevelDescriptor::gamma1p(&layer)] {
            let s = ManinSpace::new(&lev, r, Model::Relative, Sign::Both).unwrap();
            for l in [2u64, 3, 5, 7, 11] {
                let a = s.family_matrix(&heilbronn(l).unwrap()).unwrap();
                let b = s.family_matrix(&heilbronn_merel(l)).unwrap();
                assert_eq!(a, b, "l={l}");
            }
        }
    }

    #[test]
    fn eleven_eigenvalues() {
        let lev = LevelDescriptor::gamma0(11).unwrap();
        let r = ResidueRing::raw(7, 3).unwrap();
        let s = ManinSpace::new(&lev, r, Model::Full, Sign::Both).unwrap();
        let t2 = hecke_matrix(&s, 2).unwrap();
        // (T2 + 2)²(T2 − 3) = 0 and neither factor alone kills the space
        let id = Mat::identity(s.dim());
        let a = t2.add(&id.scale(2, &r), &r);
        let b = t2.sub(&id.scale(3, &r), &r);
        assert!(a.mul(&a, &r).mul(&b, &r).is_zero());
        assert!(!a.mul(&b, &r).is_zero() || !b.is_zero());
        let h = ManinSpace::new(&lev, r, Model::Relative, Sign::Both).unwrap();
        let t2h = hecke_matrix(&h, 2).unwrap();
        assert_eq!(t2h, Mat::identity(2).scale(r.q - 2, &r));
    }
}
