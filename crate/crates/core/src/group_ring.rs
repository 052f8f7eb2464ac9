//! The group ring (Z/p^M)[P] for P cyclic of order p^t, Stickelberger and norm
//! elements, and invariants of finitely presented modules.

use crate::arith::{bernoulli2, Layer};
use crate::error::{Error, Result};
use crate::linalg::{cokernel_invariants, subquotient_invariants, Mat};
use crate::zq::ResidueRing;

pub use crate::linalg::ModuleInvariants;

/// Group ring of the cyclic group of order `order` with generator [g] at index 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupRing {
    pub ring: ResidueRing,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingElt {
    pub coeffs: Vec<u64>,
}

impl GroupRing {
    pub fn new(ring: ResidueRing, order: usize) -> Self {
        GroupRing { ring, order }
    }

    /// Λ⁽ᵖ⁾ for a layer at precision M.
    pub fn for_layer(layer: &Layer, m: u32) -> Result<Self> {
        let ring = ResidueRing::new(layer.p, m, layer.n())?;
        Ok(GroupRing { ring, order: layer.pt() as usize })
    }

    pub fn zero(&self) -> GroupRingElt {
        GroupRingElt { coeffs: vec![0; self.order] }
    }

    pub fn one(&self) -> GroupRingElt {
        self.basis(0)
    }

    /// [g]^k.
    pub fn basis(&self, k: usize) -> GroupRingElt {
        let mut e = self.zero();
        e.coeffs[k % self.order] = 1 % self.ring.q;
        e
    }

    /// [g] − 1.
    pub fn j_gen(&self) -> GroupRingElt {
        self.sub(&self.basis(1), &self.one())
    }

    pub fn add(&self, a: &GroupRingElt, b: &GroupRingElt) -> GroupRingElt {
        GroupRingElt { coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| self.ring.add(x, y)).collect() }
    }

    pub fn sub(&self, a: &GroupRingElt, b: &GroupRingElt) -> GroupRingElt {
        GroupRingElt { coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| self.ring.sub(x, y)).collect() }
    }

    pub fn scale(&self, a: &GroupRingElt, c: u64) -> GroupRingElt {
        GroupRingElt { coeffs: a.coeffs.iter().map(|&x| self.ring.mul(x, c)).collect() }
    }

    pub fn mul(&self, a: &GroupRingElt, b: &GroupRingElt) -> GroupRingElt {
        let n = self.order;
        let mut c = vec![0u64; n];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                if y != 0 {
                    let k = (i + j) % n;
                    c[k] = self.ring.add(c[k], self.ring.mul(x, y));
                }
            }
        }
        GroupRingElt { coeffs: c }
    }

    pub fn pow(&self, a: &GroupRingElt, e: usize) -> GroupRingElt {
        let mut r = self.one();
        for _ in 0..e {
            r = self.mul(&r, a);
        }
        r
    }

    pub fn augmentation(&self, a: &GroupRingElt) -> u64 {
        a.coeffs.iter().fold(0, |s, &x| self.ring.add(s, x))
    }

    /// Matrix of multiplication by a on the basis [g]^k (row k is a·[g]^k).
    pub fn mult_matrix(&self, a: &GroupRingElt) -> Mat {
        let n = self.order;
        let mut m = Mat::zeros(n, n);
        for k in 0..n {
            for (i, &x) in a.coeffs.iter().enumerate() {
                m.set(k, (i + k) % n, x);
            }
        }
        m
    }
}

/// ζ⁽ᵖ⁾ = Σ_x B₂(x/N)·[x̄].
pub fn zeta_element(n: u64, p: u64, m: u32) -> Result<GroupRingElt> {
    let layer = Layer::new(n, p, None)?;
    let gr = GroupRing::for_layer(&layer, m)?;
    let mut z = gr.zero();
    for x in 1..n {
        let c = layer.class(x);
        z.coeffs[c] = gr.ring.add(z.coeffs[c], bernoulli2(x, n, &gr.ring));
    }
    Ok(z)
}

/// ν⁽ᵖ⁾ = Σ_{x∈P} [x].
pub fn nu_element(p: u64, t: u32, m: u32) -> Result<GroupRingElt> {
    let ring = ResidueRing::raw(p, m)?;
    Ok(GroupRingElt { coeffs: vec![1 % ring.q; p.pow(t) as usize] })
}

/// Elementary divisors of (Z/p^M)^generators / rowspace(relations).
pub fn presentation_quotient(generators: usize, relations: &Mat, ring: &ResidueRing) -> ModuleInvariants {
    assert_eq!(relations.cols, generators);
    cokernel_invariants(relations, ring)
}

/// A module Λ^rank / (relations), each relation a vector of `rank` group-ring elements.
#[derive(Clone, Debug)]
pub struct LambdaPresentation {
    pub gr: GroupRing,
    pub rank: usize,
    pub relations: Vec<Vec<GroupRingElt>>,
}

impl LambdaPresentation {
    /// Λ / (a).
    pub fn cyclic(gr: GroupRing, a: &GroupRingElt) -> Self {
        LambdaPresentation { gr, rank: 1, relations: vec![vec![a.clone()]] }
    }

    fn flat(&self, v: &[GroupRingElt], shift: usize) -> Vec<u64> {
        let n = self.gr.order;
        let mut out = vec![0u64; self.rank * n];
        for (i, e) in v.iter().enumerate() {
            for (k, &x) in e.coeffs.iter().enumerate() {
                out[i * n + (k + shift) % n] = x;
            }
        }
        out
    }

    /// Z/p^M-generators of the relation module.
    pub fn relation_rows(&self) -> Vec<Vec<u64>> {
        let mut rows = vec![];
        for rel in &self.relations {
            for s in 0..self.gr.order {
                rows.push(self.flat(rel, s));
            }
        }
        rows
    }

    /// Z/p^M-generators of J^n·Λ^rank.
    fn jpow_rows(&self, n: usize) -> Vec<Vec<u64>> {
        let jn = self.gr.pow(&self.gr.j_gen(), n);
        let mut rows = vec![];
        for i in 0..self.rank {
            for s in 0..self.gr.order {
                let mut v = vec![self.gr.zero(); self.rank];
                v[i] = jn.clone();
                rows.push(self.flat(&v, s));
            }
        }
        rows
    }

    pub fn invariants(&self) -> ModuleInvariants {
        let cols = self.rank * self.gr.order;
        cokernel_invariants(&Mat::from_rows(&self.relation_rows(), cols), &self.gr.ring)
    }
}

/// Invariants of J^n·M / J^{n+1}·M.
pub fn graded_jadic(module: &LambdaPresentation, n: i64) -> Result<ModuleInvariants> {
    if n < 0 {
        return Err(Error::Precondition(format!("negative filtration index {n}")));
    }
    let n = n as usize;
    let cols = module.rank * module.gr.order;
    let rel = module.relation_rows();
    let mut a = module.jpow_rows(n);
    a.extend(rel.iter().cloned());
    let mut b = module.jpow_rows(n + 1);
    b.extend(rel);
    Ok(subquotient_invariants(&Mat::from_rows(&a, cols), &Mat::from_rows(&b, cols), &module.gr.ring))
}
