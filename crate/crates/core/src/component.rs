//! Eisenstein localization of a Manin space, and its Hecke algebra through a cyclic vector.
//!
//! The Fitting decomposition of an Eisenstein operator η splits H = W ⊕ K with η nilpotent on W
//! and invertible on K. Both summands are Hecke-stable, so W is modelled as the quotient H/K
//! and every Hecke operator only needs to be evaluated on single Manin symbols.

use crate::error::{Error, Result};
use crate::hecke::hecke_prime_family;
use crate::linalg::{smith, Howell, Mat};
use crate::modsym::ManinSpace;
use crate::zq::ResidueRing;

/// W = H/K where K is the sum of the Fitting images of the chosen η_ℓ.
#[derive(Clone, Debug)]
pub struct Component<'a> {
    pub space: &'a ManinSpace,
    pub ring: ResidueRing,
    kill: Howell,
    basis: Vec<Vec<u64>>,
    free: Vec<usize>,
    proj: Mat,
}

/// Row span of A^n for n past the length of the module (the Fitting image of A).
pub fn fitting_image(a: &Mat, r: &ResidueRing) -> Mat {
    let len = (a.rows.max(1) as u64) * r.m as u64;
    let mut b = a.clone();
    let mut k = 1u64;
    while k <= len {
        b = b.mul(&b, r);
        k *= 2;
    }
    b
}

impl<'a> Component<'a> {
    /// Localizes away from the Fitting images of η_ℓ for each listed prime ℓ ≠ N.
    pub fn new(space: &'a ManinSpace, primes: &[u64]) -> Result<Self> {
        let r = space.ring;
        let n = space.dim();
        let mut c = Component { space, ring: r, kill: Howell::new(&[], n, &r), basis: vec![], free: (0..n).collect(), proj: Mat::identity(n) };
        for &l in primes {
            if l == space.n() || c.dim() == 0 {
                continue;
            }
            let img = fitting_image(&c.eta(l)?, &r);
            let mut gens = c.basis.clone();
            gens.extend(img.to_rows().iter().filter(|w| w.iter().any(|&x| x != 0)).map(|w| c.lift(w)));
            c.set_kill(&gens)?;
        }
        Ok(c)
    }

    /// Installs K = span(gens), which must be a free direct summand. Elimination on unit
    /// entries in arbitrary columns brings a basis of K to the identity on a column set S,
    /// and the coordinates outside S then describe W = H/K.
    fn set_kill(&mut self, gens: &[Vec<u64>]) -> Result<()> {
        let r = self.ring;
        let n = self.space.dim();
        let mut rows: Vec<Vec<u64>> = gens.iter().filter(|g| g.iter().any(|&x| x != 0)).cloned().collect();
        let mut basis: Vec<Vec<u64>> = vec![];
        let mut cols: Vec<usize> = vec![];
        loop {
            let found = rows.iter().enumerate().find_map(|(i, row)| row.iter().position(|&x| r.is_unit(x)).map(|c| (i, c)));
            let Some((i, c)) = found else { break };
            let mut b = rows.swap_remove(i);
            let inv = r.inv(b[c]).unwrap();
            for x in b.iter_mut() {
                *x = r.mul(*x, inv);
            }
            for other in rows.iter_mut().chain(basis.iter_mut()) {
                let f = other[c];
                if f != 0 {
                    for (x, &y) in other.iter_mut().zip(&b) {
                        *x = r.sub(*x, r.mul(f, y));
                    }
                }
            }
            rows.retain(|row| row.iter().any(|&x| x != 0));
            basis.push(b);
            cols.push(c);
        }
        if !rows.is_empty() {
            return Err(Error::Precondition("Fitting complement is not a direct summand".into()));
        }
        let mut in_s = vec![false; n];
        for &c in &cols {
            in_s[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !in_s[c]).collect();
        let mut proj = Mat::zeros(n, free.len());
        for (j, &f) in free.iter().enumerate() {
            proj.set(f, j, 1 % r.q);
        }
        for (row, &c) in basis.iter().zip(&cols) {
            for (j, &f) in free.iter().enumerate() {
                proj.set(c, j, r.neg(row[f]));
            }
        }
        self.kill = Howell::new(&basis, n, &r);
        self.basis = basis;
        self.free = free;
        self.proj = proj;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Rank of the discarded summand K.
    pub fn complement_rank(&self) -> usize {
        self.basis.len()
    }

    pub fn complement(&self) -> &Howell {
        &self.kill
    }

    /// Class in W of a vector of H.
    pub fn project(&self, v: &[u64]) -> Vec<u64> {
        self.proj.vec_mul(v, &self.ring)
    }

    /// A representative in H of a class in W.
    pub fn lift(&self, w: &[u64]) -> Vec<u64> {
        let mut v = vec![0; self.space.dim()];
        for (j, &f) in self.free.iter().enumerate() {
            v[f] = w[j];
        }
        v
    }

    /// The Manin label representing the j-th coordinate vector of W.
    pub fn coordinate_label(&self, j: usize) -> u32 {
        self.space.basis_label(self.free[j])
    }

    fn family_on_label(&self, label: u32, fam: &[[i64; 4]]) -> Result<Vec<u64>> {
        let mut out = vec![0; self.space.dim()];
        self.space
            .apply_family(&[(label, 1)], fam, &mut out)
            .map_err(|e| Error::Precondition(format!("Heilbronn image left the model at cusp class {}", e.0)))?;
        Ok(out)
    }

    /// T_ℓ[label] in H.
    pub fn hecke_on_label(&self, l: u64, label: u32) -> Result<Vec<u64>> {
        self.family_on_label(label, &hecke_prime_family(self.space, l)?)
    }

    /// ⟨j⟩[label] in H.
    pub fn diamond_on_label(&self, j: u64, label: u32) -> Vec<u64> {
        let lev = &self.space.level;
        let n = lev.n();
        let ji = lev.units.inv(j % n);
        let (c, d) = lev.rep(label);
        let mut out = vec![0; self.space.dim()];
        let ok = self.space.add_label(&mut out, lev.label_u(c * ji % n, d * ji % n), 1);
        assert!(ok, "diamond left the model");
        out
    }

    /// η_ℓ[label] with η_ℓ = T_ℓ − 1 − ℓ⟨ℓ⟩ for ℓ ≠ N and η_N = T_N − 1.
    pub fn eta_on_label(&self, l: u64, label: u32) -> Result<Vec<u64>> {
        let r = &self.ring;
        let mut v = self.hecke_on_label(l, label)?;
        self.space.add_label(&mut v, label, r.q - 1);
        if l != self.space.n() {
            let d = self.diamond_on_label(l, label);
            let c = r.neg(l % r.q);
            for (x, y) in v.iter_mut().zip(d) {
                *x = r.add(*x, r.mul(c, y));
            }
        }
        Ok(v)
    }

    /// Matrix on W (rows = images of coordinate vectors) of a label-wise operator.
    pub fn operator(&self, f: impl Fn(u32) -> Result<Vec<u64>>) -> Result<Mat> {
        let a = self.dim();
        let mut m = Mat::zeros(a, a);
        for j in 0..a {
            let img = self.project(&f(self.coordinate_label(j))?);
            m.row_mut(j).copy_from_slice(&img);
        }
        Ok(m)
    }

    pub fn hecke(&self, l: u64) -> Result<Mat> {
        self.operator(|lab| self.hecke_on_label(l, lab))
    }

    pub fn diamond(&self, j: u64) -> Result<Mat> {
        if j % self.space.n() == 0 {
            return Err(Error::NotUnit(j as i64));
        }
        self.operator(|lab| Ok(self.diamond_on_label(j, lab)))
    }

    pub fn eta(&self, l: u64) -> Result<Mat> {
        self.operator(|lab| self.eta_on_label(l, lab))
    }

    /// ∂ on W. Requires ∂ to vanish on the discarded summand.
    pub fn boundary(&self) -> Result<Mat> {
        let r = &self.ring;
        let nc = self.space.cusp_count();
        let full = self.space.boundary_matrix();
        for row in &self.basis {
            if full.vec_mul(row, r).iter().any(|&x| x != 0) {
                return Err(Error::Precondition("boundary does not factor through the component".into()));
            }
        }
        let mut m = Mat::zeros(self.dim(), nc);
        for (j, &f) in self.free.iter().enumerate() {
            m.row_mut(j).copy_from_slice(full.row(f));
        }
        Ok(m)
    }
}

/// A cyclic Hecke module W = T·x₀ with T commutative and faithful on W, so W ≅ T.
/// Algebra elements are represented by their value on x₀.
#[derive(Clone, Debug)]
pub struct Cyclic {
    pub ring: ResidueRing,
    pub dim: usize,
    pub x0: Vec<u64>,
    pub gens: Vec<Mat>,
    nodes: Vec<Vec<u64>>,
    tree: Vec<(usize, usize)>,
    coord: Mat,
}

fn is_full(h: &Howell, dim: usize) -> bool {
    h.piv.len() == dim && h.piv.iter().all(|&(_, e)| e == 0)
}

impl Cyclic {
    /// Tries to generate the module from x₀ under the generator matrices.
    /// Returns None when the orbit spans a proper submodule.
    pub fn generate(ring: ResidueRing, x0: Vec<u64>, gens: Vec<Mat>) -> Option<Self> {
        let dim = x0.len();
        let mut nodes = vec![x0.clone()];
        let mut tree = vec![(usize::MAX, 0)];
        let mut span = Howell::new(&nodes, dim, &ring);
        let mut i = 0;
        while i < nodes.len() && !is_full(&span, dim) {
            for (gi, g) in gens.iter().enumerate() {
                let y = g.vec_mul(&nodes[i], &ring);
                if !span.contains(&y) {
                    span.insert(&y);
                    nodes.push(y);
                    tree.push((i, gi));
                }
            }
            i += 1;
        }
        if !is_full(&span, dim) {
            return None;
        }
        let nm = Mat::from_rows(&nodes, dim);
        let s = smith(&nm, &ring, true, true);
        if s.diag.len() < dim || s.diag[..dim].iter().any(|&e| e > 0) {
            return None;
        }
        let u = s.u.unwrap();
        let v = s.v.unwrap();
        let mut utop = Mat::zeros(dim, nodes.len());
        for i in 0..dim {
            utop.row_mut(i).copy_from_slice(u.row(i));
        }
        let coord = v.mul(&utop, &ring);
        Some(Cyclic { ring, dim, x0, gens, nodes, tree, coord })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Rows P_i·w for the monomials P_i spanning the algebra.
    pub fn orbit(&self, w: &[u64]) -> Mat {
        let mut out = Mat::zeros(self.nodes.len(), self.dim);
        out.row_mut(0).copy_from_slice(w);
        for i in 1..self.nodes.len() {
            let (par, g) = self.tree[i];
            let y = self.gens[g].vec_mul(out.row(par), &self.ring);
            out.row_mut(i).copy_from_slice(&y);
        }
        out
    }

    /// Matrix on W of the algebra element T with T·x₀ = w.
    pub fn element_matrix(&self, w: &[u64]) -> Mat {
        self.coord.mul(&self.orbit(w), &self.ring)
    }

    /// T·v for the algebra element T with T·x₀ = w.
    pub fn act(&self, w: &[u64], v: &[u64]) -> Vec<u64> {
        let c = self.coord.transpose().mul_vec(v, &self.ring);
        self.orbit(w).vec_mul(&c, &self.ring)
    }

    /// The Hecke submodule generated by the given vectors.
    pub fn submodule(&self, vs: &[Vec<u64>]) -> Howell {
        let mut rows = vec![];
        for v in vs {
            rows.extend(self.orbit(v).to_rows());
        }
        Howell::new(&rows, self.dim, &self.ring)
    }
}

/// Builds a cyclic structure on a component: x₀ runs over coordinate vectors, the generators
/// start with ⟨g⟩ and T₂ and are enlarged by T_ℓ for ℓ in `extra` while the orbit falls short.
pub fn cyclic_structure(comp: &Component, extra: &[u64]) -> Result<(Cyclic, u32)> {
    let a = comp.dim();
    if a == 0 {
        return Err(Error::Precondition("empty component".into()));
    }
    let lev = &comp.space.level;
    let mut base = vec![];
    if lev.k > 1 {
        base.push(comp.diamond(lev.units.g)?);
    }
    base.push(comp.hecke(2)?);
    let mut cache: Vec<(u64, Mat)> = vec![];
    for j in 0..a.min(24) {
        let mut x0 = vec![0; a];
        x0[j] = 1 % comp.ring.q;
        let mut gens = base.clone();
        if let Some(c) = Cyclic::generate(comp.ring, x0.clone(), gens.clone()) {
            return Ok((c, comp.coordinate_label(j)));
        }
        for &l in extra {
            if l == 2 {
                continue;
            }
            let m = match cache.iter().find(|e| e.0 == l) {
                Some(e) => e.1.clone(),
                None => {
                    let m = comp.hecke(l)?;
                    cache.push((l, m.clone()));
                    m
                }
            };
            gens.push(m);
            if let Some(c) = Cyclic::generate(comp.ring, x0.clone(), gens.clone()) {
                return Ok((c, comp.coordinate_label(j)));
            }
        }
    }
    Err(Error::Precondition("no cyclic vector found for the Eisenstein component".into()))
}

/// Ideal data of a cyclic component: η x₀ for each generator and the ideal module I·W.
#[derive(Clone, Debug)]
pub struct IdealModule {
    pub values: Vec<(u64, Vec<u64>)>,
    pub chosen: Vec<usize>,
    pub module: Howell,
}

impl IdealModule {
    /// Greedy generating set of the ideal generated by the listed values.
    pub fn new(cyc: &Cyclic, values: Vec<(u64, Vec<u64>)>) -> Self {
        let mut chosen = vec![];
        let mut module = Howell::new(&[], cyc.dim, &cyc.ring);
        for (i, (_, v)) in values.iter().enumerate() {
            if !module.contains(v) {
                chosen.push(i);
                let gens: Vec<Vec<u64>> = chosen.iter().map(|&k| values[k].1.clone()).collect();
                module = cyc.submodule(&gens);
            }
        }
        IdealModule { values, chosen, module }
    }

    pub fn generators(&self) -> Vec<Vec<u64>> {
        self.chosen.iter().map(|&k| self.values[k].1.clone()).collect()
    }

    /// I²·W.
    pub fn square(&self, cyc: &Cyclic) -> Howell {
        let gens = self.generators();
        let mats: Vec<Mat> = gens.iter().map(|w| cyc.element_matrix(w)).collect();
        let mut prods = vec![];
        for (i, m) in mats.iter().enumerate() {
            for w in &gens[i..] {
                prods.push(m.vec_mul(w, &cyc.ring));
            }
        }
        cyc.submodule(&prods)
    }

    /// I·M for a submodule M given by rows.
    pub fn times(&self, cyc: &Cyclic, rows: &[Vec<u64>]) -> Howell {
        let mut out = vec![];
        for w in self.generators() {
            let m = cyc.element_matrix(&w);
            for v in rows {
                out.push(m.vec_mul(v, &cyc.ring));
            }
        }
        Howell::new(&out, cyc.dim, &cyc.ring)
    }
}

/// η_ℓ·x₀ for the given primes, where x₀ is the class of a Manin label.
pub fn eta_values(comp: &Component, label: u32, primes: &[u64]) -> Result<Vec<(u64, Vec<u64>)>> {
    primes.iter().map(|&l| Ok((l, comp.project(&comp.eta_on_label(l, label)?)))).collect()
}
