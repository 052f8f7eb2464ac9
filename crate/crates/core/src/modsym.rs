//! Manin-symbol models of relative and absolute homology for Γ₁(N) ⊆ Γ ⊆ Γ₀(N).

use crate::arith::{unit_group, Layer, UnitStructure};
use crate::error::{Error, Result};
use crate::linalg::{left_kernel, Mat, Reducer, SparseQuotient, SparseVec};
use crate::zq::ResidueRing;

/// Γ given by the subgroup D ⊆ (Z/N)^× of lower-right corners; D is the
/// subgroup of index k, i.e. the k-th powers.
#[derive(Clone, Debug)]
pub struct LevelDescriptor {
    pub units: UnitStructure,
    pub k: u64,
}

impl LevelDescriptor {
    pub fn gamma0(n: u64) -> Result<Self> {
        Ok(LevelDescriptor { units: unit_group(n)?, k: 1 })
    }

    /// Γ₁⁽ᵖ⁾(N): D = P′·{±1} with P′ the p^t-th powers.
    pub fn gamma1p(layer: &Layer) -> Self {
        LevelDescriptor { units: layer.units.clone(), k: layer.pt() }
    }

    pub fn gamma1(n: u64) -> Result<Self> {
        Ok(LevelDescriptor { units: unit_group(n)?, k: (n - 1) / 2 })
    }

    /// D given by its elements; must be a subgroup containing −1.
    pub fn from_subgroup(n: u64, elems: &[u64]) -> Result<Self> {
        let units = unit_group(n)?;
        let mut member = vec![false; n as usize];
        for &e in elems {
            let e = e % n;
            if e == 0 {
                return Err(Error::NotUnit(e as i64));
            }
            member[e as usize] = true;
        }
        for a in 1..n {
            for b in 1..n {
                if member[a as usize] && member[b as usize] && !member[(a * b % n) as usize] {
                    return Err(Error::Precondition("D is not closed under multiplication".into()));
                }
            }
        }
        if !member[(n - 1) as usize] {
            return Err(Error::Precondition("D must contain -1".into()));
        }
        let size = member.iter().filter(|&&m| m).count() as u64;
        Ok(LevelDescriptor { units, k: (n - 1) / size })
    }

    pub fn n(&self) -> u64 {
        self.units.n
    }

    pub fn in_d(&self, x: u64) -> bool {
        self.units.dlog_u(x % self.n()) % self.k == 0
    }

    /// Number of coset labels, k(N+1).
    pub fn label_count(&self) -> usize {
        (self.k * (self.n() + 1)) as usize
    }

    /// Class of a unit in (Z/N)^×/D, in 0..k.
    #[inline]
    pub fn unit_class(&self, x: u64) -> usize {
        (self.units.dlog_u(x) % self.k) as usize
    }

    #[inline]
    pub fn label(&self, c: i64, d: i64) -> u32 {
        let n = self.n() as i64;
        let c = c.rem_euclid(n) as u64;
        let d = d.rem_euclid(n) as u64;
        self.label_u(c, d)
    }

    #[inline]
    pub fn label_u(&self, c: u64, d: u64) -> u32 {
        let n = self.n();
        let k = self.k;
        if c != 0 {
            let lc = self.units.dlog_u(c);
            let i = lc % k;
            let lam = self.units.gpow(n - 1 - (lc - i));
            (i * n + d * lam % n) as u32
        } else {
            debug_assert!(d != 0);
            (k * n + self.units.dlog_u(d) % k) as u32
        }
    }

    /// A representative (c, d) of a label.
    pub fn rep(&self, label: u32) -> (u64, u64) {
        let n = self.n();
        let l = label as u64;
        if l < self.k * n {
            (self.units.gpow(l / n), l % n)
        } else {
            (0, self.units.gpow(l - self.k * n))
        }
    }

    pub fn same_group(&self, other: &LevelDescriptor) -> bool {
        self.n() == other.n() && self.k == other.k
    }
}

/// Which homology: relative to C^∞ (the M⁰ model) or relative to all cusps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Relative,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Both,
}

struct SignedUf {
    parent: Vec<u32>,
    coef: Vec<i8>,
    zero: Vec<bool>,
}

impl SignedUf {
    fn new(n: usize) -> Self {
        SignedUf { parent: (0..n as u32).collect(), coef: vec![1; n], zero: vec![false; n] }
    }

    fn find(&mut self, x: u32) -> (u32, i8) {
        let mut path = vec![];
        let mut y = x;
        while self.parent[y as usize] != y {
            path.push(y);
            y = self.parent[y as usize];
        }
        let root = y;
        // compress: coefficient of node relative to root
        for &z in path.iter().rev() {
            let pz = self.parent[z as usize];
            if pz != root {
                let c = self.coef[z as usize] * self.coef[pz as usize];
                self.coef[z as usize] = c;
                self.parent[z as usize] = root;
            }
        }
        if x == root {
            (root, 1)
        } else {
            (root, self.coef[x as usize])
        }
    }

    /// Imposes x = c·y.
    fn union(&mut self, x: u32, y: u32, c: i8) {
        let (rx, cx) = self.find(x);
        let (ry, cy) = self.find(y);
        if rx == ry {
            if cx != c * cy {
                self.zero[rx as usize] = true;
            }
            return;
        }
        // cx·rx = c·cy·ry  ⇒  rx = (c·cy/cx)·ry
        self.parent[rx as usize] = ry;
        self.coef[rx as usize] = c * cy * cx;
        if self.zero[rx as usize] {
            self.zero[ry as usize] = true;
        }
    }

    fn kill(&mut self, x: u32) {
        let (r, _) = self.find(x);
        self.zero[r as usize] = true;
    }
}

const OUTSIDE: u32 = u32::MAX;
const ZERO: u32 = u32::MAX - 1;

/// A finitely presented model of H̃_Γ (or its full relative version) over Z/p^M.
#[derive(Clone, Debug)]
pub struct ManinSpace {
    pub level: LevelDescriptor,
    pub ring: ResidueRing,
    pub model: Model,
    pub sign: Sign,
    // label -> (class column, ±1) or markers
    label_col: Vec<u32>,
    label_sgn: Vec<i8>,
    quotient: SparseQuotient,
    basis: Vec<u32>,
}

/// Data returned when a Heilbronn image leaves the C^∞-relative model unevenly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegenerateMismatch(pub usize);

impl ManinSpace {
    pub fn new(level: &LevelDescriptor, ring: ResidueRing, model: Model, sign: Sign) -> Result<Self> {
        Self::with_coinvariants(level, ring, model, sign, &[])
    }

    /// Builds the model, additionally imposing x = ⟨d⟩x for each listed d.
    pub fn with_coinvariants(
        level: &LevelDescriptor,
        ring: ResidueRing,
        model: Model,
        sign: Sign,
        coinv: &[u64],
    ) -> Result<Self> {
        let n = level.n();
        if !level.in_d(n - 1) {
            return Err(Error::Precondition("D must contain -1".into()));
        }
        if n % ring.p == 0 || ring.p < 5 {
            return Err(Error::BadPrime(ring.p));
        }
        let nl = level.label_count();
        let inside = |c: u64, d: u64| model == Model::Full || (c != 0 && d != 0);
        let mut uf = SignedUf::new(nl);
        for l in 0..nl as u32 {
            let (c, d) = level.rep(l);
            if !inside(c, d) {
                continue;
            }
            // σ: [c,d] + [d,−c] = 0
            let ls = level.label(d as i64, -(c as i64));
            uf.union(l, ls, -1);
            match sign {
                Sign::Plus => uf.union(l, level.label(-(c as i64), d as i64), 1),
                Sign::Minus => uf.union(l, level.label(-(c as i64), d as i64), -1),
                Sign::Both => {}
            }
            if model == Model::Relative && (c + d) % n == 0 {
                uf.kill(l);
            }
            for &j in coinv {
                let ji = level.units.inv(j % n);
                uf.union(l, level.label_u(c * ji % n, d * ji % n), 1);
            }
        }
        let mut label_col = vec![OUTSIDE; nl];
        let mut label_sgn = vec![0i8; nl];
        let mut root_col = vec![u32::MAX; nl];
        let mut ncols = 0u32;
        for l in 0..nl as u32 {
            let (c, d) = level.rep(l);
            if !inside(c, d) {
                continue;
            }
            let (r, s) = uf.find(l);
            if uf.zero[r as usize] {
                label_col[l as usize] = ZERO;
                continue;
            }
            if root_col[r as usize] == u32::MAX {
                root_col[r as usize] = ncols;
                ncols += 1;
            }
            label_col[l as usize] = root_col[r as usize];
            label_sgn[l as usize] = s;
        }
        let mut q = SparseQuotient::new(ncols as usize, ring);
        // τ-orbit sums of orbits inside the model
        let mut seen = vec![false; nl];
        for l in 0..nl as u32 {
            if seen[l as usize] || label_col[l as usize] == OUTSIDE {
                continue;
            }
            let (c, d) = level.rep(l);
            let l1 = level.label(d as i64, -(c as i64) - d as i64);
            let (c1, d1) = level.rep(l1);
            let l2 = level.label(d1 as i64, -(c1 as i64) - d1 as i64);
            let orbit: Vec<u32> = if l1 == l { vec![l] } else { vec![l, l1, l2] };
            for &o in &orbit {
                seen[o as usize] = true;
            }
            if orbit.iter().any(|&o| label_col[o as usize] == OUTSIDE) {
                continue;
            }
            let mut row: Vec<(u32, u64)> = vec![];
            for &o in &orbit {
                let col = label_col[o as usize];
                if col == ZERO {
                    continue;
                }
                let s = if label_sgn[o as usize] > 0 { 1 } else { ring.q - 1 };
                row.push((col, s));
            }
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: SparseVec = vec![];
            for (c, x) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 = ring.add(last.1, x),
                    _ => merged.push((c, x)),
                }
            }
            merged.retain(|e| e.1 != 0);
            q.add_relation(&merged);
        }
        q.finish();
        // representative label of each free coordinate
        let mut basis = vec![u32::MAX; q.dim()];
        for l in 0..nl {
            let col = label_col[l];
            if col < ZERO {
                if let Some(i) = q.free_index(col) {
                    if basis[i] == u32::MAX && label_sgn[l] > 0 {
                        basis[i] = l as u32;
                    }
                }
            }
        }
        for l in 0..nl {
            let col = label_col[l];
            if col < ZERO {
                if let Some(i) = q.free_index(col) {
                    if basis[i] == u32::MAX {
                        basis[i] = l as u32;
                    }
                }
            }
        }
        Ok(ManinSpace { level: level.clone(), ring, model, sign, label_col, label_sgn, quotient: q, basis })
    }

    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    pub fn n(&self) -> u64 {
        self.level.n()
    }

    pub fn has_torsion(&self) -> bool {
        self.quotient.has_torsion()
    }

    pub fn invariants(&self) -> crate::linalg::ModuleInvariants {
        self.quotient.invariants()
    }

    /// Representative label of the i-th basis vector.
    pub fn basis_label(&self, i: usize) -> u32 {
        self.basis[i]
    }

    pub fn in_model(&self, label: u32) -> bool {
        self.label_col[label as usize] != OUTSIDE
    }

    /// Adds coef·[label] to a dense coordinate vector. Labels outside the model are rejected.
    #[inline]
    pub fn add_label(&self, out: &mut [u64], label: u32, coef: u64) -> bool {
        let col = self.label_col[label as usize];
        if col == OUTSIDE {
            return false;
        }
        if col == ZERO || coef == 0 {
            return true;
        }
        let r = &self.ring;
        let c = if self.label_sgn[label as usize] > 0 { coef } else { r.neg(coef) };
        for &(k, z) in self.quotient.image_of(col) {
            let k = k as usize;
            out[k] = r.add(out[k] % r.q, r.mul(c, z));
        }
        true
    }

    pub fn label_vector(&self, label: u32) -> Option<Vec<u64>> {
        let mut v = vec![0; self.dim()];
        self.add_label(&mut v, label, 1).then_some(v)
    }

    pub fn symbol(&self, c: i64, d: i64) -> Option<Vec<u64>> {
        self.label_vector(self.level.label(c, d))
    }

    /// Whether a combination of labels vanishes in the model.
    pub fn labels_vanish(&self, terms: &[(u32, u64)]) -> bool {
        let mut v = vec![0; self.dim()];
        for &(l, c) in terms {
            if !self.add_label(&mut v, l, c) {
                return false;
            }
        }
        v.iter().all(|&x| x == 0)
    }

    /// Number of cusp classes in the boundary target.
    pub fn cusp_count(&self) -> usize {
        match self.model {
            Model::Relative => self.level.k as usize,
            Model::Full => 2 * self.level.k as usize,
        }
    }

    /// Boundary of a label: pairs (cusp index, ±1). C^∞ classes come first, then C⁰.
    pub fn boundary_of_label(&self, label: u32) -> Vec<(usize, i64)> {
        let (c, d) = self.level.rep(label);
        let k = self.level.k as usize;
        let inf = |u: u64| self.level.unit_class(u);
        let zer = |u: u64| k + self.level.unit_class(u);
        if c == 0 {
            vec![(zer(d), 1), (inf(d), -1)]
        } else if d == 0 {
            vec![(inf(c), 1), (zer(c), -1)]
        } else {
            vec![(inf(c), 1), (inf(d), -1)]
        }
    }

    /// Rows: ∂ of basis vectors.
    pub fn boundary_matrix(&self) -> Mat {
        let nc = self.cusp_count();
        let mut m = Mat::zeros(self.dim(), nc);
        for i in 0..self.dim() {
            for (cu, s) in self.boundary_of_label(self.basis[i]) {
                let x = m.get(i, cu);
                m.set(i, cu, self.ring.add(x, self.ring.reduce(s)));
            }
        }
        m
    }

    /// Basis of ker ∂ (absolute homology), as rows in model coordinates.
    pub fn absolute_homology(&self) -> Mat {
        left_kernel(&self.boundary_matrix(), &self.ring)
    }

    fn label_map_matrix(&self, f: impl Fn(u64, u64) -> (i64, i64)) -> Mat {
        let d = self.dim();
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            let (c, dd) = self.level.rep(self.basis[i]);
            let (c2, d2) = f(c, dd);
            let ok = self.add_label(m.row_mut(i), self.level.label(c2, d2), 1);
            assert!(ok, "label map left the model");
        }
        m
    }

    /// Complex conjugation [u,v] ↦ [−u,v].
    pub fn star_matrix(&self) -> Mat {
        self.label_map_matrix(|c, d| (-(c as i64), d as i64))
    }

    /// ⟨j⟩[u,v] = [j⁻¹u, j⁻¹v].
    pub fn diamond_matrix(&self, j: i64) -> Result<Mat> {
        let n = self.n();
        let jr = j.rem_euclid(n as i64) as u64;
        if jr == 0 {
            return Err(Error::NotUnit(j));
        }
        let ji = self.level.units.inv(jr);
        Ok(self.label_map_matrix(|c, d| ((c * ji % n) as i64, (d * ji % n) as i64)))
    }

    /// ⟨j⟩ applied to a dense vector.
    pub fn diamond_vec(&self, j: i64, v: &[u64]) -> Result<Vec<u64>> {
        let n = self.n();
        let jr = j.rem_euclid(n as i64) as u64;
        if jr == 0 {
            return Err(Error::NotUnit(j));
        }
        let ji = self.level.units.inv(jr);
        let mut out = vec![0; self.dim()];
        for (i, &x) in v.iter().enumerate() {
            if x != 0 {
                let (c, d) = self.level.rep(self.basis[i]);
                let ok = self.add_label(&mut out, self.level.label_u(c * ji % n, d * ji % n), x);
                assert!(ok, "diamond left the model");
            }
        }
        Ok(out)
    }

    /// Applies Σ_h [x·h] to a combination of labels. In the C^∞-relative model the
    /// degenerate labels [c,0], [0,c] must cancel in pairs; they are then dropped.
    pub fn apply_family(&self, terms: &[(u32, u64)], family: &[[i64; 4]], out: &mut [u64]) -> std::result::Result<(), DegenerateMismatch> {
        let n = self.n() as i64;
        let r = &self.ring;
        let k = self.level.k as usize;
        let mut degen: Vec<u64> = if self.model == Model::Relative { vec![0; k] } else { vec![] };
        let red = Reducer::new(r.q);
        for &(l, coef) in terms {
            let (c, d) = self.level.rep(l);
            let (c, d) = (c as i64, d as i64);
            for h in family {
                let a = (c * h[0] + d * h[2]).rem_euclid(n);
                let b = (c * h[1] + d * h[3]).rem_euclid(n);
                if a == 0 && b == 0 {
                    continue;
                }
                if self.model == Model::Relative && (a == 0 || b == 0) {
                    // [x,0] counts +, [0,x] counts −
                    let (x, s) = if b == 0 { (a, coef) } else { (b, r.neg(coef)) };
                    let cls = self.level.unit_class(x as u64);
                    degen[cls] = r.add(degen[cls], s);
                    continue;
                }
                let lab = self.level.label_u(a as u64, b as u64);
                let col = self.label_col[lab as usize];
                if col >= ZERO {
                    continue;
                }
                let cc = if self.label_sgn[lab as usize] > 0 { coef } else { r.q - coef };
                for &(kk, z) in self.quotient.image_of(col) {
                    let kk = kk as usize;
                    out[kk] = red.mul_add(out[kk], cc, z);
                }
            }
        }
        if let Some(bad) = degen.iter().position(|&x| x != 0) {
            return Err(DegenerateMismatch(bad));
        }
        Ok(())
    }

    /// Matrix (rows = images of basis vectors) of the operator given by a matrix family.
    pub fn family_matrix(&self, family: &[[i64; 4]]) -> std::result::Result<Mat, DegenerateMismatch> {
        let d = self.dim();
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            self.apply_family(&[(self.basis[i], 1)], family, m.row_mut(i))?;
        }
        Ok(m)
    }

    /// Image of a dense vector under a family, by expanding over basis labels.
    pub fn apply_family_vec(&self, v: &[u64], family: &[[i64; 4]]) -> std::result::Result<Vec<u64>, DegenerateMismatch> {
        let terms: Vec<(u32, u64)> = v.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &x)| (self.basis[i], x)).collect();
        let mut out = vec![0; self.dim()];
        self.apply_family(&terms, family, &mut out)?;
        Ok(out)
    }

    /// Plus-part class of [u,v] (the ξ symbol); requires u, v units.
    pub fn xi_symbol(&self, u: i64, v: i64) -> Result<Vec<u64>> {
        let n = self.n() as i64;
        if u.rem_euclid(n) == 0 || v.rem_euclid(n) == 0 {
            return Err(Error::Precondition(format!("[{u},{v}] needs unit entries")));
        }
        let mut x = self.symbol(u, v).expect("unit symbols lie in the model");
        if self.sign == Sign::Both {
            let y = self.symbol(-u, v).unwrap();
            let half = self.ring.inv(2).unwrap();
            for (a, b) in x.iter_mut().zip(y) {
                *a = self.ring.mul(self.ring.add(*a, b), half);
            }
        }
        Ok(x)
    }

    /// ξ([a]) at Γ₀: the class of [a,1].
    pub fn xi_zero(&self, a: i64) -> Result<Vec<u64>> {
        if self.level.k != 1 {
            return Err(Error::Precondition("xi_zero needs a level-Γ₀ space".into()));
        }
        self.xi_symbol(a, 1)
    }
}

/// Matrix of the label projection H̃_{Γ₁} → H̃_{Γ₂} (rows = images of basis vectors).
pub fn degeneracy(s1: &ManinSpace, s2: &ManinSpace) -> Result<Mat> {
    if s1.n() != s2.n() || s1.level.k % s2.level.k != 0 {
        return Err(Error::Precondition("D₁ is not contained in D₂".into()));
    }
    if s1.model != s2.model {
        return Err(Error::Precondition("models differ".into()));
    }
    let mut m = Mat::zeros(s1.dim(), s2.dim());
    for i in 0..s1.dim() {
        let (c, d) = s1.level.rep(s1.basis_label(i));
        let ok = s2.add_label(m.row_mut(i), s2.level.label_u(c, d), 1);
        assert!(ok);
    }
    Ok(m)
}

/// Genus of X_Γ for prime N ≥ 5 and D of index k, via Riemann–Hurwitz.
pub fn genus(level: &LevelDescriptor) -> u64 {
    let n = level.n();
    let k = level.k;
    let mu = k * (n + 1);
    let count_fixed = |m: u64| -> u64 {
        // solutions of x² + x + 1 ≡ 0 (m = 3) or x² + 1 ≡ 0 (m = 2) in units whose class is trivial
        let mut c = 0;
        for x in 1..n {
            let f = if m == 2 { (x * x + 1) % n } else { (x * x + x + 1) % n };
            if f == 0 && level.in_d(x) {
                c += 1;
            }
        }
        c
    };
    // elliptic points: for each order, count cusps-free fixed points through D-classes
    let e2 = if n % 4 == 1 { count_fixed(2) * k } else { 0 };
    let e3 = if n % 3 == 1 { count_fixed(3) * k } else { 0 };
    let cusps = 2 * k;
    // 2g − 2 = μ/6 − e2/2 − 2e3/3 − cusps, times 12
    let twelve = mu as i64 - 3 * e2 as i64 - 4 * e3 as i64 - 6 * cusps as i64;
    (twelve / 12 + 1) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, m: u32) -> ResidueRing {
        ResidueRing::raw(p, m).unwrap()
    }

    #[test]
    fn label_counts() {
        let g0 = LevelDescriptor::gamma0(11).unwrap();
        assert_eq!(g0.label_count(), 12);
        let l = Layer::new(11, 5, None).unwrap();
        let g1 = LevelDescriptor::gamma1p(&l);
        assert_eq!(g1.label_count(), 60);
        let m0 = (0..12u32).filter(|&x| {
            let (c, d) = g0.rep(x);
            c != 0 && d != 0
        });
        assert_eq!(m0.count(), 10);
    }

    #[test]
    fn labels_are_canonical() {
        let l = Layer::new(31, 5, None).unwrap();
        let lev = LevelDescriptor::gamma1p(&l);
        for lab in 0..lev.label_count() as u32 {
            let (c, d) = lev.rep(lab);
            assert_eq!(lev.label_u(c, d), lab);
            for x in 1..31u64 {
                if lev.in_d(x) {
                    assert_eq!(lev.label_u(c * x % 31, d * x % 31), lab);
                }
            }
        }
    }

    #[test]
    fn subgroup_checks() {
        assert!(LevelDescriptor::from_subgroup(11, &[1, 10]).is_ok());
        assert!(LevelDescriptor::from_subgroup(11, &[1, 3, 4, 5, 9]).is_err());
        assert!(LevelDescriptor::from_subgroup(11, &[1, 2, 10]).is_err());
    }

    #[test]
    fn gamma0_eleven_ranks() {
        let lev = LevelDescriptor::gamma0(11).unwrap();
        let s = ManinSpace::new(&lev, ring(5, 3), Model::Relative, Sign::Both).unwrap();
        assert_eq!(s.absolute_homology().rows, 2);
        let sp = ManinSpace::new(&lev, ring(5, 3), Model::Relative, Sign::Plus).unwrap();
        assert_eq!(sp.absolute_homology().rows, 1);
        let full = ManinSpace::new(&lev, ring(5, 3), Model::Full, Sign::Both).unwrap();
        assert_eq!(full.dim(), 3);
    }

    #[test]
    fn absolute_rank_is_twice_genus() {
        for (n, p) in [(11u64, 5u64), (31, 5), (29, 7), (41, 5)] {
            let layer = Layer::new(n, p, None).unwrap();
            for lev in [LevelDescriptor::gamma0(n).unwrap(), LevelDescriptor::gamma1p(&layer)] {
                let s = ManinSpace::new(&lev, ring(p, 3), Model::Relative, Sign::Both).unwrap();
                assert!(!s.has_torsion());
                assert_eq!(s.absolute_homology().rows as u64, 2 * genus(&lev), "N={n} k={}", lev.k);
                assert_eq!(s.dim() as u64, 2 * genus(&lev) + lev.k - 1);
            }
        }
    }

    #[test]
    fn manin_relations_hold() {
        let layer = Layer::new(31, 5, None).unwrap();
        let lev = LevelDescriptor::gamma1p(&layer);
        let s = ManinSpace::new(&lev, ring(5, 3), Model::Relative, Sign::Plus).unwrap();
        let r = s.ring;
        for u in 1..31i64 {
            for v in 1..31i64 {
                if (u + v) % 31 == 0 {
                    continue;
                }
                let a = lev.label(u, v);
                let b = lev.label(-v, u);
                assert!(s.labels_vanish(&[(a, 1), (b, 1)]));
                let c = lev.label(u, u + v);
                let d = lev.label(u + v, v);
                assert!(s.labels_vanish(&[(a, 1), (c, r.q - 1), (d, r.q - 1)]));
            }
        }
    }

    #[test]
    fn boundary_cases() {
        let lev = LevelDescriptor::gamma0(11).unwrap();
        let s = ManinSpace::new(&lev, ring(5, 2), Model::Full, Sign::Both).unwrap();
        assert_eq!(s.boundary_of_label(lev.label(3, 0)), vec![(0, 1), (1, -1)]);
        assert_eq!(s.boundary_of_label(lev.label(0, 3)), vec![(1, 1), (0, -1)]);
        let b = s.boundary_of_label(lev.label(2, 5));
        assert_eq!(b, vec![(0, 1), (0, -1)]);
    }

    #[test]
    fn star_is_involution() {
        let layer = Layer::new(31, 5, None).unwrap();
        let lev = LevelDescriptor::gamma1p(&layer);
        let s = ManinSpace::new(&lev, ring(5, 3), Model::Relative, Sign::Both).unwrap();
        let st = s.star_matrix();
        assert_eq!(st.mul(&st, &s.ring), Mat::identity(s.dim()));
    }

    #[test]
    fn degeneracy_surjective() {
        let layer = Layer::new(11, 5, None).unwrap();
        let r = ring(5, 3);
        let s1 = ManinSpace::new(&LevelDescriptor::gamma1p(&layer), r, Model::Relative, Sign::Both).unwrap();
        let s2 = ManinSpace::new(&LevelDescriptor::gamma0(11).unwrap(), r, Model::Relative, Sign::Both).unwrap();
        let d = degeneracy(&s1, &s2).unwrap();
        let h = crate::linalg::Howell::new(&d.to_rows(), s2.dim(), &r);
        assert_eq!(h.order_exp(), 3 * s2.dim() as u32);
        assert!(degeneracy(&s2, &s1).is_err());
    }
}
