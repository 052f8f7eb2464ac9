//! Exact linear algebra over Z/p^M: dense matrices, Smith and Howell forms,
//! kernels, subquotients and an incremental sparse quotient engine.

use crate::zq::ResidueRing;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Fast reduction modulo q. Below 2^31 products are reduced in floating point;
/// wider moduli fall back to 128-bit arithmetic.
#[derive(Clone, Copy, Debug)]
pub struct Reducer {
    q: u64,
    qf: f64,
    qinv: f64,
    wide: bool,
}

impl Reducer {
    pub fn new(q: u64) -> Self {
        Reducer { q, qf: q as f64, qinv: 1.0 / q as f64, wide: q >= 1 << 31 }
    }

    /// (acc + a·b) mod q for reduced acc, a, b.
    #[inline(always)]
    pub fn mul_add(&self, acc: u64, a: u64, b: u64) -> u64 {
        if self.wide {
            ((acc as u128 + a as u128 * b as u128) % self.q as u128) as u64
        } else {
            self.reduce(acc + a * b)
        }
    }

    #[inline(always)]
    pub fn reduce(&self, x: u64) -> u64 {
        if self.wide {
            return x % self.q;
        }
        let k = (x as f64 * self.qinv) as u64;
        let r = x as i64 - (k * self.q) as i64;
        if r < 0 {
            (r + self.q as i64) as u64
        } else if r >= self.q as i64 {
            (r - self.q as i64) as u64
        } else {
            r as u64
        }
    }

    #[inline(always)]
    pub fn reduce_f(&self, x: f64) -> u64 {
        let k = (x * self.qinv).floor();
        let r = x - k * self.qf;
        let r = r as i64;
        r.rem_euclid(self.q as i64) as u64
    }
}

/// Elementary divisors p^{e₁} ≥ p^{e₂} ≥ … of a finite Z/p^M-module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleInvariants {
    pub p: u64,
    pub exps: Vec<u32>,
}

impl ModuleInvariants {
    pub fn new(p: u64, mut exps: Vec<u32>) -> Self {
        exps.retain(|&e| e > 0);
        exps.sort_unstable_by(|a, b| b.cmp(a));
        ModuleInvariants { p, exps }
    }

    pub fn order_exp(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.exps.is_empty()
    }

    /// Number of summands equal to the full Z/p^M.
    pub fn free_rank(&self, m: u32) -> usize {
        self.exps.iter().filter(|&&e| e >= m).count()
    }

    pub fn cyclic(&self) -> bool {
        self.exps.len() <= 1
    }

    pub fn exps_i64(&self) -> Vec<i64> {
        self.exps.iter().map(|&e| e as i64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u64>], cols: usize) -> Self {
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            m.data[i * cols..(i + 1) * cols].copy_from_slice(&r[..cols]);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn sub(&self, other: &Mat, r: &ResidueRing) -> Mat {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| r.sub(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &Mat, r: &ResidueRing) -> Mat {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| r.add(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: u64, r: &ResidueRing) -> Mat {
        let data = self.data.iter().map(|&a| r.mul(a, c)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn reduce_mod(&self, r: &ResidueRing) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a % r.q).collect() }
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[u64], r: &ResidueRing) -> Vec<u64> {
        let red = Reducer::new(r.q);
        let mut acc = vec![0u64; self.cols];
        if red.wide {
            for (i, &c) in v.iter().enumerate() {
                if c != 0 {
                    for (a, &x) in acc.iter_mut().zip(self.row(i)) {
                        *a = red.mul_add(*a, c, x);
                    }
                }
            }
            return acc;
        }
        let mut pending = 0u32;
        let budget = lazy_budget(r.q);
        for (i, &c) in v.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (a, &x) in acc.iter_mut().zip(self.row(i)) {
                *a += c * x;
            }
            pending += 1;
            if pending >= budget {
                acc.iter_mut().for_each(|a| *a = red.reduce(*a));
                pending = 0;
            }
        }
        acc.iter_mut().for_each(|a| *a = red.reduce(*a));
        acc
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[u64], r: &ResidueRing) -> Vec<u64> {
        let red = Reducer::new(r.q);
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                if red.wide {
                    for (&a, &b) in self.row(i).iter().zip(v) {
                        acc = red.mul_add(acc, a, b);
                    }
                    return acc;
                }
                let mut pending = 0;
                let budget = lazy_budget(r.q);
                for (&a, &b) in self.row(i).iter().zip(v) {
                    acc += a * b;
                    pending += 1;
                    if pending >= budget {
                        acc = red.reduce(acc);
                        pending = 0;
                    }
                }
                red.reduce(acc)
            })
            .collect()
    }

    pub fn mul(&self, other: &Mat, r: &ResidueRing) -> Mat {
        matmul(self, other, r)
    }
}

/// How many products below q² may be summed before overflowing u64.
fn lazy_budget(q: u64) -> u32 {
    let sq = (q as u128) * (q as u128);
    ((u64::MAX as u128) / sq.max(1)).saturating_sub(1).clamp(1, 1 << 20) as u32
}

fn bits(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// Exact product over Z/q using double-precision GEMM on digit slices.
pub fn matmul(a: &Mat, b: &Mat, r: &ResidueRing) -> Mat {
    assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Mat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    let red = Reducer::new(r.q);
    let qb = bits(r.q);
    let mut dig = qb;
    let mut kchunk = k;
    while qb + dig + bits(kchunk as u64) > 53 {
        if dig > 10 {
            dig -= 1;
        } else {
            kchunk = (kchunk / 2).max(1);
        }
    }
    let ndig = qb.div_ceil(dig);
    let af: Vec<f64> = a.data.iter().map(|&x| x as f64).collect();
    let mask = (1u64 << dig) - 1;
    let mut acc = vec![0u64; m * n];
    let mut c = vec![0f64; m * n];
    for d in 0..ndig {
        let shift = d * dig;
        let bf: Vec<f64> = b.data.iter().map(|&x| ((x >> shift) & mask) as f64).collect();
        if bf.iter().all(|&x| x == 0.0) {
            continue;
        }
        let scale = r.pow(2, shift as u64);
        let mut k0 = 0;
        while k0 < k {
            let kk = kchunk.min(k - k0);
            c.iter_mut().for_each(|x| *x = 0.0);
            unsafe {
                matrixmultiply::dgemm(
                    m,
                    kk,
                    n,
                    1.0,
                    af.as_ptr().add(k0),
                    k as isize,
                    1,
                    bf.as_ptr().add(k0 * n),
                    n as isize,
                    1,
                    0.0,
                    c.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
            for (o, &x) in acc.iter_mut().zip(&c) {
                let v = red.reduce_f(x);
                *o = red.mul_add(*o, v, scale);
            }
            k0 += kk;
        }
    }
    out.data = acc;
    out
}

/// Smith form data: valuations of the pivots (rank positions with valuation < M),
/// plus optional left and right transforms with U·A·V = D.
#[derive(Clone, Debug)]
pub struct Smith {
    pub diag: Vec<u32>,
    pub u: Option<Mat>,
    pub v: Option<Mat>,
}

fn row_axpy(dst: &mut [u64], src: &[u64], f: u64, red: &Reducer, q: u64) {
    // dst -= f * src
    let nf = q - f;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = red.mul_add(*d, nf, s);
        }
    }
}

/// Smith normal form over the local ring Z/p^M by minimal-valuation pivoting.
/// Rows are relations, columns are generators.
pub fn smith(a: &Mat, r: &ResidueRing, want_u: bool, want_v: bool) -> Smith {
    let red = Reducer::new(r.q);
    let q = r.q;
    let mut a = a.reduce_mod(r);
    let (nr, nc) = (a.rows, a.cols);
    let mut u = want_u.then(|| Mat::identity(nr));
    let mut v = want_v.then(|| Mat::identity(nc));
    let mut diag = vec![];
    let mut k = 0;
    while k < nr.min(nc) {
        // find a pivot: any unit, else minimal valuation
        let mut best: Option<(usize, usize, u32)> = None;
        'outer: for i in k..nr {
            let row = a.row(i);
            for j in k..nc {
                let x = row[j];
                if x != 0 {
                    let e = r.val(x);
                    if best.map_or(true, |b| e < b.2) {
                        best = Some((i, j, e));
                        if e == 0 {
                            break 'outer;
                        }
                    }
                }
            }
        }
        let Some((pi, pj, e)) = best else { break };
        if pi != k {
            swap_rows(&mut a, pi, k);
            if let Some(u) = u.as_mut() {
                swap_rows(u, pi, k);
            }
        }
        if pj != k {
            swap_cols(&mut a, pj, k);
            if let Some(v) = v.as_mut() {
                swap_cols(v, pj, k);
            }
        }
        let (_, unit) = r.split(a.get(k, k));
        let ui = r.inv(unit).unwrap();
        if ui != 1 {
            for x in a.row_mut(k) {
                *x = r.mul(*x, ui);
            }
            if let Some(u) = u.as_mut() {
                for x in u.row_mut(k) {
                    *x = r.mul(*x, ui);
                }
            }
        }
        let pe = r.p.pow(e);
        let pivrow: Vec<u64> = a.row(k).to_vec();
        let urow: Option<Vec<u64>> = u.as_ref().map(|u| u.row(k).to_vec());
        for i in k + 1..nr {
            let x = a.get(i, k);
            if x == 0 {
                continue;
            }
            let f = (x / pe) % q;
            row_axpy(a.row_mut(i), &pivrow, f, &red, q);
            if let (Some(u), Some(ur)) = (u.as_mut(), urow.as_ref()) {
                row_axpy(u.row_mut(i), ur, f, &red, q);
            }
        }
        // column operations only touch row k of a
        for j in k + 1..nc {
            let x = a.get(k, j);
            if x == 0 {
                continue;
            }
            let f = (x / pe) % q;
            a.set(k, j, 0);
            if let Some(v) = v.as_mut() {
                let nf = q - f;
                for i in 0..nc {
                    let vk = v.data[i * nc + k];
                    if vk != 0 {
                        let idx = i * nc + j;
                        v.data[idx] = red.mul_add(v.data[idx], nf, vk);
                    }
                }
            }
        }
        diag.push(e);
        k += 1;
    }
    Smith { diag, u, v }
}

fn swap_rows(m: &mut Mat, i: usize, j: usize) {
    if i == j {
        return;
    }
    let c = m.cols;
    let (lo, hi) = (i.min(j), i.max(j));
    let (a, b) = m.data.split_at_mut(hi * c);
    a[lo * c..lo * c + c].swap_with_slice(&mut b[..c]);
}

fn swap_cols(m: &mut Mat, i: usize, j: usize) {
    if i == j {
        return;
    }
    for r in 0..m.rows {
        m.data.swap(r * m.cols + i, r * m.cols + j);
    }
}

/// Invariants of (Z/p^M)^ncols / rowspace(rows).
pub fn cokernel_invariants(rows: &Mat, r: &ResidueRing) -> ModuleInvariants {
    let s = smith(rows, r, false, false);
    let mut exps: Vec<u32> = s.diag.clone();
    exps.extend(std::iter::repeat(r.m).take(rows.cols - s.diag.len()));
    ModuleInvariants::new(r.p, exps)
}

/// Invariants of the submodule of (Z/p^M)^n spanned by the rows.
pub fn span_invariants(rows: &Mat, r: &ResidueRing) -> ModuleInvariants {
    let s = smith(rows, r, false, false);
    ModuleInvariants::new(r.p, s.diag.iter().map(|&e| r.m - e).collect())
}

/// Invariants of A/B for submodules B ⊆ A ⊆ (Z/p^M)^n given by generator rows.
/// B need not lie in A; the result is then (A+B)/B.
pub fn subquotient_invariants(a: &Mat, b: &Mat, r: &ResidueRing) -> ModuleInvariants {
    let n = a.cols;
    let s = smith(b, r, false, true);
    let v = s.v.unwrap();
    let av = matmul(a, &v, r);
    let mut emb = Mat::zeros(a.rows, n);
    for i in 0..a.rows {
        for j in 0..n {
            let d = if j < s.diag.len() { s.diag[j] } else { r.m };
            let f = if d >= r.m { 1 } else { r.ppow(r.m - d) };
            emb.set(i, j, r.mul(av.get(i, j), f));
        }
    }
    span_invariants(&emb, r)
}

/// Generators of {x : x·A = 0} for A of shape n×m.
pub fn left_kernel(a: &Mat, r: &ResidueRing) -> Mat {
    let s = smith(a, r, true, false);
    let u = s.u.unwrap();
    let mut out = vec![];
    for i in 0..a.rows {
        let d = if i < s.diag.len() { s.diag[i] } else { r.m };
        if d == 0 {
            continue;
        }
        let f = if d >= r.m { 1 } else { r.ppow(r.m - d) };
        out.push(u.row(i).iter().map(|&x| r.mul(x, f)).collect::<Vec<_>>());
    }
    Mat::from_rows(&out, a.rows)
}

/// Row echelon form with Howell closure; supports canonical membership tests.
#[derive(Clone, Debug)]
pub struct Howell {
    pub ring: ResidueRing,
    pub cols: usize,
    pub rows: Vec<Vec<u64>>,
    pub piv: Vec<(usize, u32)>,
}

impl Howell {
    pub fn new(gens: &[Vec<u64>], cols: usize, r: &ResidueRing) -> Self {
        let red = Reducer::new(r.q);
        let q = r.q;
        let mut pool: Vec<Vec<u64>> =
            gens.iter().map(|g| g.iter().map(|&x| x % q).collect()).filter(|g: &Vec<u64>| g.iter().any(|&x| x != 0)).collect();
        let mut rows = vec![];
        let mut piv = vec![];
        for c in 0..cols {
            let mut best: Option<(usize, u32)> = None;
            for (i, g) in pool.iter().enumerate() {
                if g[c] != 0 {
                    let e = r.val(g[c]);
                    if best.map_or(true, |b| e < b.1) {
                        best = Some((i, e));
                        if e == 0 {
                            break;
                        }
                    }
                }
            }
            let Some((bi, e)) = best else { continue };
            let mut prow = pool.swap_remove(bi);
            let (_, unit) = r.split(prow[c]);
            let ui = r.inv(unit).unwrap();
            prow.iter_mut().for_each(|x| *x = r.mul(*x, ui));
            let pe = r.p.pow(e);
            for g in pool.iter_mut() {
                if g[c] != 0 {
                    let f = g[c] / pe;
                    row_axpy(g, &prow, f, &red, q);
                }
            }
            if e > 0 {
                let f = r.ppow(r.m - e);
                let extra: Vec<u64> = prow.iter().map(|&x| r.mul(x, f)).collect();
                if extra.iter().any(|&x| x != 0) {
                    pool.push(extra);
                }
            }
            pool.retain(|g| g.iter().any(|&x| x != 0));
            rows.push(prow);
            piv.push((c, e));
        }
        let mut h = Howell { ring: *r, cols, rows, piv };
        h.back_reduce();
        h
    }

    fn back_reduce(&mut self) {
        let r = self.ring;
        let red = Reducer::new(r.q);
        for k in (0..self.rows.len()).rev() {
            let (c, e) = self.piv[k];
            let pe = r.p.pow(e);
            let src = self.rows[k].clone();
            for i in 0..k {
                let x = self.rows[i][c];
                if x >= pe {
                    let f = x / pe;
                    row_axpy(&mut self.rows[i], &src, f, &red, r.q);
                }
            }
        }
    }

    /// Reduces v in place; returns true when v lies in the span.
    pub fn reduce(&self, v: &mut [u64]) -> bool {
        let r = &self.ring;
        let red = Reducer::new(r.q);
        for (row, &(c, e)) in self.rows.iter().zip(&self.piv) {
            let x = v[c] % r.q;
            if x == 0 {
                continue;
            }
            let pe = r.p.pow(e);
            let f = x / pe;
            row_axpy(v, row, f, &red, r.q);
        }
        v.iter().all(|&x| x == 0)
    }

    /// Adds a generator.
    pub fn insert(&mut self, v: &[u64]) {
        let mut gens = std::mem::take(&mut self.rows);
        gens.push(v.to_vec());
        *self = Howell::new(&gens, self.cols, &self.ring);
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w)
    }

    pub fn contains_all(&self, other: &Howell) -> bool {
        other.rows.iter().all(|row| self.contains(row))
    }

    pub fn same_span(&self, other: &Howell) -> bool {
        self.contains_all(other) && other.contains_all(self)
    }

    /// Elementary divisors of the span (the pivot valuations only determine the order).
    pub fn invariants(&self) -> ModuleInvariants {
        span_invariants(&self.as_mat(), &self.ring)
    }

    pub fn order_exp(&self) -> u32 {
        self.piv.iter().map(|&(_, e)| self.ring.m - e).sum()
    }

    pub fn as_mat(&self) -> Mat {
        Mat::from_rows(&self.rows, self.cols)
    }
}

pub type SparseVec = Vec<(u32, u64)>;

/// Incremental quotient (Z/p^M)^n / span(relations) with unit pivoting on sparse rows.
/// Non-unit residues are kept aside and resolved densely on the free coordinates.
#[derive(Clone, Debug)]
pub struct SparseQuotient {
    pub ring: ResidueRing,
    pub ncols: usize,
    // pivot row for a column: the row with entry 1 there, other entries elsewhere
    pivot: Vec<Option<(u32, SparseVec)>>,
    order: u32,
    deferred: Vec<SparseVec>,
    acc: Vec<u64>,
    mark: Vec<bool>,
    finished: Option<Finished>,
}

#[derive(Clone, Debug)]
struct Finished {
    free: Vec<u32>,
    free_index: Vec<u32>,
    image: Vec<SparseVec>,
    torsion: Howell,
}

impl SparseQuotient {
    pub fn new(ncols: usize, ring: ResidueRing) -> Self {
        SparseQuotient {
            ring,
            ncols,
            pivot: vec![None; ncols],
            order: 0,
            deferred: vec![],
            acc: vec![0; ncols],
            mark: vec![false; ncols],
            finished: None,
        }
    }

    fn reduce_into_acc(&mut self, v: &[(u32, u64)]) -> Vec<u32> {
        let q = self.ring.q;
        let red = Reducer::new(q);
        let mut touched: Vec<u32> = Vec::with_capacity(v.len() * 4);
        let mut heap: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
        for &(c, x) in v {
            let x = x % q;
            if x == 0 {
                continue;
            }
            let ci = c as usize;
            if !self.mark[ci] {
                self.mark[ci] = true;
                touched.push(c);
                if let Some((ord, _)) = &self.pivot[ci] {
                    heap.push(Reverse((*ord, c)));
                }
            }
            self.acc[ci] = red.reduce(self.acc[ci] + x);
        }
        while let Some(Reverse((_, c))) = heap.pop() {
            let ci = c as usize;
            let f = self.acc[ci];
            if f == 0 {
                continue;
            }
            let nf = q - f;
            self.acc[ci] = 0;
            let (_, row) = self.pivot[ci].as_ref().unwrap();
            for &(j, y) in row {
                let ji = j as usize;
                if ji == ci {
                    continue;
                }
                if !self.mark[ji] {
                    self.mark[ji] = true;
                    touched.push(j);
                    if let Some((ord, _)) = &self.pivot[ji] {
                        heap.push(Reverse((*ord, j)));
                    }
                }
                self.acc[ji] = red.mul_add(self.acc[ji], nf, y);
            }
        }
        touched
    }

    fn drain(&mut self, touched: Vec<u32>) -> SparseVec {
        let mut out = SparseVec::new();
        for c in touched {
            let ci = c as usize;
            self.mark[ci] = false;
            let x = self.acc[ci];
            self.acc[ci] = 0;
            if x != 0 {
                out.push((c, x));
            }
        }
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// Fully reduces v against the unit pivots; the result involves only non-pivot columns.
    pub fn reduce(&mut self, v: &[(u32, u64)]) -> SparseVec {
        let t = self.reduce_into_acc(v);
        self.drain(t)
    }

    pub fn add_relation(&mut self, v: &[(u32, u64)]) {
        assert!(self.finished.is_none(), "quotient already finalized");
        let res = self.reduce(v);
        if res.is_empty() {
            return;
        }
        let r = self.ring;
        // prefer the unit entry of highest column index
        let Some(&(pc, px)) = res.iter().rev().find(|e| r.is_unit(e.1)) else {
            self.deferred.push(res);
            return;
        };
        let inv = r.inv(px).unwrap();
        let row: SparseVec = res.iter().map(|&(c, x)| (c, r.mul(x, inv))).collect();
        self.pivot[pc as usize] = Some((self.order, row));
        self.order += 1;
    }

    pub fn rank(&self) -> usize {
        self.pivot.iter().filter(|p| p.is_some()).count()
    }

    /// Closes the relation set, computing the quotient map onto the free coordinates.
    pub fn finish(&mut self) {
        if self.finished.is_some() {
            return;
        }
        let r = self.ring;
        let red = Reducer::new(r.q);
        loop {
            let def = std::mem::take(&mut self.deferred);
            let before = self.rank();
            let mut still = vec![];
            for d in def {
                let res = self.reduce(&d);
                if res.is_empty() {
                    continue;
                }
                if let Some(&(pc, px)) = res.iter().rev().find(|e| r.is_unit(e.1)) {
                    let inv = r.inv(px).unwrap();
                    let row: SparseVec = res.iter().map(|&(c, x)| (c, r.mul(x, inv))).collect();
                    self.pivot[pc as usize] = Some((self.order, row));
                    self.order += 1;
                } else {
                    still.push(res);
                }
            }
            self.deferred = still;
            if self.rank() == before {
                break;
            }
        }
        let free: Vec<u32> = (0..self.ncols as u32).filter(|&c| self.pivot[c as usize].is_none()).collect();
        let mut free_index = vec![u32::MAX; self.ncols];
        for (i, &c) in free.iter().enumerate() {
            free_index[c as usize] = i as u32;
        }
        // images of pivot columns in reverse creation order
        let mut by_order: Vec<(u32, u32)> =
            self.pivot.iter().enumerate().filter_map(|(c, p)| p.as_ref().map(|(o, _)| (*o, c as u32))).collect();
        by_order.sort_unstable();
        let mut image: Vec<SparseVec> = vec![vec![]; self.ncols];
        let mut dense = vec![0u64; free.len()];
        let mut touched: Vec<u32> = vec![];
        for &(_, c) in by_order.iter().rev() {
            let (_, row) = self.pivot[c as usize].as_ref().unwrap();
            for &(j, y) in row {
                if j == c {
                    continue;
                }
                let f = r.q - y;
                let fi = free_index[j as usize];
                if fi != u32::MAX {
                    if dense[fi as usize] == 0 {
                        touched.push(fi);
                    }
                    dense[fi as usize] = red.reduce(dense[fi as usize] + f);
                } else {
                    for &(k, z) in &image[j as usize] {
                        if dense[k as usize] == 0 {
                            touched.push(k);
                        }
                        dense[k as usize] = red.mul_add(dense[k as usize], f, z);
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut v = SparseVec::with_capacity(touched.len());
            for &k in &touched {
                let x = dense[k as usize];
                dense[k as usize] = 0;
                if x != 0 {
                    v.push((k, x));
                }
            }
            touched.clear();
            image[c as usize] = v;
        }
        for (i, &c) in free.iter().enumerate() {
            image[c as usize] = vec![(i as u32, 1)];
        }
        let nf = free.len();
        let tors_rows: Vec<Vec<u64>> = self
            .deferred
            .iter()
            .map(|d| {
                let mut v = vec![0u64; nf];
                for &(c, x) in d {
                    let fi = free_index[c as usize];
                    v[fi as usize] = r.add(v[fi as usize], x);
                }
                v
            })
            .collect();
        let torsion = Howell::new(&tors_rows, nf, &r);
        self.finished = Some(Finished { free, free_index, image, torsion });
    }

    fn fin(&self) -> &Finished {
        self.finished.as_ref().expect("call finish() first")
    }

    /// Number of free coordinates (quotient generators).
    pub fn dim(&self) -> usize {
        self.fin().free.len()
    }

    pub fn free_columns(&self) -> &[u32] {
        &self.fin().free
    }

    pub fn free_index(&self, col: u32) -> Option<usize> {
        let i = self.fin().free_index[col as usize];
        (i != u32::MAX).then_some(i as usize)
    }

    pub fn has_torsion(&self) -> bool {
        !self.fin().torsion.rows.is_empty()
    }

    pub fn torsion(&self) -> &Howell {
        &self.fin().torsion
    }

    /// Image of a basis column in free coordinates.
    pub fn image_of(&self, col: u32) -> &SparseVec {
        &self.fin().image[col as usize]
    }

    /// Image of a sparse vector as a dense vector on the free coordinates.
    pub fn project(&self, v: &[(u32, u64)]) -> Vec<u64> {
        let mut out = vec![0u64; self.dim()];
        self.project_into(v, &mut out);
        out
    }

    /// Accumulates the image of v into a dense vector (entries kept reduced).
    pub fn project_into(&self, v: &[(u32, u64)], out: &mut [u64]) {
        let r = self.ring;
        let red = Reducer::new(r.q);
        let f = self.fin();
        for &(c, x) in v {
            if x == 0 {
                continue;
            }
            for &(k, z) in &f.image[c as usize] {
                out[k as usize] = red.mul_add(out[k as usize], x % r.q, z);
            }
        }
    }

    /// Whether v maps to zero in the quotient.
    pub fn is_zero(&self, v: &[(u32, u64)]) -> bool {
        let mut w = self.project(v);
        if w.iter().all(|&x| x == 0) {
            return true;
        }
        self.fin().torsion.reduce(&mut w)
    }

    /// Invariants of the quotient module.
    pub fn invariants(&self) -> ModuleInvariants {
        let f = self.fin();
        let r = self.ring;
        let m = f.torsion.as_mat();
        if m.rows == 0 {
            return ModuleInvariants::new(r.p, vec![r.m; f.free.len()]);
        }
        cokernel_invariants(&m, &r)
    }
}
