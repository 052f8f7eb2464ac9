//! Examples checked against independent brute-force computations.

use eisencore::arith::*;
use eisencore::group_ring::*;
use eisencore::hecke::*;
use eisencore::k2::*;
use eisencore::linalg::Mat;
use eisencore::modsym::*;
use eisencore::verifier::*;
use eisencore::zq::ResidueRing;

fn is_primitive_root(g: u64, n: u64) -> bool {
    let mut x = 1;
    for k in 1..n - 1 {
        x = x * g % n;
        if x == 1 {
            return k == n - 1;
        }
    }
    true
}

fn least_root(n: u64) -> u64 {
    (2..n).find(|&g| is_primitive_root(g, n)).unwrap()
}

fn brute_dlog(g: u64, a: u64, n: u64) -> u64 {
    let mut x = 1;
    for k in 0..n - 1 {
        if x == a % n {
            return k;
        }
        x = x * g % n;
    }
    panic!("{a} is not a power of {g} mod {n}")
}

fn val(p: u64, mut x: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    while x % p == 0 && v < cap {
        x /= p;
        v += 1;
    }
    v
}

/// Σ k·log k computed as the discrete log of ∏ k^k.
fn merel_oracle(n: u64, p: u64, s: u32, g: u64) -> u64 {
    let mut prod = 1u64;
    for k in 1..=(n - 1) / 2 {
        for _ in 0..k {
            prod = prod * k % n;
        }
    }
    brute_dlog(g, prod, n) % p.pow(s)
}

fn pow_mod_u128(mut a: u128, mut e: u128, m: u128) -> u128 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * a % m;
        }
        a = a * a % m;
        e >>= 1;
    }
    r
}

/// Elementary-divisor exponents of the cokernel of an integer matrix over Z/p^k,
/// by Euclidean elimination on integer representatives.
fn euclid_invariants(mut a: Vec<Vec<u128>>, p: u128, k: u32) -> Vec<u32> {
    let q = p.pow(k);
    let rows = a.len();
    let cols = a[0].len();
    let mut out = vec![];
    let mut r0 = 0;
    for c0 in 0..cols {
        if r0 >= rows {
            out.push(k);
            continue;
        }
        loop {
            // smallest nonzero representative in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(r0) {
                for (j, &x) in row.iter().enumerate().skip(c0) {
                    if x != 0 && best.map_or(true, |(bi, bj)| x < a[bi][bj]) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                break;
            };
            a.swap(r0, bi);
            for row in a.iter_mut() {
                row.swap(c0, bj);
            }
            let piv = a[r0][c0];
            let mut dirty = false;
            for i in r0 + 1..rows {
                let f = a[i][c0] / piv;
                for j in c0..cols {
                    a[i][j] = (a[i][j] + q - f * a[r0][j] % q) % q;
                }
                dirty |= a[i][c0] != 0;
            }
            for j in c0 + 1..cols {
                let f = a[r0][j] / piv;
                for i in r0..rows {
                    a[i][j] = (a[i][j] + q - f * a[i][c0] % q) % q;
                }
                dirty |= a[r0][j] != 0;
            }
            if !dirty {
                break;
            }
        }
        let x = a.get(r0).map_or(0, |row| row[c0]);
        let mut v = 0;
        let mut y = x;
        if y == 0 {
            v = k;
        } else {
            while y % p == 0 {
                y /= p;
                v += 1;
            }
        }
        out.push(v);
        r0 += 1;
    }
    let mut out: Vec<u32> = out.into_iter().filter(|&e| e > 0).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Λ⁽ᵖ⁾/(ζ) and Λ⁽ᵖ⁾/(ζ, ν) from scratch: B₂(x/N)·6N² = 6x² − 6xN + N² is integral,
/// and 6N² is a unit at p.
fn lambda_oracle(n: u64, p: u64) -> (Vec<u32>, Vec<u32>) {
    let g = least_root(n);
    let mut pt = 1;
    while (n - 1) % (pt * p) == 0 {
        pt *= p;
    }
    let k = 12;
    let q = (p as u128).pow(k);
    let mut zeta = vec![0u128; pt as usize];
    for x in 1..n {
        let cls = (brute_dlog(g, x, n) % pt) as usize;
        let (x, n) = (x as i128, n as i128);
        let b = (6 * x * x - 6 * x * n + n * n).rem_euclid(q as i128) as u128;
        zeta[cls] = (zeta[cls] + b) % q;
    }
    let size = pt as usize;
    let shifted = |i: usize| -> Vec<u128> { (0..size).map(|j| zeta[(j + size - i) % size]).collect() };
    let rel: Vec<Vec<u128>> = (0..size).map(shifted).collect();
    let with_nu: Vec<Vec<u128>> = rel.iter().cloned().chain(std::iter::once(vec![1u128; size])).collect();
    (euclid_invariants(rel, p as u128, k), euclid_invariants(with_nu, p as u128, k))
}

fn detail<'a>(r: &'a VerificationReport, key: &str) -> &'a str {
    r.detail.get(key).map(String::as_str).unwrap_or_else(|| panic!("missing {key} in {r}"))
}

fn exps_string(e: &[u32]) -> String {
    format!("{e:?}")
}

#[test]
fn unit_group_examples() {
    let u = unit_group(11).unwrap();
    assert_eq!(u.g, least_root(11));
    assert_eq!(u.g, 2);
    assert_eq!(u.dlog(5).unwrap(), 4);
    assert_eq!(u.dlog(1).unwrap(), 0);
    assert_eq!(unit_group(31).unwrap().g, 3);
    for n in primes_upto(300).into_iter().filter(|&n| n >= 5) {
        let u = unit_group(n).unwrap();
        assert_eq!(u.g, least_root(n));
        for a in 1..n {
            assert_eq!(u.dlog(a as i64).unwrap(), brute_dlog(u.g, a, n));
        }
    }
    assert!(unit_group(15).is_err());
    assert!(unit_group(3).is_err());
}

#[test]
fn padic_log_examples() {
    let u = unit_group(11).unwrap();
    assert_eq!(padic_log(&u, 2, 5, 1).unwrap(), 1);
    assert_eq!(padic_log(&u, 1, 5, 1).unwrap(), 0);
    assert_eq!(padic_log(&u, 10, 5, 1).unwrap(), 0);
    assert!(padic_log(&u, 22, 5, 1).is_err());
    assert!(padic_log(&u, 2, 5, 2).is_err());
}

#[test]
fn merel_log_matches_product_of_powers() {
    assert_eq!(merel_log(11, 5, 1).unwrap(), 4);
    for (n, p) in admissible_pairs(400) {
        let t = Layer::new(n, p, None).unwrap().t;
        let g = least_root(n);
        let other = (g + 1..n).find(|&h| is_primitive_root(h, n));
        for s in 1..=t {
            let m = merel_log(n, p, s).unwrap();
            assert_eq!(m, merel_oracle(n, p, s, g), "N={n} p={p} s={s}");
            if let Some(h) = other {
                assert_eq!(val(p, merel_oracle(n, p, s, h), s), val(p, m, s));
            }
            assert_eq!(merel_valuation(n, p, s).unwrap(), val(p, m, s));
        }
    }
}

#[test]
fn stickelberger_log_matches_rational_sum() {
    for (n, p) in admissible_pairs(300) {
        let t = Layer::new(n, p, None).unwrap().t;
        let g = least_root(n);
        for s in 1..=t {
            let ps = p.pow(s) as u128;
            // Σ (6x² − 6xN + N²)·log x, then divide by 6N²
            let mut acc = 0u128;
            for x in 1..n {
                let (xi, ni) = (x as i128, n as i128);
                let b = (6 * xi * xi - 6 * xi * ni + ni * ni).rem_euclid(ps as i128) as u128;
                acc = (acc + b * (brute_dlog(g, x, n) as u128 % ps)) % ps;
            }
            let d = (6 * n * n) as u128 % ps;
            let phi = ps / p as u128 * (p as u128 - 1);
            let dinv = pow_mod_u128(d, phi - 1, ps);
            let want = (acc * dinv % ps) as u64;
            assert_eq!(stickelberger_log(n, p, s).unwrap(), want, "N={n} p={p} s={s}");
        }
    }
}

#[test]
fn manin_label_counts() {
    // P¹(Z/11) by brute force: nonzero pairs modulo scalars
    let n = 11u64;
    let mut seen = std::collections::BTreeSet::new();
    let mut nonzero_cd = std::collections::BTreeSet::new();
    for c in 0..n {
        for d in 0..n {
            if c == 0 && d == 0 {
                continue;
            }
            let canon = (1..n).map(|k| (c * k % n, d * k % n)).min().unwrap();
            seen.insert(canon);
            if c * d % n != 0 {
                nonzero_cd.insert(canon);
            }
        }
    }
    let g0 = LevelDescriptor::gamma0(11).unwrap();
    assert_eq!(g0.label_count(), seen.len());
    assert_eq!(seen.len(), 12);
    let m0 = (0..g0.label_count() as u32).filter(|&l| {
        let (c, d) = g0.rep(l);
        c * d % n != 0
    });
    assert_eq!(m0.count(), nonzero_cd.len());
    assert_eq!(nonzero_cd.len(), 10);
    let layer = Layer::new(11, 5, None).unwrap();
    let g1 = LevelDescriptor::gamma1p(&layer);
    // D = {±1}: 120 nonzero pairs, two per class
    assert_eq!(g1.label_count(), 60);
    assert!(LevelDescriptor::from_subgroup(11, &[1, 3, 4, 5, 9]).is_err());
}

/// Classical genus of X₀(N) for prime N.
fn genus_x0(n: u64) -> u64 {
    let legendre = |a: i64| -> i64 {
        let e = (n - 1) / 2;
        let x = pow_mod_u128(a.rem_euclid(n as i64) as u128, e as u128, n as u128) as u64;
        if x == 1 {
            1
        } else {
            -1
        }
    };
    let nu2 = 1 + legendre(-1);
    let nu3 = 1 + legendre(-3);
    // g = 1 + μ/12 − ν₂/4 − ν₃/3 − ν∞/2 with μ = N+1, ν∞ = 2
    let twelve_g = 12 + (n as i64 + 1) - 3 * nu2 - 4 * nu3 - 12;
    assert_eq!(twelve_g % 12, 0);
    (twelve_g / 12) as u64
}

#[test]
fn absolute_homology_rank_is_twice_the_genus() {
    let r = ResidueRing::raw(5, 2).unwrap();
    assert_eq!(genus_x0(11), 1);
    for n in [11u64, 23, 29, 37, 43, 53, 67, 79, 97, 131] {
        let r = if n % 5 == 0 { ResidueRing::raw(7, 2).unwrap() } else { r };
        let lev = LevelDescriptor::gamma0(n).unwrap();
        assert_eq!(genus(&lev), genus_x0(n), "N={n}");
        let s = ManinSpace::new(&lev, r, Model::Full, Sign::Both).unwrap();
        let h = s.absolute_homology();
        assert_eq!(h.rows as u64, 2 * genus_x0(n), "N={n}");
        let plus = ManinSpace::new(&lev, r, Model::Full, Sign::Plus).unwrap();
        assert_eq!(plus.absolute_homology().rows as u64, genus_x0(n), "N={n}");
    }
}

/// a_ℓ of the curve y² + y = x³ − x² − 10x − 20 of conductor 11, by point counting.
fn a_ell_11a(l: u64) -> i64 {
    let mut count = 1;
    for x in 0..l as i64 {
        for y in 0..l as i64 {
            let lhs = y * y + y;
            let rhs = x * x * x - x * x - 10 * x - 20;
            if (lhs - rhs).rem_euclid(l as i64) == 0 {
                count += 1;
            }
        }
    }
    l as i64 + 1 - count
}

#[test]
fn gamma0_eleven_hecke_eigenvalues() {
    assert_eq!(a_ell_11a(2), -2);
    let lev = LevelDescriptor::gamma0(11).unwrap();
    let r = ResidueRing::raw(7, 3).unwrap();
    let full = ManinSpace::new(&lev, r, Model::Full, Sign::Both).unwrap();
    let rel = ManinSpace::new(&lev, r, Model::Relative, Sign::Both).unwrap();
    let id = Mat::identity(full.dim());
    let mut gens = vec![];
    for l in [2u64, 3, 5, 13, 17, 19] {
        let a = r.reduce(a_ell_11a(l));
        let t = hecke_matrix(&full, l).unwrap();
        let cusp = t.sub(&id.scale(a, &r), &r);
        let eis = t.sub(&id.scale((l + 1) % r.q, &r), &r);
        assert!(cusp.mul(&cusp, &r).mul(&eis, &r).is_zero(), "l={l}");
        assert_eq!(hecke_matrix(&rel, l).unwrap(), Mat::identity(rel.dim()).scale(a, &r), "l={l}");
        gens.push(t);
    }
    gens.push(hecke_matrix(&full, 11).unwrap());
    let alg = HeckeAlgebraBasis::generate(gens, full.dim(), r).unwrap();
    assert!(alg.commutative());
    assert_eq!(alg.rank(), 2);
    for d in 2..11 {
        assert_eq!(full.diamond_matrix(d).unwrap(), id);
    }
}

#[test]
fn heilbronn_determinants() {
    for l in [2u64, 3, 5, 7, 11, 13] {
        let fam = heilbronn(l).unwrap();
        assert!(fam.iter().all(|h| h[0] * h[3] - h[1] * h[2] == l as i64));
    }
    let two = heilbronn(2).unwrap();
    assert_eq!(two.len(), 4);
    assert!(two.contains(&[1, 0, 0, 2]) && two.contains(&[2, 0, 0, 1]));
    assert!(heilbronn(4).is_err());
}

#[test]
fn lambda_mod_zeta_matches_snf_oracle() {
    for (n, p) in [(11u64, 5u64), (31, 5), (41, 5), (23, 11), (101, 5)] {
        let (zeta, zeta_nu) = lambda_oracle(n, p);
        let t = Layer::new(n, p, None).unwrap().t;
        let m = zeta.iter().copied().max().unwrap_or(0).max(t) + 1;
        let layer = Layer::new(n, p, None).unwrap();
        let gr = GroupRing::for_layer(&layer, m).unwrap();
        let z = zeta_element(n, p, m).unwrap();
        let lp = LambdaPresentation::cyclic(gr, &z);
        assert_eq!(lp.invariants().exps, zeta, "N={n} p={p}");
        let order: u32 = zeta.iter().sum();
        let nu_order: u32 = zeta_nu.iter().sum();
        assert!(nu_order >= t && order > nu_order, "N={n} p={p}: {zeta:?} {zeta_nu:?}");
        let rep = verify_eisenstein_quotient(n, p, &Options::default()).unwrap();
        assert_eq!(rep.status, Status::Pass, "{rep}");
        assert_eq!(rep.invariants, zeta.iter().map(|&e| e as i64).collect::<Vec<_>>());
        assert_eq!(detail(&rep, "lambda_mod_zeta"), exps_string(&zeta));
        assert_eq!(detail(&rep, "lambda_mod_zeta_nu"), exps_string(&zeta_nu));
        assert_eq!(detail(&rep, "cuspidality_ideal"), "true");
    }
}

#[test]
fn graded_pieces_of_the_k_model() {
    for (n, p) in admissible_pairs(200) {
        let t = Layer::new(n, p, None).unwrap().t;
        let m = t + 2;
        let gr = GroupRing::for_layer(&Layer::new(n, p, None).unwrap(), m).unwrap();
        let lam = LambdaPresentation::cyclic(gr, &gr.zero());
        assert_eq!(graded_jadic(&lam, 1).unwrap().order_exp(), t);
        let k = k_model(n, p, m).unwrap();
        assert_eq!(graded_jadic(&k, 0).unwrap().order_exp(), t, "K/JK at N={n} p={p}");
        assert_eq!(graded_jadic(&k, 1).unwrap().order_exp(), t, "JK/J²K at N={n} p={p}");
        for s in 1..=t {
            let v = val(p, merel_oracle(n, p, s, least_root(n)), s);
            let ks = k_model(n, p, s).unwrap();
            assert_eq!(graded_jadic(&ks, 1).unwrap().order_exp(), v, "N={n} p={p} s={s}");
        }
        assert!(graded_jadic(&k, -1).is_err());
    }
}

#[test]
fn cyclotomic_unit_examples() {
    let n = 11;
    let mut prod = CycUnit::one(n);
    for a in 1..n as i64 {
        prod = prod.mul(&CycUnit::new(n, a).unwrap());
    }
    assert!(prod.u.iter().all(|&e| e == 2));
    assert_eq!(prod.valuation(), n as i64 - 1);
    let r = ResidueRing::raw(5, 1).unwrap();
    let units = unit_group(n).unwrap();
    assert_eq!(residue(&SymbolElt::basis(n, r, 2, 1), &units).unwrap(), 1);
    assert_eq!(residue(&SymbolElt::basis(n, r, 3, 3), &units).unwrap(), 0);
    let x = CycUnit::new(n, 4).unwrap();
    assert!(symbol(&x, &x, r).is_zero());
    // (1−ζ^{u+v}) − ζ^v(1−ζ^u) = 1−ζ^v gives the three-term expansion
    let s = steinberg_relation(n, 1, 2, r).unwrap();
    let mut want = SymbolElt::zero(n, r);
    want.add_steinberg(1, 2, 1);
    want.add_steinberg(1, 3, -1);
    want.add_steinberg(3, 2, -1);
    assert_eq!(s, want);
}

#[test]
fn identity_examples() {
    let two = generated_identity(2).unwrap();
    let r = ResidueRing::raw(5, 1).unwrap();
    // the classical ℓ = 2 family
    let family = [[1i64, 0, 0, 2], [2, 0, 0, 1], [2, 1, 0, 1], [1, 0, 1, 2]];
    let mut ours = heilbronn(2).unwrap();
    ours.sort();
    let mut want_family = family.to_vec();
    want_family.sort();
    assert_eq!(ours, want_family);
    let n = 11i64;
    for u in 1..n {
        for v in 1..n {
            let (a, b) = (6 * u, 6 * v);
            let mut want = SymbolElt::zero(11, r);
            for h in family {
                want.add_steinberg(a * h[0] + b * h[2], a * h[1] + b * h[3], 1);
            }
            want.add_steinberg(2 * a, 2 * b, -1);
            want.add_steinberg(a, b, -2);
            assert_eq!(hecke_identity_elt(2, u, v, 11, r).unwrap(), want);
        }
    }
    assert_eq!(two.lhs.len(), heilbronn(2).unwrap().len());
    assert_eq!(two.lhs.len(), 4);
    let fixed = IdentityFixture::l5();
    assert_eq!((fixed.lhs.len(), fixed.rhs.len()), (18, 2));
    let five = generated_identity(5).unwrap();
    assert_eq!(five.rhs.len(), 2);
    let eq = survey_fixture(&fixed, 11, 5, 1, &[(1, 5)], false).unwrap();
    assert!(eq.failed.is_empty() && eq.refuted.is_empty());
    for l in [2u64, 3] {
        let sv = identity_status(l, 11, 5, 1).unwrap();
        assert!(sv.failed.is_empty(), "l={l}");
    }
    let five_status = identity_status(5, 11, 5, 1).unwrap();
    assert!(five_status.refuted.is_empty());
}

#[test]
fn verifier_examples() {
    let o = Options::default();
    let m = verify_mazur(11, 5, &o).unwrap();
    assert_eq!((m.status, m.invariants.clone()), (Status::Pass, vec![1]));
    let m = verify_mazur(23, 11, &o).unwrap();
    assert_eq!((m.status, m.invariants.clone()), (Status::Pass, vec![1]));
    let h = verify_hida(11, 5, &o).unwrap();
    assert_eq!(h.status, Status::Pass);
    assert_eq!(detail(&h, "relative_kernel_is_JH"), "true");
    assert_eq!(detail(&h, "trivial_chain_kernel_zero"), "true");
    let h = verify_hida(31, 5, &o).unwrap();
    assert_eq!(h.status, Status::Pass);
    assert_eq!(detail(&h, "absolute_kernel_is_JH"), "true");
    for (n, p) in [(11, 5), (31, 5)] {
        let w = verify_winding(n, p, &o).unwrap();
        assert_eq!(w.status, Status::Pass);
        assert_eq!(detail(&w, "locally_principal"), "true");
    }
    let eq = verify_eisenstein_quotient(101, 5, &o).unwrap();
    assert_eq!((eq.t, eq.status), (2, Status::Pass));
    let b = verify_bridge_and_thm18(11, 5, 1, &o).unwrap();
    assert_eq!((b.status, b.v, b.merel_log), (Status::Pass, 0, 4));
    assert_eq!(detail(&b, "graded_mod_p^s"), "[]");
    assert_eq!(detail(&b, "jk_graded"), "[]");
    let (n, p) = admissible_pairs(200).into_iter().find(|&(n, p)| merel_valuation(n, p, 1).unwrap() >= 1).unwrap();
    let b = verify_bridge_and_thm18(n, p, 1, &o).unwrap();
    assert_eq!((b.status, b.v), (Status::Pass, 1), "{b}");
    assert_eq!(detail(&b, "graded_mod_p^s"), "[1]");
    assert_eq!(detail(&b, "jk_graded"), "[1]");
    assert!(verify_bridge_and_thm18(11, 5, 2, &o).is_err());
    let sh = verify_sharifi_shadows(11, 5, 1, &o).unwrap();
    assert_eq!(sh.status, Status::Pass);
    assert_eq!(detail(&sh, "manin_relations"), "Verified");
    assert_eq!(detail(&sh, "boundary_is_residue"), "true");
    assert!(verify_mazur(13, 5, &o).is_err());
    assert!(verify_mazur(11, 3, &o).is_err());
}

#[test]
fn reports_are_deterministic() {
    let o = Options::default();
    for check in CheckId::ALL {
        let a = verify(check, 11, 5, None, &o).unwrap().without_timing();
        let b = verify(check, 11, 5, None, &o).unwrap().without_timing();
        assert_eq!(a, b);
    }
}
