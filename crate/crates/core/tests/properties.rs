use eisencore::arith::*;
use eisencore::group_ring::*;
use eisencore::hecke::*;
use eisencore::k2::*;
use eisencore::linalg::*;
use eisencore::modsym::*;
use eisencore::zq::ResidueRing;
use proptest::prelude::*;

const PRIMES: &[u64] = &[11, 13, 23, 29, 31, 37, 41, 43, 61, 71, 101, 103];

fn pairs() -> Vec<(u64, u64)> {
    admissible_pairs(120)
}

fn pair() -> impl Strategy<Value = (u64, u64)> {
    let ps = pairs();
    (0..ps.len()).prop_map(move |i| ps[i])
}

fn ring_strategy() -> impl Strategy<Value = ResidueRing> {
    prop_oneof![Just((5u64, 2u32)), Just((5, 3)), Just((7, 2)), Just((11, 2)), Just((13, 1))]
        .prop_map(|(p, m)| ResidueRing::raw(p, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dlog_is_a_homomorphism(i in 0..PRIMES.len(), a in 1u64..1000, b in 1u64..1000) {
        let n = PRIMES[i];
        prop_assume!(a % n != 0 && b % n != 0);
        let u = unit_group(n).unwrap();
        prop_assert_eq!(u.gpow(u.dlog(a as i64).unwrap()), a % n);
        let lhs = u.dlog((a * b % n) as i64).unwrap();
        let rhs = (u.dlog(a as i64).unwrap() + u.dlog(b as i64).unwrap()) % (n - 1);
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(u.dlog(u.g as i64).unwrap(), 1);
        prop_assert_eq!(u.dlog(1).unwrap(), 0);
    }

    #[test]
    fn padic_log_is_a_surjective_homomorphism((n, p) in pair(), a in 1u64..10_000, b in 1u64..10_000, s0 in 1u32..4) {
        prop_assume!(a % n != 0 && b % n != 0);
        let u = unit_group(n).unwrap();
        let s = s0.min(u.t(p));
        let ps = p.pow(s);
        let la = padic_log(&u, a as i64, p, s).unwrap();
        let lb = padic_log(&u, b as i64, p, s).unwrap();
        prop_assert_eq!(padic_log(&u, (a * b % n) as i64, p, s).unwrap(), (la + lb) % ps);
        prop_assert_eq!(padic_log(&u, u.g as i64, p, s).unwrap(), 1);
        prop_assert_eq!(padic_log(&u, -1, p, s).unwrap(), 0);
    }

    #[test]
    fn bernoulli_distribution_and_symmetry(i in 0..PRIMES.len(), r in ring_strategy(), x in 1u64..200) {
        let n = PRIMES[i];
        prop_assume!(n % r.p != 0);
        let total = (0..n).fold(0, |acc, y| r.add(acc, bernoulli2(y, n, &r)));
        let b0 = bernoulli2(0, n, &r);
        prop_assert_eq!(total, r.mul(b0, r.inv(n).unwrap()));
        prop_assert_eq!(b0, r.inv(6).unwrap());
        let x = x % n;
        prop_assert_eq!(bernoulli2(x, n, &r), bernoulli2((n - x) % n, n, &r));
    }

    #[test]
    fn lecouturier_identity((n, p) in pair(), s0 in 1u32..4) {
        let s = s0.min(Layer::new(n, p, None).unwrap().t);
        prop_assert_eq!(stickelberger_log(n, p, s).unwrap(), lecouturier_rhs(n, p, s).unwrap());
    }

    #[test]
    fn group_ring_is_a_commutative_ring(
        r in ring_strategy(),
        order in 1usize..10,
        seed in prop::collection::vec(0u64..1 << 40, 30),
    ) {
        let gr = GroupRing::new(r, order);
        let elt = |k: usize| GroupRingElt { coeffs: (0..order).map(|i| seed[(k * 10 + i) % 30] % r.q).collect() };
        let (a, b, c) = (elt(0), elt(1), elt(2));
        prop_assert_eq!(gr.mul(&a, &b), gr.mul(&b, &a));
        prop_assert_eq!(gr.mul(&gr.mul(&a, &b), &c), gr.mul(&a, &gr.mul(&b, &c)));
        prop_assert_eq!(gr.mul(&a, &gr.add(&b, &c)), gr.add(&gr.mul(&a, &b), &gr.mul(&a, &c)));
        prop_assert_eq!(gr.mul(&a, &gr.one()), a.clone());
        prop_assert_eq!(gr.augmentation(&gr.mul(&a, &b)), r.mul(gr.augmentation(&a), gr.augmentation(&b)));
        prop_assert_eq!(gr.augmentation(&gr.add(&a, &b)), r.add(gr.augmentation(&a), gr.augmentation(&b)));
    }

    #[test]
    fn norm_element_identities((n, p) in pair(), extra in 0u32..3) {
        let t = Layer::new(n, p, None).unwrap().t;
        let m = t + 1 + extra;
        let r = ResidueRing::raw(p, m).unwrap();
        let gr = GroupRing::new(r, p.pow(t) as usize);
        let nu = nu_element(p, t, m).unwrap();
        prop_assert_eq!(gr.augmentation(&nu), p.pow(t) % r.q);
        prop_assert!(gr.mul(&gr.j_gen(), &nu).coeffs.iter().all(|&x| x == 0));
        prop_assert_eq!(gr.mul(&nu, &nu), gr.scale(&nu, p.pow(t) % r.q));
        let zeta = zeta_element(n, p, m).unwrap();
        let degree = r.neg(r.frac((n - 1) as i64, (6 * n) as i64).unwrap());
        prop_assert_eq!(gr.augmentation(&zeta), degree);
    }

    #[test]
    fn invariants_ignore_unimodular_changes(
        r in ring_strategy(),
        rows in 1usize..6,
        cols in 1usize..6,
        entries in prop::collection::vec(0u64..1 << 40, 36),
        ops in prop::collection::vec((0usize..6, 0usize..6, 0u64..1 << 40, any::<bool>()), 0..25),
    ) {
        let mut a = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                // bias towards non-units so the invariants are interesting
                let x = entries[i * 6 + j] % r.q;
                a.set(i, j, if x % 3 == 0 { r.mul(x, r.p) } else { x });
            }
        }
        let before = cokernel_invariants(&a, &r);
        for &(i, j, c, on_rows) in &ops {
            let c = c % r.q;
            if on_rows {
                let (i, j) = (i % rows, j % rows);
                if i == j {
                    continue;
                }
                for k in 0..cols {
                    let x = r.add(a.get(i, k), r.mul(c, a.get(j, k)));
                    a.set(i, k, x);
                }
            } else {
                let (i, j) = (i % cols, j % cols);
                if i == j {
                    continue;
                }
                for k in 0..rows {
                    let x = r.add(a.get(k, i), r.mul(c, a.get(k, j)));
                    a.set(k, i, x);
                }
            }
        }
        let after = cokernel_invariants(&a, &r);
        prop_assert_eq!(&before, &after);
        prop_assert!(before.exps.iter().all(|&e| e <= r.m));
    }
}

fn spaces_for(n: u64, p: u64, m: u32, model: Model) -> Vec<ManinSpace> {
    let layer = Layer::new(n, p, None).unwrap();
    let r = ResidueRing::new(p, m, n).unwrap();
    [LevelDescriptor::gamma0(n).unwrap(), LevelDescriptor::gamma1p(&layer)]
        .iter()
        .map(|lev| ManinSpace::new(lev, r, model, Sign::Both).unwrap())
        .collect()
}

fn small_pair() -> impl Strategy<Value = (u64, u64)> {
    prop_oneof![Just((11u64, 5u64)), Just((23, 11)), Just((29, 7)), Just((31, 5)), Just((41, 5))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn star_is_an_involution_with_complementary_projectors((n, p) in small_pair(), seed in any::<u64>()) {
        for s in spaces_for(n, p, 3, Model::Relative) {
            let r = s.ring;
            let st = s.star_matrix();
            let id = Mat::identity(s.dim());
            prop_assert_eq!(st.mul(&st, &r), id.clone());
            let v: Vec<u64> = (0..s.dim()).map(|i| (seed.rotate_left(i as u32) ^ i as u64) % r.q).collect();
            let plus = id.add(&st, &r);
            let minus = id.sub(&st, &r);
            let w = minus.vec_mul(&plus.vec_mul(&v, &r), &r);
            prop_assert!(w.iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn hecke_operators_commute_and_multiply((n, p) in small_pair()) {
        for s in spaces_for(n, p, 2, Model::Relative) {
            let r = s.ring;
            let t2 = hecke_matrix(&s, 2).unwrap();
            let t3 = hecke_matrix(&s, 3).unwrap();
            let t6 = hecke_matrix(&s, 6).unwrap();
            prop_assert_eq!(t2.mul(&t3, &r), t3.mul(&t2, &r));
            prop_assert_eq!(t2.mul(&t3, &r), t6);
            let tn = hecke_matrix(&s, n).unwrap();
            prop_assert_eq!(tn.mul(&t2, &r), t2.mul(&tn, &r));
            let st = s.star_matrix();
            let d = s.diamond_matrix(2).unwrap();
            for op in [&t2, &t3, &tn, &d] {
                prop_assert_eq!(op.mul(&st, &r), st.mul(op, &r));
            }
            prop_assert_eq!(d.mul(&t3, &r), t3.mul(&d, &r));
        }
    }

    #[test]
    fn boundary_lands_in_degree_zero_and_hecke_kills_cusps((n, p) in small_pair(), l in prop::sample::select(vec![2u64, 3, 5, 7, 13])) {
        prop_assume!(l != n);
        for s in spaces_for(n, p, 2, Model::Full) {
            let r = s.ring;
            let bd = s.boundary_matrix();
            for i in 0..bd.rows {
                prop_assert_eq!(bd.row(i).iter().fold(0, |a, &x| r.add(a, x)), 0);
            }
        }
        for s in spaces_for(n, p, 2, Model::Relative) {
            let r = s.ring;
            let bd = s.boundary_matrix();
            let tl = hecke_matrix(&s, l).unwrap();
            let dl = s.diamond_matrix(l as i64).unwrap();
            let op = tl.sub(&Mat::identity(s.dim()).scale(l % r.q, &r), &r).sub(&dl, &r);
            prop_assert!(op.mul(&bd, &r).is_zero());
        }
    }

    #[test]
    fn degeneracy_is_functorial((n, p) in small_pair()) {
        let layer = Layer::new(n, p, None).unwrap();
        let r = ResidueRing::new(p, 2, n).unwrap();
        let g1 = ManinSpace::new(&LevelDescriptor::gamma1p(&layer), r, Model::Relative, Sign::Both).unwrap();
        let g0 = ManinSpace::new(&LevelDescriptor::gamma0(n).unwrap(), r, Model::Relative, Sign::Both).unwrap();
        let same = degeneracy(&g1, &g1).unwrap();
        prop_assert_eq!(same, Mat::identity(g1.dim()));
        let down = degeneracy(&g1, &g0).unwrap();
        let id0 = degeneracy(&g0, &g0).unwrap();
        prop_assert_eq!(down.mul(&id0, &r), down.clone());
        // degeneracy intertwines the Hecke action
        let t2a = hecke_matrix(&g1, 2).unwrap();
        let t2b = hecke_matrix(&g0, 2).unwrap();
        prop_assert_eq!(t2a.mul(&down, &r), down.mul(&t2b, &r));
        prop_assert!(degeneracy(&g0, &g1).is_err());
    }

    #[test]
    fn residue_kills_steinberg_relations(i in 0..PRIMES.len(), u in 1i64..200, v in 1i64..200, s in 1u32..3) {
        let n = PRIMES[i];
        prop_assume!(u % n as i64 != 0 && v % n as i64 != 0 && (u + v) % n as i64 != 0);
        let p = [5u64, 7, 11, 13].into_iter().find(|&p| (n - 1) % p == 0);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let s = s.min(Layer::new(n, p, None).unwrap().t);
        let r = ResidueRing::new(p, s, n).unwrap();
        let units = unit_group(n).unwrap();
        let rel = steinberg_relation(n, u, v, r).unwrap();
        prop_assert_eq!(residue(&rel, &units).unwrap(), 0);
        // two-term relation ⟨1−ζ^u, 1−ζ^v⟩ + ⟨1−ζ^{−v}, 1−ζ^u⟩ vanishes identically
        let mut two = SymbolElt::zero(n, r);
        two.add_steinberg(u, v, 1);
        two.add_steinberg(-v, u, 1);
        prop_assert!(two.is_zero());
    }

    #[test]
    fn galois_action_is_a_group_action(i in 0..PRIMES.len(), a in 1i64..100, b in 1i64..100, coefs in prop::collection::vec(0i64..25, 6)) {
        let n = PRIMES[i];
        let ni = n as i64;
        prop_assume!(a % ni != 0 && b % ni != 0);
        let r = ResidueRing::raw(5, 2).unwrap();
        let mut e = SymbolElt::zero(n, r);
        for (k, &c) in coefs.iter().enumerate() {
            e.add_steinberg(k as i64 + 1, 2 * k as i64 + 3, c);
        }
        let ai = eisencore::arith::inv_mod(a, n).unwrap() as i64;
        prop_assert_eq!(e.galois(a).unwrap().galois(ai).unwrap(), e.clone());
        prop_assert_eq!(e.galois(a).unwrap().galois(b).unwrap(), e.galois(a * b).unwrap());
    }

    #[test]
    fn hecke_identity_is_galois_equivariant(l in prop::sample::select(vec![2u64, 3, 5]), u in 1i64..11, v in 1i64..11, a in 2i64..11) {
        let n = 11;
        let r = ResidueRing::raw(5, 1).unwrap();
        let ai = eisencore::arith::inv_mod(a, n).unwrap() as i64;
        let e = hecke_identity_elt(l, u, v, n, r).unwrap();
        let moved = hecke_identity_elt(l, ai * u, ai * v, n, r).unwrap();
        prop_assert_eq!(e.galois(a).unwrap(), moved);
    }

    #[test]
    fn fixture_display_roundtrips(
        terms in prop::collection::vec((1i64..4, any::<bool>(), (-3i64..4, -3i64..4), (-3i64..4, -3i64..4)), 1..8),
        split in 0usize..8,
    ) {
        let mk = |&(k, neg, f, g): &(i64, bool, (i64, i64), (i64, i64))| FixtureTerm {
            coef: if neg { -k } else { k },
            first: f,
            second: g,
        };
        prop_assume!(terms.iter().all(|t| t.2 != (0, 0) && t.3 != (0, 0)));
        let split = split.min(terms.len());
        let fx = IdentityFixture { lhs: terms[..split].iter().map(mk).collect(), rhs: terms[split..].iter().map(mk).collect() };
        let back = IdentityFixture::parse(&fx.to_string()).unwrap();
        prop_assert_eq!(back, fx);
    }
}

#[test]
fn norm_mode_span_contains_plain_span() {
    let (n, p, s) = (23, 11, 1);
    let plain = relation_span(n, p, s, SpanMode::Plain).unwrap();
    let normed = relation_span(n, p, s, SpanMode::ModNorm).unwrap();
    let r = ResidueRing::new(p, s, n).unwrap();
    for u in 1..n as i64 {
        for v in 1..n as i64 {
            if (u + v) % n as i64 == 0 {
                continue;
            }
            let rel = steinberg_relation(n, u, v, r).unwrap();
            assert_eq!(membership(&rel, &plain), Membership::Verified);
            assert_eq!(membership(&rel, &normed), Membership::Verified);
        }
    }
}

#[test]
fn verified_identities_are_monotone_in_precision() {
    let (n, p) = (101, 5);
    let top = eisencore::verifier::identity_status(2, n, p, 2).unwrap();
    assert!(top.failed.is_empty() && top.refuted.is_empty());
    let low = eisencore::verifier::identity_status(2, n, p, 1).unwrap();
    assert!(low.failed.is_empty() && low.refuted.is_empty());
}
