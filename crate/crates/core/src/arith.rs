//! Unit groups mod N, p-adic logarithms, Bernoulli values and the Merel and Stickelberger sums.

use crate::error::{Error, Result};
use crate::zq::ResidueRing;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let mut sieve = vec![true; n as usize + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n as usize {
        if sieve[i] {
            let mut j = i * i;
            while j <= n as usize {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k as usize]).collect()
}

/// Exponent of p in n (n > 0).
pub fn ord(p: u64, mut n: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn pow_mod(mut a: u64, mut e: u64, n: u64) -> u64 {
    let mut r = 1 % n;
    a %= n;
    while e > 0 {
        if e & 1 == 1 {
            r = r * a % n;
        }
        a = a * a % n;
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: i64, n: u64) -> Option<u64> {
    let a = a.rem_euclid(n as i64);
    let (mut r0, mut r1) = (n as i64, a);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(n as i64) as u64)
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// (Z/N)^× with its least primitive root and discrete-log table.
#[derive(Clone, Debug)]
pub struct UnitStructure {
    pub n: u64,
    pub g: u64,
    dlog: Vec<u32>,
    exp: Vec<u32>,
}

impl UnitStructure {
    pub fn dlog(&self, a: i64) -> Result<u64> {
        let r = a.rem_euclid(self.n as i64) as usize;
        if r == 0 {
            return Err(Error::NotUnit(a));
        }
        Ok(self.dlog[r] as u64)
    }

    /// Discrete log of a residue known to be nonzero.
    #[inline]
    pub fn dlog_u(&self, a: u64) -> u64 {
        self.dlog[a as usize] as u64
    }

    /// g^k mod N.
    #[inline]
    pub fn gpow(&self, k: u64) -> u64 {
        self.exp[(k % (self.n - 1)) as usize] as u64
    }

    pub fn inv(&self, a: u64) -> u64 {
        let k = self.dlog_u(a % self.n);
        self.gpow(self.n - 1 - k)
    }

    pub fn t(&self, p: u64) -> u32 {
        ord(p, self.n - 1)
    }
}

pub fn unit_group(n: u64) -> Result<UnitStructure> {
    if n < 5 {
        return Err(Error::LevelTooSmall(n));
    }
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let qs = prime_factors(n - 1);
    let g = (2..n)
        .find(|&g| qs.iter().all(|&q| pow_mod(g, (n - 1) / q, n) != 1))
        .expect("prime modulus has a primitive root");
    let mut dlog = vec![0u32; n as usize];
    let mut exp = vec![0u32; n as usize - 1];
    let mut x = 1u64;
    for k in 0..n - 1 {
        exp[k as usize] = x as u32;
        dlog[x as usize] = k as u32;
        x = x * g % n;
    }
    Ok(UnitStructure { n, g, dlog, exp })
}

/// An admissible triple (N, p, s) together with t = ord_p(N−1).
#[derive(Clone, Debug)]
pub struct Layer {
    pub units: UnitStructure,
    pub p: u64,
    pub t: u32,
    pub s: u32,
}

impl Layer {
    pub fn new(n: u64, p: u64, s: Option<u32>) -> Result<Self> {
        let units = unit_group(n)?;
        if p < 5 || !is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        if (n - 1) % p != 0 {
            return Err(Error::NotAdmissible { p, n1: n - 1 });
        }
        let t = ord(p, n - 1);
        let s = s.unwrap_or(t);
        if s < 1 || s > t {
            return Err(Error::BadLayer { s, t });
        }
        Ok(Layer { units, p, t, s })
    }

    pub fn n(&self) -> u64 {
        self.units.n
    }

    pub fn pt(&self) -> u64 {
        self.p.pow(self.t)
    }

    pub fn ps(&self) -> u64 {
        self.p.pow(self.s)
    }

    /// log into Z/p^s.
    pub fn log(&self, a: i64) -> Result<u64> {
        padic_log(&self.units, a, self.p, self.s)
    }

    /// Class of a unit in P = (Z/N)^× / (p^t-th powers), as an index in 0..p^t.
    #[inline]
    pub fn class(&self, a: u64) -> usize {
        (self.units.dlog_u(a % self.n()) % self.pt()) as usize
    }
}

/// dlog projected through Z/(N−1) → Z/p^t → Z/p^s.
pub fn padic_log(u: &UnitStructure, a: i64, p: u64, s: u32) -> Result<u64> {
    let t = u.t(p);
    if t == 0 {
        return Err(Error::NotAdmissible { p, n1: u.n - 1 });
    }
    if s < 1 || s > t {
        return Err(Error::BadLayer { s, t });
    }
    Ok(u.dlog(a)? % p.pow(s))
}

/// B₂(x/N) = (x/N)² − x/N + 1/6 in Z/p^M.
pub fn bernoulli2(x: u64, n: u64, ring: &ResidueRing) -> u64 {
    let ninv = ring.inv(n % ring.q).expect("p does not divide N");
    let sixth = ring.inv(6).expect("p does not divide 6");
    let y = ring.mul(x % ring.q, ninv);
    let y2 = ring.mul(y, y);
    ring.add(ring.sub(y2, y), sixth)
}

/// Σ_{k=1}^{(N−1)/2} k·log(k) in Z/p^s.
pub fn merel_log(n: u64, p: u64, s: u32) -> Result<u64> {
    let layer = Layer::new(n, p, Some(s))?;
    let ps = layer.ps();
    let mut acc = 0u64;
    for k in 1..=(n - 1) / 2 {
        acc = (acc + (k % ps) * layer.log(k as i64)?) % ps;
    }
    Ok(acc)
}

/// Σ_{x ∈ (Z/N)^×} B₂(x/N)·log(x) in Z/p^s.
pub fn stickelberger_log(n: u64, p: u64, s: u32) -> Result<u64> {
    let layer = Layer::new(n, p, Some(s))?;
    let ring = ResidueRing::new(p, s, n)?;
    let mut acc = 0u64;
    for x in 1..n {
        let b = bernoulli2(x, n, &ring);
        acc = ring.add(acc, ring.mul(b, layer.log(x as i64)?));
    }
    Ok(acc)
}

/// −(4/3)·merel_log, the right side of the Lecouturier identity.
pub fn lecouturier_rhs(n: u64, p: u64, s: u32) -> Result<u64> {
    let ring = ResidueRing::new(p, s, n)?;
    let m = merel_log(n, p, s)?;
    Ok(ring.neg(ring.mul(ring.frac(4, 3).unwrap(), m)))
}

/// v = min(s, val_p(merel_log)); zero is allowed.
pub fn merel_valuation(n: u64, p: u64, s: u32) -> Result<u32> {
    let m = merel_log(n, p, s)?;
    if m == 0 {
        return Ok(s);
    }
    Ok(ord(p, m).min(s))
}

/// All (N, p) with N prime in [5, bound], p ≥ 5 prime and p | N−1.
pub fn admissible_pairs(bound: u64) -> Vec<(u64, u64)> {
    let mut out = vec![];
    for n in primes_upto(bound) {
        if n < 5 {
            continue;
        }
        for p in prime_factors(n - 1) {
            if p >= 5 {
                out.push((n, p));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_group_small() {
        let u = unit_group(11).unwrap();
        assert_eq!(u.g, 2);
        assert_eq!(u.dlog(5).unwrap(), 4);
        assert_eq!(u.dlog(1).unwrap(), 0);
        assert_eq!(unit_group(31).unwrap().g, 3);
        assert!(unit_group(9).is_err());
        assert!(unit_group(3).is_err());
    }

    #[test]
    fn log_examples() {
        let u = unit_group(11).unwrap();
        assert_eq!(padic_log(&u, 2, 5, 1).unwrap(), 1);
        assert_eq!(padic_log(&u, 1, 5, 1).unwrap(), 0);
        assert_eq!(padic_log(&u, 10, 5, 1).unwrap(), 0);
        assert!(padic_log(&u, 0, 5, 1).is_err());
        assert!(padic_log(&u, 2, 5, 2).is_err());
    }

    #[test]
    fn merel_at_eleven() {
        assert_eq!(merel_log(11, 5, 1).unwrap(), 4);
        assert_eq!(merel_valuation(11, 5, 1).unwrap(), 0);
        let r = ResidueRing::new(5, 1, 11).unwrap();
        let want = r.neg(r.mul(r.frac(4, 3).unwrap(), 4));
        assert_eq!(stickelberger_log(11, 5, 1).unwrap(), want);
    }

    #[test]
    fn admissible_list_starts_right() {
        let a = admissible_pairs(45);
        assert_eq!(a, vec![(11, 5), (23, 11), (29, 7), (31, 5), (41, 5), (43, 7)]);
    }
}
