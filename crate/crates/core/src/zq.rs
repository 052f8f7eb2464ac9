use crate::error::{Error, Result};

/// The ring Z/p^M with p an odd prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidueRing {
    pub p: u64,
    pub m: u32,
    pub q: u64,
}

impl ResidueRing {
    /// Builds Z/p^M, rejecting p | 6N.
    pub fn new(p: u64, m: u32, n: u64) -> Result<Self> {
        if p < 5 || !crate::arith::is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        if n % p == 0 {
            return Err(Error::Precondition(format!("p={p} divides N={n}")));
        }
        Self::raw(p, m)
    }

    /// Builds Z/p^M without the coprimality check against N.
    pub fn raw(p: u64, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("precision must be positive".into()));
        }
        let q = p
            .checked_pow(m)
            .filter(|&q| q < (1 << 36))
            .ok_or_else(|| Error::Precondition(format!("p^M too large for p={p}, M={m}")))?;
        Ok(ResidueRing { p, m, q })
    }

    pub fn with_precision(&self, m: u32) -> Result<Self> {
        Self::raw(self.p, m)
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn reduce_u(&self, x: u64) -> u64 {
        x % self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.q < 1 << 31 {
            a * b % self.q
        } else {
            (a as u128 * b as u128 % self.q as u128) as u64
        }
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.q;
        a %= self.q;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// p-adic valuation, capped at M for zero.
    pub fn val(&self, a: u64) -> u32 {
        let mut a = a % self.q;
        if a == 0 {
            return self.m;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, a: u64) -> bool {
        a % self.p != 0
    }

    /// Inverse of a unit.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.q;
        if a % self.p == 0 {
            return None;
        }
        let (mut r0, mut r1) = (self.q as i64, a as i64);
        let (mut s0, mut s1) = (0i64, 1i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (s0, s1) = (s1, s0 - k * s1);
        }
        Some(self.reduce(s0))
    }

    /// Image of a rational a/b with b prime to p.
    pub fn frac(&self, a: i64, b: i64) -> Option<u64> {
        let bi = self.inv(self.reduce(b))?;
        Some(self.mul(self.reduce(a), bi))
    }

    /// p^e as an element (zero once e ≥ M).
    pub fn ppow(&self, e: u32) -> u64 {
        if e >= self.m {
            0
        } else {
            self.p.pow(e)
        }
    }

    /// Writes a = p^v · u and returns (v, u) with u a unit (u = 0 when a = 0).
    pub fn split(&self, a: u64) -> (u32, u64) {
        let a = a % self.q;
        if a == 0 {
            return (self.m, 0);
        }
        let v = self.val(a);
        (v, a / self.p.pow(v))
    }

    /// Symmetric lift to (−q/2, q/2].
    pub fn lift(&self, a: u64) -> i64 {
        let a = a % self.q;
        if a > self.q / 2 {
            a as i64 - self.q as i64
        } else {
            a as i64
        }
    }
}
