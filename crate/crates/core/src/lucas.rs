//! Lucas sequences modulo primes: terms, Frobenius sign, rank and index of
//! appearance, and divisibility tests on them that avoid factoring.
//!
//! All per-prime operations are defined on the prime universe: primes not
//! dividing `2 a2 delta`. Outside it they return [`Error::ExcludedPrime`].

use serde::Serialize;

use crate::arith::{self, Factorization};
use crate::quadfield;
use crate::{Error, Result};

/// Coefficients are limited so that `delta` and `2 a2 delta` stay well
/// inside the factoring range.
pub const COEFF_LIMIT: i64 = 1 << 31;

/// A nondegenerate Lucas sequence `U_n = a1 U_{n-1} + a2 U_{n-2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LucasParams {
    a1: i64,
    a2: i64,
    delta: i128,
    delta0: i64,
    excluded: Vec<u64>,
}

impl LucasParams {
    /// Checks the nondegeneracy hypotheses: nonzero coefficients, `delta`
    /// not a square, `gamma = alpha / beta` not a root of unity.
    pub fn validate(a1: i64, a2: i64) -> Result<Self> {
        if a1 == 0 || a2 == 0 {
            return Err(Error::ZeroCoefficient);
        }
        if a1.abs() >= COEFF_LIMIT || a2.abs() >= COEFF_LIMIT {
            return Err(Error::OutOfRange(format!("coefficients ({a1}, {a2}) must be below 2^31 in magnitude")));
        }
        let gamma = quadfield::gamma_from_coeffs(a1, a2)?;
        let delta = a1 as i128 * a1 as i128 + 4 * a2 as i128;
        if quadfield::is_root_of_unity(&gamma) {
            return Err(Error::RootOfUnity(delta));
        }
        let delta0 = arith::squarefree_part(delta)? as i64;
        let excluded = arith::factor(2 * a2 as i128 * delta)?
            .primes()
            .map(|p| p as u64)
            .collect();
        Ok(LucasParams { a1, a2, delta, delta0, excluded })
    }

    pub fn a1(&self) -> i64 {
        self.a1
    }

    pub fn a2(&self) -> i64 {
        self.a2
    }

    pub fn delta(&self) -> i128 {
        self.delta
    }

    pub fn delta0(&self) -> i64 {
        self.delta0
    }

    /// Primes dividing `2 a2 delta`, ascending.
    pub fn excluded_primes(&self) -> &[u64] {
        &self.excluded
    }

    #[inline]
    pub fn is_excluded(&self, p: u64) -> bool {
        p == 2 || self.a2 % p as i64 == 0 || self.delta % p as i128 == 0
    }

    fn check_universe(&self, p: u64) -> Result<()> {
        if !arith::is_prime(p as u128) {
            return Err(Error::Contract(format!("{p} is not prime")));
        }
        if self.is_excluded(p) {
            return Err(Error::ExcludedPrime(p));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn modulus(&self, p: u64) -> ModLucas {
        ModLucas {
            p,
            a1: self.a1.rem_euclid(p as i64) as u64,
            a2: self.a2.rem_euclid(p as i64) as u64,
        }
    }

    /// Legendre symbol `(delta / p)` without the universe check.
    #[inline]
    pub(crate) fn sign_unchecked(&self, p: u64) -> i8 {
        arith::jacobi(self.delta, p as u128)
    }
}

/// The sequence reduced modulo a prime `p < 2^63`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModLucas {
    p: u64,
    a1: u64,
    a2: u64,
}

impl ModLucas {
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        if self.p < 1 << 32 {
            a * b % self.p
        } else {
            (a as u128 * b as u128 % self.p as u128) as u64
        }
    }

    /// `(U_n, U_{n+1}) mod p` by doubling:
    /// `U_{2k} = U_k (2 U_{k+1} - a1 U_k)`, `U_{2k+1} = U_{k+1}^2 + a2 U_k^2`.
    #[inline]
    pub(crate) fn pair(&self, n: u64) -> (u64, u64) {
        let p = self.p;
        let (mut u, mut u1) = (0u64, 1 % p);
        if n == 0 {
            return (u, u1);
        }
        let bits = 64 - n.leading_zeros();
        for i in (0..bits).rev() {
            let t = (2 * u1 % p + p - self.mul(self.a1, u)) % p;
            let even = self.mul(u, t);
            let odd = (self.mul(u1, u1) + self.mul(self.a2, self.mul(u, u))) % p;
            if (n >> i) & 1 == 1 {
                u = odd;
                u1 = (self.mul(self.a1, odd) + self.mul(self.a2, even)) % p;
            } else {
                u = even;
                u1 = odd;
            }
        }
        (u, u1)
    }

    #[inline]
    pub(crate) fn u_is_zero(&self, n: u64) -> bool {
        self.pair(n).0 == 0
    }
}

/// `(U_n mod p, V_n mod p)` with `V_0 = 2`, `V_1 = a1`.
pub fn term_mod(params: &LucasParams, n: u64, p: u64) -> Result<(u64, u64)> {
    if !arith::is_prime(p as u128) {
        return Err(Error::Contract(format!("{p} is not prime")));
    }
    let m = params.modulus(p);
    let (u, u1) = m.pair(n);
    // V_n = 2 U_{n+1} - a1 U_n
    let v = (2 * u1 % p + p - m.mul(m.a1, u)) % p;
    Ok((u, v))
}

/// `(delta / p)`, which is never zero on the universe.
pub fn frobenius_sign(params: &LucasParams, p: u64) -> Result<i8> {
    params.check_universe(p)?;
    Ok(params.sign_unchecked(p))
}

/// Per-prime rank and index of appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankRecord {
    pub p: u64,
    pub sign: i8,
    pub m: u64,
    pub rho: u64,
    pub iota: u64,
}

pub(crate) fn rank_unchecked(params: &LucasParams, p: u64) -> RankRecord {
    let sign = params.sign_unchecked(p);
    let m = (p as i64 - sign as i64) as u64;
    let modl = params.modulus(p);
    let mut r = m;
    for &(q, e) in arith::factor_unsigned(m as u128).pairs() {
        let q = q as u64;
        for _ in 0..e {
            if modl.u_is_zero(r / q) {
                r /= q;
            } else {
                break;
            }
        }
    }
    RankRecord { p, sign, m, rho: r, iota: m / r }
}

/// Rank of appearance by order descent from `m = p - (delta/p)`.
pub fn rank(params: &LucasParams, p: u64) -> Result<RankRecord> {
    params.check_universe(p)?;
    Ok(rank_unchecked(params, p))
}

/// A divisor `d` prepared for repeated `d | rho(p)` tests.
#[derive(Debug, Clone)]
pub(crate) struct RankDivisor {
    prime_powers: Vec<(u64, u32)>,
}

impl RankDivisor {
    pub(crate) fn new(d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Contract("d must be positive".into()));
        }
        let f: Factorization = arith::factor_unsigned(d as u128);
        Ok(RankDivisor { prime_powers: f.pairs().iter().map(|&(q, k)| (q as u64, k)).collect() })
    }

    /// `d | rho(p)`. For each `q^k || d` with `a = v_q(m)`:
    /// `v_q(rho) >= k` iff `U_{m / q^(a-k+1)} != 0 (mod p)`.
    #[inline]
    pub(crate) fn divides_rank(&self, params: &LucasParams, p: u64, m: u64) -> bool {
        let mut quotients = [0u64; 16];
        let mut n = 0;
        for &(q, k) in &self.prime_powers {
            let mut a = 0u32;
            let mut rest = m;
            while rest.is_multiple_of(q) {
                rest /= q;
                a += 1;
            }
            if a < k {
                return false;
            }
            quotients[n] = m / q.pow(a - k + 1);
            n += 1;
        }
        if n == 0 {
            return true;
        }
        let modl = params.modulus(p);
        quotients[..n].iter().all(|&j| !modl.u_is_zero(j))
    }
}

/// `d | rho(p)`, evaluated without factoring `m`.
pub fn divides_rank(params: &LucasParams, d: u64, p: u64) -> Result<bool> {
    params.check_universe(p)?;
    let m = (p as i64 - params.sign_unchecked(p) as i64) as u64;
    Ok(RankDivisor::new(d)?.divides_rank(params, p, m))
}

/// `d | iota(p)`, i.e. `U_{m/d} = 0 (mod p)`; requires `d | m`.
pub fn divides_index(params: &LucasParams, d: u64, p: u64) -> Result<bool> {
    params.check_universe(p)?;
    let m = (p as i64 - params.sign_unchecked(p) as i64) as u64;
    if d == 0 || !m.is_multiple_of(d) {
        return Err(Error::Contract(format!("d = {d} does not divide m = {m}")));
    }
    Ok(params.modulus(p).u_is_zero(m / d))
}
