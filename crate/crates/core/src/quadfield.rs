//! Exact arithmetic in a quadratic field `K = Q(sqrt(D0))` and the exponent
//! `h`, the largest integer for which `gamma` is an `h`-th power in `K`.
//!
//! Root extraction uses numerics only to propose candidates: a `q`-th root
//! `delta` of a norm-one element has a rational trace `t`, which is recovered
//! from a high-precision embedding value by continued fractions. Every
//! candidate is accepted only after `delta^q == a` is checked exactly, and a
//! negative answer is only returned when the working precision is provably
//! fine enough for the trace to have been found.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith;
use crate::lucas::LucasParams;
use crate::{Error, Result};

/// Smallest Weil height of a non-torsion algebraic number of degree at most
/// two: `log(phi) / 2`, attained by the golden ratio.
pub const LEHMER_QUADRATIC: f64 = 0.240_605_912_529_802_3;

/// `(x + y sqrt(D0)) / z` in canonical form: `z > 0`, `gcd(x, y, z) = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    x: BigInt,
    y: BigInt,
    z: BigInt,
    d0: i64,
}

impl fmt::Debug for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let root = format!("sqrt({})", self.d0);
        let body = if self.y.is_zero() {
            self.x.to_string()
        } else {
            let ypart = match (self.y.is_negative(), self.y.abs().is_one()) {
                (false, true) => root,
                (true, true) => format!("-{root}"),
                _ => format!("{}*{root}", self.y),
            };
            if self.x.is_zero() {
                ypart
            } else if self.y.is_negative() {
                format!("{}{}", self.x, ypart)
            } else {
                format!("{}+{}", self.x, ypart)
            }
        };
        if self.z.is_one() {
            write!(f, "{body}")
        } else {
            write!(f, "({body})/{}", self.z)
        }
    }
}

fn is_squarefree(n: i64) -> bool {
    arith::factor(n as i128)
        .map(|f| f.pairs().iter().all(|&(_, e)| e == 1))
        .unwrap_or(false)
}

impl QuadElem {
    /// Builds `(x + y sqrt(d0)) / z`; `d0` must be squarefree and not 0 or 1.
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>, z: impl Into<BigInt>, d0: i64) -> Result<Self> {
        if d0 == 0 || d0 == 1 || !is_squarefree(d0) {
            return Err(Error::Contract(format!("D0 = {d0} is not a squarefree integer other than 0, 1")));
        }
        let z = z.into();
        if z.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::raw(x.into(), y.into(), z, d0))
    }

    fn raw(x: BigInt, y: BigInt, z: BigInt, d0: i64) -> Self {
        let mut g = x.gcd(&y).gcd(&z);
        if z.is_negative() {
            g = -g;
        }
        QuadElem { x: x / &g, y: y / &g, z: z / &g, d0 }
    }

    pub fn from_int(n: impl Into<BigInt>, d0: i64) -> Result<Self> {
        Self::new(n, 0, 1, d0)
    }

    pub fn one(d0: i64) -> Result<Self> {
        Self::from_int(1, d0)
    }

    pub fn x(&self) -> &BigInt {
        &self.x
    }

    pub fn y(&self) -> &BigInt {
        &self.y
    }

    pub fn z(&self) -> &BigInt {
        &self.z
    }

    pub fn d0(&self) -> i64 {
        self.d0
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.x.is_one() && self.y.is_zero() && self.z.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.y.is_zero()
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.d0 != other.d0 {
            return Err(Error::MixedField(self.d0, other.d0));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(Self::raw(
            &self.x * &other.z + &other.x * &self.z,
            &self.y * &other.z + &other.y * &self.z,
            &self.z * &other.z,
            self.d0,
        ))
    }

    pub fn neg(&self) -> Self {
        QuadElem { x: -&self.x, y: -&self.y, z: self.z.clone(), d0: self.d0 }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let d = BigInt::from(self.d0);
        Self::raw(
            &self.x * &other.x + d * &self.y * &other.y,
            &self.x * &other.y + &self.y * &other.x,
            &self.z * &other.z,
            self.d0,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // 1/a = z (x - y sqrt(D0)) / (x^2 - D0 y^2); nonzero since D0 is not a square.
        let den = &self.x * &self.x - BigInt::from(self.d0) * &self.y * &self.y;
        Ok(Self::raw(&self.z * &self.x, -(&self.z * &self.y), den, self.d0))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        self.mul(&other.inverse()?)
    }

    /// `self^n`; negative exponents go through the inverse.
    pub fn pow(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        Ok(base.pow_u(n.unsigned_abs()))
    }

    fn pow_u(&self, mut n: u64) -> Self {
        let mut acc = QuadElem { x: BigInt::one(), y: BigInt::zero(), z: BigInt::one(), d0: self.d0 };
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Galois conjugate: `sqrt(D0) -> -sqrt(D0)`.
    pub fn conjugate(&self) -> Self {
        QuadElem { x: self.x.clone(), y: -&self.y, z: self.z.clone(), d0: self.d0 }
    }

    pub fn norm(&self) -> BigRational {
        BigRational::new(
            &self.x * &self.x - BigInt::from(self.d0) * &self.y * &self.y,
            &self.z * &self.z,
        )
    }

    pub fn trace(&self) -> BigRational {
        BigRational::new(BigInt::from(2) * &self.x, self.z.clone())
    }

    /// Element with trace `t` and norm `n`, sign of the irrational part chosen by `plus`.
    fn with_trace_norm(t: &BigRational, n: &BigRational, d0: i64, plus: bool) -> Option<Self> {
        let half = t / BigRational::from_integer(2.into());
        let w2 = (&half * &half - n) / BigRational::from_integer(d0.into());
        if w2.is_negative() {
            return None;
        }
        let (wn, wd) = (w2.numer(), w2.denom());
        let (rn, rd) = (wn.sqrt(), wd.sqrt());
        if &(&rn * &rn) != wn || &(&rd * &rd) != wd {
            return None;
        }
        let mut w = BigRational::new(rn, rd);
        if !plus {
            w = -w;
        }
        // common denominator
        let den = half.denom().lcm(w.denom());
        let x = half.numer() * (&den / half.denom());
        let y = w.numer() * (&den / w.denom());
        Some(Self::raw(x, y, den, d0))
    }
}

/// `gamma = alpha / beta = -((a1^2 + 2 a2) + a1 sqrt(delta)) / (2 a2)`, written over `D0`.
pub fn gamma_from_coeffs(a1: i64, a2: i64) -> Result<QuadElem> {
    if a1 == 0 || a2 == 0 {
        return Err(Error::ZeroCoefficient);
    }
    let (a1w, a2w) = (a1 as i128, a2 as i128);
    let delta = a1w * a1w + 4 * a2w;
    if delta == 0 || (delta > 0 && (delta as u128).sqrt().pow(2) == delta as u128) {
        return Err(Error::SquareDiscriminant(delta));
    }
    let d0 = arith::squarefree_part(delta)?;
    let t = ((delta / d0) as u128).sqrt() as i128;
    QuadElem::new(
        -(a1w * a1w + 2 * a2w),
        BigInt::from(-a1w) * t,
        2 * a2w,
        i64::try_from(d0).map_err(|_| Error::OutOfRange(d0.to_string()))?,
    )
}

pub fn gamma_of(params: &LucasParams) -> Result<QuadElem> {
    gamma_from_coeffs(params.a1(), params.a2())
}

/// True iff `a^k = 1` for some `k` in {1, 2, 3, 4, 6}, the only orders of
/// roots of unity in a quadratic field.
pub fn is_root_of_unity(a: &QuadElem) -> bool {
    [1u64, 2, 3, 4, 6].iter().any(|&k| a.pow_u(k).is_one())
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Absolute logarithmic Weil height.
pub fn weil_height(a: &QuadElem) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::Domain("height of zero".into()));
    }
    if a.is_rational() {
        return Ok(ln_big(&a.x).max(ln_big(&a.z)));
    }
    // Primitive minimal polynomial c X^2 + b X + c0.
    let t = a.trace();
    let n = a.norm();
    let c = t.denom().lcm(n.denom());
    let ln_c = ln_big(&c);
    let roots_part = if a.d0 > 0 {
        // |larger root| = (|x| + |y| sqrt(D0)) / z, smaller = norm / larger.
        let ax = a.x.abs().to_f64().unwrap_or(f64::MAX);
        let ay = a.y.abs().to_f64().unwrap_or(f64::MAX);
        let ln_large = (ax + ay * (a.d0 as f64).sqrt()).ln() - ln_big(&a.z);
        let ln_norm = ln_big(n.numer()) - ln_big(n.denom());
        let ln_small = ln_norm - ln_large;
        ln_large.max(0.0) + ln_small.max(0.0)
    } else {
        // complex pair of modulus sqrt(norm)
        let ln_mod = 0.5 * (ln_big(n.numer()) - ln_big(n.denom()));
        2.0 * ln_mod.max(0.0)
    };
    Ok(0.5 * (ln_c + roots_part))
}

/// Candidate precisions in decimal digits.
const PRECISION_DIGITS: [u64; 5] = [128, 256, 512, 1024, 2048];

fn digits_to_bits(digits: u64) -> u64 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u64
}

/// Continued-fraction convergents of `num / den` with denominator `<= bound`.
fn convergents(num: &BigInt, den: &BigInt, bound: &BigInt) -> Vec<BigRational> {
    let (mut a, mut b) = (num.clone(), den.clone());
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut out = Vec::new();
    while !b.is_zero() {
        let (quot, rem) = a.div_mod_floor(&b);
        let p2 = &quot * &p1 + &p0;
        let q2 = &quot * &q1 + &q0;
        if &q2 > bound {
            break;
        }
        out.push(BigRational::new(p2.clone(), q2.clone()));
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        a = std::mem::replace(&mut b, rem);
    }
    out
}

/// Fixed-point complex number at scale `2^bits`.
#[derive(Clone)]
struct Fx {
    re: BigInt,
    im: BigInt,
}

impl Fx {
    fn mul(&self, o: &Fx, bits: u64) -> Fx {
        Fx {
            re: (&self.re * &o.re - &self.im * &o.im) >> bits,
            im: (&self.re * &o.im + &self.im * &o.re) >> bits,
        }
    }

    fn pow(&self, mut n: u64, bits: u64) -> Fx {
        let mut acc = Fx { re: BigInt::one() << bits, im: BigInt::zero() };
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base, bits);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base, bits);
            }
        }
        acc
    }
}

fn f64_to_fixed(v: f64, bits: u64) -> BigInt {
    // v * 2^bits, exact for the 53 significant bits of v
    let (mant, exp) = {
        let b = v.to_bits();
        let exp = ((b >> 52) & 0x7ff) as i64;
        let mant = if exp == 0 { (b & ((1 << 52) - 1)) << 1 } else { (b & ((1 << 52) - 1)) | (1 << 52) };
        (mant as i64, exp - 1075)
    };
    let m = BigInt::from(if v < 0.0 { -mant } else { mant });
    let shift = bits as i64 + exp;
    if shift >= 0 {
        m << shift as u64
    } else {
        m >> (-shift) as u64
    }
}

/// Numeric trace candidates `(t * 2^bits, N(delta))` for all `q`-th roots of `a`.
/// Returns the traces plus the error bound in units of `2^-bits`.
fn trace_candidates(a: &QuadElem, q: u64, norm_a: i32, bits: u64) -> Result<(Vec<(BigInt, i32)>, BigInt)> {
    let d_abs = BigInt::from(a.d0.unsigned_abs());
    if a.d0 > 0 {
        let sqrt_d = (&d_abs << (2 * bits)).sqrt();
        // embedding with |value| >= 1
        let eps = if a.x.sign() == a.y.sign() || a.x.is_zero() || a.y.is_zero() { 1 } else { -1 };
        let big = ((&a.x << bits) + BigInt::from(eps) * &a.y * &sqrt_d) / &a.z;
        let err = BigInt::from(4) * (a.y.abs() + 8);
        let mut out = Vec::new();
        let mag = big.abs();
        let root_mag = (mag << ((q - 1) * bits)).nth_root(q as u32);
        if root_mag.is_zero() {
            return Err(Error::Undecided { q });
        }
        let one_sq = BigInt::one() << (2 * bits);
        if q % 2 == 1 {
            let r = if big.is_negative() { -root_mag } else { root_mag };
            let t = &r + BigInt::from(norm_a) * &one_sq / &r;
            out.push((t, norm_a));
        } else {
            if big.is_negative() || norm_a != 1 {
                return Ok((Vec::new(), err));
            }
            for r in [root_mag.clone(), -root_mag] {
                for n in [1i32, -1] {
                    let t = &r + BigInt::from(n) * &one_sq / &r;
                    out.push((t, n));
                }
            }
        }
        Ok((out, err))
    } else {
        if norm_a != 1 {
            return Ok((Vec::new(), BigInt::one()));
        }
        let work = bits + 64;
        let sqrt_d = (&d_abs << (2 * work)).sqrt();
        let target = Fx { re: (&a.x << work) / &a.z, im: &a.y * &sqrt_d / &a.z };
        let xf = a.x.to_f64().unwrap_or(f64::NAN);
        let yf = a.y.to_f64().unwrap_or(f64::NAN) * (a.d0.unsigned_abs() as f64).sqrt();
        let theta = yf.atan2(xf);
        if !theta.is_finite() {
            return Err(Error::Undecided { q });
        }
        let tol = BigInt::one() << 16u32;
        let mut out = Vec::new();
        for k in 0..q {
            let ang = (theta + 2.0 * std::f64::consts::PI * k as f64) / q as f64;
            let mut w = Fx { re: f64_to_fixed(ang.cos(), work), im: f64_to_fixed(ang.sin(), work) };
            let mut converged = false;
            for _ in 0..200 {
                let p = w.pow(q - 1, work);
                let wq = p.mul(&w, work);
                let diff = Fx { re: &wq.re - &target.re, im: &wq.im - &target.im };
                // step = diff * conj(p) / (q |p|^2)
                let num = Fx {
                    re: (&diff.re * &p.re + &diff.im * &p.im) >> work,
                    im: (&diff.im * &p.re - &diff.re * &p.im) >> work,
                };
                let den = BigInt::from(q) * ((&p.re * &p.re + &p.im * &p.im) >> work);
                if den.is_zero() {
                    return Err(Error::Undecided { q });
                }
                let step = Fx { re: (&num.re << work) / &den, im: (&num.im << work) / &den };
                w.re -= &step.re;
                w.im -= &step.im;
                if step.re.abs() <= tol && step.im.abs() <= tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Undecided { q });
            }
            let t = (BigInt::from(2) * &w.re) >> 64u32;
            out.push((t, 1));
        }
        Ok((out, BigInt::from(8)))
    }
}

/// Every `delta` in `K` with `delta^q = a`, for prime `q` and `N(a) = +-1`.
pub fn prime_roots(a: &QuadElem, q: u64) -> Result<Vec<QuadElem>> {
    if !arith::is_prime(q as u128) {
        return Err(Error::Contract(format!("{q} is not prime")));
    }
    let norm = a.norm();
    let norm_a = if norm.is_one() {
        1
    } else if (-norm.clone()).is_one() {
        -1
    } else {
        return Err(Error::Contract(format!("prime_root needs norm +-1, got {norm}")));
    };
    if q == 2 && norm_a == -1 {
        return Ok(Vec::new());
    }
    // Real embedding sign obstruction for even roots.
    // Norm +1 in a real field: |x| > |y| sqrt(D0), so both embeddings have the sign of x.
    if q == 2 && a.d0 > 0 && a.x.is_negative() {
        return Ok(Vec::new());
    }
    // Denominator of trace(delta) divides the leading coefficient of its
    // minimal polynomial, which is at most z.
    let bound = &a.z * &a.z;
    let need_bits = 2 * bound.bits() + 2;
    let mut roots: Vec<QuadElem> = Vec::new();
    for &digits in &PRECISION_DIGITS {
        let bits = digits_to_bits(digits);
        let (cands, err_ulps) = trace_candidates(a, q, norm_a, bits)?;
        // Reconstruction is conclusive once err < 1 / (2 bound^2).
        if bits < need_bits + err_ulps.bits() + 2 {
            if digits == *PRECISION_DIGITS.last().unwrap() {
                return Err(Error::Undecided { q });
            }
            continue;
        }
        let scale = BigInt::one() << bits;
        for (t_fixed, n) in cands {
            let n_rat = BigRational::from_integer(n.into());
            for t in convergents(&t_fixed, &scale, &bound) {
                let dist = (t.numer() * &scale - &t_fixed * t.denom()).abs();
                if dist > &err_ulps * t.denom() {
                    continue;
                }
                for plus in [true, false] {
                    if let Some(delta) = QuadElem::with_trace_norm(&t, &n_rat, a.d0, plus) {
                        if delta.pow_u(q) == *a && !roots.contains(&delta) {
                            roots.push(delta);
                        }
                    }
                }
            }
        }
        break;
    }
    roots.sort_by(|u, v| v.trace().cmp(&u.trace()).then_with(|| (&v.y * &u.z).cmp(&(&u.y * &v.z))));
    Ok(roots)
}

/// One `q`-th root of `a` in `K`, if any.
pub fn prime_root(a: &QuadElem, q: u64) -> Result<Option<QuadElem>> {
    Ok(prime_roots(a, q)?.into_iter().next())
}

/// `gamma = gamma0^h` with `h` maximal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HResult {
    pub h: u64,
    pub gamma0: QuadElem,
}

fn primes_up_to(bound: f64) -> Vec<u64> {
    let b = if bound.is_finite() { bound.floor().max(0.0) as u64 } else { 0 };
    (2..=b).filter(|&q| arith::is_prime(q as u128)).collect()
}

fn search_h(g: &QuadElem, h: u64, height: f64) -> Result<HResult> {
    let bound = height / (h as f64 * LEHMER_QUADRATIC) * (1.0 + 1e-9);
    let mut best: Option<HResult> = None;
    for q in primes_up_to(bound) {
        for r in prime_roots(g, q)? {
            let cand = search_h(&r, h * q, height)?;
            if best.as_ref().is_none_or(|b| cand.h > b.h) {
                best = Some(cand);
            }
        }
    }
    Ok(best.unwrap_or_else(|| HResult { h, gamma0: g.clone() }))
}

/// Largest `h` with `gamma` an `h`-th power in `K`, together with a root `gamma0`.
///
/// A non-torsion `gamma0` has height at least [`LEHMER_QUADRATIC`], so
/// `h <= height(gamma) / LEHMER_QUADRATIC` bounds the search. All roots are
/// explored since `-1` (and `zeta_3` when `D0 = -3`) can hide further powers.
pub fn compute_h(gamma: &QuadElem) -> Result<HResult> {
    if is_root_of_unity(gamma) {
        return Err(Error::Contract("compute_h: gamma is a root of unity".into()));
    }
    let n = gamma.norm();
    if !(n.is_one() || (-n).is_one()) {
        return Err(Error::Contract("compute_h: gamma must have norm +-1".into()));
    }
    let height = weil_height(gamma)?;
    search_h(gamma, 1, height)
}
