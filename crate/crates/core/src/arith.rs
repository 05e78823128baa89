//! Elementary number theory: primality, factorisation, arithmetic functions,
//! quadratic residue symbols and the logarithmic integral.

use num_integer::{Integer, Roots};

use crate::{Error, Result};

/// Largest magnitude accepted by [`factor`].
pub const FACTOR_LIMIT: u128 = 1 << 126;

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub(crate) fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    if n <= u64::MAX as u128 {
        return a * b % n;
    }
    // n < 2^126 here, so doubling never overflows.
    let (mut a, mut b) = (a % n, b % n);
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc += a;
            if acc >= n {
                acc -= n;
            }
        }
        a <<= 1;
        if a >= n {
            a -= n;
        }
        b >>= 1;
    }
    acc
}

#[inline]
pub(crate) fn pow_mod(mut base: u128, mut exp: u128, n: u128) -> u128 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1u128;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

fn strong_probable_prime(n: u128, base: u128) -> bool {
    let base = base % n;
    if base == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

fn is_perfect_square(n: u128) -> bool {
    let r = n.sqrt();
    r * r == n
}

/// Strong Lucas probable-prime test with Selfridge's parameter choice.
fn strong_lucas_probable_prime(n: u128) -> bool {
    if is_perfect_square(n) {
        return false;
    }
    let mut d: i128 = 5;
    loop {
        match jacobi(d, n) {
            -1 => break,
            0 if d.unsigned_abs() != n => return false,
            _ => {}
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
    }
    // P = 1, Q = (1 - D) / 4
    let q = (1 - d) / 4;
    let to_mod = |v: i128| -> u128 { v.rem_euclid(n as i128) as u128 };
    let qm = to_mod(q);
    let half = |v: u128| -> u128 {
        if v & 1 == 0 {
            v / 2
        } else {
            // (v + n) / 2 without overflow, n odd
            v / 2 + n / 2 + 1
        }
    };
    let dm = to_mod(d);

    let n1 = n + 1;
    let s = n1.trailing_zeros();
    let k = n1 >> s;
    // Binary ladder computing U_k, V_k, Q^k.
    let mut u = 1u128;
    let mut v = 1u128; // V_1 = P = 1
    let mut qk = qm;
    let bits = 128 - k.leading_zeros();
    for i in (0..bits - 1).rev() {
        // doubling
        u = mul_mod(u, v, n);
        v = (mul_mod(v, v, n) + n - mul_mod(2, qk, n)) % n;
        qk = mul_mod(qk, qk, n);
        if (k >> i) & 1 == 1 {
            let u_new = half((u + v) % n);
            let v_new = half((mul_mod(dm, u, n) + v) % n);
            u = u_new;
            v = v_new;
            qk = mul_mod(qk, qm, n);
        }
    }
    if u == 0 || v == 0 {
        return true;
    }
    for _ in 1..s {
        v = (mul_mod(v, v, n) + n - mul_mod(2, qk, n)) % n;
        if v == 0 {
            return true;
        }
        qk = mul_mod(qk, qk, n);
    }
    false
}

/// Deterministic primality test.
///
/// Below 2^64 the first twelve prime bases are a proven witness set. Above
/// it a Baillie-PSW test is combined with the same Miller-Rabin bases.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = p as u128;
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    if !SMALL_PRIMES.iter().all(|&b| strong_probable_prime(n, b as u128)) {
        return false;
    }
    if n <= u64::MAX as u128 {
        return true;
    }
    strong_lucas_probable_prime(n)
}

fn pollard_brent(n: u128, c: u128) -> Option<u128> {
    let f = |y: u128| (mul_mod(y, y, n) + c) % n;
    let m = 128u128;
    let (mut y, mut r, mut q, mut g) = (2u128, 1u128, 1u128, 1u128);
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += m;
        }
        r <<= 1;
        if r > 1 << 40 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn find_factor(n: u128) -> u128 {
    // c runs through a fixed sequence, so the output never depends on chance.
    (1..)
        .find_map(|c| pollard_brent(n, c))
        .expect("pollard rho exhausted")
}

fn factor_into(n: u128, out: &mut Vec<u128>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let f = find_factor(n);
    factor_into(f, out);
    factor_into(n / f, out);
}

/// Prime factorisation as ascending `(prime, exponent)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    pairs: Vec<(u128, u32)>,
}

impl Factorization {
    pub fn pairs(&self) -> &[(u128, u32)] {
        &self.pairs
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.pairs.iter().map(|&(p, _)| p)
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Multiplies the factorisation back out.
    pub fn value(&self) -> u128 {
        self.pairs.iter().map(|&(p, e)| p.pow(e)).product()
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u128> {
        let mut divs = vec![1u128];
        for &(p, e) in &self.pairs {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Factors `|n|` for `0 < |n| < 2^126`.
pub fn factor(n: i128) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("cannot factor zero".into()));
    }
    let m = n.unsigned_abs();
    if m >= FACTOR_LIMIT {
        return Err(Error::OutOfRange(n.to_string()));
    }
    Ok(factor_unsigned(m))
}

pub(crate) fn factor_unsigned(mut m: u128) -> Factorization {
    let mut primes = Vec::new();
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while m.is_multiple_of(p) {
            primes.push(p);
            m /= p;
        }
    }
    factor_into(m, &mut primes);
    primes.sort_unstable();
    let mut pairs: Vec<(u128, u32)> = Vec::new();
    for p in primes {
        match pairs.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => pairs.push((p, 1)),
        }
    }
    Factorization { pairs }
}

fn factor_positive(n: u64, what: &str) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain(format!("{what} requires n >= 1")));
    }
    Ok(factor_unsigned(n as u128))
}

pub fn mobius(n: u64) -> Result<i8> {
    let f = factor_positive(n, "mobius")?;
    if f.pairs.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if f.pairs.len() % 2 == 0 { 1 } else { -1 })
}

pub fn euler_phi(n: u64) -> Result<u64> {
    let f = factor_positive(n, "euler_phi")?;
    Ok(f.pairs
        .iter()
        .map(|&(p, e)| ((p - 1) * p.pow(e - 1)) as u64)
        .product())
}

pub fn omega(n: u64) -> Result<u32> {
    Ok(factor_positive(n, "omega")?.pairs.len() as u32)
}

pub fn tau(n: u64) -> Result<u64> {
    Ok(factor_positive(n, "tau")?
        .pairs
        .iter()
        .map(|&(_, e)| e as u64 + 1)
        .product())
}

/// Jacobi symbol `(a/n)` for odd `n > 0`.
pub fn jacobi(a: i128, n: u128) -> i8 {
    debug_assert!(n & 1 == 1);
    let mut a = a.rem_euclid(n as i128) as u128;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        if z & 1 == 1 && (n % 8 == 3 || n % 8 == 5) {
            t = -t;
        }
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Legendre symbol `(a/p)`; `p` must be an odd prime.
pub fn legendre_symbol(a: i128, p: u128) -> Result<i8> {
    if p.is_multiple_of(2) || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    Ok(jacobi(a, p))
}

/// Signed squarefree part: `n = s * t^2` with `|s|` squarefree.
pub fn squarefree_part(n: i128) -> Result<i128> {
    let f = factor(n)?;
    let s: i128 = f
        .pairs
        .iter()
        .filter(|&&(_, e)| e % 2 == 1)
        .map(|&(p, _)| p as i128)
        .product();
    Ok(if n < 0 { -s } else { s })
}

/// The part of `h` supported on the primes of `d`, i.e. `(d^inf, h)`.
pub fn d_part(h: u64, d: u64) -> u64 {
    let mut h = h;
    let mut out = 1;
    loop {
        let g = h.gcd(&d);
        if g <= 1 {
            return out;
        }
        h /= g;
        out *= g;
    }
}

/// Largest `e` with `q^e | n`.
pub fn valuation(mut n: u128, q: u128) -> u32 {
    debug_assert!(n > 0 && q > 1);
    let mut e = 0;
    while n.is_multiple_of(q) {
        n /= q;
        e += 1;
    }
    e
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LI_AT_2: f64 = 1.045_163_780_117_493;

/// Offset logarithmic integral `Li(x) = integral from 2 to x of dt / ln t`.
pub fn li(x: f64) -> Result<f64> {
    if x.is_nan() || x < 2.0 || !x.is_finite() {
        return Err(Error::Domain(format!("Li(x) needs x >= 2, got {x}")));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    // Ramanujan's series for li(x).
    let l = x.ln();
    let mut sum = 0.0;
    let mut term = 1.0; // (ln x)^n / (n! 2^(n-1)), starting at n = 0 scaled by 2
    let mut inner = 0.0;
    for n in 1..400 {
        term *= l / n as f64;
        if n > 1 {
            term /= 2.0;
        }
        if (n - 1) % 2 == 0 {
            inner += 1.0 / (n - 1 + 1) as f64;
        }
        let t = if n % 2 == 1 { term * inner } else { -term * inner };
        sum += t;
        if n > 2 * l as usize + 10 && t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    Ok(EULER_GAMMA + l.ln() + x.sqrt() * sum - LI_AT_2)
}
