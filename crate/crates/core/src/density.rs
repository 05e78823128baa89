//! Exact rational densities.
//!
//! `delta_U(d)` is the density, relative to `Li(x)`, of primes with
//! `d | rho_U(p)`:
//!
//! ```text
//! delta_U(d) = (1/d) (1/(d^inf, h) + eta_U(d)) prod_{p | d} (1 - p^-2)^-1
//! ```
//!
//! with `eta_U(d) = (d^inf, h) / [(d^inf, h), |D0| / (d, |D0|)]^2` when
//! `delta < 0`, `D0 = 1 (mod 4)` and `D0 | d^inf`, and zero otherwise. The
//! same value arises as the Mobius-weighted series of the per-modulus
//! densities `delta_{U,n,d}`, which is checked by [`series_residual`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith;
use crate::census::enumerate_supernatural_divisors;
use crate::lucas::LucasParams;
use crate::quadfield;
use crate::{Error, Result};

/// Cap on the number of series terms used by [`default_vmax`].
pub const VMAX_CAP: u64 = 1_000_000;

/// Why `eta_U(d)` takes the value it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityBranch {
    /// `eta = 0` because `delta > 0`.
    EtaZeroPositiveDiscriminant,
    /// `eta = 0` because `D0` is not `1 mod 4`.
    EtaZeroNotOneModFour,
    /// `eta = 0` because some prime of `D0` does not divide `d`.
    EtaZeroNotSupported,
    /// `eta != 0`: `delta < 0`, `D0 = 1 (mod 4)` and `D0 | d^inf`.
    EtaNonzero,
}

impl DensityBranch {
    pub fn is_zero(self) -> bool {
        self != DensityBranch::EtaNonzero
    }

    pub fn name(self) -> &'static str {
        if self.is_zero() {
            "eta_zero"
        } else {
            "eta_nonzero"
        }
    }

    pub fn condition(self) -> &'static str {
        match self {
            DensityBranch::EtaZeroPositiveDiscriminant => "delta > 0",
            DensityBranch::EtaZeroNotOneModFour => "D0 != 1 (mod 4)",
            DensityBranch::EtaZeroNotSupported => "D0 does not divide d^inf",
            DensityBranch::EtaNonzero => "delta < 0, D0 = 1 (mod 4), D0 | d^inf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub d: u64,
    pub h: u64,
    /// `(d^inf, h)`
    pub d_inf_h: u64,
    pub eta: BigRational,
    pub delta: BigRational,
    pub branch: DensityBranch,
}

fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `prod_{p | d} (1 - p^-2)^-1`
fn euler_factor(d: u64) -> BigRational {
    arith::factor_unsigned(d as u128)
        .primes()
        .map(|p| {
            let p2 = (p * p) as u64;
            rat(p2, p2 - 1)
        })
        .fold(BigRational::one(), |acc, f| acc * f)
}

/// Every prime of `a` divides `b`.
fn supported_on(a: u64, b: u64) -> bool {
    arith::factor_unsigned(a as u128).primes().all(|p| b.is_multiple_of(p as u64))
}

fn check_odd(params: &LucasParams, n: u64, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::Hypothesis(format!("{what} must be positive")));
    }
    if n.is_multiple_of(2) {
        return Err(Error::Hypothesis(format!("{what} even")));
    }
    if params.delta0() == -3 && n.is_multiple_of(3) {
        return Err(Error::Hypothesis(format!("3 | {what} with D0 = -3")));
    }
    Ok(())
}

fn branch_for(params: &LucasParams, n: u64) -> DensityBranch {
    let d0 = params.delta0();
    if params.delta() > 0 {
        DensityBranch::EtaZeroPositiveDiscriminant
    } else if d0.rem_euclid(4) != 1 {
        DensityBranch::EtaZeroNotOneModFour
    } else if !supported_on(d0.unsigned_abs(), n) {
        DensityBranch::EtaZeroNotSupported
    } else {
        DensityBranch::EtaNonzero
    }
}

/// The exponent `h` of `gamma` for these parameters.
pub fn h_of(params: &LucasParams) -> Result<u64> {
    Ok(quadfield::compute_h(&quadfield::gamma_of(params)?)?.h)
}

/// `delta_U(d)` for odd `d` (with `3 | d` excluded when `D0 = -3`).
pub fn delta_u(params: &LucasParams, d: u64) -> Result<DensityReport> {
    check_odd(params, d, "d")?;
    delta_u_with_h(params, d, h_of(params)?)
}

pub(crate) fn delta_u_with_h(params: &LucasParams, d: u64, h: u64) -> Result<DensityReport> {
    check_odd(params, d, "d")?;
    let g = arith::d_part(h, d);
    let branch = branch_for(params, d);
    let eta = if branch.is_zero() {
        BigRational::zero()
    } else {
        let d0 = params.delta0().unsigned_abs();
        let e = d0 / d0.gcd(&d);
        let l = g.lcm(&e);
        rat(g, l * l)
    };
    let delta = (rat(1, g) + &eta) * rat(1, d) * euler_factor(d);
    Ok(DensityReport { d, h, d_inf_h: g, eta, delta, branch })
}

/// `delta_{U,n,d} = (d, h) / (phi(n) d)`, doubled in the `eta != 0` branch.
pub fn delta_und(params: &LucasParams, n: u64, d: u64) -> Result<BigRational> {
    check_odd(params, n, "n")?;
    delta_und_with_h(params, n, d, h_of(params)?)
}

fn delta_und_with_h(params: &LucasParams, n: u64, d: u64, h: u64) -> Result<BigRational> {
    if d == 0 || !n.is_multiple_of(d) {
        return Err(Error::Contract(format!("d = {d} must divide n = {n}")));
    }
    let factor = if branch_for(params, n).is_zero() { 1 } else { 2 };
    Ok(rat(factor * d.gcd(&h), arith::euler_phi(n)? * d))
}

fn check_see(d: u64, e: u64, h: u64) -> Result<()> {
    if d == 0 || h == 0 || e == 0 {
        return Err(Error::Contract("d, e, h must be positive".into()));
    }
    if !supported_on(e, d) {
        return Err(Error::Contract(format!("e = {e} does not divide {d}^inf")));
    }
    Ok(())
}

/// Closed form `S_{d,e,h} = (d^inf, h) / (d [(d^inf, h), e]^2) prod_{p | d} (1 - p^-2)^-1`.
pub fn s_closed(d: u64, e: u64, h: u64) -> Result<BigRational> {
    check_see(d, e, h)?;
    let g = arith::d_part(h, d);
    let l = g.lcm(&e);
    Ok(rat(g, d * l * l) * euler_factor(d))
}

/// Squarefree divisors of `d` with their Mobius signs.
fn mobius_divisors(d: u64) -> Vec<(u64, i64)> {
    let primes: Vec<u64> = arith::factor_unsigned(d as u128).primes().map(|p| p as u64).collect();
    let mut out = vec![(1u64, 1i64)];
    for p in primes {
        let len = out.len();
        for i in 0..len {
            let (a, s) = out[i];
            out.push((a * p, -s));
        }
    }
    out
}

/// `sum_{v | d^inf, e | v, v <= vmax} sum_{a | d} mu(a) (a v, h) / (phi(d v) a v)`.
pub fn s_truncated(d: u64, e: u64, h: u64, vmax: u64) -> Result<BigRational> {
    check_see(d, e, h)?;
    let mut num = BigRational::zero();
    let mobius = mobius_divisors(d);
    for v in enumerate_supernatural_divisors(d, vmax) {
        if v % e != 0 {
            continue;
        }
        let phi = arith::euler_phi(d * v)?;
        for &(a, mu) in &mobius {
            let t = rat((a * v).gcd(&h), phi * a * v);
            if mu > 0 {
                num += t;
            } else {
                num -= t;
            }
        }
    }
    Ok(num)
}

/// `min(d^6, 10^6)`
pub fn default_vmax(d: u64) -> u64 {
    d.checked_pow(6).map_or(VMAX_CAP, |v| v.min(VMAX_CAP))
}

/// `delta_U(d) - sum_{v | d^inf, v <= vmax} sum_{a | d} mu(a) delta_{U,dv,av}`.
pub fn series_residual(params: &LucasParams, d: u64, vmax: u64) -> Result<BigRational> {
    check_odd(params, d, "d")?;
    let h = h_of(params)?;
    let target = delta_u_with_h(params, d, h)?.delta;
    let mobius = mobius_divisors(d);
    let mut sum = BigRational::zero();
    for v in enumerate_supernatural_divisors(d, vmax) {
        for &(a, mu) in &mobius {
            let t = delta_und_with_h(params, d * v, a * v, h)?;
            if mu > 0 {
                sum += t;
            } else {
                sum -= t;
            }
        }
    }
    Ok(target - sum)
}

/// Decimal rendering of a rational, rounded to `digits` places.
pub fn to_decimal(r: &BigRational, digits: usize) -> String {
    let neg = r.numer() < &BigInt::zero();
    let scale = BigInt::from(10).pow(digits as u32);
    let n = num_traits::Signed::abs(r.numer()) * &scale;
    let (q, rem) = n.div_rem(r.denom());
    let q = if rem * 2 >= *r.denom() { q + 1 } else { q };
    let s = q.to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if neg && s.chars().any(|c| c != '0') { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn params(a1: i64, a2: i64) -> LucasParams {
        LucasParams::validate(a1, a2).unwrap()
    }

    /// The inner double sum of S_{d,e,h}, written directly from its terms.
    fn s_oracle(d: u64, e: u64, h: u64, vmax: u64) -> f64 {
        let mut s = 0.0;
        for v in 1..=vmax {
            if v % e != 0 || !supported_on(v, d) {
                continue;
            }
            for a in 1..=d {
                if !d.is_multiple_of(a) {
                    continue;
                }
                let mu = arith::mobius(a).unwrap() as f64;
                let g = (a * v).gcd(&h) as f64;
                s += mu * g / (arith::euler_phi(d * v).unwrap() as f64 * (a * v) as f64);
            }
        }
        s
    }

    #[test]
    fn delta_u_examples() {
        let rep = delta_u(&params(1, 1), 3).unwrap();
        assert_eq!(rep.delta, r(3, 8));
        assert_eq!((rep.h, rep.d_inf_h), (1, 1));
        assert_eq!(rep.branch, DensityBranch::EtaZeroPositiveDiscriminant);

        let rep = delta_u(&params(4, 1), 3).unwrap();
        assert_eq!((rep.h, rep.d_inf_h), (3, 3));
        assert_eq!(rep.delta, r(1, 8));

        let rep = delta_u(&params(1, -2), 7).unwrap();
        assert_eq!(rep.h, 1);
        assert_eq!(rep.branch, DensityBranch::EtaNonzero);
        assert_eq!(rep.eta, r(1, 1));
        assert_eq!(rep.delta, r(7, 24));

        let rep = delta_u(&params(1, -2), 3).unwrap();
        assert_eq!(rep.branch, DensityBranch::EtaZeroNotSupported);
        assert_eq!(rep.delta, r(3, 8));
        assert_eq!(delta_u(&params(1, 1), 1).unwrap().delta, r(1, 1));
    }

    #[test]
    fn delta_u_branches_and_errors() {
        // delta = -8, D0 = -2 = 2 (mod 4)
        let rep = delta_u(&params(2, -3), 3).unwrap();
        assert_eq!(rep.branch, DensityBranch::EtaZeroNotOneModFour);
        assert!(matches!(delta_u(&params(1, 1), 6), Err(Error::Hypothesis(m)) if m == "d even"));
        assert!(matches!(delta_u(&params(1, 1), 0), Err(Error::Hypothesis(_))));
        // delta = -27, gamma = (-13 + 3 sqrt(-3)) / 14
        let p = params(1, -7);
        assert_eq!(p.delta0(), -3);
        assert!(matches!(delta_u(&p, 3), Err(Error::Hypothesis(m)) if m == "3 | d with D0 = -3"));
        assert!(delta_u(&p, 5).is_ok());
    }

    #[test]
    fn delta_u_type_invariant() {
        for (a1, a2) in [(1, 1), (4, 1), (1, -2), (3, -1), (2, -3), (1, -3), (3, -5)] {
            let p = params(a1, a2);
            for d in (1..60u64).step_by(2) {
                let Ok(rep) = delta_u(&p, d) else { continue };
                let expect = (r(1, 1) / BigRational::from_integer(rep.d_inf_h.into()) + &rep.eta)
                    / BigRational::from_integer(d.into())
                    * euler_factor(d);
                assert_eq!(rep.delta, expect);
                assert!(rep.delta > BigRational::zero() && rep.delta <= r(1, 1));
            }
        }
    }

    #[test]
    fn fibonacci_matches_c_equals_one_formula() {
        let f = params(1, 1);
        for d in (1..=99u64).step_by(2).filter(|d| d % 5 != 0) {
            let mut expect = r(1, d as i64);
            for p in arith::factor(d as i128).unwrap().primes() {
                let p = p as i64;
                expect *= r(p * p, p * p - 1);
            }
            assert_eq!(delta_u(&f, d).unwrap().delta, expect, "d = {d}");
        }
    }

    #[test]
    fn delta_und_examples() {
        assert_eq!(delta_und(&params(1, 1), 3, 3).unwrap(), r(1, 6));
        assert_eq!(delta_und(&params(1, -2), 7, 7).unwrap(), r(2, 42));
        assert_eq!(delta_und(&params(1, 1), 15, 5).unwrap(), r(1, 40));
        assert!(delta_und(&params(1, 1), 15, 2).is_err());
        assert!(delta_und(&params(1, 1), 6, 3).is_err());
    }

    #[test]
    fn s_closed_examples() {
        assert_eq!(s_closed(3, 1, 1).unwrap(), r(3, 8));
        assert_eq!(s_closed(3, 1, 3).unwrap(), r(1, 8));
        assert_eq!(s_closed(7, 1, 1).unwrap(), r(7, 48));
        assert!(s_closed(3, 5, 1).is_err());
    }

    #[test]
    fn s_truncated_examples() {
        // v = 1 only: 1/(phi(3)) - 1/(phi(3) 3) = 1/2 - 1/6
        let t = s_truncated(3, 1, 1, 1).unwrap();
        assert!((to_f64(&t) - s_oracle(3, 1, 1, 1)).abs() < 1e-15);
        assert_eq!(t, r(1, 3));
        for vmax in [1, 7, 100] {
            assert_eq!(s_truncated(1, 1, 1, vmax).unwrap(), r(1, 1));
        }
        for (d, e, h) in [(3, 1, 1), (3, 3, 2), (15, 5, 6), (9, 9, 12)] {
            for vmax in [10, 1000] {
                let got = to_f64(&s_truncated(d, e, h, vmax).unwrap());
                assert!((got - s_oracle(d, e, h, vmax)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn s_truncated_tail_against_brute_sum() {
        // direct summation to 10^6 stands in for the limit
        for (d, e, h) in [(3, 1, 1), (5, 5, 4), (15, 3, 3)] {
            let limit = s_oracle(d, e, h, 1_000_000);
            let closed = to_f64(&s_closed(d, e, h).unwrap());
            assert!((limit - closed).abs() < 1e-5, "({d},{e},{h})");
            for vmax in [10u64, 100, 1000] {
                let t = to_f64(&s_truncated(d, e, h, vmax).unwrap());
                assert!((t - closed).abs() <= 2.0 / vmax as f64);
            }
        }
    }

    #[test]
    fn s_truncated_converges_to_closed_form() {
        for d in (1..=15u64).step_by(2) {
            for e in [1, d] {
                for h in 1..=12u64 {
                    let closed = s_closed(d, e, h).unwrap();
                    let mut prev_err: Option<BigRational> = None;
                    for vmax in [10u64, 100, 1000, 10_000] {
                        let t = s_truncated(d, e, h, vmax).unwrap();
                        let err = num_traits::Signed::abs(&(&closed - &t));
                        assert!(err <= r(4, vmax as i64), "d={d} e={e} h={h} vmax={vmax}");
                        if let Some(p) = &prev_err {
                            assert!(err <= *p);
                        }
                        prev_err = Some(err);
                    }
                }
            }
        }
    }

    #[test]
    fn series_residual_examples() {
        let tol = r(1, 1000);
        for (a1, a2) in [(1, 1), (4, 1)] {
            let res = series_residual(&params(a1, a2), 3, 729).unwrap();
            assert!(num_traits::Signed::abs(&res) < tol);
        }
        let p = params(1, -2);
        let r1 = num_traits::Signed::abs(&series_residual(&p, 7, 7).unwrap());
        let r2 = num_traits::Signed::abs(&series_residual(&p, 7, 343).unwrap());
        assert!(r2 * BigRational::from_integer(343.into()) <= r1 * BigRational::from_integer(7.into()) * r(4, 1));
        assert_eq!(series_residual(&params(1, 1), 1, 1).unwrap(), BigRational::zero());
    }

    #[test]
    fn default_vmax_values() {
        assert_eq!(default_vmax(1), 1);
        assert_eq!(default_vmax(3), 729);
        assert_eq!(default_vmax(15), VMAX_CAP);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&r(3, 8), 6), "0.375000");
        assert_eq!(to_decimal(&r(-1, 3), 4), "-0.3333");
        assert_eq!(to_decimal(&r(2, 3), 2), "0.67");
        assert_eq!(to_decimal(&r(7, 1), 0), "7");
    }
}
