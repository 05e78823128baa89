//! Prime censuses: `R_U(d; x)`, `pi_{U,n,d}(x)` and the exact finite-`x`
//! counting identities relating them.
//!
//! Counting runs over segments `[i S, (i+1) S)` of a segmented sieve. Each
//! segment yields per-bucket counters (one bucket per convergence
//! checkpoint); segments are reduced by addition only, so the result does not
//! depend on the number of workers or on where a run was interrupted.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_integer::Integer;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith;
use crate::density;
use crate::lucas::{self, LucasParams, RankDivisor};
use crate::{Error, Result};

/// Largest supported census bound.
pub const X_LIMIT: u64 = 1 << 50;
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 22;
pub const DEFAULT_AUDIT_EVERY: u64 = 1024;
pub const CHECKPOINT_FORMAT: &str = "lucas-rank-census-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

fn sieve_with_base(lo: u64, hi: u64, base: &[u64], marks: &mut Vec<bool>) -> Vec<u64> {
    let len = (hi - lo) as usize;
    marks.clear();
    marks.resize(len, false);
    for &q in base {
        if q * q >= hi {
            break;
        }
        let start = (q * q).max(lo.div_ceil(q) * q);
        let mut j = (start - lo) as usize;
        while j < len {
            marks[j] = true;
            j += q as usize;
        }
    }
    marks
        .iter()
        .enumerate()
        .filter(|&(i, &c)| !c && lo + i as u64 >= 2)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

/// Primes in `[lo, hi)` by segmented Eratosthenes.
pub fn sieve_segment(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if lo < 2 || lo >= hi || hi > X_LIMIT {
        return Err(Error::Domain(format!("sieve range [{lo}, {hi}) must satisfy 2 <= lo < hi <= 2^50")));
    }
    let base = simple_sieve((hi - 1).isqrt());
    Ok(sieve_with_base(lo, hi, &base, &mut Vec::new()))
}

/// All `v <= bound` whose prime factors divide `d`, ascending.
pub fn enumerate_supernatural_divisors(d: u64, bound: u64) -> Vec<u64> {
    let primes: Vec<u64> = if d == 0 {
        Vec::new()
    } else {
        arith::factor_unsigned(d as u128).primes().map(|p| p as u64).collect()
    };
    let mut out = Vec::new();
    fn walk(primes: &[u64], v: u64, bound: u64, out: &mut Vec<u64>) {
        let Some((&q, rest)) = primes.split_first() else {
            out.push(v);
            return;
        };
        let mut w = v;
        loop {
            walk(rest, w, bound, out);
            match w.checked_mul(q) {
                Some(next) if next <= bound => w = next,
                _ => break,
            }
        }
    }
    if bound >= 1 {
        walk(&primes, 1, bound, &mut out);
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone)]
pub struct CensusConfig {
    pub params: LucasParams,
    pub d: u64,
    pub x: u64,
    pub segment_size: u64,
    pub workers: usize,
    pub checkpoint_path: Option<PathBuf>,
    /// Convergence checkpoints; `x` is always the final one.
    pub checkpoints_at: Vec<u64>,
    /// Audit one prime in this many against the full rank; 0 disables.
    pub audit_every: u64,
    /// Mixed into audit sampling only; never affects counts.
    pub seed: u64,
}

impl CensusConfig {
    pub fn new(params: LucasParams, d: u64, x: u64) -> Self {
        CensusConfig {
            params,
            d,
            x,
            segment_size: DEFAULT_SEGMENT_SIZE,
            workers: 1,
            checkpoint_path: None,
            checkpoints_at: Vec::new(),
            audit_every: DEFAULT_AUDIT_EVERY,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.x < 100 || self.x > X_LIMIT {
            return bad(format!("x = {} must lie in [100, 2^50]", self.x));
        }
        if self.segment_size < 2 {
            return bad("segment size must be at least 2".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if self.checkpoints_at.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly ascending".into());
        }
        if self.checkpoints_at.iter().any(|&c| c < 2 || c > self.x) {
            return bad("checkpoints must lie in [2, x]".into());
        }
        Ok(())
    }

    fn thresholds(&self) -> Vec<u64> {
        let mut t = self.checkpoints_at.clone();
        if t.last() != Some(&self.x) {
            t.push(self.x);
        }
        t
    }

    fn total_segments(&self) -> u64 {
        (self.x + 1).div_ceil(self.segment_size)
    }

    /// Hash of everything that determines the counters.
    pub fn digest(&self) -> String {
        let canon = format!(
            "v{}|a1={}|a2={}|d={}|x={}|seg={}|at={:?}|audit={}|seed={}",
            CHECKPOINT_VERSION,
            self.params.a1(),
            self.params.a2(),
            self.d,
            self.x,
            self.segment_size,
            self.thresholds(),
            self.audit_every,
            self.seed
        );
        Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Counters for primes in one `(previous checkpoint, checkpoint]` bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    /// all primes
    pub primes: u64,
    /// primes not dividing `2 a2 delta`
    pub universe: u64,
    /// universe primes with `d | rho(p)`
    pub hits: u64,
    pub audited: u64,
    pub audit_failures: u64,
}

impl BucketCounts {
    fn add(&mut self, o: &BucketCounts) {
        self.primes += o.primes;
        self.universe += o.universe;
        self.hits += o.hits;
        self.audited += o.audited;
        self.audit_failures += o.audit_failures;
    }
}

/// On-disk resume state, stored as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub format_version: u32,
    pub digest: String,
    pub total_segments: u64,
    /// Segments `0..next_segment` are included in `buckets`.
    pub next_segment: u64,
    pub buckets: Vec<BucketCounts>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let ck: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.format != CHECKPOINT_FORMAT || ck.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint format {} v{}",
                ck.format, ck.format_version
            )));
        }
        Ok(ck)
    }

    /// Writes via a temporary file and rename so a killed run never leaves a torn file.
    pub fn store(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub x: u64,
    pub count: u64,
    pub li_x: f64,
    pub pi_x: u64,
    pub ratio_li: f64,
    pub ratio_pi: f64,
    pub delta_predicted: Option<BigRational>,
    /// `ratio_pi - delta_predicted`
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub a1: i64,
    pub a2: i64,
    pub d: u64,
    pub x: u64,
    pub count_r: u64,
    /// universe primes up to `x`
    pub pi_x: u64,
    /// all primes up to `x`
    pub pi_all: u64,
    pub excluded_primes: Vec<u64>,
    pub li_x: f64,
    pub empirical_li: f64,
    pub empirical_pi: f64,
    pub delta_predicted: Option<BigRational>,
    pub abs_error: Option<f64>,
    pub runtime_secs: f64,
    pub segments: u64,
    pub segment_size: u64,
    pub workers: usize,
    pub audited: u64,
    pub audit_failures: u64,
    pub rows: Vec<ConvergenceRow>,
}

/// Result of a census run that may stop early.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum CensusOutcome {
    Complete(CensusReport),
    /// Stopped after `next_segment` segments; the checkpoint holds the state.
    Halted { next_segment: u64, total_segments: u64 },
}

#[inline]
fn audit_sample(p: u64, seed: u64, every: u64) -> bool {
    if every == 0 {
        return false;
    }
    // splitmix64 finaliser
    let mut z = p ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    z.is_multiple_of(every)
}

struct Pass<'a> {
    cfg: &'a CensusConfig,
    divisor: RankDivisor,
    thresholds: Vec<u64>,
    base: Vec<u64>,
}

impl<'a> Pass<'a> {
    fn new(cfg: &'a CensusConfig) -> Result<Self> {
        Ok(Pass {
            cfg,
            divisor: RankDivisor::new(cfg.d)?,
            thresholds: cfg.thresholds(),
            base: simple_sieve(cfg.x.isqrt() + 1),
        })
    }

    fn segment(&self, index: u64) -> Vec<BucketCounts> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let lo = (index * cfg.segment_size).max(2);
        let hi = ((index + 1) * cfg.segment_size).min(cfg.x + 1);
        let mut buckets = vec![BucketCounts::default(); self.thresholds.len()];
        if lo >= hi {
            return buckets;
        }
        let primes = sieve_with_base(lo, hi, &self.base, &mut Vec::new());
        let mut b = self.thresholds.partition_point(|&t| t < lo);
        for p in primes {
            while self.thresholds[b] < p {
                b += 1;
            }
            let c = &mut buckets[b];
            c.primes += 1;
            if params.is_excluded(p) {
                continue;
            }
            c.universe += 1;
            let m = (p as i64 - params.sign_unchecked(p) as i64) as u64;
            let hit = self.divisor.divides_rank(params, p, m);
            if hit {
                c.hits += 1;
            }
            if audit_sample(p, cfg.seed, cfg.audit_every) {
                let rec = lucas::rank_unchecked(params, p);
                c.audited += 1;
                if !rec.m.is_multiple_of(rec.rho) || !params.modulus(p).u_is_zero(rec.m) || rec.rho.is_multiple_of(cfg.d) != hit {
                    c.audit_failures += 1;
                }
            }
        }
        buckets
    }
}

fn merge(into: &mut [BucketCounts], from: &[BucketCounts]) {
    for (a, b) in into.iter_mut().zip(from) {
        a.add(b);
    }
}

/// Runs (or resumes) a census. `halt_after` stops after that many segments
/// have been processed in this call, leaving the checkpoint behind.
pub fn run_census(cfg: &CensusConfig, resume: bool, halt_after: Option<u64>) -> Result<CensusOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let pass = Pass::new(cfg)?;
    let total = cfg.total_segments();
    let digest = cfg.digest();
    let mut state = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        format_version: CHECKPOINT_VERSION,
        digest: digest.clone(),
        total_segments: total,
        next_segment: 0,
        buckets: vec![BucketCounts::default(); pass.thresholds.len()],
    };
    if resume {
        let path = cfg
            .checkpoint_path
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("resume requires a checkpoint path".into()))?;
        if path.exists() {
            let ck = Checkpoint::load(path)?;
            if ck.digest != digest {
                return Err(Error::DigestMismatch { expected: digest, found: ck.digest });
            }
            if ck.buckets.len() != state.buckets.len() || ck.next_segment > total {
                return Err(Error::Checkpoint("checkpoint counters do not match the configuration".into()));
            }
            state = ck;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let chunk = (cfg.workers as u64 * 4).max(1);
    let stop = halt_after.map_or(total, |h| (state.next_segment + h).min(total));
    while state.next_segment < stop {
        let end = (state.next_segment + chunk).min(stop);
        let tallies: Vec<Vec<BucketCounts>> =
            pool.install(|| (state.next_segment..end).into_par_iter().map(|i| pass.segment(i)).collect());
        for t in &tallies {
            merge(&mut state.buckets, t);
        }
        state.next_segment = end;
        if let Some(path) = &cfg.checkpoint_path {
            state.store(path)?;
        }
    }
    if state.next_segment < total {
        return Ok(CensusOutcome::Halted { next_segment: state.next_segment, total_segments: total });
    }
    Ok(CensusOutcome::Complete(build_report(cfg, &pass.thresholds, &state.buckets, started, total)))
}

fn build_report(
    cfg: &CensusConfig,
    thresholds: &[u64],
    buckets: &[BucketCounts],
    started: Instant,
    segments: u64,
) -> CensusReport {
    let predicted = density::delta_u(&cfg.params, cfg.d).ok().map(|r| r.delta);
    let predicted_f = predicted.as_ref().map(density::to_f64);
    let mut cum = BucketCounts::default();
    let mut rows = Vec::with_capacity(thresholds.len());
    for (&t, b) in thresholds.iter().zip(buckets) {
        cum.add(b);
        let li_x = arith::li(t as f64).unwrap_or(0.0);
        let ratio_pi = if cum.universe == 0 { 0.0 } else { cum.hits as f64 / cum.universe as f64 };
        rows.push(ConvergenceRow {
            x: t,
            count: cum.hits,
            li_x,
            pi_x: cum.universe,
            ratio_li: if li_x > 0.0 { cum.hits as f64 / li_x } else { 0.0 },
            ratio_pi,
            delta_predicted: predicted.clone(),
            error: predicted_f.map(|d| ratio_pi - d),
        });
    }
    let last = rows.last().cloned().expect("at least one threshold");
    CensusReport {
        a1: cfg.params.a1(),
        a2: cfg.params.a2(),
        d: cfg.d,
        x: cfg.x,
        count_r: cum.hits,
        pi_x: cum.universe,
        pi_all: cum.primes,
        excluded_primes: cfg.params.excluded_primes().to_vec(),
        li_x: last.li_x,
        empirical_li: last.ratio_li,
        empirical_pi: last.ratio_pi,
        delta_predicted: predicted,
        abs_error: last.error.map(f64::abs),
        runtime_secs: started.elapsed().as_secs_f64(),
        segments,
        segment_size: cfg.segment_size,
        workers: cfg.workers,
        audited: cum.audited,
        audit_failures: cum.audit_failures,
        rows,
    }
}

/// `R_U(d; x)` over the prime universe.
pub fn count_r(cfg: &CensusConfig) -> Result<CensusReport> {
    match run_census(cfg, false, None)? {
        CensusOutcome::Complete(r) => Ok(r),
        CensusOutcome::Halted { .. } => unreachable!("run without halt completes"),
    }
}

/// One census pass with a row per checkpoint.
pub fn convergence_report(params: &LucasParams, d: u64, checkpoints: &[u64], workers: usize) -> Result<Vec<ConvergenceRow>> {
    let x = *checkpoints
        .last()
        .ok_or_else(|| Error::InvalidConfig("no checkpoints given".into()))?;
    let mut cfg = CensusConfig::new(params.clone(), d, x);
    cfg.workers = workers;
    cfg.checkpoints_at = checkpoints.to_vec();
    Ok(count_r(&cfg)?.rows)
}

/// Universe primes up to `x` with their Frobenius data, for exact identity checks.
#[derive(Debug, Clone)]
pub struct Universe {
    params: LucasParams,
    /// `(p, m = p - (delta/p))`
    primes: Vec<(u64, u64)>,
}

impl Universe {
    pub fn new(params: &LucasParams, x: u64) -> Result<Self> {
        if x > X_LIMIT {
            return Err(Error::Domain("x exceeds 2^50".into()));
        }
        let primes = if x < 2 { Vec::new() } else { sieve_segment(2, x + 1)? };
        let primes = primes
            .into_iter()
            .filter(|&p| !params.is_excluded(p))
            .map(|p| (p, (p as i64 - params.sign_unchecked(p) as i64) as u64))
            .collect();
        Ok(Universe { params: params.clone(), primes })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn count_r(&self, d: u64) -> Result<u64> {
        let div = RankDivisor::new(d)?;
        Ok(self.primes.iter().filter(|&&(p, m)| div.divides_rank(&self.params, p, m)).count() as u64)
    }

    /// `#{p : p = (delta/p) mod n, d | iota(p)}`.
    pub fn count_pi_und(&self, n: u64, d: u64) -> Result<u64> {
        if d == 0 || n == 0 || !n.is_multiple_of(d) {
            return Err(Error::Contract(format!("d = {d} must divide n = {n}")));
        }
        Ok(self
            .primes
            .iter()
            .filter(|&&(p, m)| m % n == 0 && self.params.modulus(p).u_is_zero(m / d))
            .count() as u64)
    }
}

pub fn count_pi_und(params: &LucasParams, n: u64, d: u64, x: u64) -> Result<u64> {
    Universe::new(params, x)?.count_pi_und(n, d)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ExactMatch { value: i64 },
    Mismatch { left: i64, right: i64, detail: String },
}

impl Verdict {
    fn compare(left: i64, right: i64, detail: impl FnOnce() -> String) -> Self {
        if left == right {
            Verdict::ExactMatch { value: left }
        } else {
            Verdict::Mismatch { left, right, detail: detail() }
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, Verdict::ExactMatch { .. })
    }
}

fn mobius_divisors(d: u64) -> Vec<(u64, i64)> {
    let mut out = vec![(1u64, 1i64)];
    for p in arith::factor_unsigned(d as u128).primes() {
        let len = out.len();
        for i in 0..len {
            let (a, s) = out[i];
            out.push((a * p as u64, -s));
        }
    }
    out
}

/// `sum_{a | d} mu(a) pi_{U,dv,av}(x)` on a prepared universe.
fn inner_sum(u: &Universe, d: u64, v: u64) -> Result<i64> {
    let mut s = 0i64;
    for (a, mu) in mobius_divisors(d) {
        s += mu * u.count_pi_und(d * v, a * v)? as i64;
    }
    Ok(s)
}

/// `R_U(d; x) = sum_{v | d^inf} sum_{a | d} mu(a) pi_{U,dv,av}(x)`, checked as
/// an integer identity. Terms with `dv > x + 1` vanish.
pub fn verify_mobius_identity(params: &LucasParams, d: u64, x: u64) -> Result<Verdict> {
    if d == 0 {
        return Err(Error::Contract("d must be positive".into()));
    }
    let u = Universe::new(params, x)?;
    let left = u.count_r(d)? as i64;
    let mut right = 0i64;
    let vs = enumerate_supernatural_divisors(d, (x + 1) / d);
    for &v in &vs {
        right += inner_sum(&u, d, v)?;
    }
    Ok(Verdict::compare(left, right, || format!("R_U({d}; {x}) vs double sum over {} values of v", vs.len())))
}

/// `sum_{a | d} mu(a) pi_{U,dv,av}(x)` against a direct count from full rank records.
pub fn verify_inner_sum(params: &LucasParams, d: u64, v: u64, x: u64) -> Result<Verdict> {
    if d == 0 || v == 0 {
        return Err(Error::Contract("d and v must be positive".into()));
    }
    if arith::factor_unsigned(v as u128).primes().any(|q| !d.is_multiple_of(q as u64)) {
        return Err(Error::Contract(format!("v = {v} does not divide {d}^inf")));
    }
    let u = Universe::new(params, x)?;
    let left = inner_sum(&u, d, v)?;
    let dv = d * v;
    let mut right = 0i64;
    for &(p, m) in &u.primes {
        if m % dv != 0 {
            continue;
        }
        let rec = lucas::rank_unchecked(params, p);
        if rec.iota.is_multiple_of(v) && (rec.iota / v).gcd(&d) == 1 {
            right += 1;
        }
    }
    Ok(Verdict::compare(left, right, || format!("inner sum for d = {d}, v = {v}, x = {x}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> LucasParams {
        LucasParams::validate(1, 1).unwrap()
    }

    fn trial_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sieve_segment(2, 30).unwrap(), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        let oracle: Vec<u64> = (1_000_000..1_000_100).filter(|&n| trial_prime(n)).collect();
        assert_eq!(oracle, vec![1_000_003, 1_000_033, 1_000_037, 1_000_039, 1_000_081, 1_000_099]);
        assert_eq!(sieve_segment(1_000_000, 1_000_100).unwrap(), oracle);
        assert!(sieve_segment(14, 16).unwrap().is_empty());
        assert!(sieve_segment(1, 10).is_err());
        assert!(sieve_segment(10, 10).is_err());
        assert!(sieve_segment(2, X_LIMIT + 1).is_err());
    }

    #[test]
    fn sieve_matches_trial_division() {
        for (lo, hi) in [(2, 5000), (4999, 5100), (99_990, 100_010), (3, 4)] {
            let oracle: Vec<u64> = (lo..hi).filter(|&n| trial_prime(n)).collect();
            assert_eq!(sieve_segment(lo, hi).unwrap(), oracle);
        }
    }

    #[test]
    fn supernatural_divisor_examples() {
        let brute: Vec<u64> = (1..=20)
            .filter(|&v| arith::factor(v as i128).unwrap().primes().all(|q| 6 % q as u64 == 0))
            .collect();
        assert_eq!(brute, vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
        assert_eq!(enumerate_supernatural_divisors(6, 20), brute);
        assert_eq!(enumerate_supernatural_divisors(1, 1000), vec![1]);
        assert_eq!(enumerate_supernatural_divisors(3, 243).len(), 6);
        let brute: Vec<u64> = (1..=5000u64).filter(|v| v.gcd(&(1 << 20)) * (v / v.gcd(&(1 << 20))).gcd(&3u64.pow(10)) == *v).collect();
        assert_eq!(enumerate_supernatural_divisors(12, 5000), brute);
    }

    #[test]
    fn count_r_examples() {
        let report = count_r(&CensusConfig::new(fib(), 1, 100)).unwrap();
        assert_eq!((report.count_r, report.pi_x, report.pi_all), (23, 23, 25));
        assert_eq!(report.excluded_primes, vec![2, 5]);
        assert_eq!(report.empirical_pi, 1.0);

        // brute force: first zero of F_n mod p by scan
        let scan = |p: u64| -> u64 {
            let (mut a, mut b) = (0u64, 1u64);
            for r in 1.. {
                if b == 0 {
                    return r;
                }
                (a, b) = (b, (a + b) % p);
            }
            unreachable!()
        };
        let oracle = (3..=1000u64).filter(|&p| p != 5 && trial_prime(p) && scan(p) % 3 == 0).count() as u64;
        let mut cfg = CensusConfig::new(fib(), 3, 1000);
        cfg.segment_size = 64;
        assert_eq!(count_r(&cfg).unwrap().count_r, oracle);
    }

    #[test]
    fn count_pi_und_examples() {
        let f = fib();
        assert_eq!(count_pi_und(&f, 1, 1, 100).unwrap(), 23);
        let oracle = (3..=100u64)
            .filter(|&p| trial_prime(p) && p != 5)
            .filter(|&p| {
                let s = arith::legendre_symbol(5, p as u128).unwrap() as i64;
                (p as i64 - s).rem_euclid(5) == 0
            })
            .count() as u64;
        assert_eq!(count_pi_und(&f, 5, 1, 100).unwrap(), oracle);
        assert_eq!(count_pi_und(&f, 103, 1, 100).unwrap(), 0);
        assert!(count_pi_und(&f, 5, 3, 100).is_err());
    }

    #[test]
    fn identity_examples() {
        let f = fib();
        assert!(verify_mobius_identity(&f, 3, 10_000).unwrap().is_match());
        assert!(verify_mobius_identity(&f, 15, 10_000).unwrap().is_match());
        assert!(verify_mobius_identity(&LucasParams::validate(4, 1).unwrap(), 3, 10_000).unwrap().is_match());
        assert!(verify_mobius_identity(&f, 2, 10_000).unwrap().is_match());
        for v in [1, 3] {
            assert!(verify_inner_sum(&f, 3, v, 1000).unwrap().is_match());
        }
        let universe = Universe::new(&f, 1000).unwrap().len() as i64;
        assert_eq!(verify_inner_sum(&f, 1, 1, 1000).unwrap(), Verdict::ExactMatch { value: universe });
        assert!(verify_inner_sum(&f, 3, 5, 1000).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = CensusConfig::new(fib(), 3, 50);
        assert!(cfg.validate().is_err());
        cfg.x = 1000;
        cfg.checkpoints_at = vec![500, 400];
        assert!(cfg.validate().is_err());
        cfg.checkpoints_at = vec![400, 2000];
        assert!(cfg.validate().is_err());
        cfg.checkpoints_at = vec![400];
        cfg.segment_size = 1;
        assert!(cfg.validate().is_err());
        cfg.segment_size = 2;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn deterministic_across_workers_and_segments() {
        let mut base = CensusConfig::new(fib(), 3, 200_000);
        base.checkpoints_at = vec![1000, 50_000];
        base.audit_every = 16;
        let reference = count_r(&base).unwrap();
        assert_eq!(reference.audit_failures, 0);
        assert!(reference.audited > 0);
        for workers in [1, 2, 8] {
            for seg in [1 << 10, 1 << 14, 1 << 22] {
                let mut cfg = base.clone();
                cfg.workers = workers;
                cfg.segment_size = seg;
                let r = count_r(&cfg).unwrap();
                assert_eq!(r.rows, reference.rows);
                assert_eq!((r.count_r, r.pi_x, r.audited), (reference.count_r, reference.pi_x, reference.audited));
            }
        }
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let mut cfg = CensusConfig::new(fib(), 3, 100_000);
        cfg.segment_size = 4096;
        cfg.workers = 2;
        cfg.checkpoint_path = Some(path.clone());
        let full = count_r(&cfg).unwrap();
        for stop in [1, 5, 17] {
            let outcome = run_census(&cfg, false, Some(stop)).unwrap();
            assert_eq!(outcome, CensusOutcome::Halted { next_segment: stop, total_segments: 25 });
            let ck = Checkpoint::load(&path).unwrap();
            assert_eq!(ck.next_segment, stop);
            let CensusOutcome::Complete(resumed) = run_census(&cfg, true, None).unwrap() else {
                panic!("resume did not complete")
            };
            assert_eq!(resumed.rows, full.rows);
            assert_eq!(resumed.count_r, full.count_r);
        }
        // a checkpoint written by another configuration is refused
        run_census(&cfg, false, Some(3)).unwrap();
        let mut other = cfg.clone();
        other.d = 5;
        assert!(matches!(run_census(&other, true, None), Err(Error::DigestMismatch { .. })));
        // resume without an existing file starts from scratch
        fs::remove_file(&path).unwrap();
        let CensusOutcome::Complete(r) = run_census(&cfg, true, None).unwrap() else { panic!() };
        assert_eq!(r.count_r, full.count_r);
    }

    #[test]
    fn convergence_rows() {
        let rows = convergence_report(&fib(), 1, &[1000, 10_000], 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.ratio_pi == 1.0 && r.error == Some(0.0)));
    }
}
