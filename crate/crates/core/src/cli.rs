//! The `lucas-rank` command line.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 invalid input or a
//! violated hypothesis, 3 checkpoint error.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Signed;
use serde_json::{json, Map, Value};

use crate::census::{self, CensusConfig, CensusOutcome, CensusReport, ConvergenceRow, Verdict};
use crate::density::{self, DensityReport};
use crate::lucas::{self, LucasParams};
use crate::quadfield;
use crate::Error;

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CHECKPOINT: i32 = 3;

/// Columns of the convergence table in CSV mode.
pub const CONVERGENCE_COLUMNS: [&str; 8] = ["x", "count", "li_x", "pi_x", "ratio_li", "ratio_pi", "delta_predicted", "error"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Identity,
    Series,
    Innersum,
}

/// Integers written plainly or as `1e7` / `10^7`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim().replace('_', "");
    let bad = || format!("invalid count `{s}`");
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return 10u64.checked_pow(e).and_then(|p| p.checked_mul(m)).ok_or_else(bad);
    }
    if let Some((b, e)) = s.split_once('^') {
        let b: u64 = b.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return b.checked_pow(e).ok_or_else(bad);
    }
    s.parse().map_err(|_| bad())
}

#[derive(Debug, Parser)]
#[command(name = "lucas-rank", version, about = "Ranks of appearance in Lucas sequences and their prime densities")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "human", global = true)]
    pub format: Format,
    /// Include wall-clock timing in the output (makes JSON run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Seq {
    #[arg(long, allow_hyphen_values = true)]
    pub a1: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub a2: i64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discriminant, gamma, h and excluded primes of a sequence.
    Analyze {
        #[command(flatten)]
        seq: Seq,
    },
    /// Rank and index of appearance for one prime or a range.
    Rank {
        #[command(flatten)]
        seq: Seq,
        #[arg(long, value_parser = parse_count, conflicts_with_all = ["from", "to"])]
        p: Option<u64>,
        #[arg(long, value_parser = parse_count, requires = "to")]
        from: Option<u64>,
        #[arg(long, value_parser = parse_count, requires = "from")]
        to: Option<u64>,
    },
    /// Exact density of primes with d | rank.
    Density {
        #[command(flatten)]
        seq: Seq,
        #[arg(long, value_parser = parse_count)]
        d: u64,
    },
    /// Count primes p <= x with d | rank(p).
    Census {
        #[command(flatten)]
        seq: Seq,
        #[arg(long, value_parser = parse_count)]
        d: u64,
        #[arg(long, value_parser = parse_count)]
        x: u64,
        #[arg(long, env = "LUCAS_RANK_WORKERS", default_value_t = 1)]
        workers: usize,
        #[arg(long, value_parser = parse_count, default_value_t = census::DEFAULT_SEGMENT_SIZE)]
        segment_size: u64,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue from the checkpoint file if it exists.
        #[arg(long, requires = "checkpoint")]
        resume: bool,
        /// Emit a convergence row at each of these bounds.
        #[arg(long, value_delimiter = ',', value_parser = parse_count)]
        checkpoints_at: Vec<u64>,
        /// Audit one prime in N against the full rank computation (0 disables).
        #[arg(long, default_value_t = census::DEFAULT_AUDIT_EVERY)]
        audit_every: u64,
        /// Seed for audit sampling; counts never depend on it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop after this many segments (simulates an interrupted run).
        #[arg(long, hide = true)]
        halt_after: Option<u64>,
    },
    /// Exact identity checks; exits 1 on any mismatch.
    Verify {
        #[command(flatten)]
        seq: Seq,
        #[arg(long, value_parser = parse_count)]
        d: u64,
        #[arg(long, value_parser = parse_count, default_value = "10000")]
        x: u64,
        #[arg(long, value_enum, default_value = "identity")]
        mode: VerifyMode,
        /// Values of v for innersum mode (default 1, d, d^2).
        #[arg(long, value_delimiter = ',', value_parser = parse_count)]
        v: Vec<u64>,
        /// Series truncation (default min(d^6, 10^6)).
        #[arg(long, value_parser = parse_count)]
        vmax: Option<u64>,
        /// Series residual tolerance.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Convergence table of count / pi(x) against the predicted density.
    Report {
        #[command(flatten)]
        seq: Seq,
        #[arg(long, value_parser = parse_count)]
        d: u64,
        #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
        checkpoints_at: Vec<u64>,
        #[arg(long, env = "LUCAS_RANK_WORKERS", default_value_t = 1)]
        workers: usize,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DigestMismatch { .. } | Error::Checkpoint(_) | Error::Io(_) => EXIT_CHECKPOINT,
        _ => EXIT_INVALID,
    }
}

fn rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn decimal(r: &BigRational) -> String {
    density::to_decimal(r, 12)
}

fn opt_rational(r: &Option<BigRational>) -> Value {
    r.as_ref().map_or(Value::Null, |r| Value::String(rational(r)))
}

fn float(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Structured result of one subcommand, rendered in any output format.
struct Output {
    command: &'static str,
    inputs: Value,
    results: Value,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    human: String,
    exit: i32,
}

fn seq_inputs(seq: &Seq) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("a1".into(), seq.a1.to_string().into());
    m.insert("a2".into(), seq.a2.to_string().into());
    m
}

fn analyze(seq: Seq) -> Result<Output, Error> {
    let inputs = Value::Object(seq_inputs(&seq));
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let gamma = quadfield::gamma_of(&params)?;
    let hres = quadfield::compute_h(&gamma)?;
    let excluded: Vec<String> = params.excluded_primes().iter().map(u64::to_string).collect();
    let results = json!({
        "delta": params.delta().to_string(),
        "delta0": params.delta0().to_string(),
        "gamma": gamma.to_string(),
        "gamma_norm": rational(&gamma.norm()),
        "h": hres.h.to_string(),
        "gamma0": hres.gamma0.to_string(),
        "square_discriminant": false,
        "root_of_unity": false,
        "excluded_primes": excluded,
    });
    let row = vec![
        seq.a1.to_string(),
        seq.a2.to_string(),
        params.delta().to_string(),
        params.delta0().to_string(),
        gamma.to_string(),
        hres.h.to_string(),
        hres.gamma0.to_string(),
        "false".into(),
        "false".into(),
        excluded.join(" "),
    ];
    let human = format!(
        "sequence        U(a1={}, a2={})\ndelta           {}\ndelta0          {}\ngamma           {}\nh               {}\ngamma0          {}\nsquare disc.    no\nroot of unity   no\nexcluded primes {}\n",
        seq.a1,
        seq.a2,
        params.delta(),
        params.delta0(),
        gamma,
        hres.h,
        hres.gamma0,
        excluded.join(", ")
    );
    Ok(Output {
        command: "analyze",
        inputs,
        results,
        columns: vec!["a1", "a2", "delta", "delta0", "gamma", "h", "gamma0", "square_discriminant", "root_of_unity", "excluded_primes"],
        rows: vec![row],
        human,
        exit: EXIT_OK,
    })
}

fn rank(seq: Seq, p: Option<u64>, from: Option<u64>, to: Option<u64>) -> Result<Output, Error> {
    let mut inputs = seq_inputs(&seq);
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let primes = match (p, from, to) {
        (Some(p), _, _) => {
            inputs.insert("p".into(), p.to_string().into());
            if !crate::arith::is_prime(p as u128) {
                return Err(Error::Contract(format!("{p} is not prime")));
            }
            vec![p]
        }
        (None, Some(lo), Some(hi)) => {
            inputs.insert("from".into(), lo.to_string().into());
            inputs.insert("to".into(), hi.to_string().into());
            if lo > hi {
                return Err(Error::InvalidConfig("empty range".into()));
            }
            census::sieve_segment(lo.max(2), hi.saturating_add(1).max(3))?
        }
        _ => return Err(Error::InvalidConfig("give --p or --from/--to".into())),
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut human = String::from("       p  sign           m         rho        iota\n");
    for p in primes {
        if params.is_excluded(p) {
            rows.push(vec![p.to_string(), "excluded".into(), String::new(), String::new(), String::new(), String::new()]);
            records.push(json!({"p": p.to_string(), "status": "excluded"}));
            human.push_str(&format!("{p:>8}  excluded\n"));
            continue;
        }
        let r = lucas::rank(&params, p)?;
        let sign = if r.sign > 0 { "+1" } else { "-1" };
        rows.push(vec![
            p.to_string(),
            "ok".into(),
            sign.into(),
            r.m.to_string(),
            r.rho.to_string(),
            r.iota.to_string(),
        ]);
        records.push(json!({
            "p": p.to_string(), "status": "ok", "sign": r.sign,
            "m": r.m.to_string(), "rho": r.rho.to_string(), "iota": r.iota.to_string(),
        }));
        human.push_str(&format!("{:>8}  {:>4}  {:>10}  {:>10}  {:>10}\n", p, sign, r.m, r.rho, r.iota));
    }
    Ok(Output {
        command: "rank",
        inputs: Value::Object(inputs),
        results: json!({ "records": records, "excluded_primes": params.excluded_primes().iter().map(u64::to_string).collect::<Vec<_>>() }),
        columns: vec!["p", "status", "sign", "m", "rho", "iota"],
        rows,
        human,
        exit: EXIT_OK,
    })
}

fn density_json(rep: &DensityReport) -> Value {
    json!({
        "d": rep.d.to_string(),
        "h": rep.h.to_string(),
        "d_inf_h": rep.d_inf_h.to_string(),
        "eta": rational(&rep.eta),
        "eta_decimal": decimal(&rep.eta),
        "delta": rational(&rep.delta),
        "delta_decimal": decimal(&rep.delta),
        "branch": rep.branch.name(),
        "condition": rep.branch.condition(),
    })
}

fn density(seq: Seq, d: u64) -> Result<Output, Error> {
    let mut inputs = seq_inputs(&seq);
    inputs.insert("d".into(), d.to_string().into());
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let rep = density::delta_u(&params, d)?;
    let human = format!(
        "delta_U({d}) = {}  (~ {})\nh = {}, (d^inf, h) = {}, eta = {}\nbranch: {} [{}]\n",
        rational(&rep.delta),
        decimal(&rep.delta),
        rep.h,
        rep.d_inf_h,
        rational(&rep.eta),
        rep.branch.name(),
        rep.branch.condition()
    );
    let row = vec![
        seq.a1.to_string(),
        seq.a2.to_string(),
        d.to_string(),
        rep.h.to_string(),
        rep.d_inf_h.to_string(),
        rational(&rep.eta),
        rational(&rep.delta),
        decimal(&rep.delta),
        rep.branch.name().into(),
        rep.branch.condition().into(),
    ];
    Ok(Output {
        command: "density",
        inputs: Value::Object(inputs),
        results: density_json(&rep),
        columns: vec!["a1", "a2", "d", "h", "d_inf_h", "eta", "delta", "delta_decimal", "branch", "condition"],
        rows: vec![row],
        human,
        exit: EXIT_OK,
    })
}

fn convergence_json(rows: &[ConvergenceRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "x": r.x.to_string(),
                    "count": r.count.to_string(),
                    "li_x": float(r.li_x),
                    "pi_x": r.pi_x.to_string(),
                    "ratio_li": float(r.ratio_li),
                    "ratio_pi": float(r.ratio_pi),
                    "delta_predicted": opt_rational(&r.delta_predicted),
                    "error": r.error.map_or(Value::Null, float),
                })
            })
            .collect(),
    )
}

fn convergence_rows(rows: &[ConvergenceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.x.to_string(),
                r.count.to_string(),
                format!("{:.6}", r.li_x),
                r.pi_x.to_string(),
                format!("{:.8}", r.ratio_li),
                format!("{:.8}", r.ratio_pi),
                r.delta_predicted.as_ref().map(rational).unwrap_or_default(),
                r.error.map(|e| format!("{e:.8}")).unwrap_or_default(),
            ]
        })
        .collect()
}

fn convergence_human(rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{:>16} {:>14} {:>12} {:>12} {:>12}\n", "x", "count", "count/Li", "count/pi", "error");
    for r in rows {
        s.push_str(&format!(
            "{:>16} {:>14} {:>12.8} {:>12.8} {:>12}\n",
            r.x,
            r.count,
            r.ratio_li,
            r.ratio_pi,
            r.error.map(|e| format!("{e:+.6}")).unwrap_or_else(|| "-".into())
        ));
    }
    s
}

fn census_results(rep: &CensusReport) -> Value {
    json!({
        "count": rep.count_r.to_string(),
        "pi_x": rep.pi_x.to_string(),
        "pi_all": rep.pi_all.to_string(),
        "excluded_primes": rep.excluded_primes.iter().map(u64::to_string).collect::<Vec<_>>(),
        "li_x": float(rep.li_x),
        "empirical_li": float(rep.empirical_li),
        "empirical_pi": float(rep.empirical_pi),
        "delta_predicted": opt_rational(&rep.delta_predicted),
        "delta_predicted_decimal": rep.delta_predicted.as_ref().map_or(Value::Null, |r| decimal(r).into()),
        "abs_error": rep.abs_error.map_or(Value::Null, float),
        "segments": rep.segments.to_string(),
        "audited": rep.audited.to_string(),
        "audit_failures": rep.audit_failures.to_string(),
        "convergence": convergence_json(&rep.rows),
    })
}

#[allow(clippy::too_many_arguments)]
fn census_cmd(
    seq: Seq,
    d: u64,
    x: u64,
    workers: usize,
    segment_size: u64,
    checkpoint: Option<PathBuf>,
    resume: bool,
    checkpoints_at: Vec<u64>,
    audit_every: u64,
    seed: u64,
    halt_after: Option<u64>,
) -> Result<Output, Error> {
    let mut inputs = seq_inputs(&seq);
    inputs.insert("d".into(), d.to_string().into());
    inputs.insert("x".into(), x.to_string().into());
    inputs.insert("segment_size".into(), segment_size.to_string().into());
    inputs.insert("checkpoints_at".into(), checkpoints_at.iter().map(u64::to_string).collect::<Vec<_>>().into());
    inputs.insert("audit_every".into(), audit_every.to_string().into());
    inputs.insert("seed".into(), seed.to_string().into());
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let with_table = !checkpoints_at.is_empty();
    let mut cfg = CensusConfig::new(params, d, x);
    cfg.workers = workers;
    cfg.segment_size = segment_size;
    cfg.checkpoint_path = checkpoint;
    cfg.checkpoints_at = checkpoints_at;
    cfg.audit_every = audit_every;
    cfg.seed = seed;
    let rep = match census::run_census(&cfg, resume, halt_after)? {
        CensusOutcome::Complete(rep) => rep,
        CensusOutcome::Halted { next_segment, total_segments } => {
            return Ok(Output {
                command: "census",
                inputs: Value::Object(inputs),
                results: json!({"halted": true, "next_segment": next_segment.to_string(), "total_segments": total_segments.to_string()}),
                columns: vec!["halted", "next_segment", "total_segments"],
                rows: vec![vec!["true".into(), next_segment.to_string(), total_segments.to_string()]],
                human: format!("halted after segment {next_segment} of {total_segments}\n"),
                exit: EXIT_OK,
            });
        }
    };
    let mut human = format!(
        "R_U({d}; {x}) = {}   universe primes = {}   excluded = {:?}\ncount/Li(x) = {:.8}   count/pi(x) = {:.8}\n",
        rep.count_r, rep.pi_x, rep.excluded_primes, rep.empirical_li, rep.empirical_pi
    );
    if let Some(p) = &rep.delta_predicted {
        human.push_str(&format!(
            "predicted delta = {} (~ {})   |error| = {:.6}\n",
            rational(p),
            decimal(p),
            rep.abs_error.unwrap_or(f64::NAN)
        ));
    }
    human.push_str(&format!("audited {} primes, {} failures\n", rep.audited, rep.audit_failures));
    let (columns, rows) = if with_table {
        human.push_str(&convergence_human(&rep.rows));
        (CONVERGENCE_COLUMNS.to_vec(), convergence_rows(&rep.rows))
    } else {
        (
            vec!["a1", "a2", "d", "x", "count", "pi_x", "li_x", "ratio_li", "ratio_pi", "delta_predicted", "abs_error"],
            vec![vec![
                seq.a1.to_string(),
                seq.a2.to_string(),
                d.to_string(),
                x.to_string(),
                rep.count_r.to_string(),
                rep.pi_x.to_string(),
                format!("{:.6}", rep.li_x),
                format!("{:.8}", rep.empirical_li),
                format!("{:.8}", rep.empirical_pi),
                rep.delta_predicted.as_ref().map(rational).unwrap_or_default(),
                rep.abs_error.map(|e| format!("{e:.8}")).unwrap_or_default(),
            ]],
        )
    };
    let exit = if rep.audit_failures > 0 { EXIT_MISMATCH } else { EXIT_OK };
    Ok(Output { command: "census", inputs: Value::Object(inputs), results: census_results(&rep), columns, rows, human, exit })
}

fn verdict_cells(v: &Verdict) -> (String, String, &'static str) {
    match v {
        Verdict::ExactMatch { value } => (value.to_string(), value.to_string(), "exact-match"),
        Verdict::Mismatch { left, right, .. } => (left.to_string(), right.to_string(), "mismatch"),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(seq: Seq, d: u64, x: u64, mode: VerifyMode, vs: Vec<u64>, vmax: Option<u64>, tolerance: f64) -> Result<Output, Error> {
    let mut inputs = seq_inputs(&seq);
    inputs.insert("d".into(), d.to_string().into());
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut human = String::new();
    let mut all_ok = true;
    match mode {
        VerifyMode::Identity | VerifyMode::Innersum => {
            inputs.insert("x".into(), x.to_string().into());
            let cases: Vec<Option<u64>> = if mode == VerifyMode::Identity {
                vec![None]
            } else {
                let vs = if vs.is_empty() { vec![1, d, d.saturating_mul(d)] } else { vs };
                inputs.insert("v".into(), vs.iter().map(u64::to_string).collect::<Vec<_>>().into());
                let mut uniq = vs;
                uniq.dedup();
                uniq.into_iter().map(Some).collect()
            };
            for v in cases {
                let verdict = match v {
                    None => census::verify_mobius_identity(&params, d, x)?,
                    Some(v) => census::verify_inner_sum(&params, d, v, x)?,
                };
                all_ok &= verdict.is_match();
                let (l, r, tag) = verdict_cells(&verdict);
                let vs = v.map(|v| v.to_string()).unwrap_or_default();
                human.push_str(&format!("d={d} v={} x={x}: left={l} right={r} {tag}\n", if vs.is_empty() { "*" } else { &vs }));
                records.push(json!({"d": d.to_string(), "v": v.map(|v| v.to_string()), "x": x.to_string(), "left": l, "right": r, "verdict": tag}));
                rows.push(vec![if v.is_some() { "innersum" } else { "identity" }.to_string(), d.to_string(), vs, x.to_string(), l, r, tag.into()]);
            }
            let exit = if all_ok { EXIT_OK } else { EXIT_MISMATCH };
            Ok(Output {
                command: "verify",
                inputs: Value::Object(inputs),
                results: json!({"mode": if mode == VerifyMode::Identity { "identity" } else { "innersum" }, "verdicts": records}),
                columns: vec!["mode", "d", "v", "x", "left", "right", "verdict"],
                rows,
                human,
                exit,
            })
        }
        VerifyMode::Series => {
            let vmax = vmax.unwrap_or_else(|| density::default_vmax(d));
            inputs.insert("vmax".into(), vmax.to_string().into());
            inputs.insert("tolerance".into(), float(tolerance));
            let res = density::series_residual(&params, d, vmax)?;
            let ok = density::to_f64(&res.abs()) < tolerance;
            let tag = if ok { "within-tolerance" } else { "mismatch" };
            human.push_str(&format!("d={d} vmax={vmax}: residual = {} (~ {}) {tag}\n", rational(&res), decimal(&res)));
            Ok(Output {
                command: "verify",
                inputs: Value::Object(inputs),
                results: json!({"mode": "series", "residual": rational(&res), "residual_decimal": decimal(&res), "verdict": tag}),
                columns: vec!["mode", "d", "vmax", "residual", "residual_decimal", "verdict"],
                rows: vec![vec!["series".into(), d.to_string(), vmax.to_string(), rational(&res), decimal(&res), tag.into()]],
                human,
                exit: if ok { EXIT_OK } else { EXIT_MISMATCH },
            })
        }
    }
}

fn report(seq: Seq, d: u64, checkpoints_at: Vec<u64>, workers: usize) -> Result<Output, Error> {
    let mut inputs = seq_inputs(&seq);
    inputs.insert("d".into(), d.to_string().into());
    inputs.insert("checkpoints_at".into(), checkpoints_at.iter().map(u64::to_string).collect::<Vec<_>>().into());
    let params = LucasParams::validate(seq.a1, seq.a2)?;
    let rows = census::convergence_report(&params, d, &checkpoints_at, workers)?;
    Ok(Output {
        command: "report",
        inputs: Value::Object(inputs),
        results: json!({"convergence": convergence_json(&rows)}),
        columns: CONVERGENCE_COLUMNS.to_vec(),
        rows: convergence_rows(&rows),
        human: convergence_human(&rows),
        exit: EXIT_OK,
    })
}

fn dispatch(command: Command) -> Result<Output, Error> {
    match command {
        Command::Analyze { seq } => analyze(seq),
        Command::Rank { seq, p, from, to } => rank(seq, p, from, to),
        Command::Density { seq, d } => density(seq, d),
        Command::Census { seq, d, x, workers, segment_size, checkpoint, resume, checkpoints_at, audit_every, seed, halt_after } => {
            census_cmd(seq, d, x, workers, segment_size, checkpoint, resume, checkpoints_at, audit_every, seed, halt_after)
        }
        Command::Verify { seq, d, x, mode, v, vmax, tolerance } => verify(seq, d, x, mode, v, vmax, tolerance),
        Command::Report { seq, d, checkpoints_at, workers } => report(seq, d, checkpoints_at, workers),
    }
}

fn render(out: &Output, format: Format, elapsed_ms: Option<u128>, w: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Human => w.write_all(out.human.as_bytes()),
        Format::Json => {
            let timing = match elapsed_ms {
                Some(ms) => json!({"included": true, "elapsed_ms": ms.to_string()}),
                None => json!({"included": false}),
            };
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": out.command,
                "inputs": out.inputs,
                "results": out.results,
                "timing": timing,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)
        }
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(&out.columns)?;
            for row in &out.rows {
                wr.write_record(row)?;
            }
            wr.flush()
        }
    }
}

fn render_error(e: &Error, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
    let code = exit_code(e);
    if format == Format::Json {
        let doc = json!({"schema_version": SCHEMA_VERSION, "error": e.to_string(), "exit_code": code});
        writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)
    } else {
        writeln!(w, "error: {e}")
    }
}

/// Parses `args` and runs the subcommand, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let started = Instant::now();
    let format = cli.format;
    let timing = cli.timing;
    match dispatch(cli.command) {
        Ok(o) => {
            let elapsed = timing.then(|| started.elapsed().as_millis());
            if let Err(e) = render(&o, format, elapsed, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INVALID;
            }
            o.exit
        }
        Err(e) => {
            if format == Format::Json {
                let _ = render_error(&e, format, out);
                let _ = writeln!(err, "error: {e}");
            } else {
                let _ = render_error(&e, format, err);
            }
            exit_code(&e)
        }
    }
}
