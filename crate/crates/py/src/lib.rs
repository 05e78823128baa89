//! Python bindings for `lucas-rank`.
//!
//! Rationals are returned as `fractions.Fraction`, counts as Python ints.

use ::lucas_rank::census::{self, CensusConfig, CensusOutcome, Verdict};
use ::lucas_rank::{density, lucas, quadfield, Error};
use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Checkpoint(_) | Error::DigestMismatch { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    let num: &BigInt = r.numer();
    let den: &BigInt = r.denom();
    py.import("fractions")?.getattr("Fraction")?.call1((num.clone(), den.clone()))
}

/// Rank record for one prime.
#[pyclass(name = "RankRecord", frozen, get_all)]
struct PyRankRecord {
    p: u64,
    sign: i8,
    m: u64,
    rho: u64,
    iota: u64,
}

#[pymethods]
impl PyRankRecord {
    fn __repr__(&self) -> String {
        format!("RankRecord(p={}, sign={}, m={}, rho={}, iota={})", self.p, self.sign, self.m, self.rho, self.iota)
    }
}

impl From<lucas::RankRecord> for PyRankRecord {
    fn from(r: lucas::RankRecord) -> Self {
        PyRankRecord { p: r.p, sign: r.sign, m: r.m, rho: r.rho, iota: r.iota }
    }
}

/// A validated Lucas sequence U(a1, a2). Raises ValueError for a square
/// discriminant, a torsion ratio of roots, or coefficients out of range.
#[pyclass(name = "LucasParams", frozen)]
struct PyLucasParams {
    inner: lucas::LucasParams,
}

fn verdict<'py>(py: Python<'py>, v: Verdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match v {
        Verdict::ExactMatch { value } => {
            d.set_item("match", true)?;
            d.set_item("left", value)?;
            d.set_item("right", value)?;
        }
        Verdict::Mismatch { left, right, detail } => {
            d.set_item("match", false)?;
            d.set_item("left", left)?;
            d.set_item("right", right)?;
            d.set_item("detail", detail)?;
        }
    }
    Ok(d)
}

#[pymethods]
impl PyLucasParams {
    #[new]
    fn new(a1: i64, a2: i64) -> PyResult<Self> {
        Ok(PyLucasParams { inner: lucas::LucasParams::validate(a1, a2).map_err(to_py)? })
    }

    #[getter]
    fn a1(&self) -> i64 {
        self.inner.a1()
    }

    #[getter]
    fn a2(&self) -> i64 {
        self.inner.a2()
    }

    #[getter]
    fn delta(&self) -> i128 {
        self.inner.delta()
    }

    #[getter]
    fn delta0(&self) -> i64 {
        self.inner.delta0()
    }

    #[getter]
    fn excluded_primes(&self) -> Vec<u64> {
        self.inner.excluded_primes().to_vec()
    }

    fn is_excluded(&self, p: u64) -> bool {
        self.inner.is_excluded(p)
    }

    /// (U_n mod p, V_n mod p).
    fn term_mod(&self, n: u64, p: u64) -> PyResult<(u64, u64)> {
        lucas::term_mod(&self.inner, n, p).map_err(to_py)
    }

    fn frobenius_sign(&self, p: u64) -> PyResult<i8> {
        lucas::frobenius_sign(&self.inner, p).map_err(to_py)
    }

    fn rank(&self, p: u64) -> PyResult<PyRankRecord> {
        lucas::rank(&self.inner, p).map(Into::into).map_err(to_py)
    }

    fn divides_rank(&self, d: u64, p: u64) -> PyResult<bool> {
        lucas::divides_rank(&self.inner, d, p).map_err(to_py)
    }

    fn divides_index(&self, d: u64, p: u64) -> PyResult<bool> {
        lucas::divides_index(&self.inner, d, p).map_err(to_py)
    }

    /// Largest h with gamma an h-th power in the quadratic field.
    fn h(&self) -> PyResult<u64> {
        density::h_of(&self.inner).map_err(to_py)
    }

    /// Exact density of primes with d | rank, with its ingredients.
    fn density<'py>(&self, py: Python<'py>, d: u64) -> PyResult<Bound<'py, PyDict>> {
        let rep = density::delta_u(&self.inner, d).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("d", rep.d)?;
        out.set_item("h", rep.h)?;
        out.set_item("d_inf_h", rep.d_inf_h)?;
        out.set_item("eta", fraction(py, &rep.eta)?)?;
        out.set_item("delta", fraction(py, &rep.delta)?)?;
        out.set_item("branch", rep.branch.name())?;
        Ok(out)
    }

    /// Density of primes with p = (D/p) mod n and d | index.
    fn density_und<'py>(&self, py: Python<'py>, n: u64, d: u64) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &density::delta_und(&self.inner, n, d).map_err(to_py)?)
    }

    /// Count primes p <= x in the universe with d | rank(p).
    #[pyo3(signature = (d, x, workers=1, segment_size=census::DEFAULT_SEGMENT_SIZE, checkpoints_at=Vec::new(), audit_every=census::DEFAULT_AUDIT_EVERY, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn census<'py>(
        &self,
        py: Python<'py>,
        d: u64,
        x: u64,
        workers: usize,
        segment_size: u64,
        checkpoints_at: Vec<u64>,
        audit_every: u64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = CensusConfig::new(self.inner.clone(), d, x);
        cfg.workers = workers;
        cfg.segment_size = segment_size;
        cfg.checkpoints_at = checkpoints_at;
        cfg.audit_every = audit_every;
        cfg.seed = seed;
        let rep = py.detach(|| census::run_census(&cfg, false, None)).map_err(to_py)?;
        let CensusOutcome::Complete(rep) = rep else {
            return Err(PyValueError::new_err("census halted"));
        };
        let out = PyDict::new(py);
        out.set_item("count", rep.count_r)?;
        out.set_item("pi_x", rep.pi_x)?;
        out.set_item("pi_all", rep.pi_all)?;
        out.set_item("li_x", rep.li_x)?;
        out.set_item("ratio_li", rep.empirical_li)?;
        out.set_item("ratio_pi", rep.empirical_pi)?;
        match &rep.delta_predicted {
            Some(r) => out.set_item("delta_predicted", fraction(py, r)?)?,
            None => out.set_item("delta_predicted", py.None())?,
        }
        out.set_item("audited", rep.audited)?;
        out.set_item("audit_failures", rep.audit_failures)?;
        let rows = rep
            .rows
            .iter()
            .map(|r| (r.x, r.count, r.pi_x, r.li_x, r.ratio_li, r.ratio_pi))
            .collect::<Vec<_>>();
        out.set_item("convergence", rows)?;
        Ok(out)
    }

    fn verify_mobius_identity<'py>(&self, py: Python<'py>, d: u64, x: u64) -> PyResult<Bound<'py, PyDict>> {
        let v = py.detach(|| census::verify_mobius_identity(&self.inner, d, x)).map_err(to_py)?;
        verdict(py, v)
    }

    fn verify_inner_sum<'py>(&self, py: Python<'py>, d: u64, v: u64, x: u64) -> PyResult<Bound<'py, PyDict>> {
        let r = py.detach(|| census::verify_inner_sum(&self.inner, d, v, x)).map_err(to_py)?;
        verdict(py, r)
    }

    #[pyo3(signature = (d, vmax=None))]
    fn series_residual<'py>(&self, py: Python<'py>, d: u64, vmax: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let vmax = vmax.unwrap_or_else(|| density::default_vmax(d));
        fraction(py, &density::series_residual(&self.inner, d, vmax).map_err(to_py)?)
    }

    fn __repr__(&self) -> String {
        format!("LucasParams(a1={}, a2={})", self.inner.a1(), self.inner.a2())
    }
}

/// h for the quadratic element (x + y sqrt(d0)) / z; returns (h, gamma0)
/// with gamma0 as its (x, y, z) triple.
#[pyfunction]
fn compute_h(x: BigInt, y: BigInt, z: BigInt, d0: i64) -> PyResult<(u64, (BigInt, BigInt, BigInt))> {
    let a = quadfield::QuadElem::new(x, y, z, d0).map_err(to_py)?;
    let r = quadfield::compute_h(&a).map_err(to_py)?;
    let g = r.gamma0;
    Ok((r.h, (g.x().clone(), g.y().clone(), g.z().clone())))
}

/// Primes in [lo, hi).
#[pyfunction]
fn primes_between(lo: u64, hi: u64) -> PyResult<Vec<u64>> {
    census::sieve_segment(lo, hi).map_err(to_py)
}

#[pymodule(name = "lucas_rank")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLucasParams>()?;
    m.add_class::<PyRankRecord>()?;
    m.add_function(wrap_pyfunction!(compute_h, m)?)?;
    m.add_function(wrap_pyfunction!(primes_between, m)?)?;
    Ok(())
}
