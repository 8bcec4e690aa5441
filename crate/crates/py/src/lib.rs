//! Python bindings: state metrics, protocol checks and the scenario runner.

use acqkd_core::harness::{self, parse_attack_family, parse_config};
use acqkd_core::linalg::CMatrix;
use acqkd_core::metrics;
use acqkd_core::protocols::{self, qkd, Bits, HashFamily};
use acqkd_core::qstate::{ClassicalDistribution, DensityOperator};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn density(rows: Vec<Vec<Complex64>>) -> PyResult<DensityOperator> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("density matrix must be square"));
    }
    let m = CMatrix::from_vec(n, n, rows.into_iter().flatten().collect());
    DensityOperator::new(m, &[n]).map_err(err)
}

fn distribution(p: Vec<f64>) -> PyResult<ClassicalDistribution> {
    ClassicalDistribution::new(p).map_err(err)
}

/// Trace distance ½‖ρ − σ‖₁ of two density matrices (nested lists).
#[pyfunction]
fn trace_distance(rho: Vec<Vec<Complex64>>, sigma: Vec<Vec<Complex64>>) -> PyResult<f64> {
    metrics::trace_distance(&density(rho)?, &density(sigma)?).map_err(err)
}

/// Optimal probability of guessing which of two equiprobable states was sent.
#[pyfunction]
fn guessing_probability(rho: Vec<Vec<Complex64>>, sigma: Vec<Vec<Complex64>>) -> PyResult<f64> {
    metrics::guessing_probability(&density(rho)?, &density(sigma)?).map_err(err)
}

#[pyfunction]
fn von_neumann_entropy(rho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    metrics::von_neumann_entropy(&density(rho)?).map_err(err)
}

#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    metrics::binary_entropy(p)
}

#[pyfunction]
fn total_variation(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    metrics::total_variation(&distribution(p)?, &distribution(q)?).map_err(err)
}

/// Maximal coupling of p and q: (joint[z][z̃], Pr[Z = Z̃]).
#[pyfunction]
fn maximal_coupling(p: Vec<f64>, q: Vec<f64>) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let c = metrics::maximal_coupling(&distribution(p)?, &distribution(q)?).map_err(err)?;
    let n = c.alphabet_size();
    let joint = (0..n)
        .map(|z| (0..n).map(|w| c.prob(z, w)).collect())
        .collect();
    Ok((joint, c.prob_equal()))
}

/// One-time pad on bit strings such as "0110".
#[pyfunction]
fn otp_encrypt(msg: &str, key: &str) -> PyResult<String> {
    let (x, k) = (
        Bits::parse(msg).map_err(err)?,
        Bits::parse(key).map_err(err)?,
    );
    Ok(protocols::otp_encrypt(x, k).map_err(err)?.to_string())
}

/// Worst real/ideal distance of the one-time pad over all `length`-bit messages.
#[pyfunction]
fn otp_advantage(py: Python<'_>, length: usize) -> PyResult<f64> {
    py.detach(|| protocols::otp_advantage(length)).map_err(err)
}

/// Tag of `msg` under key `key` for the affine family with `b`-bit blocks.
#[pyfunction]
fn auth_tag(b: u32, key: u64, msg: &str) -> PyResult<u64> {
    let fam = HashFamily::affine(b).map_err(err)?;
    let x = Bits::parse(msg).map_err(err)?;
    Ok(protocols::auth_tag(&fam, key, x).map_err(err)?.1)
}

/// Exhaustive strong-universality check: (max joint probability, bound, holds).
#[pyfunction]
fn verify_asu2(b: u32) -> PyResult<(f64, f64, bool)> {
    let fam = HashFamily::affine(b).map_err(err)?;
    let r = protocols::verify_asu2(&fam).map_err(err)?;
    Ok((r.max_joint, r.joint_bound, r.holds))
}

#[pyclass(name = "QkdParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyQkdParams {
    inner: protocols::QkdParams,
}

#[pymethods]
impl PyQkdParams {
    #[new]
    #[pyo3(signature = (n, t, q_tol, h_rows, out_len, pa_seed=None))]
    fn new(
        n: usize,
        t: usize,
        q_tol: f64,
        h_rows: usize,
        out_len: usize,
        pa_seed: Option<u64>,
    ) -> PyResult<Self> {
        let inner = protocols::QkdParams::new(
            n,
            t,
            q_tol,
            h_rows,
            out_len,
            pa_seed.unwrap_or(qkd::DEFAULT_PA_SEED),
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn t(&self) -> usize {
        self.inner.t
    }
    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }
    #[getter]
    fn q_tol(&self) -> f64 {
        self.inner.q_tol
    }
    #[getter]
    fn out_len(&self) -> usize {
        self.inner.out_len
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "QkdParams(n={}, t={}, q_tol={}, h_rows={}, out_len={})",
            p.n, p.t, p.q_tol, p.h_rows, p.out_len
        )
    }
}

#[pyclass(name = "QkdCase", frozen, get_all, skip_from_py_object)]
struct PyQkdCase {
    attack: String,
    p_abort: f64,
    eps_cor: f64,
    eps_sec: f64,
    advantage: f64,
    holds: bool,
}

#[pymethods]
impl PyQkdCase {
    fn __repr__(&self) -> String {
        format!(
            "QkdCase(attack={:?}, p_abort={:.6}, eps_cor={:.6}, eps_sec={:.6}, advantage={:.6})",
            self.attack, self.p_abort, self.eps_cor, self.eps_sec, self.advantage
        )
    }
}

/// Exact per-attack evaluation over an attack family spec such as
/// "intercept-resend:0.5,depolarize:0.2" or "standard:5" (identity included).
#[pyfunction]
fn qkd_security(py: Python<'_>, params: &PyQkdParams, family: &str) -> PyResult<Vec<PyQkdCase>> {
    let fam = parse_attack_family(family).map_err(err)?;
    let p = params.inner.clone();
    let report = py
        .detach(|| qkd::qkd_security_eval(&p, &fam))
        .map_err(err)?;
    Ok(report
        .cases
        .into_iter()
        .map(|c| PyQkdCase {
            holds: c.holds(),
            attack: c.attack,
            p_abort: c.p_abort,
            eps_cor: c.eps_cor,
            eps_sec: c.eps_sec,
            advantage: c.advantage,
        })
        .collect())
}

/// Locking demo: (I(K₂;Y) before reveal, I(K₁K₂;Y), I(K₂;Y′) after reveal).
#[pyfunction]
fn locking_demo(m: usize) -> PyResult<(f64, f64, f64)> {
    let r = protocols::locking_demo(m).map_err(err)?;
    Ok((r.pre_reveal, r.pre_reveal_full, r.post_reveal))
}

#[pyclass(name = "ReportRow", frozen, get_all, skip_from_py_object)]
struct PyReportRow {
    scenario: String,
    case: String,
    measured: f64,
    bound: f64,
    holds: bool,
    runtime_ms: u64,
}

#[pymethods]
impl PyReportRow {
    fn __repr__(&self) -> String {
        format!(
            "ReportRow({}, {}, measured={}, bound={}, holds={})",
            self.scenario, self.case, self.measured, self.bound, self.holds
        )
    }
}

fn rows_for(py: Python<'_>, config: &str) -> PyResult<Vec<harness::ReportRow>> {
    let cfg = parse_config(config).map_err(err)?;
    py.detach(|| harness::run_scenario(&cfg)).map_err(err)
}

/// Runs the scenario described by a `key = value` config text.
#[pyfunction]
fn run_scenario(py: Python<'_>, config: &str) -> PyResult<Vec<PyReportRow>> {
    Ok(rows_for(py, config)?
        .into_iter()
        .map(|r| PyReportRow {
            scenario: r.scenario,
            case: r.case,
            measured: r.measured,
            bound: r.bound,
            holds: r.holds,
            runtime_ms: r.runtime_ms,
        })
        .collect())
}

/// As `run_scenario`, returning the CSV text the CLI would write.
#[pyfunction]
fn run_scenario_csv(py: Python<'_>, config: &str) -> PyResult<String> {
    harness::csv_string(&rows_for(py, config)?).map_err(err)
}

#[pymodule]
fn acqkd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQkdParams>()?;
    m.add_class::<PyQkdCase>()?;
    m.add_class::<PyReportRow>()?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(guessing_probability, m)?)?;
    m.add_function(wrap_pyfunction!(von_neumann_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(otp_encrypt, m)?)?;
    m.add_function(wrap_pyfunction!(otp_advantage, m)?)?;
    m.add_function(wrap_pyfunction!(auth_tag, m)?)?;
    m.add_function(wrap_pyfunction!(verify_asu2, m)?)?;
    m.add_function(wrap_pyfunction!(qkd_security, m)?)?;
    m.add_function(wrap_pyfunction!(locking_demo, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_csv, m)?)?;
    Ok(())
}
