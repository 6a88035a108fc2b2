#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use conformable_core::calculus::{self, DerivativeMethod, DerivativeOptions, Identity};
use conformable_core::fde;
use conformable_core::structure;
use conformable_core::verify::{self, Suite};
use conformable_core::{
    AlphaOrder, Error, InitialCondition, RealFunction, SequentialFde, SolveOptions,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. }
        | Error::Domain(_)
        | Error::InvalidAlpha(_)
        | Error::Precondition(_)
        | Error::Invalid { .. } => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn alpha(a: f64) -> PyResult<AlphaOrder> {
    AlphaOrder::new(a).map_err(py_err)
}

/// Accepts an expression string, an `Expr`, or a Python callable of one float.
fn function(obj: &Bound<'_, PyAny>) -> PyResult<RealFunction> {
    if let Ok(s) = obj.extract::<String>() {
        return RealFunction::parse(&s).map_err(py_err);
    }
    if let Ok(e) = obj.downcast::<PyExpr>() {
        return Ok(RealFunction::from_expr(e.borrow().inner.clone()));
    }
    if obj.is_callable() {
        let callback: PyObject = obj.clone().unbind();
        return Ok(RealFunction::new(move |t| {
            Python::with_gil(|py| {
                callback
                    .call1(py, (t,))
                    .and_then(|v| v.extract::<f64>(py))
                    .map_err(|e| Error::Domain(format!("callback failed at t = {t}: {e}")))
            })
        }));
    }
    Err(PyValueError::new_err(
        "expected an expression string, Expr, or callable",
    ))
}

#[pyclass(name = "Expr", module = "conformable")]
#[derive(Clone)]
struct PyExpr {
    inner: conformable_core::Expr,
}

#[pymethods]
impl PyExpr {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        conformable_core::Expr::parse(source)
            .map(|inner| PyExpr { inner })
            .map_err(py_err)
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(py_err)
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.eval(t)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.inner)
    }
}

#[pyclass(name = "SequentialFde", module = "conformable")]
#[derive(Clone)]
struct PyFde {
    inner: SequentialFde,
}

#[pymethods]
impl PyFde {
    /// `p[i]` multiplies `T^i y`.
    #[new]
    #[pyo3(signature = (alpha, p, q = "0", domain = (0.01, 100.0)))]
    fn new(alpha: f64, p: Vec<String>, q: &str, domain: (f64, f64)) -> PyResult<Self> {
        let p: Vec<&str> = p.iter().map(String::as_str).collect();
        SequentialFde::parse(alpha, &p, q, domain)
            .map(|inner| PyFde { inner })
            .map_err(py_err)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha().value()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn is_homogeneous(&self) -> bool {
        self.inner.is_homogeneous()
    }

    fn __repr__(&self) -> String {
        let p: Vec<String> = self
            .inner
            .coefficients()
            .iter()
            .map(|e| e.to_string())
            .collect();
        format!(
            "SequentialFde(alpha={}, p={:?}, q='{}', domain={:?})",
            self.inner.alpha().value(),
            p,
            self.inner.forcing(),
            self.inner.domain()
        )
    }
}

#[pyclass(name = "Trajectory", module = "conformable")]
#[derive(Clone)]
struct PyTrajectory {
    inner: fde::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states().to_vec()
    }

    #[getter]
    fn t_range(&self) -> (f64, f64) {
        self.inner.t_range()
    }

    fn value_at(&self, t: f64) -> PyResult<f64> {
        self.inner.value_at(t).map_err(py_err)
    }

    fn state_at(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.state_at(t).map_err(py_err)
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.value_at(t)
    }

    fn resample(&self, count: usize) -> PyResult<Vec<(f64, Vec<f64>)>> {
        self.inner.resample(count).map_err(py_err)
    }

    #[staticmethod]
    fn linear_combination(terms: Vec<(f64, PyRef<'_, PyTrajectory>)>) -> PyResult<PyTrajectory> {
        let refs: Vec<(f64, &fde::Trajectory)> =
            terms.iter().map(|(c, t)| (*c, &t.inner)).collect();
        fde::Trajectory::linear_combination(&refs)
            .map(|inner| PyTrajectory { inner })
            .map_err(py_err)
    }
}

#[pyclass(name = "FundamentalSet", module = "conformable")]
struct PyFundamentalSet {
    inner: structure::FundamentalSet,
}

#[pymethods]
impl PyFundamentalSet {
    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    #[getter]
    fn trajectories(&self) -> Vec<PyTrajectory> {
        self.inner
            .trajectories()
            .iter()
            .map(|t| PyTrajectory { inner: t.clone() })
            .collect()
    }

    #[getter]
    fn w_at_t0(&self) -> f64 {
        self.inner.w_at_t0()
    }

    /// Determinant of the alpha-Wronskian at `t`.
    fn wronskian(&self, t: f64) -> PyResult<f64> {
        self.inner.wronskian_at(t).map(|w| w.det).map_err(py_err)
    }

    /// Rows of `(t, measured, abel_prediction, rel_error)`.
    fn wronskian_profile(&self, times: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let rows = self.inner.wronskian_profile(&times).map_err(py_err)?;
        Ok(rows
            .into_iter()
            .map(|r| (r.t, r.measured, r.predicted, r.rel_error))
            .collect())
    }

    fn fit(&self, t0: f64, gamma: Vec<f64>) -> PyResult<Vec<f64>> {
        structure::fit_coefficients(&self.inner, &InitialCondition::new(t0, gamma)).map_err(py_err)
    }

    fn general_solution(&self, c: Vec<f64>, t: f64) -> PyResult<f64> {
        structure::general_solution(&self.inner, &c, None, t).map_err(py_err)
    }
}

fn options(rtol: f64, atol: f64) -> SolveOptions {
    SolveOptions::with_tolerances(rtol, atol)
}

#[pyfunction]
#[pyo3(signature = (f, alpha, t, method = "limit", tol = 1e-6))]
fn t_alpha(f: &Bound<'_, PyAny>, alpha: f64, t: f64, method: &str, tol: f64) -> PyResult<f64> {
    let method = match method {
        "limit" => DerivativeMethod::Limit,
        "reduction" => DerivativeMethod::Reduction,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    calculus::t_alpha(
        &function(f)?,
        self::alpha(alpha)?,
        t,
        method,
        &DerivativeOptions { tol },
    )
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, alpha, n, t, tol = 1e-6))]
fn iterated_t_alpha(f: &Bound<'_, PyAny>, alpha: f64, n: usize, t: f64, tol: f64) -> PyResult<f64> {
    calculus::iterated_t_alpha(
        &function(f)?,
        self::alpha(alpha)?,
        n,
        t,
        &DerivativeOptions { tol },
    )
    .map_err(py_err)
}

#[pyfunction]
fn i_alpha(f: &Bound<'_, PyAny>, alpha: f64, a: f64, t: f64) -> PyResult<f64> {
    calculus::i_alpha(&function(f)?, self::alpha(alpha)?, a, t).map_err(py_err)
}

/// Returns `(pass, max_rel_residual)`.
#[pyfunction]
#[pyo3(signature = (identity, f, alpha, samples, g = None, tolerance = 1e-6))]
fn verify_identity(
    identity: &str,
    f: &Bound<'_, PyAny>,
    alpha: f64,
    samples: Vec<f64>,
    g: Option<&Bound<'_, PyAny>>,
    tolerance: f64,
) -> PyResult<(bool, f64)> {
    let identity = Identity::from_name(identity).map_err(py_err)?;
    let g = g.map(function).transpose()?;
    let report = calculus::verify_identity(
        identity,
        &function(f)?,
        g.as_ref(),
        self::alpha(alpha)?,
        &samples,
        tolerance,
    )
    .map_err(py_err)?;
    Ok((report.pass, report.max_rel_residual))
}

#[pyfunction]
#[pyo3(signature = (fde, t0, init, t_end, rtol = 1e-9, atol = 1e-12))]
fn solve_ivp(
    fde: &PyFde,
    t0: f64,
    init: Vec<f64>,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> PyResult<PyTrajectory> {
    fde::solve_ivp(
        &fde.inner,
        &InitialCondition::new(t0, init),
        t_end,
        &options(rtol, atol),
    )
    .map(|inner| PyTrajectory { inner })
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (fde, t0, init, span, rtol = 1e-9, atol = 1e-12))]
fn solve_span(
    fde: &PyFde,
    t0: f64,
    init: Vec<f64>,
    span: (f64, f64),
    rtol: f64,
    atol: f64,
) -> PyResult<PyTrajectory> {
    fde::solve_span(
        &fde.inner,
        &InitialCondition::new(t0, init),
        span,
        &options(rtol, atol),
    )
    .map(|inner| PyTrajectory { inner })
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (fde, t0, span, rtol = 1e-9, atol = 1e-12))]
fn build_fundamental_set(
    fde: &PyFde,
    t0: f64,
    span: (f64, f64),
    rtol: f64,
    atol: f64,
) -> PyResult<PyFundamentalSet> {
    structure::build_fundamental_set(&fde.inner, t0, span, &options(rtol, atol))
        .map(|inner| PyFundamentalSet { inner })
        .map_err(py_err)
}

#[pyfunction]
fn abel_predict(fde: &PyFde, w0: f64, t0: f64, t: f64) -> PyResult<f64> {
    structure::abel_predict(&fde.inner, w0, t0, t).map_err(py_err)
}

/// Returns `(independent, normalized_determinant)`.
#[pyfunction]
#[pyo3(signature = (trajectories, t, threshold = 1e-10))]
fn is_fundamental(
    trajectories: Vec<PyRef<'_, PyTrajectory>>,
    t: f64,
    threshold: f64,
) -> PyResult<(bool, f64)> {
    let trajs: Vec<fde::Trajectory> = trajectories.iter().map(|t| t.inner.clone()).collect();
    let (ok, sample) = structure::is_fundamental(&trajs, t, threshold).map_err(py_err)?;
    Ok((ok, sample.normalized_det()))
}

/// Returns `(solution, particular, fundamental_set, coefficients)`.
#[pyfunction]
#[pyo3(signature = (fde, t0, init, span, rtol = 1e-9, atol = 1e-12))]
fn solve_nonhomogeneous(
    fde: &PyFde,
    t0: f64,
    init: Vec<f64>,
    span: (f64, f64),
    rtol: f64,
    atol: f64,
) -> PyResult<(PyTrajectory, PyTrajectory, PyFundamentalSet, Vec<f64>)> {
    let out = structure::solve_nonhomogeneous(
        &fde.inner,
        &InitialCondition::new(t0, init),
        span,
        &options(rtol, atol),
    )
    .map_err(py_err)?;
    Ok((
        PyTrajectory {
            inner: out.solution,
        },
        PyTrajectory {
            inner: out.particular,
        },
        PyFundamentalSet {
            inner: out.fundamental,
        },
        out.coefficients,
    ))
}

/// Rows of `(name, max_residual, tolerance, pass)`.
#[pyfunction]
#[pyo3(signature = (suite = "all", seed = 42))]
fn run_verify(suite: &str, seed: u64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    Ok(verify::run(suite, seed, &SolveOptions::default())
        .into_iter()
        .map(|r| (r.name.to_string(), r.max_residual, r.tolerance, r.pass))
        .collect())
}

#[pymodule]
fn conformable(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PyFde>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyFundamentalSet>()?;
    m.add_function(wrap_pyfunction!(t_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(iterated_t_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(i_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identity, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ivp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_span, m)?)?;
    m.add_function(wrap_pyfunction!(build_fundamental_set, m)?)?;
    m.add_function(wrap_pyfunction!(abel_predict, m)?)?;
    m.add_function(wrap_pyfunction!(is_fundamental, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nonhomogeneous, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
