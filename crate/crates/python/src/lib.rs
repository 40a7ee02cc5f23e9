//! Python bindings: partitions, tau data, spectral curves, topological recursion and the
//! verification scenarios. Rationals cross the boundary as `"num/den"` strings.

use std::collections::BTreeMap;

use kpcohft::cli::{parse_scenario, parse_table_kind, table_config_text, verify_config_text};
use kpcohft::kpcheck::{kp_residual_t, pluecker_check, schur_expand, KpEquation};
use kpcohft::partitions::{self, Partition as CorePartition};
use kpcohft::rational::{fmt_q, parse_q};
use kpcohft::series::{HWindow, PCaps};
use kpcohft::spectral::{loop_equation_check_with, SpectralCurve as CoreCurve, TrEngine};
use kpcohft::tau::{build_tau, free_energy_plain, FamilyTag, TauData as CoreTau};
use kpcohft::Q;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(kpcohft, KpcohftError, PyException);

fn compute_err(e: impl std::fmt::Display) -> PyErr {
    KpcohftError::new_err(e.to_string())
}

fn rational(s: &str) -> PyResult<Q> {
    parse_q(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(compute_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Integer partition, stored with weakly decreasing parts.
#[pyclass(module = "kpcohft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Partition {
    inner: CorePartition,
}

#[pymethods]
impl Partition {
    #[new]
    fn new(parts: Vec<u32>) -> Self {
        Self { inner: CorePartition::new(parts) }
    }

    #[getter]
    fn parts(&self) -> Vec<u32> {
        self.inner.parts().to_vec()
    }

    #[getter]
    fn size(&self) -> u32 {
        self.inner.size()
    }

    fn conjugate(&self) -> Self {
        Self { inner: self.inner.conjugate() }
    }

    fn hook_lengths(&self) -> Vec<u32> {
        partitions::hook_lengths(&self.inner)
    }

    fn contents(&self) -> Vec<i64> {
        partitions::contents(&self.inner)
    }

    /// Symmetric-group character chi^self(mu) as a Python int.
    fn character(&self, py: Python<'_>, mu: &Partition) -> PyResult<Py<PyAny>> {
        let c = partitions::character(&self.inner, &mu.inner).map_err(compute_err)?;
        Ok(py.import("builtins")?.getattr("int")?.call1((c.to_string(),))?.unbind())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Partition) -> bool {
        self.inner == other.inner
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.inner.parts().hash(&mut h);
        h.finish()
    }

    fn __repr__(&self) -> String {
        format!("Partition({:?})", self.inner.parts())
    }
}

#[pyfunction]
fn partitions_of(n: u32) -> Vec<Partition> {
    partitions::enumerate_partitions(n).into_iter().map(|inner| Partition { inner }).collect()
}

fn coefficient_map(m: &BTreeMap<(u32, u32), Q>) -> BTreeMap<(u32, u32), String> {
    m.iter().map(|(k, v)| (*k, fmt_q(v))).collect()
}

/// Hypergeometric tau-function data (psi_hat, y_hat).
#[pyclass(module = "kpcohft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct TauData {
    inner: CoreTau,
}

#[pymethods]
impl TauData {
    /// `psi_hat[(k, m)]` multiplies `y^k hbar^{2m}`, `y_hat[(k, m)]` multiplies `z^k hbar^{2m}`.
    #[new]
    #[pyo3(signature = (psi_hat, y_hat, precision=None))]
    fn new(psi_hat: BTreeMap<(u32, u32), String>, y_hat: BTreeMap<(u32, u32), String>, precision: Option<u32>) -> PyResult<Self> {
        let conv = |m: BTreeMap<(u32, u32), String>| -> PyResult<BTreeMap<(u32, u32), Q>> {
            m.into_iter().map(|(k, v)| Ok((k, rational(&v)?))).collect()
        };
        let inner = CoreTau::new(conv(psi_hat)?, conv(y_hat)?, FamilyTag::Generic, precision).map_err(compute_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn naive_hodge() -> Self {
        Self { inner: CoreTau::naive_hodge() }
    }

    #[staticmethod]
    #[pyo3(signature = (w, beta, precision=24))]
    fn marino_vafa(w: &str, beta: &str, precision: u32) -> PyResult<Self> {
        let inner = CoreTau::marino_vafa(&rational(w)?, &rational(beta)?, precision).map_err(compute_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn psi_hat(&self) -> BTreeMap<(u32, u32), String> {
        coefficient_map(self.inner.psi_hat())
    }

    #[getter]
    fn y_hat(&self) -> BTreeMap<(u32, u32), String> {
        coefficient_map(self.inner.y_hat())
    }

    /// Schur coefficients of the tau-function as sorted `(parts, hbar_exponent, "num/den")` rows.
    #[pyo3(signature = (weight, hbar_hi=2))]
    fn schur_coefficients(&self, weight: u32, hbar_hi: i32) -> PyResult<Vec<(Vec<u32>, i32, String)>> {
        let z = build_tau(&self.inner, PCaps::new(weight, weight), HWindow::new(-(weight as i32), hbar_hi))
            .map_err(compute_err)?;
        let mut out = Vec::new();
        for (nu, c) in schur_expand(&z, weight).map_err(compute_err)? {
            for (e, v) in c.terms() {
                out.push((nu.parts().to_vec(), e, fmt_q(v)));
            }
        }
        Ok(out)
    }

    /// Plücker relations on the Schur coefficients and the first KP equation on log tau.
    fn kp_check(&self, py: Python<'_>, weight: u32) -> PyResult<Py<PyAny>> {
        let z = build_tau(&self.inner, PCaps::new(weight, weight), HWindow::new(-(weight as i32) - 2, weight as i32 + 2))
            .map_err(compute_err)?;
        let pl = pluecker_check(&z, weight).map_err(compute_err)?;
        let f = free_energy_plain(&self.inner, PCaps::new(weight, weight), HWindow::new(-1, 1)).map_err(compute_err)?;
        let kp = kp_residual_t(&f, KpEquation::First).map_err(compute_err)?;
        let v = serde_json::json!({"pass": pl.pass && kp.pass, "pluecker": pl.to_json(), "kp1_t": kp.to_json()});
        to_py(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("TauData(family={:?})", self.inner.family())
    }
}

/// Rational spectral curve on the projective line.
#[pyclass(module = "kpcohft", frozen, skip_from_py_object)]
#[derive(Clone)]
struct SpectralCurve {
    inner: CoreCurve,
}

#[pymethods]
impl SpectralCurve {
    /// `dx = dx_num/dx_den dz`, `dy = dy_num/dy_den dz`, polynomials in `z` as strings.
    #[new]
    fn new(dx_num: &str, dx_den: &str, dy_num: &str, dy_den: &str) -> PyResult<Self> {
        let inner = CoreCurve::parse((dx_num, dx_den), (dy_num, dy_den)).map_err(compute_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn airy() -> Self {
        Self { inner: CoreCurve::airy() }
    }

    #[staticmethod]
    fn naive_hodge() -> Self {
        Self { inner: CoreCurve::naive_hodge() }
    }

    #[staticmethod]
    fn triple_hodge(w: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreCurve::triple_hodge(&rational(w)?).map_err(compute_err)? })
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.to_json())
    }

    fn __repr__(&self) -> String {
        format!("SpectralCurve({})", self.inner.to_json())
    }
}

/// Topological recursion on a spectral curve, caching computed correlators.
#[pyclass(module = "kpcohft", unsendable)]
struct TopologicalRecursion {
    engine: TrEngine,
}

#[pymethods]
impl TopologicalRecursion {
    #[new]
    #[pyo3(signature = (curve, depth=16))]
    fn new(curve: &SpectralCurve, depth: usize) -> PyResult<Self> {
        Ok(Self { engine: TrEngine::new(&curve.inner, depth).map_err(compute_err)? })
    }

    fn omega(&mut self, py: Python<'_>, g: u32, n: u32) -> PyResult<Py<PyAny>> {
        let w = self.engine.omega(g, n).map_err(compute_err)?;
        to_py(py, &w.to_json())
    }

    fn loop_equations(&mut self, py: Python<'_>, g: u32, n: u32) -> PyResult<Py<PyAny>> {
        let w = self.engine.omega(g, n).map_err(compute_err)?;
        let r = loop_equation_check_with(&self.engine, &w).map_err(compute_err)?;
        to_py(py, &r.to_json())
    }
}

/// Runs a verification scenario; `config` is TOML text. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, config=""))]
fn verify(py: Python<'_>, scenario: &str, config: &str) -> PyResult<Py<PyAny>> {
    let s = parse_scenario(scenario).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = py.detach(|| verify_config_text(s, config)).map_err(compute_err)?;
    to_py(py, &report.to_json())
}

/// Builds a coefficient table; `config` is TOML text. Returns the table as a dict.
#[pyfunction]
#[pyo3(signature = (kind, config=""))]
fn table(py: Python<'_>, kind: &str, config: &str) -> PyResult<Py<PyAny>> {
    let k = parse_table_kind(kind).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let t = py.detach(|| table_config_text(k, config)).map_err(compute_err)?;
    to_py(py, &t.to_json())
}

#[pymodule]
fn kpcohft_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KpcohftError", m.py().get_type::<KpcohftError>())?;
    m.add_class::<Partition>()?;
    m.add_class::<TauData>()?;
    m.add_class::<SpectralCurve>()?;
    m.add_class::<TopologicalRecursion>()?;
    m.add_function(wrap_pyfunction!(partitions_of, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    Ok(())
}
