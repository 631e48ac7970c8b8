use std::sync::OnceLock;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use xytr_core::algebra::scalar::fmt_scalar;
use xytr_core::algebra::Scalar;
use xytr_core::io::{format_multirat, resolve_curve, CurveSpec};
use xytr_core::laplace::{self, IntersectionTable, LaplaceEngine};
use xytr_core::tr::{per_dx, TrEngine};
use xytr_core::xy::{Path, XyTransform};

create_exception!(xytr, XytrError, PyException);

fn err(e: xytr_core::Error) -> PyErr {
    XytrError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, s: &Scalar) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((fmt_scalar(s),))
}

fn lambert() -> &'static LaplaceEngine {
    static L: OnceLock<LaplaceEngine> = OnceLock::new();
    L.get_or_init(LaplaceEngine::lambert)
}

/// A genus-zero spectral curve together with its memoized correlators.
#[pyclass(module = "xytr")]
struct Curve {
    tr: TrEngine,
    xy: OnceLock<Result<XyTransform, String>>,
}

#[pymethods]
impl Curve {
    /// `Curve("lambert")`, `Curve("path/to/spec.json")`, or `Curve(x="z^2/2", y="z")`.
    #[new]
    #[pyo3(signature = (name = None, *, x = None, y = None, ramification = None, involution = None))]
    fn new(
        name: Option<String>,
        x: Option<String>,
        y: Option<String>,
        ramification: Option<Vec<String>>,
        involution: Option<String>,
    ) -> PyResult<Self> {
        let curve = match (x, y) {
            (Some(x), Some(y)) => CurveSpec { name: name.unwrap_or_else(|| "custom".into()), x, y, ramification, involution }
                .build()
                .map_err(err)?,
            (None, None) => resolve_curve(name.as_deref().ok_or_else(|| XytrError::new_err("give a name or both x and y"))?)
                .map_err(err)?,
            _ => return Err(XytrError::new_err("give both x and y")),
        };
        Ok(Curve { tr: TrEngine::new(curve), xy: OnceLock::new() })
    }

    #[getter]
    fn name(&self) -> String {
        self.tr.curve().name.clone()
    }

    #[getter]
    fn ramification_points<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.tr.curve().ramification_points().iter().map(|r| fraction(py, r)).collect()
    }

    /// W_{g,n} as canonical text; `dz=True` gives the density against dz_1...dz_n.
    #[pyo3(signature = (g, n, dz = false))]
    fn omega(&self, g: u32, n: usize, dz: bool) -> PyResult<String> {
        let d = self.tr.density(g, n).map_err(err)?;
        let f = if dz { d } else { per_dx(&d, self.tr.curve(), n).map_err(err)? };
        Ok(format_multirat(&f))
    }

    /// W_{g,n} from the x-y relation.
    fn omega_via_xy(&self, g: u32, n: usize) -> PyResult<String> {
        let xy = self
            .xy
            .get_or_init(|| XyTransform::new(self.tr.curve().clone()).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| XytrError::new_err(e.clone()))?;
        let order = 2 * g as i64 + n as i64 - 2;
        let series = xy.wn_via_xy(n, order, Path::General).map_err(err)?;
        Ok(format_multirat(&series.coeff(order).map_err(err)?))
    }

    fn xy_verify(&self, g: u32, n: usize) -> PyResult<bool> {
        Ok(self.omega(g, n, false)? == self.omega_via_xy(g, n)?)
    }

    fn free_energy<'py>(&self, py: Python<'py>, g: u32) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.tr.free_energy(g).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Curve({:?})", self.tr.curve().name)
    }
}

fn table_dict<'py>(py: Python<'py>, t: &IntersectionTable) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for ((g, idx), v) in &t.entries {
        d.set_item((*g, PyTuple::new(py, idx)?), fraction(py, v)?)?;
    }
    Ok(d)
}

/// {(g, (d_1, ..., d_n)): <tau_d1 ... tau_dn>_g} for 2g-2+n <= max_chi.
#[pyfunction]
#[pyo3(signature = (max_chi = 3))]
fn psi_table<'py>(py: Python<'py>, max_chi: i32) -> PyResult<Bound<'py, PyDict>> {
    let t = laplace::psi_table(&LaplaceEngine::airy(), max_chi).map_err(err)?;
    table_dict(py, &t)
}

/// <Lambda(1) / prod(1 - k_i psi_i)>_g.
#[pyfunction]
fn hodge<'py>(py: Python<'py>, g: u32, ks: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &laplace::hodge_value(lambert(), g, &ks).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (max_g = 1, max_degree = 4, max_n = 3))]
fn hodge_table<'py>(py: Python<'py>, max_g: u32, max_degree: u64, max_n: usize) -> PyResult<Bound<'py, PyDict>> {
    let t = laplace::hodge_table(lambert(), max_g, max_degree, max_n).map_err(err)?;
    table_dict(py, &t)
}

#[pyfunction]
fn hurwitz<'py>(py: Python<'py>, g: u32, mu: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &laplace::hurwitz_number(lambert(), g, &mu).map_err(err)?)
}

#[pyfunction]
fn brute_force_hurwitz<'py>(py: Python<'py>, g: u32, mu: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &laplace::brute_force_hurwitz(g, &mu).map_err(err)?)
}

#[pymodule]
fn xytr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("XytrError", m.py().get_type::<XytrError>())?;
    m.add_class::<Curve>()?;
    m.add_function(wrap_pyfunction!(psi_table, m)?)?;
    m.add_function(wrap_pyfunction!(hodge, m)?)?;
    m.add_function(wrap_pyfunction!(hodge_table, m)?)?;
    m.add_function(wrap_pyfunction!(hurwitz, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_hurwitz, m)?)?;
    Ok(())
}
