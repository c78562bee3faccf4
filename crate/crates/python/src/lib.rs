//! Python module `overlatt`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use overlatt::geometry2d as g2;
use overlatt::geometry3d as g3;
use overlatt::lattice::{DistortedLattice, NearestPointSearch};
use overlatt::measures::{LatticeMeasures, OracleBudget, OverlapMeasure};
use overlatt::oracle::{self, McEstimate};
use overlatt::quality::{self, QualityMode, QualityQuery, QualityResult};
use overlatt::verify::{self, Suite, VerifyConfig};

fn err(e: overlatt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for overlatt::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn measure_kind(s: &str) -> PyResult<OverlapMeasure> {
    s.parse().py_err()
}

/// Diagonally distorted integer lattice with basis `e_i + (δ−1)/n · 𝟙`.
#[pyclass(name = "Lattice", module = "overlatt", frozen)]
struct PyLattice {
    inner: DistortedLattice,
    search: NearestPointSearch,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(dim: usize, delta: f64) -> PyResult<Self> {
        let inner = DistortedLattice::new(dim, delta).py_err()?;
        let search = NearestPointSearch::new(&inner);
        Ok(PyLattice { inner, search })
    }

    /// Named lattice: integer, hexagonal, hexagonal-dual, fcc or bcc.
    #[staticmethod]
    #[pyo3(signature = (name, dim = 3))]
    fn named(name: &str, dim: usize) -> PyResult<Self> {
        let inner = DistortedLattice::named(name.parse().py_err()?, dim).py_err()?;
        let search = NearestPointSearch::new(&inner);
        Ok(PyLattice { inner, search })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn packing_radius(&self) -> f64 {
        self.inner.packing_radius()
    }

    #[getter]
    fn covering_radius(&self) -> f64 {
        self.inner.covering_radius()
    }

    #[getter]
    fn shortest_vector_norm(&self) -> f64 {
        self.inner.shortest_vector_norm()
    }

    fn basis(&self) -> Vec<Vec<f64>> {
        self.inner.basis()
    }

    fn point(&self, coeffs: Vec<i64>) -> PyResult<Vec<f64>> {
        if coeffs.len() != self.inner.dim() {
            return Err(err(overlatt::Error::DimensionMismatch {
                expected: self.inner.dim(),
                got: coeffs.len(),
            }));
        }
        Ok(self.inner.point(&coeffs))
    }

    /// `(coeffs, point, distance)` of the closest lattice point.
    fn nearest(&self, p: Vec<f64>) -> PyResult<(Vec<i64>, Vec<f64>, f64)> {
        let q = self.search.nearest(&p).py_err()?;
        Ok((q.coeffs, q.point, q.distance))
    }

    fn density(&self, r: f64) -> PyResult<f64> {
        overlatt::measures::density(&self.inner, r).py_err()
    }

    fn union(&self, r: f64) -> PyResult<f64> {
        overlatt::measures::union_fraction(&self.inner, r).py_err()
    }

    fn dist_overlap(&self, r: f64) -> PyResult<f64> {
        overlatt::measures::dist_overlap(&self.inner, r).py_err()
    }

    fn vol_overlap(&self, r: f64) -> PyResult<f64> {
        overlatt::measures::vol_overlap(&self.inner, r).py_err()
    }

    fn free_space(&self, r: f64) -> PyResult<f64> {
        overlatt::measures::free_space(&self.inner, r).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Lattice(dim={}, delta={})", self.inner.dim(), self.inner.delta())
    }
}

fn quality_dict<'py>(py: Python<'py>, q: &QualityResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("delta", q.delta)?;
    d.set_item("omega", q.omega)?;
    d.set_item("r", q.r)?;
    d.set_item("density", q.density)?;
    d.set_item("union", q.union)?;
    d.set_item("overlap", q.overlap)?;
    d.set_item("mode", q.mode.as_str())?;
    d.set_item("measure", q.measure)?;
    Ok(d)
}

fn estimate_dict<'py>(py: Python<'py>, e: &McEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", e.mean)?;
    d.set_item("std_error", e.std_error)?;
    d.set_item("samples", e.samples)?;
    d.set_item("seed", e.seed)?;
    Ok(d)
}

/// All measures at radius `r`; with `samples` the Monte Carlo union is attached.
#[pyfunction]
#[pyo3(signature = (dim, delta, r, samples = None, seed = 42))]
fn measure<'py>(
    py: Python<'py>,
    dim: usize,
    delta: f64,
    r: f64,
    samples: Option<u64>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let lat = DistortedLattice::new(dim, delta).py_err()?;
    let mut m = LatticeMeasures::new(&lat).py_err()?;
    if let Some(samples) = samples {
        m = m.with_oracle(OracleBudget { samples, seed });
    }
    let rep = py.detach(|| m.report(r)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("n", rep.n)?;
    d.set_item("delta", rep.delta)?;
    d.set_item("r", rep.r)?;
    d.set_item("density", rep.density)?;
    d.set_item("union", rep.union)?;
    d.set_item("dist_overlap", rep.dist_overlap)?;
    d.set_item("vol_overlap", rep.vol_overlap)?;
    d.set_item("free_space", rep.free_space)?;
    d.set_item("exact", rep.exact)?;
    match &rep.oracle {
        Some(e) => d.set_item("oracle", estimate_dict(py, e)?)?,
        None => d.set_item("oracle", py.None())?,
    }
    Ok(d)
}

#[pyfunction]
fn critical_radii_2d(delta: f64) -> PyResult<(f64, f64, f64)> {
    let c = g2::critical_radii_2d_scaled(delta).py_err()?;
    Ok((c.r1, c.r2, c.r3))
}

#[pyfunction]
fn critical_radii_3d(delta: f64) -> PyResult<[f64; 6]> {
    Ok(g3::critical_radii_3d(delta).py_err()?.as_array())
}

#[pyfunction]
fn dual_radii_3d(delta: f64) -> PyResult<(f64, f64)> {
    let d = g3::dual_radii_3d(delta).py_err()?;
    Ok((d.s1, d.s2))
}

#[pyfunction]
fn voronoi_ball_area(delta: f64, r: f64) -> PyResult<f64> {
    g2::voronoi_ball_area(delta, r).py_err()
}

#[pyfunction]
fn voronoi_ball_volume_3d(delta: f64, r: f64) -> PyResult<f64> {
    g3::voronoi_ball_volume_3d(delta, r).py_err()
}

#[pyfunction]
fn density_derivative_2d(delta: f64, omega: f64) -> PyResult<f64> {
    g2::density_derivative_2d(delta, omega).py_err()
}

#[pyfunction]
#[pyo3(signature = (dim, delta, r, samples = 1_000_000, seed = 42))]
fn mc_union<'py>(py: Python<'py>, dim: usize, delta: f64, r: f64, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let lat = DistortedLattice::new(dim, delta).py_err()?;
    let e = py.detach(|| oracle::mc_union(&lat, r, samples, seed)).py_err()?;
    estimate_dict(py, &e)
}

#[pyfunction]
#[pyo3(signature = (dim, delta, omega, measure = "dist"))]
fn qual_packing<'py>(py: Python<'py>, dim: usize, delta: f64, omega: f64, measure: &str) -> PyResult<Bound<'py, PyDict>> {
    let lat = DistortedLattice::new(dim, delta).py_err()?;
    let q = quality::qual_packing(&lat, measure_kind(measure)?, omega).py_err()?;
    quality_dict(py, &q)
}

#[pyfunction]
fn qual_covering<'py>(py: Python<'py>, dim: usize, delta: f64, omega: f64) -> PyResult<Bound<'py, PyDict>> {
    let lat = DistortedLattice::new(dim, delta).py_err()?;
    let q = quality::qual_covering(&lat, omega).py_err()?;
    quality_dict(py, &q)
}

/// Best δ, every tied optimum and the plateau, if any.
#[pyfunction]
#[pyo3(signature = (dim, omega, mode = "packing", measure = "dist", lo = 0.05, hi = 20.0))]
fn optimize_delta<'py>(
    py: Python<'py>,
    dim: usize,
    omega: f64,
    mode: &str,
    measure: &str,
    lo: f64,
    hi: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let q = match mode.parse::<QualityMode>().py_err()? {
        QualityMode::Packing => QualityQuery::packing(dim, measure_kind(measure)?, omega, lo, hi),
        QualityMode::Covering => QualityQuery::covering(dim, omega, lo, hi),
    };
    let o = py.detach(|| quality::optimize_delta(&q)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("best", quality_dict(py, &o.best)?)?;
    let ties = o.ties.iter().map(|t| quality_dict(py, t)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("ties", ties)?;
    d.set_item("plateau", o.plateau)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (dim = 3, delta_a = 0.5, delta_b = 2.0, lo = 0.0, hi = 0.5, grid = 51))]
fn crossover_omega(dim: usize, delta_a: f64, delta_b: f64, lo: f64, hi: f64, grid: usize) -> PyResult<(f64, f64, f64)> {
    let c = quality::crossover_omega(dim, delta_a, delta_b, (lo, hi), grid).py_err()?;
    Ok((c.omega, c.quality_a, c.quality_b))
}

/// Runs a verification suite; returns `(passed, failed cells)`.
#[pyfunction]
#[pyo3(signature = (suite = "theorems", samples = 1_000_000, seed = 42))]
fn run_verify(py: Python<'_>, suite: &str, samples: u64, seed: u64) -> PyResult<(bool, Vec<String>)> {
    let suite: Suite = suite.parse().py_err()?;
    let config = VerifyConfig {
        samples,
        seed,
        fault: None,
    };
    let report = py.detach(|| verify::run(suite, &config)).py_err()?;
    let failed = report.failed().map(|c| format!("{}: {}", c.name, c.cell)).collect();
    Ok((report.passed, failed))
}

#[pymodule]
#[pyo3(name = "overlatt")]
fn overlatt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(critical_radii_2d, m)?)?;
    m.add_function(wrap_pyfunction!(critical_radii_3d, m)?)?;
    m.add_function(wrap_pyfunction!(dual_radii_3d, m)?)?;
    m.add_function(wrap_pyfunction!(voronoi_ball_area, m)?)?;
    m.add_function(wrap_pyfunction!(voronoi_ball_volume_3d, m)?)?;
    m.add_function(wrap_pyfunction!(density_derivative_2d, m)?)?;
    m.add_function(wrap_pyfunction!(mc_union, m)?)?;
    m.add_function(wrap_pyfunction!(qual_packing, m)?)?;
    m.add_function(wrap_pyfunction!(qual_covering, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_delta, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_omega, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
