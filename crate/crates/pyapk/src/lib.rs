//! Python bindings for the aperiodic point-set toolkit.
//!
//! Exposes generation, stripe verification and search, eigenvalue
//! enumeration, equivariance reports, locator sets, and the certificate
//! round trip. Point sets are a thin class; reports and certificates cross
//! the boundary as plain dicts with the same shape as the CLI's JSON.

use apk_core::cps::{eigen_enumerate, find_small_eigenvalue, CutProjectScheme};
use apk_core::error::{Error, ExitClass};
use apk_core::exactnum::QuadReal;
use apk_core::generators::{self, Family, GeneratorConfig};
use apk_core::io;
use apk_core::patternspace::{axioms, default_anchors, local_match_dist, match_dist_detail};
use apk_core::patternspace::{PointSet, Vecd};
use apk_core::spectra::{equivariance_modulus, Character};
use apk_core::stripe::{
    eigen_from_stripe, locator_set, stripe_search, stripe_verify, CharacterSource, StripeSpec,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde_json::Value;

fn to_py_err(e: Error) -> PyErr {
    let msg = format!("[{}] {e}", e.kind());
    match e.exit_class() {
        ExitClass::Usage => PyValueError::new_err(msg),
        ExitClass::WindowOrEnumeration => PyRuntimeError::new_err(msg),
    }
}

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py).unwrap().into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py).unwrap().into_any().unbind()
            } else {
                PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any().unbind()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, value_to_py(py, val)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn py_to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(b) = obj.cast::<PyBool>() {
        return Ok(Value::Bool(b.is_true()));
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Value::from(i));
    }
    if let Ok(f) = obj.extract::<f64>() {
        return Ok(Value::from(f));
    }
    if let Ok(s) = obj.extract::<String>() {
        return Ok(Value::String(s));
    }
    if let Ok(d) = obj.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (k, v) in d.iter() {
            map.insert(k.extract::<String>()?, py_to_value(&v)?);
        }
        return Ok(Value::Object(map));
    }
    if let Ok(items) = obj.try_iter() {
        let mut arr = Vec::new();
        for item in items {
            arr.push(py_to_value(&item?)?);
        }
        return Ok(Value::Array(arr));
    }
    Err(PyValueError::new_err(format!("cannot convert {} to JSON", obj.get_type())))
}

/// A point set over a rectangular window, optionally carrying the
/// cut-and-project scheme it was generated from.
#[pyclass(name = "PointSet")]
struct PyPointSet {
    inner: PointSet,
    scheme: Option<CutProjectScheme>,
}

impl PyPointSet {
    fn anchor_from(&self, x0: Vec<f64>) -> PyResult<Vecd> {
        Vecd::from_f64s(&x0, self.inner.is_exact()).map_err(to_py_err)
    }
}

#[pymethods]
impl PyPointSet {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PointSet(dim={}, len={}, arith={})",
            self.inner.dim(),
            self.inner.len(),
            if self.inner.is_exact() { "exact" } else { "float" }
        )
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }

    /// Coordinates as a list of [x, ...] rows (float approximations).
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.approx_point(i).to_vec()).collect()
    }

    /// Window bounds as (lo, hi).
    fn region(&self) -> (Vec<f64>, Vec<f64>) {
        (self.inner.region().lo.clone(), self.inner.region().hi.clone())
    }

    fn min_gap(&self) -> Option<f64> {
        self.inner.min_gap()
    }

    fn covering_radius(&self) -> Option<f64> {
        self.inner.covering_radius(0.0)
    }

    /// Serialize to the same JSON document the CLI reads and writes.
    fn to_json(&self) -> String {
        let v = io::pointset_to_json(&self.inner, self.scheme.as_ref());
        serde_json::to_string_pretty(&v).expect("serializable")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("bad JSON: {e}")))?;
        let (inner, scheme) = io::pointset_from_json(&v).map_err(to_py_err)?;
        Ok(PyPointSet { inner, scheme })
    }
}

/// Generate one of the built-in families.
///
/// Region is `lo`/`hi` per axis; the substitution family carries its own
/// natural region and may omit them.
#[pyfunction]
#[pyo3(signature = (family, lo=None, hi=None, seed=None, basis=None, perturbation=None,
                    iterations=None, seed_tile=None, window=None, r=None, big_r=None))]
#[allow(clippy::too_many_arguments)]
fn generate(
    family: &str,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    seed: Option<u64>,
    basis: Option<Vec<Vec<f64>>>,
    perturbation: Option<f64>,
    iterations: Option<u32>,
    seed_tile: Option<char>,
    window: Option<(f64, f64)>,
    r: Option<f64>,
    big_r: Option<f64>,
) -> PyResult<PyPointSet> {
    let fam: Family = serde_json::from_value(Value::String(family.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown family {family}")))?;
    let cfg = GeneratorConfig {
        family: fam,
        lo,
        hi,
        seed,
        basis,
        perturbation,
        iterations,
        seed_tile,
        window,
        r,
        big_r,
    };
    let inner = generators::generate(&cfg).map_err(to_py_err)?;
    let scheme = match fam {
        Family::Lattice => Some(apk_core::cps::lattice_scheme(inner.dim())),
        Family::FibonacciCps | Family::FibonacciSubstitution => {
            Some(apk_core::cps::fibonacci_scheme())
        }
        Family::SilverMean => Some(apk_core::cps::silver_scheme()),
        Family::AmmannBeenker => Some(apk_core::cps::ammann_beenker_scheme()),
        Family::PoissonControl => None,
    };
    Ok(PyPointSet { inner, scheme })
}

fn span_of(set: &PointSet) -> f64 {
    set.region().span().into_iter().fold(0.0f64, f64::max)
}

/// Check the band structure (a, L1, L2) at patch radius R; returns the
/// certificate as a dict. `holds` is true iff no violations were found.
#[pyfunction]
#[pyo3(signature = (set, a, l1, l2, r, off_anchors=1000))]
fn verify_stripe(
    py: Python<'_>,
    set: &PyPointSet,
    a: Vec<f64>,
    l1: f64,
    l2: f64,
    r: f64,
    off_anchors: usize,
) -> PyResult<Py<PyAny>> {
    let spec = StripeSpec::from_direction(a, l1, l2, r).map_err(to_py_err)?;
    let anchors = default_anchors(&set.inner, spec.r, off_anchors);
    let cert = stripe_verify(&set.inner, &spec, &anchors, span_of(&set.inner))
        .map_err(to_py_err)?;
    let mut v = io::certificate_to_json(&cert).map_err(to_py_err)?;
    if let Value::Object(map) = &mut v {
        map.insert("holds".into(), Value::Bool(cert.holds()));
    }
    value_to_py(py, &v)
}

/// Search the dual lattice for a certified band structure near the target
/// period and half-width. The set must carry a scheme.
#[pyfunction]
#[pyo3(signature = (set, target_period, target_halfwidth, eps=0.05, r_grid=None, off_anchors=1000))]
fn search_stripe(
    py: Python<'_>,
    set: &PyPointSet,
    target_period: f64,
    target_halfwidth: f64,
    eps: f64,
    r_grid: Option<Vec<f64>>,
    off_anchors: usize,
) -> PyResult<Py<PyAny>> {
    let scheme = set
        .scheme
        .as_ref()
        .ok_or_else(|| PyValueError::new_err("point set carries no scheme"))?;
    let grid =
        r_grid.unwrap_or_else(|| vec![50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0]);
    let anchors = default_anchors(&set.inner, 2.0, off_anchors);
    let cert = stripe_search(
        &set.inner,
        CharacterSource::Scheme(scheme),
        target_period,
        target_halfwidth,
        eps,
        &grid,
        &anchors,
    )
    .map_err(to_py_err)?;
    let mut v = io::certificate_to_json(&cert).map_err(to_py_err)?;
    if let Value::Object(map) = &mut v {
        map.insert("holds".into(), Value::Bool(cert.holds()));
    }
    value_to_py(py, &v)
}

/// Enumerate dual-lattice characters up to the given norm caps.
#[pyfunction]
#[pyo3(signature = (set, phys_max=40.0, internal_max=40.0, limit=100))]
fn eigenvalues(
    py: Python<'_>,
    set: &PyPointSet,
    phys_max: f64,
    internal_max: f64,
    limit: usize,
) -> PyResult<Py<PyAny>> {
    let scheme = set
        .scheme
        .as_ref()
        .ok_or_else(|| PyValueError::new_err("point set carries no scheme"))?;
    let all = eigen_enumerate(scheme, phys_max, internal_max).map_err(to_py_err)?;
    let listed: Vec<&Character> = all.iter().take(limit).collect();
    let v = serde_json::json!({ "total": all.len(), "characters": listed });
    value_to_py(py, &v)
}

/// Pick a dual-lattice character whose period is within eps of the target.
#[pyfunction]
#[pyo3(signature = (set, target_period, eps=0.05))]
fn find_eigenvalue(
    py: Python<'_>,
    set: &PyPointSet,
    target_period: f64,
    eps: f64,
) -> PyResult<Py<PyAny>> {
    let scheme = set
        .scheme
        .as_ref()
        .ok_or_else(|| PyValueError::new_err("point set carries no scheme"))?;
    let chr = find_small_eigenvalue(scheme, target_period, eps).map_err(to_py_err)?;
    let v = serde_json::json!({ "character": chr, "period": 1.0 / chr.norm() });
    value_to_py(py, &v)
}

/// Empirical equivariance modulus of a frequency over a radius grid.
#[pyfunction]
#[pyo3(signature = (set, a, r_grid, off_anchors=200))]
fn equivariance(
    py: Python<'_>,
    set: &PyPointSet,
    a: Vec<f64>,
    r_grid: Vec<f64>,
    off_anchors: usize,
) -> PyResult<Py<PyAny>> {
    let chr = Character::from_f64(a);
    let min_r = r_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let anchors = default_anchors(&set.inner, min_r, off_anchors);
    let rep = equivariance_modulus(&set.inner, &chr, &r_grid, &anchors, span_of(&set.inner))
        .map_err(to_py_err)?;
    let v = serde_json::json!({ "character": chr, "report": rep });
    value_to_py(py, &v)
}

/// Positions whose R0-patch repeats the one at x0, with separation and
/// density summary.
#[pyfunction]
fn locator(py: Python<'_>, set: &PyPointSet, x0: Vec<f64>, r0: f64) -> PyResult<Py<PyAny>> {
    let anchor = set.anchor_from(x0)?;
    let loc = locator_set(&set.inner, &anchor, r0, set.inner.region()).map_err(to_py_err)?;
    let v = serde_json::json!({
        "points": io::pointset_to_json(&loc.points, None),
        "r_e": loc.r_e,
        "covering": loc.covering,
        "relatively_dense": loc.relatively_dense,
    });
    value_to_py(py, &v)
}

/// Recover the character behind a stripe certificate (as returned by
/// search_stripe / verify_stripe) and re-measure it on the set.
#[pyfunction]
#[pyo3(signature = (set, cert, eps_grid=None))]
fn recover_character(
    py: Python<'_>,
    set: &PyPointSet,
    cert: &Bound<'_, PyAny>,
    eps_grid: Option<Vec<f64>>,
) -> PyResult<Py<PyAny>> {
    let cert_value = py_to_value(cert)?;
    let cert = io::certificate_from_json(&cert_value).map_err(to_py_err)?;
    let grid = eps_grid.unwrap_or_default();
    let rec = eigen_from_stripe(&set.inner, &cert, &grid).map_err(to_py_err)?;
    let v = serde_json::json!({
        "character": rec.character,
        "band_max": rec.band_max,
        "locator": {
            "points": rec.locator.points.len(),
            "r_e": rec.locator.r_e,
            "covering": rec.locator.covering,
            "relatively_dense": rec.locator.relatively_dense,
        },
        "on_d": rec.on_d,
        "on_e": rec.on_e,
        "level_sets": rec.level_sets,
    });
    value_to_py(py, &v)
}

/// Local matching distance between two point sets over a radius grid.
#[pyfunction]
#[pyo3(signature = (set1, set2, r_grid=None))]
fn match_distance(
    py: Python<'_>,
    set1: &PyPointSet,
    set2: &PyPointSet,
    r_grid: Option<Vec<f64>>,
) -> PyResult<Py<PyAny>> {
    let grid = r_grid.unwrap_or_else(|| vec![0.1, 0.2, 0.5]);
    let mut d1 = set1.inner.clone();
    let mut d2 = set2.inner.clone();
    // Sets from different quadratic fields cannot share exact arithmetic;
    // compare them in float mode instead.
    let mixed = match (d1.disc(), d2.disc()) {
        (Some(a), Some(b)) => a != b && a != 0 && b != 0,
        _ => false,
    };
    if mixed {
        d1 = to_float_mode(&d1)?;
        d2 = to_float_mode(&d2)?;
    }
    let detail = match_dist_detail(&d1, &d2).map_err(to_py_err)?;
    let resolved = local_match_dist(&d1, &d2, &grid).map_err(to_py_err)?;
    let v = serde_json::json!({ "detail": detail, "resolved": resolved });
    value_to_py(py, &v)
}

fn to_float_mode(set: &PointSet) -> PyResult<PointSet> {
    let pts = (0..set.len()).map(|i| set.approx_point(i).to_vec()).collect();
    PointSet::float_mode(1e-9, pts, set.region().clone()).map_err(to_py_err)
}

/// Randomized pattern-space axiom suite across all four implementations.
#[pyfunction]
#[pyo3(signature = (cases=1000, seed=2718281828))]
fn run_axioms(py: Python<'_>, cases: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let report = axioms::run_axiom_suite(cases, seed).map_err(to_py_err)?;
    let v = serde_json::to_value(&report)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

/// Rank of the space spanned by small integer combinations of the
/// generators, minimized over the radius grid.
#[pyfunction]
fn vspace_rank(
    generators: Vec<Vec<f64>>,
    r_grid: Vec<f64>,
    coeff_bound: i64,
) -> PyResult<usize> {
    let gens: Vec<Vec<QuadReal>> = generators
        .iter()
        .map(|g| g.iter().map(|&c| QuadReal::from_f64_exact(c)).collect())
        .collect::<Result<_, _>>()
        .map_err(to_py_err)?;
    apk_core::spectra::vspace_rank(&gens, &r_grid, coeff_bound).map_err(to_py_err)
}

#[pymodule]
fn apk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPointSet>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_stripe, m)?)?;
    m.add_function(wrap_pyfunction!(search_stripe, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(find_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(equivariance, m)?)?;
    m.add_function(wrap_pyfunction!(locator, m)?)?;
    m.add_function(wrap_pyfunction!(recover_character, m)?)?;
    m.add_function(wrap_pyfunction!(match_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_axioms, m)?)?;
    m.add_function(wrap_pyfunction!(vspace_rank, m)?)?;
    Ok(())
}
