//! Python bindings. Heavy calls release the GIL.

use std::collections::HashMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use rayon::prelude::*;

use cubic_dist::charfn::CharFn as CoreCharFn;
use cubic_dist::density::{invert, invert_auto, DensityError, QuadParams};
use cubic_dist::empirics::{count_c, empirical_cdf, ks_distance, SampleCache};
use cubic_dist::lfunction::{CaseKind, EvalParams, Evaluator, LError, Smoothing};
use cubic_dist::randmodel::{ModelConfig, Sampler};
use cubic_dist::reproduce::{Pipeline, Profile};
use cubic_dist::{EisensteinInt as CoreInt, ModulusC, Splitting};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn l_err(e: LError) -> PyErr {
    match e {
        LError::NearZero(_) => PyArithmeticError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn density_err(e: DensityError) -> PyErr {
    match e {
        DensityError::NoDecay { .. } | DensityError::NotConverged { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn case_of(s: &str) -> PyResult<CaseKind> {
    s.parse().map_err(value_err)
}

fn check_sigma(sigma: f64) -> PyResult<()> {
    if sigma > 0.5 && sigma.is_finite() {
        Ok(())
    } else {
        Err(value_err(format!("sigma must exceed 1/2, got {sigma}")))
    }
}

/// a + b w in Z[w], w = e^{2 pi i / 3}.
#[pyclass(frozen, eq, hash, from_py_object, name = "EisensteinInt")]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct EisensteinInt(CoreInt);

#[pymethods]
impl EisensteinInt {
    #[new]
    fn new(a: i64, b: i64) -> Self {
        Self(CoreInt::new(a, b))
    }

    #[getter]
    fn a(&self) -> i64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> i64 {
        self.0.b
    }

    fn norm(&self) -> u64 {
        self.0.norm()
    }

    fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    fn is_primary(&self) -> bool {
        self.0.is_primary()
    }

    fn __complex__(&self) -> Complex64 {
        Complex64::new(self.0.a as f64 - 0.5 * self.0.b as f64, 0.75f64.sqrt() * self.0.b as f64)
    }

    fn __add__(&self, o: &Self) -> Self {
        Self(self.0 + o.0)
    }

    fn __sub__(&self, o: &Self) -> Self {
        Self(self.0 - o.0)
    }

    fn __mul__(&self, o: &Self) -> Self {
        Self(self.0 * o.0)
    }

    fn __neg__(&self) -> Self {
        Self(-self.0)
    }

    fn __repr__(&self) -> String {
        format!("EisensteinInt({}, {})", self.0.a, self.0.b)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// Cubic residue symbol (alpha / lam)_3 as an exponent k with value w^k,
/// or None when they share a factor.
#[pyfunction]
fn symbol(alpha: EisensteinInt, lam: EisensteinInt) -> PyResult<Option<u8>> {
    cubic_dist::symbol(alpha.0, lam.0).map(|v| v.exponent()).map_err(value_err)
}

/// Prime ideals with norm up to `max_norm` as (norm, generator, splitting).
#[pyfunction]
fn primes(py: Python<'_>, max_norm: u64) -> Vec<(u64, EisensteinInt, &'static str)> {
    py.detach(|| cubic_dist::enumerate_primes(max_norm))
        .into_iter()
        .map(|p| {
            let s = match p.splitting {
                Splitting::Ramified => "ramified",
                Splitting::Split => "split",
                Splitting::Inert => "inert",
            };
            (p.norm, EisensteinInt(p.generator), s)
        })
        .collect()
}

/// Square-free c = 1 mod 9, c != 1, with N(c) <= max_norm, sorted by norm.
#[pyfunction]
fn moduli(py: Python<'_>, max_norm: u64) -> Vec<EisensteinInt> {
    py.detach(|| cubic_dist::enumerate_c(max_norm))
        .into_iter()
        .map(|c| EisensteinInt(c.value))
        .collect()
}

fn params(batch: bool, cutoff: Option<u64>, smooth: Option<f64>) -> PyResult<EvalParams> {
    let mut p = if batch { EvalParams::batch() } else { EvalParams::default() };
    if let Some(c) = cutoff {
        p.prime_cutoff = c;
        p.series_cutoff = p.series_cutoff.max(c);
    }
    if let Some(x) = smooth {
        p.smoothing = Smoothing::Fixed(x);
    }
    p.validate().map_err(l_err)?;
    Ok(p)
}

/// log L_c(sigma) or L_c'/L_c(sigma) as (value, err_est).
#[pyfunction]
#[pyo3(signature = (c, sigma, case, cutoff=None, smooth=None))]
fn lvalue(py: Python<'_>, c: EisensteinInt, sigma: f64, case: &str, cutoff: Option<u64>, smooth: Option<f64>) -> PyResult<(f64, f64)> {
    check_sigma(sigma)?;
    let case = case_of(case)?;
    let m = ModulusC::new(c.0).map_err(value_err)?;
    let p = params(false, cutoff, smooth)?;
    let v = py.detach(|| Evaluator::new(sigma, p).and_then(|ev| ev.eval(&m, case))).map_err(l_err)?;
    Ok((v.value, v.err_est))
}

/// Values at every modulus with N(c) <= max_norm as (c, value, err_est);
/// value and err_est are None where |L_c| is numerically zero.
#[pyfunction]
#[pyo3(signature = (max_norm, sigma, case, cutoff=None))]
#[allow(clippy::type_complexity)]
fn lvalues(
    py: Python<'_>,
    max_norm: u64,
    sigma: f64,
    case: &str,
    cutoff: Option<u64>,
) -> PyResult<Vec<(EisensteinInt, Option<f64>, Option<f64>)>> {
    check_sigma(sigma)?;
    let case = case_of(case)?;
    let p = params(true, cutoff, None)?;
    let ev = Evaluator::new(sigma, p).map_err(l_err)?;
    let rows = py.detach(|| {
        let moduli = cubic_dist::enumerate_c(max_norm);
        let vals: Vec<_> = moduli.par_iter().map(|c| ev.eval(c, case)).collect();
        moduli.into_iter().zip(vals).collect::<Vec<_>>()
    });
    rows.into_iter()
        .map(|(c, v)| match v {
            Ok(v) => Ok((EisensteinInt(c.value), Some(v.value), Some(v.err_est))),
            Err(e) if e.is_exclusion() => Ok((EisensteinInt(c.value), None, None)),
            Err(e) => Err(l_err(e)),
        })
        .collect()
}

/// Characteristic function of the limiting distribution, truncated to
/// prime ideals of norm <= cutoff.
#[pyclass(frozen, name = "CharFn")]
struct CharFn(CoreCharFn);

#[pymethods]
impl CharFn {
    #[new]
    #[pyo3(signature = (sigma, case, cutoff=100_000))]
    fn new(sigma: f64, case: &str, cutoff: u64) -> PyResult<Self> {
        check_sigma(sigma)?;
        if cutoff < 7 {
            return Err(value_err("cutoff must be at least 7"));
        }
        Ok(Self(CoreCharFn::real(sigma, case_of(case)?, cutoff)))
    }

    fn __call__(&self, y: f64) -> Complex64 {
        self.0.value(y)
    }

    /// (value, tail_est)
    fn eval(&self, y: f64) -> (Complex64, f64) {
        let v = self.0.eval(y);
        (v.value, v.tail_est)
    }

    fn log_abs(&self, y: f64) -> f64 {
        self.0.log_abs(y)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }
}

/// Density and CDF on a grid, as a dict of lists. Without `z` the grid
/// is chosen automatically.
#[pyfunction]
#[pyo3(signature = (sigma, case, z=None, cutoff=100_000))]
fn density(py: Python<'_>, sigma: f64, case: &str, z: Option<Vec<f64>>, cutoff: u64) -> PyResult<HashMap<&'static str, Vec<f64>>> {
    check_sigma(sigma)?;
    let case = case_of(case)?;
    let q = QuadParams {
        prime_cutoff: cutoff,
        ..QuadParams::default()
    };
    let g = py
        .detach(|| match z {
            Some(z) => invert(sigma, case, &z, &q),
            None => invert_auto(sigma, case, &q),
        })
        .map_err(density_err)?;
    Ok(HashMap::from([("z", g.z_values), ("density", g.m_values), ("cdf", g.cdf_values)]))
}

/// KS distance between the family's values and the limiting CDF.
#[pyfunction]
#[pyo3(signature = (max_norm, sigma, case, cutoff=100_000, cache_dir=None))]
fn compare(
    py: Python<'_>,
    max_norm: u64,
    sigma: f64,
    case: &str,
    cutoff: u64,
    cache_dir: Option<std::path::PathBuf>,
) -> PyResult<HashMap<&'static str, f64>> {
    check_sigma(sigma)?;
    let case = case_of(case)?;
    let q = QuadParams {
        prime_cutoff: cutoff,
        ..QuadParams::default()
    };
    let cache = cache_dir.map(SampleCache::new);
    py.detach(|| {
        let set = empirical_cdf(max_norm, sigma, case, &EvalParams::batch(), cache.as_ref()).map_err(l_err)?;
        let g = invert_auto(sigma, case, &q).map_err(density_err)?;
        Ok(HashMap::from([
            ("n_samples", set.samples.len() as f64),
            ("n_excluded", set.n_excluded() as f64),
            ("ks", ks_distance(&set.cdf(), &g)),
            ("ks_weighted", ks_distance(&set.weighted_cdf(), &g)),
        ]))
    })
}

/// (count, weighted count, predicted slope) for N(c) <= y.
#[pyfunction]
fn count(py: Python<'_>, y: u64) -> (u64, f64, f64) {
    let r = py.detach(|| count_c(y));
    (r.count, r.weighted, r.predicted_slope)
}

/// Draws from the random Euler-product model; reproducible per seed.
#[pyfunction]
#[pyo3(signature = (sigma, case, samples, cutoff=100_000, seed=0))]
fn montecarlo(py: Python<'_>, sigma: f64, case: &str, samples: u64, cutoff: u64, seed: u64) -> PyResult<Vec<f64>> {
    let cfg = ModelConfig {
        sigma,
        case: case_of(case)?,
        prime_cutoff: cutoff,
        n_samples: samples,
        seed,
    };
    let s = Sampler::from_config(&cfg).map_err(value_err)?;
    Ok(py.detach(|| s.draws(samples)))
}

/// Runs one acceptance criterion; returns (passed, failures, metrics).
#[pyfunction]
#[pyo3(signature = (id, profile="quick", cache_dir=None))]
#[allow(clippy::type_complexity)]
fn criterion(
    py: Python<'_>,
    id: u32,
    profile: &str,
    cache_dir: Option<std::path::PathBuf>,
) -> PyResult<(bool, Vec<String>, HashMap<String, f64>)> {
    if !(1..=12).contains(&id) {
        return Err(value_err("criteria are numbered 1 to 12"));
    }
    let profile: Profile = profile.parse().map_err(value_err)?;
    let r = py.detach(|| Pipeline::new(profile, cache_dir.map(SampleCache::new)).run(id));
    Ok((r.passed, r.failures, r.metrics.into_iter().collect()))
}

#[pymodule]
fn cubic_dist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cubic_dist::reproduce::VERSION)?;
    m.add_class::<EisensteinInt>()?;
    m.add_class::<CharFn>()?;
    m.add_function(wrap_pyfunction!(symbol, m)?)?;
    m.add_function(wrap_pyfunction!(primes, m)?)?;
    m.add_function(wrap_pyfunction!(moduli, m)?)?;
    m.add_function(wrap_pyfunction!(lvalue, m)?)?;
    m.add_function(wrap_pyfunction!(lvalues, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(montecarlo, m)?)?;
    m.add_function(wrap_pyfunction!(criterion, m)?)?;
    Ok(())
}
