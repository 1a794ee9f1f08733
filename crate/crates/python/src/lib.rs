//! Python bindings. Rates are in bits per channel use, as on the command line.

use std::f64::consts::LN_2;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spherebound::channels::{BecChannel, Channel, ChannelFamily, MPskAwgnChannel, SymmetricChannel};
use spherebound::compare::{self, BoundKind, BoundValue, EvalOptions, MinLenQuery};
use spherebound::sp59::{self, ConeMode, Sp59Params};
use spherebound::sp67::{self, BoundOutcome, CodeParams, VfConstant};
use spherebound::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn code(n: u64, rate_bits: f64, list_size: u64) -> PyResult<CodeParams> {
    CodeParams::from_bits(n, rate_bits)
        .map(|c| CodeParams { list_size, ..c })
        .and_then(|c| c.validate().map(|_| c))
        .map_err(py_err)
}

fn cone(name: &str) -> PyResult<ConeMode> {
    match name {
        "theta1" => Ok(ConeMode::ExactTheta1),
        "theta-star" => Ok(ConeMode::ShannonThetaStar),
        o => Err(PyValueError::new_err(format!("unknown cone '{o}' (expected theta1, theta-star)"))),
    }
}

fn options(list_size: u64, vf_original: bool, cone_name: &str) -> PyResult<EvalOptions> {
    Ok(EvalOptions {
        vf_constant: if vf_original { VfConstant::Original } else { VfConstant::Corrected },
        cone: cone(cone_name)?,
        list_size,
        ..EvalOptions::default()
    })
}

fn family(name: &str) -> PyResult<ChannelFamily> {
    ChannelFamily::parse(name).map_err(py_err)
}

fn kind(name: &str) -> PyResult<BoundKind> {
    BoundKind::parse(name).map_err(py_err)
}

/// A symmetric memoryless channel: the binary erasure channel or M-PSK over AWGN.
#[pyclass(name = "Channel", module = "spherebound", frozen)]
struct PyChannel {
    inner: Channel,
}

#[pymethods]
impl PyChannel {
    #[staticmethod]
    fn bec(p: f64) -> PyResult<Self> {
        Ok(PyChannel { inner: Channel::Bec(BecChannel::new(p).map_err(py_err)?) })
    }

    /// M-PSK with noise standard deviation `sigma` per real dimension and unit symbol energy.
    #[staticmethod]
    fn mpsk(m: usize, sigma: f64) -> PyResult<Self> {
        Ok(PyChannel { inner: Channel::MPsk(MPskAwgnChannel::new(m, sigma).map_err(py_err)?) })
    }

    #[staticmethod]
    fn mpsk_ebn0_db(m: usize, ebn0_db: f64, rate_bits: f64) -> PyResult<Self> {
        let ch = MPskAwgnChannel::from_ebn0_db(m, ebn0_db, rate_bits).map_err(py_err)?;
        Ok(PyChannel { inner: Channel::MPsk(ch) })
    }

    /// (μ₀, μ₀′, μ₀″) at tilting parameter s.
    fn mu0_triplet(&self, s: f64) -> PyResult<(f64, f64, f64)> {
        let t = self.inner.mu0_triplet(s).map_err(py_err)?;
        Ok((t.mu0, t.mu0_prime, t.mu0_double_prime))
    }

    fn e0(&self, rho: f64) -> PyResult<f64> {
        self.inner.e0(rho).map_err(py_err)
    }

    /// Mutual information with uniform input, in nats.
    fn capacity(&self) -> PyResult<f64> {
        self.inner.capacity().map_err(py_err)
    }

    #[getter]
    fn input_size(&self) -> usize {
        self.inner.input_size()
    }

    fn __repr__(&self) -> String {
        format!("Channel({})", self.inner.describe())
    }
}

fn outcome<'py, T>(
    py: Python<'py>,
    o: BoundOutcome<T>,
    fill: impl FnOnce(&Bound<'py, PyDict>, &T) -> PyResult<()>,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    match o {
        BoundOutcome::Trivial => Ok(None),
        BoundOutcome::Bound(b) => {
            let d = PyDict::new(py);
            fill(&d, &b)?;
            Ok(Some(d))
        }
    }
}

/// ISP lower bound; a dict with `ln_pe` and optimizer diagnostics, or None when trivial.
#[pyfunction]
#[pyo3(signature = (channel, n, rate_bits, list_size = 1))]
fn isp_bound<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    n: u64,
    rate_bits: f64,
    list_size: u64,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let r = sp67::isp_bound(&channel.inner, &code(n, rate_bits, list_size)?).map_err(py_err)?;
    outcome(py, r, |d, b| {
        d.set_item("ln_pe", b.ln_pe_lower)?;
        d.set_item("x_opt", b.x_opt)?;
        d.set_item("s_opt", b.s_opt)?;
        d.set_item("rho_opt", b.rho_opt)?;
        d.set_item("exponent", b.exponent)?;
        d.set_item("o1", b.o1)?;
        d.set_item("o2", b.o2)
    })
}

#[pyfunction]
#[pyo3(signature = (channel, n, rate_bits, list_size = 1, original = false))]
fn vf_bound<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    n: u64,
    rate_bits: f64,
    list_size: u64,
    original: bool,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let c = if original { VfConstant::Original } else { VfConstant::Corrected };
    let k = channel.inner.input_size();
    let r = sp67::vf_bound(&channel.inner, &code(n, rate_bits, list_size)?, k, c).map_err(py_err)?;
    outcome(py, r, |d, b| {
        d.set_item("ln_pe", b.ln_pe_lower)?;
        d.set_item("x_opt", b.x_opt)?;
        d.set_item("rho_opt", b.rho_opt)?;
        d.set_item("exponent", b.exponent)?;
        d.set_item("composition_penalty", b.composition_penalty)
    })
}

/// Classical sphere-packing bound; finite output alphabets only.
#[pyfunction]
#[pyo3(signature = (channel, n, rate_bits, list_size = 1))]
fn sp67_bound<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    n: u64,
    rate_bits: f64,
    list_size: u64,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let k = channel.inner.input_size();
    let r = sp67::sp67_classic(&channel.inner, &code(n, rate_bits, list_size)?, k).map_err(py_err)?;
    outcome(py, r, |d, b| {
        d.set_item("ln_pe", b.ln_pe_lower)?;
        d.set_item("p_min", b.p_min)?;
        d.set_item("rho_opt", b.rho_opt)
    })
}

/// ln of the random-coding upper bound.
#[pyfunction]
#[pyo3(signature = (channel, n, rate_bits, list_size = 1))]
fn rcb(channel: &PyChannel, n: u64, rate_bits: f64, list_size: u64) -> PyResult<f64> {
    compare::gallager_rcb(&channel.inner, &code(n, rate_bits, list_size)?).map_err(py_err)
}

/// SP59 lower bound for n_dims real dimensions at a rate in bits per dimension.
#[pyfunction]
#[pyo3(signature = (n_dims, rate_bits_per_dim, ebn0_db, cone = "theta1"))]
fn sp59_bound<'py>(
    py: Python<'py>,
    n_dims: u64,
    rate_bits_per_dim: f64,
    ebn0_db: f64,
    cone: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = Sp59Params::from_ebn0_db(n_dims, rate_bits_per_dim, ebn0_db).map_err(py_err)?;
    let r = py.detach(|| sp59::sp59_bound(&p, self::cone(cone)?).map_err(py_err))?;
    let d = PyDict::new(py);
    d.set_item("ln_pe", r.ln_pe_lower)?;
    d.set_item("theta", r.cone.theta)?;
    d.set_item("ln_solid_angle_ratio", r.cone.ln_solid_angle_ratio)?;
    Ok(d)
}

/// ln f_N(x) evaluated in the log domain.
#[pyfunction]
fn ln_f_n(n: u64, x: f64) -> PyResult<f64> {
    sp59::ln_f_n(n, x).map_err(py_err)
}

/// Any bound by name at an operating point (Eb/N0 in dB, or erasure probability);
/// None when the bound is trivial.
#[pyfunction]
#[pyo3(signature = (bound, channel, point, n, rate_bits, list_size = 1, vf_original = false, cone = "theta1"))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    bound: &str,
    channel: &str,
    point: f64,
    n: u64,
    rate_bits: f64,
    list_size: u64,
    vf_original: bool,
    cone: &str,
) -> PyResult<Option<f64>> {
    let (k, f, o) = (kind(bound)?, family(channel)?, options(list_size, vf_original, cone)?);
    let v = py.detach(|| compare::evaluate_bound(k, f, point, n, rate_bits * LN_2, &o)).map_err(py_err)?;
    Ok(match v {
        BoundValue::Value { ln_pe, .. } => Some(ln_pe),
        BoundValue::Trivial => None,
    })
}

/// Operating point where capacity equals the rate: Eb/N0 in dB, or erasure probability.
#[pyfunction]
fn capacity_limit(channel: &str, rate_bits: f64) -> PyResult<f64> {
    compare::capacity_limit(family(channel)?, rate_bits * LN_2, &Default::default()).map_err(py_err)
}

/// Operating point at which a bound reaches the target block error probability.
#[pyfunction]
#[pyo3(signature = (bound, channel, n, rate_bits, target_pe, vf_original = false, cone = "theta1"))]
#[allow(clippy::too_many_arguments)]
fn crossing(
    py: Python<'_>,
    bound: &str,
    channel: &str,
    n: u64,
    rate_bits: f64,
    target_pe: f64,
    vf_original: bool,
    cone: &str,
) -> PyResult<f64> {
    let (k, f, o) = (kind(bound)?, family(channel)?, options(1, vf_original, cone)?);
    py.detach(|| compare::crossing_point(k, f, n, rate_bits * LN_2, target_pe.ln(), &o)).map_err(py_err)
}

/// Smallest block length at which the bound permits the target error probability.
#[pyfunction]
#[pyo3(signature = (bound, channel, rate_bits, target_pe, point, vf_original = false, cone = "theta1"))]
#[allow(clippy::too_many_arguments)]
fn min_blocklength(
    py: Python<'_>,
    bound: &str,
    channel: &str,
    rate_bits: f64,
    target_pe: f64,
    point: f64,
    vf_original: bool,
    cone: &str,
) -> PyResult<u64> {
    let q = MinLenQuery {
        bound: kind(bound)?,
        family: family(channel)?,
        rate_nats: rate_bits * LN_2,
        target_ln_pe: target_pe.ln(),
        point,
    };
    let o = options(1, vf_original, cone)?;
    py.detach(|| compare::min_blocklength(&q, &o)).map(|r| r.n).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "spherebound")]
fn spherebound_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(isp_bound, m)?)?;
    m.add_function(wrap_pyfunction!(vf_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sp67_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rcb, m)?)?;
    m.add_function(wrap_pyfunction!(sp59_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ln_f_n, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_limit, m)?)?;
    m.add_function(wrap_pyfunction!(crossing, m)?)?;
    m.add_function(wrap_pyfunction!(min_blocklength, m)?)?;
    Ok(())
}
