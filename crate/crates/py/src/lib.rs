//! Python bindings: `import ewd`.
//!
//! Angles are radians, as in the core crate; `OBox.from_degrees` is the
//! degree-based constructor. Invalid input raises `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ewd_core::ewd as core_loss;
use ewd_core::gaussian::KlDirection;
use ewd_core::geom::{box_iou as core_box_iou, rotated_iou};
use ewd_core::grad::edwd_grad;
use ewd_core::harness::{self, CurveSpec};
use ewd_core::oracle::{egwd_matching_oracle, run_suite};
use ewd_core::{EwdError, LossConfig, NormScheme, OBox5, PostFn, Quad, Shape, Vec2, VarianceMode};

fn py_err(e: EwdError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = EwdError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Oriented box `(cx, cy, w, h, theta)`.
#[pyclass(name = "OBox", module = "ewd", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOBox {
    inner: OBox5,
}

#[pymethods]
impl PyOBox {
    #[new]
    fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> PyResult<Self> {
        OBox5::new(cx, cy, w, h, theta).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_degrees(cx: f64, cy: f64, w: f64, h: f64, theta_deg: f64) -> PyResult<Self> {
        OBox5::from_degrees(cx, cy, w, h, theta_deg).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn cx(&self) -> f64 {
        self.inner.cx
    }

    #[getter]
    fn cy(&self) -> f64 {
        self.inner.cy
    }

    #[getter]
    fn w(&self) -> f64 {
        self.inner.w
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn params(&self) -> [f64; 5] {
        self.inner.to_params()
    }

    /// Clockwise corners as `[(x, y)] * 4`.
    fn corners(&self) -> Vec<(f64, f64)> {
        self.inner.to_corners().corners.iter().map(|p| (p.x, p.y)).collect()
    }

    /// The same box with its edge sequence cyclically shifted by `k`.
    fn shifted(&self, k: usize) -> Self {
        Self { inner: self.inner.shifted(k) }
    }

    fn rotated(&self, dtheta: f64) -> Self {
        Self { inner: self.inner.rotated(dtheta) }
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!("OBox(cx={}, cy={}, w={}, h={}, theta={})", b.cx, b.cy, b.w, b.h, b.theta)
    }
}

/// Loss configuration. `name` is a loss name such as `edwd`, `egwd`, `gwd`,
/// `kld` or `smoothl1_le`; the other arguments use the command-line syntax.
#[pyclass(name = "LossConfig", module = "ewd", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLossConfig {
    inner: LossConfig,
}

#[pymethods]
impl PyLossConfig {
    #[new]
    #[pyo3(signature = (name = "edwd", norm = None, post = None, variance = None))]
    fn new(name: &str, norm: Option<&str>, post: Option<&str>, variance: Option<&str>) -> PyResult<Self> {
        let mut cfg = LossConfig::by_name(name).map_err(py_err)?;
        if let Some(n) = norm {
            cfg = cfg.with_norm(parse::<NormScheme>(n)?);
        }
        if let Some(p) = post {
            cfg = cfg.with_post(parse::<PostFn>(p)?);
        }
        if let Some(v) = variance {
            cfg = cfg.with_variance(parse::<VarianceMode>(v)?);
        }
        cfg.validate().map_err(py_err)?;
        Ok(Self { inner: cfg })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.variant.name()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "LossConfig(name='{}', norm='{}', post='{}', variance='{}')",
            c.variant.name(),
            c.norm,
            c.post,
            c.variance
        )
    }
}

fn cfg_or_default(cfg: Option<PyRef<'_, PyLossConfig>>) -> LossConfig {
    cfg.map(|c| c.inner.clone()).unwrap_or_else(LossConfig::edwd)
}

fn quad(corners: Vec<(f64, f64)>) -> PyResult<Quad> {
    let pts: [(f64, f64); 4] = corners
        .try_into()
        .map_err(|_| PyValueError::new_err("a quadrilateral needs exactly four corners"))?;
    Quad::new(pts.map(|(x, y)| Vec2::new(x, y))).map_err(py_err)
}

/// Loss value and active edge pairing (None for the Gaussian and Smooth-L1 baselines).
#[pyfunction]
#[pyo3(signature = (pred, target, cfg = None))]
fn loss(pred: PyRef<'_, PyOBox>, target: PyRef<'_, PyOBox>, cfg: Option<PyRef<'_, PyLossConfig>>) -> PyResult<(f64, Option<usize>)> {
    let v = core_loss::box_loss(&pred.inner, &target.inner, &cfg_or_default(cfg)).map_err(py_err)?;
    Ok((v.value, v.k))
}

/// Edge loss between two clockwise quadrilaterals given by their corners.
#[pyfunction]
#[pyo3(signature = (pred, target, cfg = None))]
fn quad_loss(
    pred: Vec<(f64, f64)>,
    target: Vec<(f64, f64)>,
    cfg: Option<PyRef<'_, PyLossConfig>>,
) -> PyResult<(f64, Option<usize>)> {
    let (p, t) = (Shape::Quad(quad(pred)?), Shape::Quad(quad(target)?));
    let v = core_loss::loss(&p, &t, &cfg_or_default(cfg)).map_err(py_err)?;
    Ok((v.value, v.k))
}

/// Closed-form EGWD distance and pairing.
#[pyfunction]
fn egwd(pred: PyRef<'_, PyOBox>, target: PyRef<'_, PyOBox>) -> (f64, usize) {
    let m = core_loss::egwd_obox(&pred.inner, &target.inner);
    (m.value, m.k)
}

/// EGWD by explicit per-edge Gaussian enumeration (slow reference).
#[pyfunction]
fn egwd_oracle(pred: PyRef<'_, PyOBox>, target: PyRef<'_, PyOBox>) -> PyResult<(f64, usize)> {
    egwd_matching_oracle(&pred.inner, &target.inner).map_err(py_err)
}

#[pyfunction]
fn gwd(pred: PyRef<'_, PyOBox>, target: PyRef<'_, PyOBox>) -> PyResult<f64> {
    core_loss::gwd_box(&pred.inner, &target.inner).map_err(py_err)
}

/// `KL(pred || target)` between the box Gaussians.
#[pyfunction]
fn kld(pred: PyRef<'_, PyOBox>, target: PyRef<'_, PyOBox>) -> PyResult<f64> {
    core_loss::kld_box(&pred.inner, &target.inner, KlDirection::PredToTarget).map_err(py_err)
}

/// Loss and analytic gradient `[d_cx, d_cy, d_w, d_h, d_theta]` for the edge losses.
#[pyfunction]
#[pyo3(signature = (pred, target, cfg = None))]
fn gradient(
    pred: PyRef<'_, PyOBox>,
    target: PyRef<'_, PyOBox>,
    cfg: Option<PyRef<'_, PyLossConfig>>,
) -> PyResult<(f64, [f64; 5], usize)> {
    let g = edwd_grad(&pred.inner, &target.inner, &cfg_or_default(cfg)).map_err(py_err)?;
    Ok((g.loss, g.grad.to_array(), g.k))
}

#[pyfunction]
fn box_iou(a: PyRef<'_, PyOBox>, b: PyRef<'_, PyOBox>) -> f64 {
    core_box_iou(&a.inner, &b.inner)
}

#[pyfunction]
fn quad_iou(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(rotated_iou(&quad(a)?, &quad(b)?))
}

/// Rows `(ratio, dtheta_deg, loss, value)` of the loss-versus-rotation sweep.
#[pyfunction]
#[pyo3(signature = (ratios, lo = -90.0, hi = 90.0, step = 1.0, losses = vec!["edwd".to_string()]))]
fn curve(ratios: Vec<f64>, lo: f64, hi: f64, step: f64, losses: Vec<String>) -> PyResult<Vec<(f64, f64, String, f64)>> {
    let losses = losses.iter().map(|n| LossConfig::by_name(n)).collect::<Result<_, _>>().map_err(py_err)?;
    let spec = CurveSpec::new(ratios, CurveSpec::grid(lo, hi, step).map_err(py_err)?, losses);
    let rows = harness::sweep_curve(&spec).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| (r.ratio, r.dtheta_deg, r.loss, r.value)).collect())
}

/// Fit every scenario of a TOML manifest; one summary dict per scenario.
#[pyfunction]
#[pyo3(signature = (manifest, loss = None))]
fn fit(py: Python<'_>, manifest: &str, loss: Option<&str>) -> PyResult<Vec<Py<PyAny>>> {
    let mut scenarios = harness::parse_manifest(manifest).map_err(py_err)?;
    if let Some(name) = loss {
        let cfg = LossConfig::by_name(name).map_err(py_err)?;
        scenarios = scenarios.into_iter().map(|s| s.with_loss(cfg.clone())).collect();
    }
    scenarios
        .iter()
        .map(|s| {
            let t = harness::fit(s).map_err(py_err)?;
            let d = pyo3::types::PyDict::new(py);
            d.set_item("scenario", &t.scenario)?;
            d.set_item("loss", &t.loss_name)?;
            d.set_item("status", t.status.to_string())?;
            d.set_item("steps_to_iou_0.9", t.steps_to_iou(0.9))?;
            if let Some(last) = t.last() {
                d.set_item("steps", last.step)?;
                d.set_item("final_iou", last.iou)?;
                d.set_item("final_loss", last.loss)?;
                d.set_item("final_params", last.params.clone())?;
            }
            Ok(d.into_any().unbind())
        })
        .collect()
}

/// Run an oracle suite; returns `(passed, max_deviation, violations)`.
#[pyfunction]
#[pyo3(signature = (suite, trials, seed = 0))]
fn verify(suite: &str, trials: usize, seed: u64) -> PyResult<(bool, f64, usize)> {
    let r = run_suite(suite, trials, seed).map_err(py_err)?;
    Ok((r.passed(), r.max_deviation, r.violations))
}

#[pymodule]
fn ewd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOBox>()?;
    m.add_class::<PyLossConfig>()?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(quad_loss, m)?)?;
    m.add_function(wrap_pyfunction!(egwd, m)?)?;
    m.add_function(wrap_pyfunction!(egwd_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(gwd, m)?)?;
    m.add_function(wrap_pyfunction!(kld, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(box_iou, m)?)?;
    m.add_function(wrap_pyfunction!(quad_iou, m)?)?;
    m.add_function(wrap_pyfunction!(curve, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
