//! Analytic gradients of the edge losses and a central-difference checker.
//!
//! The minimum over pairings is differentiated through its active branch
//! (smallest `k` on ties). Inside a branch, with `a = w_k / s_w`,
//! `A = w_t / s_w` (and `b`, `B` for heights) and `d = theta_k - theta_t`:
//!
//! ```text
//! dW/dx     = 8 dx / s^2
//! dW/da     = 2 c_w (a - A cos d)
//! dW/dtheta = 2 (c_w a A + c_h b B) sin d
//! dW/dcos d = -2 (c_w a A + c_h b B)
//! ```
//!
//! Odd shifts swap which raw parameter feeds `a` and `b`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EwdError, Result};
use crate::ewd::{
    self, edwd_polygon, LossConfig, LossVariant, Matched, NormScheme, PostFn, Scales, VarianceMode,
};
use crate::geom::{EdgeSeq, OBox5, Shape, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoxGrad {
    pub d_cx: f64,
    pub d_cy: f64,
    pub d_w: f64,
    pub d_h: f64,
    pub d_theta: f64,
}

impl BoxGrad {
    pub fn from_array(a: [f64; 5]) -> Self {
        Self { d_cx: a[0], d_cy: a[1], d_w: a[2], d_h: a[3], d_theta: a[4] }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.d_cx, self.d_cy, self.d_w, self.d_h, self.d_theta]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * s))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Gradient together with the point it was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct GradResult {
    pub grad: BoxGrad,
    pub loss: f64,
    pub distance: f64,
    pub k: usize,
    /// Gap between the active pairing and the runner-up.
    pub gap: f64,
    /// Set when the post function is not differentiable at this distance
    /// (sqrt at 0); the gradient returned there is the zero subgradient.
    pub degenerate: bool,
}

struct Branch {
    scales: Scales,
    cw: f64,
    ch: f64,
    matched: Matched,
}

fn active_branch(pred: &OBox5, target: &OBox5, cfg: &LossConfig) -> Result<Branch> {
    if !cfg.variant.is_edge_family() {
        return Err(EwdError::InvalidConfig(format!(
            "analytic gradients exist for egwd/edwd only, got {}",
            cfg.variant.name()
        )));
    }
    cfg.validate()?;
    let scales = cfg.norm.scales(target)?;
    let (sw, sh) = cfg.effective_variance().box_variances(target, &scales);
    let matched = ewd::edwd_obox(pred, target, cfg)?;
    Ok(Branch { scales, cw: 0.5 * (1.0 + sw), ch: 0.5 * (1.0 + sh), matched })
}

/// Gradient of `post(W(norm(pred), norm(target)))` with respect to the raw
/// prediction parameters.
pub fn edwd_grad(pred: &OBox5, target: &OBox5, cfg: &LossConfig) -> Result<GradResult> {
    let br = active_branch(pred, target, cfg)?;
    let k = br.matched.k;
    let s = br.scales;
    let p = pred.shifted(k);
    let a = p.w / s.w;
    let big_a = target.w / s.w;
    let b = p.h / s.h;
    let big_b = target.h / s.h;
    let d = p.theta - target.theta;
    let (sin_d, cos_d) = d.sin_cos();

    let inv_s2 = 1.0 / (s.center * s.center);
    let d_cx = 8.0 * (pred.cx - target.cx) * inv_s2;
    let d_cy = 8.0 * (pred.cy - target.cy) * inv_s2;
    let d_theta = 2.0 * (br.cw * a * big_a + br.ch * b * big_b) * sin_d;
    // with respect to the shifted box's own width and height
    let d_wk = 2.0 * br.cw * (a - big_a * cos_d) / s.w;
    let d_hk = 2.0 * br.ch * (b - big_b * cos_d) / s.h;
    let (d_w, d_h) = if k % 2 == 0 { (d_wk, d_hk) } else { (d_hk, d_wk) };

    let distance = br.matched.value;
    let (slope, degenerate) = cfg.post.derivative(distance);
    let grad = BoxGrad { d_cx, d_cy, d_w, d_h, d_theta }.scaled(slope);
    Ok(GradResult {
        grad,
        loss: cfg.post.apply(distance),
        distance,
        k,
        gap: br.matched.gap(),
        degenerate,
    })
}

/// `dW / d cos(dtheta)` of the raw distance (no post function) on the active
/// branch: `-2 (c_w a A + c_h b B)`.
pub fn edwd_dcos(pred: &OBox5, target: &OBox5, cfg: &LossConfig) -> Result<f64> {
    let br = active_branch(pred, target, cfg)?;
    let s = br.scales;
    let p = pred.shifted(br.matched.k);
    let aa = (p.w / s.w) * (target.w / s.w);
    let bb = (p.h / s.h) * (target.h / s.h);
    Ok(-2.0 * (br.cw * aa + br.ch * bb))
}

/// Central differences of `f` in each of the five box parameters.
pub fn fd_gradient<F>(f: F, pred: &OBox5, h: f64) -> BoxGrad
where
    F: Fn(&OBox5) -> f64,
{
    let base = pred.to_params();
    let mut out = [0.0; 5];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        *slot = (f(&OBox5::from_params(plus)) - f(&OBox5::from_params(minus))) / (2.0 * h);
    }
    BoxGrad::from_array(out)
}

/// Central differences over an arbitrary parameter vector.
pub fn fd_gradient_vec<F>(f: F, params: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = params.to_vec();
    (0..params.len())
        .map(|i| {
            let x = work[i];
            work[i] = x + h;
            let fp = f(&work);
            work[i] = x - h;
            let fm = f(&work);
            work[i] = x;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Finite-difference gradient of any configured loss on boxes. Evaluation
/// failures (e.g. a singular KL reference) surface as NaN components.
pub fn fd_loss_gradient(pred: &OBox5, target: &OBox5, cfg: &LossConfig, h: f64) -> BoxGrad {
    fd_gradient(
        |p| ewd::box_loss(p, target, cfg).map(|v| v.value).unwrap_or(f64::NAN),
        pred,
        h,
    )
}

/// Gradient of the polygon edge loss with respect to each predicted vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonGrad {
    pub vertices: Vec<Vec2>,
    pub loss: f64,
    pub distance: f64,
    pub k: usize,
    pub gap: f64,
    pub degenerate: bool,
}

pub fn edwd_polygon_grad(pred: &EdgeSeq, target: &EdgeSeq, cfg: &LossConfig) -> Result<PolygonGrad> {
    if !cfg.variant.is_edge_family() {
        return Err(EwdError::InvalidConfig(format!(
            "analytic gradients exist for egwd/edwd only, got {}",
            cfg.variant.name()
        )));
    }
    cfg.validate()?;
    let s = cfg.norm.polygon_scale(target)?;
    let variances = cfg.effective_variance().polygon_variances(target, s);
    let m = edwd_polygon(pred, target, &variances)?;
    let n = target.len();
    let inv_s2 = 1.0 / (s * s);
    let distance = m.value * inv_s2;
    let (slope, degenerate) = cfg.post.derivative(distance);

    let pe = pred.edges();
    let te = target.edges();
    let mut grads = vec![Vec2::ZERO; n];
    for (i, t) in te.iter().enumerate() {
        let j = (i + m.k) % n;
        let dc = pe[j].center() - t.center();
        let dv = pe[j].vector() - t.vector();
        let half_var = 0.5 * variances[i];
        // c_j = (P_j + P_j+1) / 2, v_j = P_j+1 - P_j
        grads[j] = grads[j] + dc - dv * half_var;
        grads[(j + 1) % n] = grads[(j + 1) % n] + dc + dv * half_var;
    }
    let scale = slope * inv_s2;
    Ok(PolygonGrad {
        vertices: grads.into_iter().map(|g| g * scale).collect(),
        loss: cfg.post.apply(distance),
        distance,
        k: m.k,
        gap: m.gap() * inv_s2,
        degenerate,
    })
}

/// Loss value and gradient for the fitting harness, flattened over the
/// shape's parameters (`[cx, cy, w, h, theta]` or the 8 corner coordinates).
/// Edge losses use analytic gradients; baselines fall back to central
/// differences with step `fd_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub k: Option<usize>,
    pub degenerate: bool,
}

pub fn shape_gradient(pred: &Shape, target: &Shape, cfg: &LossConfig, fd_step: f64) -> Result<ShapeGrad> {
    match (pred, target) {
        (Shape::Box(p), Shape::Box(t)) => {
            if cfg.variant.is_edge_family() {
                let g = edwd_grad(p, t, cfg)?;
                Ok(ShapeGrad {
                    loss: g.loss,
                    grad: g.grad.to_array().to_vec(),
                    k: Some(g.k),
                    degenerate: g.degenerate,
                })
            } else {
                let v = ewd::box_loss(p, t, cfg)?;
                let g = fd_loss_gradient(p, t, cfg, fd_step);
                Ok(ShapeGrad { loss: v.value, grad: g.to_array().to_vec(), k: None, degenerate: false })
            }
        }
        (Shape::Quad(p), _) => {
            let g = edwd_polygon_grad(&p.to_edges(), &target.to_edges(), cfg)?;
            let grad = g.vertices.iter().flat_map(|v| [v.x, v.y]).collect();
            Ok(ShapeGrad { loss: g.loss, grad, k: Some(g.k), degenerate: g.degenerate })
        }
        (Shape::Box(_), Shape::Quad(_)) => Err(EwdError::InvalidConfig(
            "a box prediction needs a box target; fit quadrilaterals with a quad init".into(),
        )),
    }
}

/// Post-function slope, re-exported for callers composing their own chains.
pub fn post_slope(post: &PostFn, w: f64) -> (f64, bool) {
    post.derivative(w)
}

/// Settings of the randomized analytic-versus-FD comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub trials: usize,
    pub seed: u64,
    /// Relative tolerance.
    pub tol: f64,
    /// Absolute floor below which differences always pass.
    pub abs_floor: f64,
    /// Central-difference step.
    pub h: f64,
    /// Points whose pairing margin is below this (relative to `1 + W`) are
    /// skipped: the FD stencil may straddle a switch of pairing there.
    pub tie_margin: f64,
    pub variants: Vec<LossVariant>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            tol: 1e-4,
            abs_floor: 1e-6,
            h: 1e-5,
            tie_margin: 1e-3,
            variants: vec![LossVariant::Egwd, LossVariant::Edwd],
        }
    }
}

/// One evaluated triple.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckCase {
    pub pred: OBox5,
    pub target: OBox5,
    pub cfg: LossConfig,
    pub analytic: BoxGrad,
    pub numeric: BoxGrad,
    /// `max_i |a_i - n_i| / max(|a_i|, |n_i|, abs_floor / tol)`.
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossCheckSummary {
    pub loss: String,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst: Option<GradCheckCase>,
    pub failures: usize,
    /// First failing case, kept for reproduction.
    pub first_failure: Option<GradCheckCase>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_loss: Vec<LossCheckSummary>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.per_loss.iter().all(|l| l.failures == 0)
    }
}

/// Analytic gradient entry point, swappable so a deliberately broken
/// implementation can serve as a negative control.
pub type AnalyticGrad = fn(&OBox5, &OBox5, &LossConfig) -> Result<GradResult>;

const NORMS: [NormScheme; 6] = [
    NormScheme::None,
    NormScheme::ImageSize(32.0),
    NormScheme::AnchorSize(8.0),
    NormScheme::TargetWH,
    NormScheme::TargetMin,
    NormScheme::TargetMax,
];
const POSTS: [PostFn; 3] = [PostFn::Identity, PostFn::Sqrt, PostFn::Log1p];

/// Random box with centre in `[-10, 10]^2`, sides in `[0.1, 20]` and angle
/// in `[-pi, pi)`.
pub fn random_box<R: Rng>(rng: &mut R) -> OBox5 {
    OBox5 {
        cx: rng.gen_range(-10.0..10.0),
        cy: rng.gen_range(-10.0..10.0),
        w: rng.gen_range(0.1..20.0),
        h: rng.gen_range(0.1..20.0),
        theta: rng.gen_range(-PI..PI),
    }
}

fn random_cfg<R: Rng>(rng: &mut R, variant: LossVariant) -> LossConfig {
    let variance = match rng.gen_range(0..3) {
        0 => VarianceMode::AspectRatio,
        1 => VarianceMode::Constant(rng.gen_range(0.0..2.0)),
        _ => VarianceMode::TargetLength,
    };
    LossConfig::new(variant)
        .with_norm(NORMS[rng.gen_range(0..NORMS.len())])
        .with_post(POSTS[rng.gen_range(0..POSTS.len())].clone())
        .with_variance(variance)
}

/// Compare analytic gradients with central differences on random triples.
/// Trials are split evenly over the requested variants; every norm scheme
/// and post function is drawn uniformly.
pub fn gradcheck_suite(opts: &GradCheckOptions, analytic: AnalyticGrad) -> Result<GradCheckReport> {
    if opts.trials == 0 {
        return Err(EwdError::InvalidArgument("trials must be at least 1".into()));
    }
    if opts.variants.is_empty() {
        return Err(EwdError::InvalidArgument("no losses to check".into()));
    }
    if let Some(v) = opts.variants.iter().find(|v| !v.is_edge_family()) {
        return Err(EwdError::InvalidArgument(format!(
            "{} has no analytic gradient to check",
            v.name()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut per_loss: Vec<LossCheckSummary> = opts
        .variants
        .iter()
        .map(|v| LossCheckSummary {
            loss: v.name(),
            checked: 0,
            skipped: 0,
            max_rel_err: 0.0,
            worst: None,
            failures: 0,
            first_failure: None,
        })
        .collect();
    let denom_floor = opts.abs_floor / opts.tol;
    for trial in 0..opts.trials {
        let slot = trial % opts.variants.len();
        let pred = random_box(&mut rng);
        let target = random_box(&mut rng);
        let cfg = random_cfg(&mut rng, opts.variants[slot]);
        let summary = &mut per_loss[slot];
        let g = analytic(&pred, &target, &cfg)?;
        if g.gap <= opts.tie_margin * (1.0 + g.distance) || g.degenerate {
            summary.skipped += 1;
            continue;
        }
        let numeric = fd_loss_gradient(&pred, &target, &cfg, opts.h);
        let rel_err = g
            .grad
            .to_array()
            .iter()
            .zip(numeric.to_array())
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(denom_floor))
            .fold(0.0, f64::max);
        let case = || GradCheckCase { pred, target, cfg: cfg.clone(), analytic: g.grad, numeric, rel_err };
        summary.checked += 1;
        if !(rel_err <= summary.max_rel_err) {
            summary.max_rel_err = rel_err;
            summary.worst = Some(case());
        }
        if !(rel_err <= opts.tol) {
            summary.failures += 1;
            if summary.first_failure.is_none() {
                summary.first_failure = Some(case());
            }
        }
    }
    Ok(GradCheckReport { per_loss })
}
