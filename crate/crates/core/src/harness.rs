//! Toy regression experiments: fit one shape to another by gradient descent
//! under each loss, sweep loss-versus-angle curves, and compare losses over
//! a scenario suite.
//!
//! Scenario manifests are TOML:
//!
//! ```toml
//! [[scenario]]
//! name = "square_orientation"
//! target = [0, 0, 4, 4, 0]        # cx, cy, w, h, theta in degrees
//! init = [0, 0, 4, 4, 30]
//! # or: target_quad / init_quad = [[x, y], [x, y], [x, y], [x, y]]
//! lr = 0.01
//! momentum = 0.9
//! max_steps = 2000
//! grad_tol = 1e-8
//! iou_target = 0.99               # optional early stop
//! seed = 0
//! jitter = 0.0                    # optional uniform init perturbation
//!
//! [scenario.loss]
//! variant = "edwd"                # egwd, edwd, gwd, kld, smoothl1_{oc,le,min}
//! norm = "target_wh"              # none, image:S, anchor:S, target_{wh,min,max}
//! post = "identity"               # identity, sqrt, log1p, inv_tau:T[:inner]
//! variance = "aspect_ratio"       # aspect_ratio, constant:C, target_length
//! beta = 0.111
//! kl_direction = "pred_to_target"
//! ```
//!
//! Every key except `name`, `target`/`target_quad` and `init`/`init_quad`
//! has a default.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer};

use crate::error::{EwdError, Result};
use crate::ewd::{self, LossConfig, LossVariant, NormScheme, PostFn, VarianceMode};
use crate::gaussian::KlDirection;
use crate::geom::{box_iou, canonicalize, rotated_iou, BoxDef, OBox5, Quad, Shape, Vec2};
use crate::grad::shape_gradient;

/// Sizes are projected back above this after every step.
pub const MIN_SIZE: f64 = 1e-6;
/// Step used for the finite-difference gradients of the baselines.
pub const FD_STEP: f64 = 1e-6;
const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub lr: f64,
    pub momentum: f64,
    pub max_steps: usize,
}

impl Default for Optimizer {
    fn default() -> Self {
        Self { lr: 0.01, momentum: 0.9, max_steps: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub grad_tol: f64,
    pub iou_target: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { grad_tol: 1e-8, iou_target: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitScenario {
    pub name: String,
    pub target: Shape,
    pub init: Shape,
    pub cfg: LossConfig,
    pub optimizer: Optimizer,
    pub stop: StopCriteria,
    pub seed: u64,
    /// Half-width of a uniform perturbation applied to the initial
    /// parameters (radians for the angle).
    pub jitter: f64,
}

impl FitScenario {
    pub fn new(name: impl Into<String>, target: Shape, init: Shape, cfg: LossConfig) -> Self {
        Self {
            name: name.into(),
            target,
            init,
            cfg,
            optimizer: Optimizer::default(),
            stop: StopCriteria::default(),
            seed: 0,
            jitter: 0.0,
        }
    }

    pub fn with_loss(&self, cfg: LossConfig) -> Self {
        Self { cfg, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.optimizer;
        if !(o.lr.is_finite() && o.lr > 0.0) {
            return Err(EwdError::InvalidConfig(format!("learning rate must be > 0, got {}", o.lr)));
        }
        if !(0.0..1.0).contains(&o.momentum) {
            return Err(EwdError::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                o.momentum
            )));
        }
        if o.max_steps == 0 {
            return Err(EwdError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(self.stop.grad_tol >= 0.0) {
            return Err(EwdError::InvalidConfig("grad_tol must be >= 0".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(EwdError::InvalidConfig("jitter must be >= 0".into()));
        }
        if matches!((&self.init, &self.target), (Shape::Box(_), Shape::Quad(_))) {
            return Err(EwdError::InvalidConfig(
                "a box init needs a box target; use init_quad for quadrilateral targets".into(),
            ));
        }
        if matches!(self.init, Shape::Quad(_)) && !self.cfg.variant.is_edge_family() {
            return Err(EwdError::InvalidConfig(format!(
                "{} is only defined for oriented boxes",
                self.cfg.variant.name()
            )));
        }
        self.cfg.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// Gradient norm fell below tolerance or the IoU target was reached.
    Converged,
    /// Step budget exhausted.
    Stalled,
    /// Non-finite loss or gradient; the trace ends at the last valid state.
    Diverged,
}

impl fmt::Display for FitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitStatus::Converged => "converged",
            FitStatus::Stalled => "stalled",
            FitStatus::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// `[cx, cy, w, h, theta]` for boxes, eight corner coordinates for quads.
    pub params: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub iou: f64,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub scenario: String,
    pub loss_name: String,
    pub records: Vec<StepRecord>,
    pub status: FitStatus,
    /// Why the run diverged, when it did.
    pub note: Option<String>,
}

impl FitTrace {
    pub fn first(&self) -> Option<&StepRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// First step whose IoU reaches `level`.
    pub fn steps_to_iou(&self, level: f64) -> Option<usize> {
        self.records.iter().find(|r| r.iou >= level).map(|r| r.step)
    }

    pub fn final_shape(&self) -> Option<Shape> {
        self.last().map(|r| shape_from_params(&r.params))
    }
}

fn shape_params(s: &Shape) -> Vec<f64> {
    match s {
        Shape::Box(b) => b.to_params().to_vec(),
        Shape::Quad(q) => q.to_params().to_vec(),
    }
}

fn shape_from_params(p: &[f64]) -> Shape {
    if p.len() == 5 {
        Shape::Box(OBox5::from_params([p[0], p[1], p[2], p[3], p[4]]))
    } else {
        let mut a = [0.0; 8];
        a.copy_from_slice(&p[..8]);
        Shape::Quad(Quad::from_params(&a))
    }
}

/// Rotated IoU between any two shapes.
pub fn shape_iou(a: &Shape, b: &Shape) -> f64 {
    match (a, b) {
        (Shape::Box(x), Shape::Box(y)) => box_iou(x, y),
        _ => rotated_iou(&a.to_quad(), &b.to_quad()),
    }
}

/// Gradient descent with momentum: `v <- mu v - lr g; p <- p + v`, then the
/// box sizes are projected onto `[MIN_SIZE, inf)`. Every evaluated state is
/// recorded, including the initial one at step 0.
pub fn fit(s: &FitScenario) -> Result<FitTrace> {
    s.validate()?;
    let mut params = shape_params(&encoded_init(s));
    if s.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        for p in params.iter_mut() {
            *p += rng.gen_range(-s.jitter..=s.jitter);
        }
    }
    let is_box = params.len() == 5;
    project(&mut params, is_box);
    let mut velocity = vec![0.0; params.len()];
    let mut trace = FitTrace {
        scenario: s.name.clone(),
        loss_name: s.cfg.variant.name(),
        records: Vec::new(),
        status: FitStatus::Stalled,
        note: None,
    };
    let opt = s.optimizer;
    for step in 0..=opt.max_steps {
        let shape = shape_from_params(&params);
        let g = match shape_gradient(&shape, &s.target, &s.cfg, FD_STEP) {
            Ok(g) => g,
            Err(e) => {
                trace.status = FitStatus::Diverged;
                trace.note = Some(e.to_string());
                break;
            }
        };
        let grad_norm = g.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !g.loss.is_finite() || !grad_norm.is_finite() {
            trace.status = FitStatus::Diverged;
            trace.note = Some(format!("non-finite loss or gradient at step {step}"));
            break;
        }
        let iou = shape_iou(&shape, &s.target);
        trace.records.push(StepRecord {
            step,
            params: params.clone(),
            loss: g.loss,
            grad_norm,
            iou,
            k: g.k,
        });
        let reached = s.stop.iou_target.is_some_and(|t| iou >= t);
        if grad_norm <= s.stop.grad_tol || reached {
            trace.status = FitStatus::Converged;
            break;
        }
        if step == opt.max_steps {
            break;
        }
        for ((p, v), gi) in params.iter_mut().zip(velocity.iter_mut()).zip(&g.grad) {
            *v = opt.momentum * *v - opt.lr * gi;
            *p += *v;
        }
        project(&mut params, is_box);
        if params.iter().any(|p| !p.is_finite() || p.abs() > BLOWUP) {
            trace.status = FitStatus::Diverged;
            trace.note = Some(format!("parameters blew up after step {step}"));
            break;
        }
    }
    Ok(trace)
}

/// Smooth-L1 regresses encoded parameters, so its starting box is expressed
/// in the same angle convention as the target encoding.
fn encoded_init(s: &FitScenario) -> Shape {
    match (s.cfg.variant, &s.init) {
        (LossVariant::SmoothL1(def), Shape::Box(b)) => Shape::Box(canonicalize(b, def)),
        _ => s.init,
    }
}

fn project(params: &mut [f64], is_box: bool) {
    if is_box {
        params[2] = params[2].max(MIN_SIZE);
        params[3] = params[3].max(MIN_SIZE);
    }
}

/// Orientation difference between the rectangles drawn by two boxes, in
/// degrees. Both are put in long-edge form first, so width/height swaps do
/// not count; the result lies in `[-90, 90)`, or `[-45, 45)` when the
/// target is a square.
pub fn orientation_gap_deg(pred: &OBox5, target: &OBox5) -> f64 {
    let p = canonicalize(pred, BoxDef::Le);
    let t = canonicalize(target, BoxDef::Le);
    let square = (target.w - target.h).abs() <= 1e-9 * target.w.max(target.h);
    let period = if square { 90.0 } else { 180.0 };
    let d = (p.theta - t.theta).to_degrees();
    (d + 0.5 * period).rem_euclid(period) - 0.5 * period
}

// ---------------------------------------------------------------------------
// Manifests

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    scenario: Vec<ScenarioEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioEntry {
    name: String,
    #[serde(default, deserialize_with = "de_box")]
    target: Option<OBox5>,
    #[serde(default, deserialize_with = "de_quad")]
    target_quad: Option<Quad>,
    #[serde(default, deserialize_with = "de_box")]
    init: Option<OBox5>,
    #[serde(default, deserialize_with = "de_quad")]
    init_quad: Option<Quad>,
    #[serde(default)]
    loss: LossEntry,
    #[serde(default = "default_lr")]
    lr: f64,
    #[serde(default = "default_momentum")]
    momentum: f64,
    #[serde(default = "default_max_steps")]
    max_steps: usize,
    #[serde(default = "default_grad_tol")]
    grad_tol: f64,
    #[serde(default)]
    iou_target: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    jitter: f64,
}

fn default_lr() -> f64 {
    Optimizer::default().lr
}

fn default_momentum() -> f64 {
    Optimizer::default().momentum
}

fn default_max_steps() -> usize {
    Optimizer::default().max_steps
}

fn default_grad_tol() -> f64 {
    StopCriteria::default().grad_tol
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LossEntry {
    #[serde(default, deserialize_with = "de_parse")]
    variant: Option<LossVariant>,
    #[serde(default, deserialize_with = "de_parse")]
    norm: Option<NormScheme>,
    #[serde(default, deserialize_with = "de_parse")]
    post: Option<PostFn>,
    #[serde(default, deserialize_with = "de_parse")]
    variance: Option<VarianceMode>,
    beta: Option<f64>,
    kl_direction: Option<KlDirection>,
}

impl LossEntry {
    fn build(self) -> LossConfig {
        let mut cfg = LossConfig::new(self.variant.unwrap_or(LossVariant::Edwd));
        if let Some(n) = self.norm {
            cfg.norm = n;
        }
        if let Some(p) = self.post {
            cfg.post = p;
        }
        if let Some(v) = self.variance {
            cfg.variance = v;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(d) = self.kl_direction {
            cfg.kl_direction = d;
        }
        cfg
    }
}

fn de_parse<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = EwdError>,
{
    let s = String::deserialize(d)?;
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

fn de_box<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<OBox5>, D::Error> {
    let v = <[f64; 5]>::deserialize(d)?;
    OBox5::from_degrees(v[0], v[1], v[2], v[3], v[4])
        .map(Some)
        .map_err(serde::de::Error::custom)
}

fn de_quad<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Quad>, D::Error> {
    let v = <[[f64; 2]; 4]>::deserialize(d)?;
    Quad::new(v.map(|[x, y]| Vec2::new(x, y)))
        .map(Some)
        .map_err(serde::de::Error::custom)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

fn pick_shape(name: &str, field: &str, b: Option<OBox5>, q: Option<Quad>) -> Result<Shape> {
    match (b, q) {
        (Some(b), None) => Ok(Shape::Box(b)),
        (None, Some(q)) => Ok(Shape::Quad(q)),
        (None, None) => Err(EwdError::Manifest(format!(
            "scenario `{name}`: missing `{field}` (or `{field}_quad`)"
        ))),
        (Some(_), Some(_)) => Err(EwdError::Manifest(format!(
            "scenario `{name}`: give only one of `{field}` and `{field}_quad`"
        ))),
    }
}

/// Parse a scenario manifest. Syntax and type errors carry the line and
/// column of the offending value.
pub fn parse_manifest(text: &str) -> Result<Vec<FitScenario>> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                EwdError::Manifest(format!("line {line}, column {col}: {msg}"))
            }
            None => EwdError::Manifest(msg),
        }
    })?;
    if file.scenario.is_empty() {
        return Err(EwdError::Manifest("no [[scenario]] entries".into()));
    }
    file.scenario
        .into_iter()
        .map(|e| {
            let target = pick_shape(&e.name, "target", e.target, e.target_quad)?;
            let init = pick_shape(&e.name, "init", e.init, e.init_quad)?;
            let s = FitScenario {
                name: e.name.clone(),
                target,
                init,
                cfg: e.loss.build(),
                optimizer: Optimizer { lr: e.lr, momentum: e.momentum, max_steps: e.max_steps },
                stop: StopCriteria { grad_tol: e.grad_tol, iou_target: e.iou_target },
                seed: e.seed,
                jitter: e.jitter,
            };
            s.validate()
                .map_err(|err| EwdError::Manifest(format!("scenario `{}`: {err}", e.name)))?;
            Ok(s)
        })
        .collect()
}

/// The versioned standard suite shipped with the crate.
pub const STANDARD_MANIFEST: &str = include_str!("../scenarios/standard.toml");

pub fn standard_scenarios() -> Vec<FitScenario> {
    parse_manifest(STANDARD_MANIFEST).expect("bundled manifest parses")
}

// ---------------------------------------------------------------------------
// Curves

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    /// Aspect ratios `w / h`, each ≥ 1.
    pub ratios: Vec<f64>,
    /// Angle offsets in degrees, sorted ascending.
    pub dtheta_deg: Vec<f64>,
    pub losses: Vec<LossConfig>,
    /// Area shared by every box.
    pub area: f64,
}

impl CurveSpec {
    pub fn new(ratios: Vec<f64>, dtheta_deg: Vec<f64>, losses: Vec<LossConfig>) -> Self {
        Self { ratios, dtheta_deg, losses, area: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ratios.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return Err(EwdError::InvalidArgument(format!(
                "aspect ratios must be >= 1 (use the reciprocal box), got {r}"
            )));
        }
        if self.dtheta_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(EwdError::InvalidArgument("angle grid must be strictly increasing".into()));
        }
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(EwdError::InvalidArgument(format!("area must be > 0, got {}", self.area)));
        }
        for cfg in &self.losses {
            cfg.validate()?;
        }
        Ok(())
    }

    /// `step`-spaced grid from `lo` to `hi` inclusive.
    pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(EwdError::InvalidArgument(format!("bad grid {lo}:{hi}:{step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub ratio: f64,
    pub dtheta_deg: f64,
    pub loss: String,
    pub value: f64,
    /// Active pairing and its margin, for the edge losses.
    pub k: Option<usize>,
    pub gap: Option<f64>,
}

/// The box `(0, 0, sqrt(A r), sqrt(A / r), 0)`.
pub fn curve_box(area: f64, ratio: f64) -> OBox5 {
    OBox5 { cx: 0.0, cy: 0.0, w: (area * ratio).sqrt(), h: (area / ratio).sqrt(), theta: 0.0 }
}

/// Loss of the base box rotated by each offset against the unrotated base
/// box. Rows are ordered by ratio, then loss, then angle.
pub fn sweep_curve(c: &CurveSpec) -> Result<Vec<CurveRow>> {
    c.validate()?;
    let mut rows = Vec::with_capacity(c.ratios.len() * c.losses.len() * c.dtheta_deg.len());
    for &ratio in &c.ratios {
        let target = curve_box(c.area, ratio);
        for cfg in &c.losses {
            for &deg in &c.dtheta_deg {
                let pred = target.rotated(deg.to_radians());
                let v = ewd::box_loss(&pred, &target, cfg)?;
                rows.push(CurveRow {
                    ratio,
                    dtheta_deg: deg,
                    loss: cfg.variant.name(),
                    value: v.value,
                    k: v.k,
                    gap: v.gap,
                });
            }
        }
    }
    Ok(rows)
}

/// Rows of one `(ratio, loss)` series.
pub fn curve_series<'a>(rows: &'a [CurveRow], ratio: f64, loss: &str) -> Vec<&'a CurveRow> {
    rows.iter().filter(|r| r.ratio == ratio && r.loss == loss).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub dtheta_deg: f64,
    pub k: usize,
    /// Margin of the active pairing over the runner-up.
    pub gap: f64,
}

impl CurvePoint {
    pub fn from_row(r: &CurveRow) -> Option<Self> {
        Some(Self { dtheta_deg: r.dtheta_deg, k: r.k?, gap: r.gap? })
    }
}

/// Angles where the active pairing changes. Each switch lies between two
/// neighbouring grid points; the one closer to the tie (smaller margin) is
/// reported.
pub fn detect_turning_point(curve: &[CurvePoint]) -> Vec<f64> {
    curve
        .windows(2)
        .filter(|w| w[0].k != w[1].k)
        .map(|w| if w[0].gap <= w[1].gap { w[0].dtheta_deg } else { w[1].dtheta_deg })
        .collect()
}

// ---------------------------------------------------------------------------
// Loss comparison

#[derive(Debug, Clone, PartialEq)]
pub struct CompareCell {
    pub scenario: String,
    pub loss: String,
    pub steps_to_iou_90: Option<usize>,
    /// Orientation gap at the last step (boxes only).
    pub final_dtheta_deg: Option<f64>,
    pub initial_dtheta_deg: Option<f64>,
    pub final_iou: f64,
    pub status: FitStatus,
    pub steps: usize,
    pub note: Option<String>,
}

/// Run every scenario under every loss. The scenario's own loss is replaced;
/// all other settings, including the seed, are shared across the row.
pub fn compare_losses(scenarios: &[FitScenario], losses: &[LossConfig]) -> Result<Vec<CompareCell>> {
    if scenarios.is_empty() || losses.is_empty() {
        return Err(EwdError::InvalidArgument("need at least one scenario and one loss".into()));
    }
    let mut cells = Vec::with_capacity(scenarios.len() * losses.len());
    for s in scenarios {
        for cfg in losses {
            let run = s.with_loss(cfg.clone());
            let cell = match fit(&run) {
                Ok(trace) => summarize(&run, &trace),
                Err(e) => CompareCell {
                    scenario: s.name.clone(),
                    loss: cfg.variant.name(),
                    steps_to_iou_90: None,
                    final_dtheta_deg: None,
                    initial_dtheta_deg: None,
                    final_iou: f64::NAN,
                    status: FitStatus::Diverged,
                    steps: 0,
                    note: Some(e.to_string()),
                },
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn summarize(s: &FitScenario, trace: &FitTrace) -> CompareCell {
    let gap = |r: Option<&StepRecord>| match (r.map(|r| shape_from_params(&r.params)), &s.target) {
        (Some(Shape::Box(p)), Shape::Box(t)) => Some(orientation_gap_deg(&p, t)),
        _ => None,
    };
    CompareCell {
        scenario: s.name.clone(),
        loss: s.cfg.variant.name(),
        steps_to_iou_90: trace.steps_to_iou(0.9),
        final_dtheta_deg: gap(trace.last()),
        initial_dtheta_deg: gap(trace.first()),
        final_iou: trace.last().map_or(f64::NAN, |r| r.iou),
        status: trace.status,
        steps: trace.last().map_or(0, |r| r.step),
        note: trace.note.clone(),
    }
}
