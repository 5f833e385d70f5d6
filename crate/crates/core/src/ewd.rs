//! Edge Wasserstein distances and the loss front end.
//!
//! A box or polygon is compared edge by edge after pairing edge `i` of the
//! target with edge `(i + k) mod n` of the prediction. Only cyclic pairings
//! are admissible because edge sequences are directed; the distance is the
//! minimum over all `n` shifts (ties go to the smallest `k`).
//!
//! For oriented boxes the per-shift cost collapses to
//!
//! ```text
//! W_k = 4 |do|^2 + c_w |dw|^2 + c_h |dh|^2,    c = (1 + sigma^2) / 2
//! ```
//!
//! where `do` is the center offset and `dw`, `dh` are differences of the
//! full width and height vectors of the prediction re-expressed under shift
//! `k` and the target. The Gaussian edge model is the `sigma^2 = 1` case.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{EwdError, Result};
use crate::gaussian::{box_gaussian, kld_gaussian, w2_gaussian, KlDirection};
use crate::geom::{canonicalize, BoxDef, EdgeSeq, OBox5, Shape, Vec2};

/// Default Smooth-L1 transition point.
pub const DEFAULT_BETA: f64 = 1.0 / 9.0;

/// Cyclic edge pairing: target edge `i` meets prediction edge `(i + k) mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchIndex(pub usize);

/// Result of minimizing over cyclic pairings.
#[derive(Debug, Clone, PartialEq)]
pub struct Matched {
    pub value: f64,
    pub k: usize,
    /// Cost of every shift, indexed by `k`.
    pub branches: Vec<f64>,
}

impl Matched {
    pub fn from_branches(branches: Vec<f64>) -> Self {
        let mut k = 0;
        for (i, &v) in branches.iter().enumerate() {
            // strict comparison keeps the smallest index on ties; NaN never wins
            if v < branches[k] || branches[k].is_nan() {
                k = i;
            }
        }
        Self { value: branches[k], k, branches }
    }

    pub fn match_index(&self) -> MatchIndex {
        MatchIndex(self.k)
    }

    /// Distance from the active branch to the runner-up. Small gaps mean the
    /// argmin is about to switch.
    pub fn gap(&self) -> f64 {
        self.branches
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.k)
            .map(|(_, &v)| v - self.value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scale normalization applied before measuring distances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NormScheme {
    #[default]
    None,
    ImageSize(f64),
    AnchorSize(f64),
    /// Widths by `w_t`, heights by `h_t`, center offsets by `sqrt(w_t h_t)`.
    TargetWH,
    TargetMin,
    TargetMax,
}

/// Per-quantity scales derived from a [`NormScheme`] and a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub center: f64,
    pub w: f64,
    pub h: f64,
}

impl Scales {
    pub const UNIT: Scales = Scales { center: 1.0, w: 1.0, h: 1.0 };

    fn uniform(s: f64) -> Result<Scales> {
        check_scale(s)?;
        Ok(Scales { center: s, w: s, h: s })
    }
}

fn check_scale(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(EwdError::InvalidScale(s))
    }
}

impl NormScheme {
    pub fn scales(&self, target: &OBox5) -> Result<Scales> {
        match *self {
            NormScheme::None => Ok(Scales::UNIT),
            NormScheme::ImageSize(s) | NormScheme::AnchorSize(s) => Scales::uniform(s),
            NormScheme::TargetWH => {
                check_scale(target.w)?;
                check_scale(target.h)?;
                Ok(Scales { center: (target.w * target.h).sqrt(), w: target.w, h: target.h })
            }
            NormScheme::TargetMin => Scales::uniform(target.w.min(target.h)),
            NormScheme::TargetMax => Scales::uniform(target.w.max(target.h)),
        }
    }

    /// One isotropic scale for a polygon target: the square root of its area
    /// stands in for `sqrt(w_t h_t)`, and min/max use edge lengths.
    pub fn polygon_scale(&self, target: &EdgeSeq) -> Result<f64> {
        let lengths = target.edges().iter().map(|e| e.length());
        let s = match *self {
            NormScheme::None => 1.0,
            NormScheme::ImageSize(s) | NormScheme::AnchorSize(s) => s,
            NormScheme::TargetWH => target.signed_area().abs().sqrt(),
            NormScheme::TargetMin => lengths.fold(f64::INFINITY, f64::min),
            NormScheme::TargetMax => lengths.fold(0.0, f64::max),
        };
        check_scale(s)?;
        Ok(s)
    }

    /// Isotropic scale used by the Gaussian and Smooth-L1 baselines.
    pub fn isotropic_scale(&self, target: &OBox5) -> Result<f64> {
        Ok(self.scales(target)?.center)
    }
}

impl fmt::Display for NormScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormScheme::None => write!(f, "none"),
            NormScheme::ImageSize(s) => write!(f, "image:{s}"),
            NormScheme::AnchorSize(s) => write!(f, "anchor:{s}"),
            NormScheme::TargetWH => write!(f, "target_wh"),
            NormScheme::TargetMin => write!(f, "target_min"),
            NormScheme::TargetMax => write!(f, "target_max"),
        }
    }
}

impl FromStr for NormScheme {
    type Err = EwdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.to_string(), Some(a.to_string())),
            None => (s.clone(), None),
        };
        let value = |a: Option<String>| -> Result<f64> {
            let a = a.ok_or_else(|| EwdError::InvalidConfig(format!("`{s}` needs a scale, e.g. {head}:800")))?;
            let v: f64 = a
                .parse()
                .map_err(|_| EwdError::InvalidConfig(format!("bad scale `{a}`")))?;
            check_scale(v)?;
            Ok(v)
        };
        match head.as_str() {
            "none" => Ok(NormScheme::None),
            "image" | "image_size" => Ok(NormScheme::ImageSize(value(arg)?)),
            "anchor" | "anchor_size" => Ok(NormScheme::AnchorSize(value(arg)?)),
            "target_wh" | "wh" => Ok(NormScheme::TargetWH),
            "target_min" | "min" => Ok(NormScheme::TargetMin),
            "target_max" | "max" => Ok(NormScheme::TargetMax),
            _ => Err(EwdError::InvalidConfig(format!("unknown normalization `{s}`"))),
        }
    }
}

/// Normalized comparison quantities for a prediction/target pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedDeltas {
    /// Center offset divided by the center scale.
    pub offset: Vec2,
    pub pred_w: f64,
    pub pred_h: f64,
    pub target_w: f64,
    pub target_h: f64,
    pub scales: Scales,
}

pub fn apply_norm(pred: &OBox5, target: &OBox5, scheme: NormScheme) -> Result<NormalizedDeltas> {
    let scales = scheme.scales(target)?;
    Ok(normalized(pred, target, scales))
}

fn normalized(pred: &OBox5, target: &OBox5, scales: Scales) -> NormalizedDeltas {
    NormalizedDeltas {
        offset: (pred.center() - target.center()) * (1.0 / scales.center),
        pred_w: pred.w / scales.w,
        pred_h: pred.h / scales.h,
        target_w: target.w / scales.w,
        target_h: target.h / scales.h,
        scales,
    }
}

/// Monotone map applied to the squared distance.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PostFn {
    #[default]
    Identity,
    Sqrt,
    Log1p,
    /// `1 - 1 / (tau + inner(W))`.
    InvTau { tau: f64, inner: Box<PostFn> },
}

impl PostFn {
    pub fn inv_tau(tau: f64, inner: PostFn) -> Self {
        PostFn::InvTau { tau, inner: Box::new(inner) }
    }

    pub fn apply(&self, w: f64) -> f64 {
        apply_post(w, self)
    }

    /// Derivative with respect to `W`. The second field flags the
    /// non-differentiable point of `sqrt` at 0, where 0 is returned.
    pub fn derivative(&self, w: f64) -> (f64, bool) {
        match self {
            PostFn::Identity => (1.0, false),
            PostFn::Sqrt => {
                if w <= 0.0 {
                    (0.0, true)
                } else {
                    (0.5 / w.sqrt(), false)
                }
            }
            PostFn::Log1p => (1.0 / (1.0 + w), false),
            PostFn::InvTau { tau, inner } => {
                let g = inner.apply(w);
                let (dg, flag) = inner.derivative(w);
                (dg / (tau + g).powi(2), flag)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PostFn::InvTau { tau, inner } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(EwdError::InvalidConfig(format!("tau must be positive, got {tau}")));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Whether `apply(0) == 0`.
    pub fn maps_zero_to_zero(&self) -> bool {
        match self {
            PostFn::InvTau { tau, inner } => inner.maps_zero_to_zero() && *tau == 1.0,
            _ => true,
        }
    }
}

pub fn apply_post(w: f64, post: &PostFn) -> f64 {
    match post {
        PostFn::Identity => w,
        PostFn::Sqrt => w.max(0.0).sqrt(),
        PostFn::Log1p => w.ln_1p(),
        PostFn::InvTau { tau, inner } => 1.0 - 1.0 / (tau + inner.apply(w)),
    }
}

impl fmt::Display for PostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostFn::Identity => write!(f, "identity"),
            PostFn::Sqrt => write!(f, "sqrt"),
            PostFn::Log1p => write!(f, "log1p"),
            PostFn::InvTau { tau, inner } => write!(f, "inv_tau:{tau}:{inner}"),
        }
    }
}

impl FromStr for PostFn {
    type Err = EwdError;

    /// `identity`, `sqrt`, `log1p`, or `inv_tau:<tau>[:<inner>]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "identity" | "none" => return Ok(PostFn::Identity),
            "sqrt" => return Ok(PostFn::Sqrt),
            "log1p" | "log" => return Ok(PostFn::Log1p),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("inv_tau:") {
            let (tau, inner) = match rest.split_once(':') {
                Some((t, i)) => (t, i.parse()?),
                None => (rest, PostFn::Identity),
            };
            let tau: f64 = tau
                .parse()
                .map_err(|_| EwdError::InvalidConfig(format!("bad tau `{tau}`")))?;
            let post = PostFn::inv_tau(tau, inner);
            post.validate()?;
            return Ok(post);
        }
        Err(EwdError::InvalidConfig(format!("unknown post function `{s}`")))
    }
}

/// How the dense edge model assigns variances to width and height edges.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VarianceMode {
    /// `sigma_w^2 = w_t / h_t`, `sigma_h^2 = h_t / w_t`.
    #[default]
    AspectRatio,
    Constant(f64),
    /// Normalized target edge lengths, `w_t / s_w` and `h_t / s_h`.
    TargetLength,
}

impl VarianceMode {
    /// `(sigma_w^2, sigma_h^2)` for a box target.
    pub fn box_variances(&self, target: &OBox5, scales: &Scales) -> (f64, f64) {
        match *self {
            VarianceMode::AspectRatio => (target.w / target.h, target.h / target.w),
            VarianceMode::Constant(c) => (c, c),
            VarianceMode::TargetLength => (target.w / scales.w, target.h / scales.h),
        }
    }

    /// Per-edge variances for a polygon target. `AspectRatio` divides each
    /// edge length by the mean of its two neighbours, which reduces to
    /// `w/h` and `h/w` on rectangles.
    pub fn polygon_variances(&self, target: &EdgeSeq, scale: f64) -> Vec<f64> {
        let lengths: Vec<f64> = target.edges().iter().map(|e| e.length()).collect();
        let n = lengths.len();
        match *self {
            VarianceMode::AspectRatio => (0..n)
                .map(|i| {
                    let neighbours = 0.5 * (lengths[(i + n - 1) % n] + lengths[(i + 1) % n]);
                    if neighbours > 0.0 {
                        lengths[i] / neighbours
                    } else {
                        1.0
                    }
                })
                .collect(),
            VarianceMode::Constant(c) => vec![c; n],
            VarianceMode::TargetLength => lengths.iter().map(|l| l / scale).collect(),
        }
    }
}

impl fmt::Display for VarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceMode::AspectRatio => write!(f, "aspect_ratio"),
            VarianceMode::Constant(c) => write!(f, "constant:{c}"),
            VarianceMode::TargetLength => write!(f, "target_length"),
        }
    }
}

impl FromStr for VarianceMode {
    type Err = EwdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "aspect_ratio" | "aspect" => Ok(VarianceMode::AspectRatio),
            "target_length" | "length" => Ok(VarianceMode::TargetLength),
            _ => match s.strip_prefix("constant:") {
                Some(v) => {
                    let c: f64 = v
                        .parse()
                        .map_err(|_| EwdError::InvalidConfig(format!("bad variance `{v}`")))?;
                    if !(c.is_finite() && c >= 0.0) {
                        return Err(EwdError::InvalidConfig(format!("variance must be >= 0, got {c}")));
                    }
                    Ok(VarianceMode::Constant(c))
                }
                None => Err(EwdError::InvalidConfig(format!("unknown variance mode `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossVariant {
    Egwd,
    Edwd,
    Gwd,
    Kld,
    SmoothL1(BoxDef),
}

impl LossVariant {
    pub fn name(&self) -> String {
        match self {
            LossVariant::Egwd => "egwd".into(),
            LossVariant::Edwd => "edwd".into(),
            LossVariant::Gwd => "gwd".into(),
            LossVariant::Kld => "kld".into(),
            LossVariant::SmoothL1(def) => format!("smoothl1_{}", def.name()),
        }
    }

    /// Whether analytic gradients are available.
    pub fn is_edge_family(&self) -> bool {
        matches!(self, LossVariant::Egwd | LossVariant::Edwd)
    }
}

impl FromStr for LossVariant {
    type Err = EwdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "egwd" => Ok(LossVariant::Egwd),
            "edwd" => Ok(LossVariant::Edwd),
            "gwd" => Ok(LossVariant::Gwd),
            "kld" => Ok(LossVariant::Kld),
            _ => s
                .strip_prefix("smoothl1_")
                .or_else(|| s.strip_prefix("smooth_l1_"))
                .and_then(BoxDef::parse)
                .map(LossVariant::SmoothL1)
                .ok_or_else(|| EwdError::InvalidConfig(format!("unknown loss `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub variant: LossVariant,
    pub norm: NormScheme,
    pub post: PostFn,
    pub variance: VarianceMode,
    /// Smooth-L1 transition point.
    pub beta: f64,
    pub kl_direction: KlDirection,
}

impl LossConfig {
    pub fn new(variant: LossVariant) -> Self {
        let variance = match variant {
            LossVariant::Egwd => VarianceMode::Constant(1.0),
            _ => VarianceMode::AspectRatio,
        };
        Self {
            variant,
            norm: NormScheme::TargetWH,
            post: PostFn::Identity,
            variance,
            beta: DEFAULT_BETA,
            kl_direction: KlDirection::PredToTarget,
        }
    }

    pub fn edwd() -> Self {
        Self::new(LossVariant::Edwd)
    }

    pub fn egwd() -> Self {
        Self::new(LossVariant::Egwd)
    }

    pub fn gwd() -> Self {
        Self::new(LossVariant::Gwd)
    }

    pub fn kld() -> Self {
        Self::new(LossVariant::Kld)
    }

    pub fn smooth_l1(def: BoxDef) -> Self {
        Self::new(LossVariant::SmoothL1(def))
    }

    /// Default configuration for a loss name such as `edwd` or `smoothl1_min`.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn with_norm(mut self, norm: NormScheme) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_post(mut self, post: PostFn) -> Self {
        self.post = post;
        self
    }

    pub fn with_variance(mut self, variance: VarianceMode) -> Self {
        self.variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.post.validate()?;
        if let LossVariant::SmoothL1(_) = self.variant {
            if !(self.beta.is_finite() && self.beta > 0.0) {
                return Err(EwdError::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
            }
        }
        if let VarianceMode::Constant(c) = self.variance {
            if !(c.is_finite() && c >= 0.0) {
                return Err(EwdError::InvalidConfig(format!("variance must be >= 0, got {c}")));
            }
        }
        match self.norm {
            NormScheme::ImageSize(s) | NormScheme::AnchorSize(s) => check_scale(s),
            _ => Ok(()),
        }
    }

    /// Variances used by the edge losses; EGWD is pinned to 1.
    pub fn effective_variance(&self) -> VarianceMode {
        match self.variant {
            LossVariant::Egwd => VarianceMode::Constant(1.0),
            _ => self.variance,
        }
    }
}

/// `|l1 u(theta1) - l2 u(theta2)|^2 = l1^2 + l2^2 - 2 l1 l2 cos(theta1 - theta2)`.
pub fn delta_w_sq(l1: f64, theta1: f64, l2: f64, theta2: f64) -> f64 {
    (Vec2::from_angle(theta1) * l1 - Vec2::from_angle(theta2) * l2).norm_sq()
}

/// Cost of one cyclic shift for boxes, in normalized units.
pub(crate) fn box_branch(
    pred: &OBox5,
    target: &OBox5,
    scales: Scales,
    sigma_w: f64,
    sigma_h: f64,
    k: usize,
) -> f64 {
    let p = pred.shifted(k);
    let d = normalized(&p, target, scales);
    let cw = 0.5 * (1.0 + sigma_w);
    let ch = 0.5 * (1.0 + sigma_h);
    4.0 * d.offset.norm_sq()
        + cw * delta_w_sq(d.pred_w, p.theta, d.target_w, target.theta)
        + ch * delta_w_sq(d.pred_h, p.theta, d.target_h, target.theta)
}

fn box_match(pred: &OBox5, target: &OBox5, scales: Scales, sigma_w: f64, sigma_h: f64) -> Matched {
    Matched::from_branches(
        (0..4)
            .map(|k| box_branch(pred, target, scales, sigma_w, sigma_h, k))
            .collect(),
    )
}

/// Edge-Gaussian distance between boxes without normalization:
/// `min_k 4|do|^2 + |dw|^2 + |dh|^2`.
pub fn egwd_obox(pred: &OBox5, target: &OBox5) -> Matched {
    box_match(pred, target, Scales::UNIT, 1.0, 1.0)
}

/// Dense-edge distance between boxes using the normalization and variance
/// settings of `cfg`. With `Constant(1)` variances this is the edge-Gaussian
/// distance.
pub fn edwd_obox(pred: &OBox5, target: &OBox5, cfg: &LossConfig) -> Result<Matched> {
    let scales = cfg.norm.scales(target)?;
    let (sw, sh) = cfg.effective_variance().box_variances(target, &scales);
    Ok(box_match(pred, target, scales, sw, sh))
}

/// Gaussian Wasserstein distance between the full-box Gaussians.
pub fn gwd_box(pred: &OBox5, target: &OBox5) -> Result<f64> {
    w2_gaussian(&box_gaussian(pred), &box_gaussian(target))
}

pub fn kld_box(pred: &OBox5, target: &OBox5, direction: KlDirection) -> Result<f64> {
    let (p, t) = (box_gaussian(pred), box_gaussian(target));
    match direction {
        KlDirection::PredToTarget => kld_gaussian(&p, &t),
        KlDirection::TargetToPred => kld_gaussian(&t, &p),
    }
}

/// Both boxes re-expressed in target-centred coordinates divided by `s`.
fn isotropic_pair(pred: &OBox5, target: &OBox5, s: f64) -> (OBox5, OBox5) {
    let p = OBox5 {
        cx: (pred.cx - target.cx) / s,
        cy: (pred.cy - target.cy) / s,
        w: pred.w / s,
        h: pred.h / s,
        theta: pred.theta,
    };
    let t = OBox5 { cx: 0.0, cy: 0.0, w: target.w / s, h: target.h / s, theta: target.theta };
    (p, t)
}

pub fn smooth_l1(x: f64, beta: f64) -> f64 {
    let a = x.abs();
    if a < beta {
        0.5 * a * a / beta
    } else {
        a - 0.5 * beta
    }
}

/// Smooth-L1 over the five box parameters. The target is encoded in the
/// `def` angle convention; the prediction is taken as raw regressor output.
pub fn smooth_l1_loss(
    pred: &OBox5,
    target: &OBox5,
    def: BoxDef,
    norm: NormScheme,
    beta: f64,
) -> Result<f64> {
    let t = canonicalize(target, def);
    let scales = norm.scales(&t)?;
    let deltas = smooth_l1_deltas(pred, &t, &scales);
    Ok(deltas.iter().map(|&d| smooth_l1(d, beta)).sum())
}

/// `[dx/s, dy/s, dw/s_w, dh/s_h, dtheta]` against an already encoded target.
pub fn smooth_l1_deltas(pred: &OBox5, target: &OBox5, scales: &Scales) -> [f64; 5] {
    [
        (pred.cx - target.cx) / scales.center,
        (pred.cy - target.cy) / scales.center,
        (pred.w - target.w) / scales.w,
        (pred.h - target.h) / scales.h,
        pred.theta - target.theta,
    ]
}

/// Dense-edge distance between polygons with per-target-edge variances:
/// `min_k sum_i |dc_i|^2 + sigma_i^2 / 4 |dv_i|^2`.
pub fn edwd_polygon(pred: &EdgeSeq, target: &EdgeSeq, variances: &[f64]) -> Result<Matched> {
    let n = target.len();
    if pred.len() != n {
        return Err(EwdError::LengthMismatch(pred.len(), n));
    }
    if variances.len() != n {
        return Err(EwdError::LengthMismatch(variances.len(), n));
    }
    let pe = pred.edges();
    let te = target.edges();
    let branches = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let (p, t) = (&pe[(i + k) % n], &te[i]);
                    (p.center() - t.center()).norm_sq()
                        + 0.25 * variances[i] * (p.vector() - t.vector()).norm_sq()
                })
                .sum()
        })
        .collect();
    Ok(Matched::from_branches(branches))
}

/// Evaluated loss with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Distance before the post function (the raw Smooth-L1 sum for that
    /// baseline).
    pub distance: f64,
    /// Active pairing for the edge losses.
    pub k: Option<usize>,
    /// Gap to the runner-up pairing for the edge losses.
    pub gap: Option<f64>,
}

/// Unified entry point: normalize, measure, post-process.
pub fn loss(pred: &Shape, target: &Shape, cfg: &LossConfig) -> Result<LossValue> {
    cfg.validate()?;
    match (pred, target) {
        (Shape::Box(p), Shape::Box(t)) => box_loss(p, t, cfg),
        _ => polygon_loss(&pred.to_edges(), &target.to_edges(), cfg),
    }
}

pub fn box_loss(pred: &OBox5, target: &OBox5, cfg: &LossConfig) -> Result<LossValue> {
    let with_post = |distance: f64| LossValue {
        value: cfg.post.apply(distance),
        distance,
        k: None,
        gap: None,
    };
    match cfg.variant {
        LossVariant::Egwd | LossVariant::Edwd => {
            let m = edwd_obox(pred, target, cfg)?;
            Ok(LossValue { k: Some(m.k), gap: Some(m.gap()), ..with_post(m.value) })
        }
        LossVariant::Gwd => {
            let (p, t) = isotropic_pair(pred, target, cfg.norm.isotropic_scale(target)?);
            Ok(with_post(gwd_box(&p, &t)?))
        }
        LossVariant::Kld => {
            let (p, t) = isotropic_pair(pred, target, cfg.norm.isotropic_scale(target)?);
            Ok(with_post(kld_box(&p, &t, cfg.kl_direction)?))
        }
        LossVariant::SmoothL1(def) => {
            let v = smooth_l1_loss(pred, target, def, cfg.norm, cfg.beta)?;
            Ok(LossValue { value: v, distance: v, k: None, gap: None })
        }
    }
}

pub fn polygon_loss(pred: &EdgeSeq, target: &EdgeSeq, cfg: &LossConfig) -> Result<LossValue> {
    if !cfg.variant.is_edge_family() {
        return Err(EwdError::InvalidConfig(format!(
            "{} is only defined for oriented boxes",
            cfg.variant.name()
        )));
    }
    let s = cfg.norm.polygon_scale(target)?;
    let variances = cfg.effective_variance().polygon_variances(target, s);
    let m = edwd_polygon(pred, target, &variances)?;
    let distance = m.value / (s * s);
    Ok(LossValue {
        value: cfg.post.apply(distance),
        distance,
        k: Some(m.k),
        gap: Some(m.gap() / (s * s)),
    })
}

/// A box rotated by a quarter turn `k` times about its center, as seen by
/// the k-th pairing; re-exported for callers building reparameterizations.
pub fn shift_box(b: &OBox5, k: usize) -> OBox5 {
    b.shifted(k)
}

/// `theta` offset applied by a cyclic shift.
pub fn shift_angle(k: usize) -> f64 {
    (k % 4) as f64 * FRAC_PI_2
}
