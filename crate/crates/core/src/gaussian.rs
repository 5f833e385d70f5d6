//! 2-D Gaussian algebra for box and edge distributions.
//!
//! Edge Gaussians are rank 1, so every routine here accepts singular
//! positive semi-definite covariances. Matrix square roots use the closed
//! 2x2 identity `sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M))`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{EwdError, Result};
use crate::geom::{DirectedEdge, OBox5, Vec2};

/// Eigenvalues above this negative threshold are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-12;
/// Eigenvalues below this are rejected as non-PSD.
pub const PSD_REJECT: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const ZERO: Mat2 = Mat2 { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Self { a: x, b: 0.0, c: 0.0, d: y }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c, b: -s, c: s, d: c }
    }

    pub fn transpose(self) -> Self {
        Self { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Average with the transpose.
    pub fn symmetrized(self) -> Self {
        let off = 0.5 * (self.b + self.c);
        Self { a: self.a, b: off, c: off, d: self.d }
    }

    pub fn scale(self, s: f64) -> Self {
        Self { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn inverse(self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det })
    }

    /// Frobenius norm.
    pub fn norm(self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn is_symmetric(self, tol: f64) -> bool {
        (self.b - self.c).abs() <= tol * (1.0 + self.norm())
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(self) -> (f64, f64) {
        let s = self.symmetrized();
        let half_tr = 0.5 * s.trace();
        let disc = (0.5 * (s.a - s.d)).hypot(s.b);
        (half_tr - disc, half_tr + disc)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a + r.a, self.b + r.b, self.c + r.c, self.d + r.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a - r.a, self.b - r.b, self.c - r.c, self.d - r.d)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

/// Check symmetry and positive semi-definiteness.
pub fn check_psd(m: Mat2) -> Result<()> {
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(EwdError::InvalidCovariance { min_eigenvalue: f64::NAN });
    }
    let (lo, _) = m.sym_eigenvalues();
    let scale = 1.0 + m.trace().abs();
    if !lo.is_finite() || lo < -PSD_REJECT * scale {
        return Err(EwdError::InvalidCovariance { min_eigenvalue: lo });
    }
    Ok(())
}

/// Principal square root of a symmetric PSD 2x2 matrix.
pub fn sqrtm_2x2(m: Mat2) -> Result<Mat2> {
    check_psd(m)?;
    let m = m.symmetrized();
    let s = rank_aware_det(m).sqrt();
    let t2 = m.trace() + 2.0 * s;
    if t2 <= 0.0 {
        return Ok(Mat2::ZERO);
    }
    let t = t2.sqrt();
    Ok(Mat2::new((m.a + s) / t, m.b / t, m.c / t, (m.d + s) / t))
}

/// Determinant with cancellation noise removed: `a d - b c` of a rank-1
/// matrix lands anywhere in `+-eps tr^2`, and the square root would turn that
/// into a relative error of `sqrt(eps)`.
fn rank_aware_det(m: Mat2) -> f64 {
    let det = m.det();
    let tr = m.trace();
    if det <= RANK_NOISE * tr * tr {
        0.0
    } else {
        det
    }
}

const RANK_NOISE: f64 = 16.0 * f64::EPSILON;

/// `tr((A B^2 A)^(1/2))` for symmetric square-root factors `A`, `B`: the
/// nuclear norm of `X = A B`, `sqrt(|X|_F^2 + 2 |det X|)`. This avoids taking
/// the square root of a nearly vanishing matrix when the factors are
/// orthogonal rank-1 projections.
fn cross_root_trace(root1: Mat2, root2: Mat2) -> f64 {
    let x = root1 * root2;
    let fro_sq = x.a * x.a + x.b * x.b + x.c * x.c + x.d * x.d;
    (fro_sq + 2.0 * x.det().abs()).sqrt()
}

/// 2-D Gaussian with a possibly singular covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauss2 {
    pub mu: Vec2,
    pub sigma: Mat2,
}

impl Gauss2 {
    pub fn new(mu: Vec2, sigma: Mat2) -> Result<Self> {
        check_psd(sigma)?;
        Ok(Self { mu, sigma: sigma.symmetrized() })
    }

    /// Build from a symmetric square-root factor, `sigma = half * half`.
    pub fn from_sqrt(mu: Vec2, half: Mat2) -> Self {
        Self { mu, sigma: (half * half).symmetrized() }
    }
}

/// Gaussian of the full box: `sigma^(1/2) = R diag(w/2, h/2) R^T`.
pub fn box_gaussian(b: &OBox5) -> Gauss2 {
    let r = Mat2::rotation(b.theta);
    let half = r * Mat2::diag(0.5 * b.w, 0.5 * b.h) * r.transpose();
    Gauss2::from_sqrt(b.center(), half)
}

/// Rank-1 Gaussian of an edge: mean at the edge center, spread `len/2`
/// along the edge direction. Zero-length edges become point masses.
pub fn edge_gaussian(e: &DirectedEdge) -> Gauss2 {
    let len = e.length();
    if len == 0.0 {
        return Gauss2 { mu: e.center(), sigma: Mat2::ZERO };
    }
    let r = Mat2::rotation(e.direction());
    let half = r * Mat2::diag(0.5 * len, 0.0) * r.transpose();
    Gauss2::from_sqrt(e.center(), half)
}

/// Squared 2-Wasserstein distance between Gaussians:
/// `|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^(1/2) S2 S1^(1/2))^(1/2))`.
///
/// Since `S1^(1/2) S2 S1^(1/2) = X X^T` with `X = S1^(1/2) S2^(1/2)`, the
/// trace of its square root is the sum of the singular values of `X`.
pub fn w2_gaussian(g1: &Gauss2, g2: &Gauss2) -> Result<f64> {
    let root1 = sqrtm_2x2(g1.sigma)?;
    let root2 = sqrtm_2x2(g2.sigma)?;
    let tr_term = g1.sigma.trace() + g2.sigma.trace() - 2.0 * cross_root_trace(root1, root2);
    let w = (g1.mu - g2.mu).norm_sq() + tr_term;
    Ok(clamp_small_negative(w))
}

/// Which argument is the reference distribution of the KL divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `KL(pred || target)`.
    #[default]
    PredToTarget,
    /// `KL(target || pred)`.
    TargetToPred,
}

/// `KL(N(mu1, S1) || N(mu2, S2))`. Both covariances must be non-singular.
pub fn kld_gaussian(g1: &Gauss2, g2: &Gauss2) -> Result<f64> {
    check_psd(g1.sigma)?;
    check_psd(g2.sigma)?;
    let det1 = g1.sigma.det();
    let det2 = g2.sigma.det();
    let tiny = |m: Mat2| PSD_CLAMP * m.trace().powi(2).max(f64::MIN_POSITIVE);
    if det2 <= tiny(g2.sigma) {
        return Err(EwdError::DegenerateDistribution { det: det2 });
    }
    if det1 <= tiny(g1.sigma) {
        return Err(EwdError::DegenerateDistribution { det: det1 });
    }
    let inv2 = g2.sigma.inverse().ok_or(EwdError::DegenerateDistribution { det: det2 })?;
    let dmu = g2.mu - g1.mu;
    let mahalanobis = dmu.dot(inv2.mul_vec(dmu));
    let kl = 0.5 * ((inv2 * g1.sigma).trace() + mahalanobis - 2.0 + (det2 / det1).ln());
    Ok(clamp_small_negative(kl))
}

fn clamp_small_negative(v: f64) -> f64 {
    if v < 0.0 && v >= -PSD_CLAMP * (1.0 + v.abs()) {
        0.0
    } else {
        v.max(0.0)
    }
}
