//! Oriented-box and polygon geometry.
//!
//! All shapes live in y-down image coordinates. A box with angle `theta`
//! has its width axis along `(cos theta, sin theta)` and its height axis along
//! `(-sin theta, cos theta)`; at `theta = 0` these point right and down.
//! Corners and edges are emitted clockwise on screen, starting at the corner
//! `center - width_axis/2 - height_axis/2`, which makes the shoelace area
//! positive.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{EwdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rotated rectangle in center / size / angle form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OBox5 {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl OBox5 {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        let b = Self { cx, cy, w, h, theta };
        b.validate()?;
        Ok(b)
    }

    /// Same as [`OBox5::new`] with the angle given in degrees.
    pub fn from_degrees(cx: f64, cy: f64, w: f64, h: f64, theta_deg: f64) -> Result<Self> {
        Self::new(cx, cy, w, h, theta_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.cx, self.cy, self.w, self.h, self.theta]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(EwdError::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(EwdError::InvalidBox(format!(
                "width and height must be positive, got w={} h={}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.cx, self.cy)
    }

    /// Full-length width vector.
    pub fn width_vec(&self) -> Vec2 {
        Vec2::from_angle(self.theta) * self.w
    }

    /// Full-length height vector, the width axis turned a quarter clockwise
    /// on screen.
    pub fn height_vec(&self) -> Vec2 {
        Vec2::from_angle(self.theta + FRAC_PI_2) * self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn to_params(&self) -> [f64; 5] {
        [self.cx, self.cy, self.w, self.h, self.theta]
    }

    pub fn from_params(p: [f64; 5]) -> Self {
        Self { cx: p[0], cy: p[1], w: p[2], h: p[3], theta: p[4] }
    }

    /// The same rectangle with its edge sequence rotated by `k` positions:
    /// each step swaps width and height and adds a quarter turn.
    pub fn shifted(&self, k: usize) -> OBox5 {
        let (w, h) = if k % 2 == 0 { (self.w, self.h) } else { (self.h, self.w) };
        OBox5 {
            cx: self.cx,
            cy: self.cy,
            w,
            h,
            theta: self.theta + (k % 4) as f64 * FRAC_PI_2,
        }
    }

    /// Rotate about the box center.
    pub fn rotated(&self, dtheta: f64) -> OBox5 {
        OBox5 { theta: self.theta + dtheta, ..*self }
    }

    pub fn to_corners(&self) -> Quad {
        to_corners(self)
    }

    pub fn to_edges(&self) -> EdgeSeq {
        to_edges(self)
    }
}

/// Angle-range convention for 5-parameter boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxDef {
    /// `theta` in `[-pi/2, 0)`.
    Oc,
    /// Long edge first: `w >= h`, `theta` in `[-pi/2, pi/2)`.
    Le,
    /// Minimum angle: `theta` in `[-pi/4, pi/4)`.
    Min,
}

impl BoxDef {
    pub fn name(self) -> &'static str {
        match self {
            BoxDef::Oc => "oc",
            BoxDef::Le => "le",
            BoxDef::Min => "min",
        }
    }

    pub fn parse(s: &str) -> Option<BoxDef> {
        match s.to_ascii_lowercase().as_str() {
            "oc" => Some(BoxDef::Oc),
            "le" => Some(BoxDef::Le),
            "min" => Some(BoxDef::Min),
            _ => None,
        }
    }

    /// Half-open angle range `[lo, hi)`.
    pub fn range(self) -> (f64, f64) {
        match self {
            BoxDef::Oc => (-FRAC_PI_2, 0.0),
            BoxDef::Le => (-FRAC_PI_2, FRAC_PI_2),
            BoxDef::Min => (-FRAC_PI_4, FRAC_PI_4),
        }
    }
}

/// Directed segment `p0 -> p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub p0: Vec2,
    pub p1: Vec2,
}

impl DirectedEdge {
    pub fn new(p0: Vec2, p1: Vec2) -> Self {
        Self { p0, p1 }
    }

    pub fn center(&self) -> Vec2 {
        (self.p0 + self.p1) * 0.5
    }

    pub fn vector(&self) -> Vec2 {
        self.p1 - self.p0
    }

    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    pub fn direction(&self) -> f64 {
        self.vector().angle()
    }

    /// Point at normalized position `t` in `[-1, 1]` (center at 0).
    pub fn point_at(&self, t: f64) -> Vec2 {
        self.center() + self.vector() * (0.5 * t)
    }
}

/// Closed sequence of directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSeq {
    edges: Vec<DirectedEdge>,
}

impl EdgeSeq {
    /// Edges `v[i] -> v[i+1]`, wrapping around. Needs at least three vertices.
    pub fn from_vertices(vertices: &[Vec2]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(EwdError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(EwdError::InvalidPolygon(format!("non-finite vertex {p:?}")));
        }
        let n = vertices.len();
        let edges = (0..n)
            .map(|i| DirectedEdge::new(vertices[i], vertices[(i + 1) % n]))
            .collect();
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> Vec<Vec2> {
        self.edges.iter().map(|e| e.p0).collect()
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        let n = self.edges.len();
        (0..n).all(|i| (self.edges[i].p1 - self.edges[(i + 1) % n].p0).norm() <= tol)
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices())
    }
}

/// Quadrilateral with corners in clockwise (positive-area) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub corners: [Vec2; 4],
}

impl Quad {
    /// Validated constructor: corners must be finite, form a simple polygon
    /// and have positive signed area.
    pub fn new(corners: [Vec2; 4]) -> Result<Self> {
        if corners.iter().any(|p| !p.is_finite()) {
            return Err(EwdError::InvalidPolygon("non-finite corner".into()));
        }
        let area = signed_area(&corners);
        if area <= 0.0 {
            return Err(EwdError::InvalidPolygon(format!(
                "corners must be clockwise with positive signed area, got {area}"
            )));
        }
        let crosses = |a: usize, b: usize| {
            segments_cross(corners[a], corners[(a + 1) % 4], corners[b], corners[(b + 1) % 4])
        };
        if crosses(0, 2) || crosses(1, 3) {
            return Err(EwdError::InvalidPolygon("self-intersecting quadrilateral".into()));
        }
        Ok(Self { corners })
    }

    /// No validation; used for transient states during fitting.
    pub fn from_corners_unchecked(corners: [Vec2; 4]) -> Self {
        Self { corners }
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.corners)
    }

    pub fn centroid(&self) -> Vec2 {
        let s = self.corners.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        s * 0.25
    }

    pub fn to_edges(&self) -> EdgeSeq {
        EdgeSeq {
            edges: (0..4)
                .map(|i| DirectedEdge::new(self.corners[i], self.corners[(i + 1) % 4]))
                .collect(),
        }
    }

    /// Corners as `[x0, y0, x1, y1, ...]`.
    pub fn to_params(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, p) in self.corners.iter().enumerate() {
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
        out
    }

    pub fn from_params(p: &[f64; 8]) -> Self {
        let mut corners = [Vec2::ZERO; 4];
        for (i, c) in corners.iter_mut().enumerate() {
            *c = Vec2::new(p[2 * i], p[2 * i + 1]);
        }
        Self { corners }
    }
}

/// Either kind of regression target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box(OBox5),
    Quad(Quad),
}

impl Shape {
    pub fn to_quad(&self) -> Quad {
        match self {
            Shape::Box(b) => b.to_corners(),
            Shape::Quad(q) => *q,
        }
    }

    pub fn to_edges(&self) -> EdgeSeq {
        match self {
            Shape::Box(b) => b.to_edges(),
            Shape::Quad(q) => q.to_edges(),
        }
    }
}

impl From<OBox5> for Shape {
    fn from(b: OBox5) -> Self {
        Shape::Box(b)
    }
}

impl From<Quad> for Shape {
    fn from(q: Quad) -> Self {
        Shape::Quad(q)
    }
}

pub fn to_corners(b: &OBox5) -> Quad {
    let o = b.center();
    let u = b.width_vec() * 0.5;
    let v = b.height_vec() * 0.5;
    Quad {
        corners: [o - u - v, o + u - v, o + u + v, o - u + v],
    }
}

/// Clockwise edges of a box. Edge 0 runs along the width on the `-height`
/// side, so its center is `o - h/2` and its vector is the width vector; the
/// remaining edges follow clockwise with centers `o + w/2`, `o + h/2`,
/// `o - w/2`.
pub fn to_edges(b: &OBox5) -> EdgeSeq {
    to_corners(b).to_edges()
}

/// Map a box into the angle range of `def`, keeping the rectangle point set.
pub fn canonicalize(b: &OBox5, def: BoxDef) -> OBox5 {
    match def {
        BoxDef::Oc | BoxDef::Min => {
            let (lo, _) = def.range();
            let (theta, turns) = wrap_angle(b.theta, lo, FRAC_PI_2);
            let (w, h) = if turns.rem_euclid(2) == 1 { (b.h, b.w) } else { (b.w, b.h) };
            OBox5 { w, h, theta, ..*b }
        }
        BoxDef::Le => {
            let (w, h, theta) = if b.w < b.h {
                (b.h, b.w, b.theta + FRAC_PI_2)
            } else {
                (b.w, b.h, b.theta)
            };
            let (theta, _) = wrap_angle(theta, -FRAC_PI_2, PI);
            OBox5 { w, h, theta, ..*b }
        }
    }
}

/// Reduce `theta` into `[lo, lo + period)`, returning the reduced angle and
/// the number of periods removed.
pub(crate) fn wrap_angle(theta: f64, lo: f64, period: f64) -> (f64, i64) {
    let mut turns = ((theta - lo) / period).floor();
    let mut t = theta - turns * period;
    if t >= lo + period {
        t -= period;
        turns += 1.0;
    }
    if t < lo {
        t += period;
        turns -= 1.0;
    }
    // rounding can push t back onto the open end
    if t >= lo + period {
        t = lo;
        turns += 1.0;
    }
    (t, turns as i64)
}

/// Shoelace signed area; positive for clockwise-on-screen (y-down) order.
pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum();
    0.5 * twice
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

const DEGENERATE_AREA: f64 = 1e-14;

/// Intersection of two convex polygons by Sutherland-Hodgman clipping.
/// Input orientation is normalized internally; the result has positive
/// signed area (or is empty).
pub fn convex_intersection(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let subject = positively_oriented(subject);
    let clip = positively_oriented(clip);
    let mut output = subject;
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let edge = b - a;
        let inside = |p: Vec2| edge.cross(p - a) >= 0.0;
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let next = input[(j + 1) % n];
            let (cin, nin) = (inside(cur), inside(next));
            if cin {
                output.push(cur);
            }
            if cin != nin {
                let dc = edge.cross(cur - a);
                let dn = edge.cross(next - a);
                let t = dc / (dc - dn);
                output.push(cur + (next - cur) * t);
            }
        }
    }
    output
}

fn positively_oriented(poly: &[Vec2]) -> Vec<Vec2> {
    let mut v = poly.to_vec();
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

/// Intersection-over-union of two convex polygons. Degenerate (near zero
/// area) inputs give 0.
pub fn polygon_iou(a: &[Vec2], b: &[Vec2]) -> f64 {
    let area_a = signed_area(a).abs();
    let area_b = signed_area(b).abs();
    if area_a < DEGENERATE_AREA || area_b < DEGENERATE_AREA {
        return 0.0;
    }
    let inter = signed_area(&convex_intersection(a, b)).abs();
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn rotated_iou(a: &Quad, b: &Quad) -> f64 {
    polygon_iou(&a.corners, &b.corners)
}

pub fn box_iou(a: &OBox5, b: &OBox5) -> f64 {
    rotated_iou(&a.to_corners(), &b.to_corners())
}

/// Point membership for a convex polygon of either orientation.
pub fn convex_contains(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let c = (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]);
        if c == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn same_point_set(a: &Quad, b: &Quad, tol: f64) -> bool {
        a.corners
            .iter()
            .all(|p| b.corners.iter().any(|q| (*p - *q).norm() <= tol))
    }

    #[test]
    fn unit_square_corners_clockwise() {
        let q = OBox5::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap().to_corners();
        let expected = [
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        for (p, e) in q.corners.iter().zip(expected) {
            assert_abs_diff_eq!(p.x, e.x, epsilon = 1e-15);
            assert_abs_diff_eq!(p.y, e.y, epsilon = 1e-15);
        }
        assert!(q.signed_area() > 0.0);
    }

    #[test]
    fn corner_centroid_is_center() {
        let q = OBox5::new(5.0, 5.0, 2.0, 1.0, 0.0).unwrap().to_corners();
        let c = q.centroid();
        assert_abs_diff_eq!(c.x, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.y, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn_swaps_sides() {
        let a = OBox5::new(0.0, 0.0, 2.0, 1.0, FRAC_PI_2).unwrap().to_corners();
        let b = OBox5::new(0.0, 0.0, 1.0, 2.0, 0.0).unwrap().to_corners();
        assert!(same_point_set(&a, &b, 1e-12));
    }

    #[test]
    fn edges_of_axis_aligned_box() {
        let e = OBox5::new(0.0, 0.0, 4.0, 2.0, 0.0).unwrap().to_edges();
        let centers = [(0.0, -1.0), (2.0, 0.0), (0.0, 1.0), (-2.0, 0.0)];
        let lengths = [4.0, 2.0, 4.0, 2.0];
        for (i, edge) in e.edges().iter().enumerate() {
            assert_abs_diff_eq!(edge.center().x, centers[i].0, epsilon = 1e-12);
            assert_abs_diff_eq!(edge.center().y, centers[i].1, epsilon = 1e-12);
            assert_abs_diff_eq!(edge.length(), lengths[i], epsilon = 1e-12);
        }
        assert!(e.is_closed(0.0));
        assert!(e.signed_area() > 0.0);
    }

    #[test]
    fn rotated_square_edges_all_equal() {
        let e = OBox5::new(0.0, 0.0, 2.0, 2.0, FRAC_PI_4).unwrap().to_edges();
        for edge in e.edges() {
            assert_abs_diff_eq!(edge.length(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shifted_box_rotates_edge_sequence() {
        let b = OBox5::new(1.0, -2.0, 3.0, 1.5, 0.3).unwrap();
        let e = b.to_edges();
        for k in 0..4 {
            let s = b.shifted(k).to_edges();
            for i in 0..4 {
                let d = s.edges()[i].p0 - e.edges()[(i + k) % 4].p0;
                assert!(d.norm() < 1e-12, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn canonicalize_min_example() {
        let b = OBox5::from_degrees(0.0, 0.0, 2.0, 1.0, 50.0).unwrap();
        let c = canonicalize(&b, BoxDef::Min);
        assert_abs_diff_eq!(c.w, 1.0);
        assert_abs_diff_eq!(c.h, 2.0);
        assert_abs_diff_eq!(c.theta.to_degrees(), -40.0, epsilon = 1e-12);
        assert!(same_point_set(&b.to_corners(), &c.to_corners(), 1e-12));
    }

    #[test]
    fn canonicalize_le_examples() {
        let b = OBox5::new(0.0, 0.0, 2.0, 1.0, 0.0).unwrap();
        assert_eq!(canonicalize(&b, BoxDef::Le), b);

        let b = OBox5::new(0.0, 0.0, 1.0, 2.0, 0.0).unwrap();
        let c = canonicalize(&b, BoxDef::Le);
        assert_eq!((c.w, c.h), (2.0, 1.0));
        assert_abs_diff_eq!(c.theta.to_degrees(), -90.0, epsilon = 1e-12);
        assert!(same_point_set(&b.to_corners(), &c.to_corners(), 1e-12));
    }

    #[test]
    fn canonicalize_le_square_keeps_orientation() {
        let b = OBox5::from_degrees(0.0, 0.0, 2.0, 2.0, 30.0).unwrap();
        let c = canonicalize(&b, BoxDef::Le);
        assert_abs_diff_eq!(c.theta.to_degrees(), 30.0, epsilon = 1e-12);
    }

    #[test]
    fn canonicalize_oc_range() {
        for deg in [-720.0, -91.0, -90.0, -1.0, 0.0, 45.0, 90.0, 179.0, 400.0] {
            let b = OBox5::from_degrees(0.0, 0.0, 3.0, 1.0, deg).unwrap();
            let c = canonicalize(&b, BoxDef::Oc);
            assert!(c.theta >= -FRAC_PI_2 && c.theta < 0.0, "{deg} -> {}", c.theta);
            assert!(same_point_set(&b.to_corners(), &c.to_corners(), 1e-9));
        }
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = OBox5::new(0.0, 0.0, 2.0, 1.0, 0.4).unwrap();
        assert_abs_diff_eq!(box_iou(&a, &a), 1.0, epsilon = 1e-12);
        let b = OBox5::new(10.0, 0.0, 2.0, 1.0, 0.4).unwrap();
        assert_eq!(box_iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        let a = OBox5::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        let b = OBox5::new(1.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(box_iou(&a, &b), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn iou_square_vs_45_degrees() {
        let a = OBox5::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let b = a.rotated(FRAC_PI_4);
        // the overlap is a regular octagon of area 2(sqrt2 - 1); the union is
        // 2 - 2(sqrt2 - 1), so the IoU is sqrt2 / 2
        let inter = signed_area(&convex_intersection(&a.to_corners().corners, &b.to_corners().corners));
        assert_abs_diff_eq!(inter, 2.0 * (2f64.sqrt() - 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(box_iou(&a, &b), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn iou_degenerate_is_zero() {
        let line = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(3.0, 0.0)];
        assert_eq!(polygon_iou(&line, &line), 0.0);
    }

    #[test]
    fn quad_validation() {
        let ok = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert!(Quad::new(ok).is_ok());
        let mut ccw = ok;
        ccw.reverse();
        assert!(Quad::new(ccw).is_err());
        let bow = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(Quad::new(bow).is_err());
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(OBox5::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OBox5::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(OBox5::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn wrap_angle_boundaries() {
        let (t, n) = wrap_angle(FRAC_PI_4, -FRAC_PI_4, FRAC_PI_2);
        assert_abs_diff_eq!(t, -FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(n, 1);
        let (t, n) = wrap_angle(-FRAC_PI_4, -FRAC_PI_4, FRAC_PI_2);
        assert_eq!((t, n), (-FRAC_PI_4, 0));
    }
}
