//! Brute-force evaluators used to check the closed forms.
//!
//! Nothing here shares a numerical code path with [`crate::gaussian`] or
//! [`crate::ewd`]: square roots go through explicit eigendecompositions,
//! edge distances through quadrature, and transport through exact discrete
//! solvers. These are slow and meant for tests and the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EwdError, Result};
use crate::gaussian::{Gauss2, Mat2};
use crate::geom::{DirectedEdge, OBox5, Quad, Vec2};

/// Largest cloud accepted by the general transport solver.
pub const TRANSPORT_ATOM_LIMIT: usize = 64;
/// Largest cloud accepted by the assignment solver.
pub const ASSIGNMENT_ATOM_LIMIT: usize = 1024;

const WEIGHT_TOL: f64 = 1e-12;
const EIG_CLAMP: f64 = 64.0 * f64::EPSILON;

/// Weighted point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec2>,
    weights: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(EwdError::LengthMismatch(points.len(), weights.len()));
        }
        if points.is_empty() {
            return Err(EwdError::InvalidArgument("empty point cloud".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(EwdError::InvalidArgument(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(EwdError::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(EwdError::InvalidArgument("non-finite point".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// `n` atoms at the midpoints `x_j = (2j + 1) / n - 1` of the edge.
    pub fn from_edge(e: &DirectedEdge, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(EwdError::InvalidArgument("need at least one atom".into()));
        }
        Self::uniform(
            (0..n)
                .map(|j| e.point_at((2 * j + 1) as f64 / n as f64 - 1.0))
                .collect(),
        )
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= WEIGHT_TOL)
    }
}

/// Second moment of the midpoint sampling used by [`PointCloud::from_edge`]:
/// `1/3 - 1/(3 n^2)`.
pub fn midpoint_variance(n: usize) -> f64 {
    let n = n as f64;
    1.0 / 3.0 - 1.0 / (3.0 * n * n)
}

struct SymEig {
    values: [f64; 2],
    /// Unit eigenvector of `values[0]`; the other is its perpendicular.
    vector: Vec2,
}

/// Jacobi rotation that diagonalizes a symmetric 2x2 matrix.
fn sym_eig(m: Mat2) -> SymEig {
    let off = 0.5 * (m.b + m.c);
    let phi = 0.5 * (2.0 * off).atan2(m.a - m.d);
    let (s, c) = phi.sin_cos();
    let l0 = c * c * m.a + 2.0 * s * c * off + s * s * m.d;
    let l1 = s * s * m.a - 2.0 * s * c * off + c * c * m.d;
    SymEig { values: [l0, l1], vector: Vec2::new(c, s) }
}

/// Square root through the eigendecomposition. Eigenvalues below
/// `64 eps * floor` are treated as rounding noise and dropped.
fn sqrtm_eig(m: Mat2, floor: f64) -> Result<Mat2> {
    let eig = sym_eig(m);
    let tol = EIG_CLAMP * floor.max(eig.values[0].abs()).max(eig.values[1].abs());
    let root = |l: f64| -> Result<f64> {
        if l < -1e-9 * (1.0 + floor) {
            Err(EwdError::InvalidCovariance { min_eigenvalue: l })
        } else if l <= tol {
            Ok(0.0)
        } else {
            Ok(l.sqrt())
        }
    };
    let (r0, r1) = (root(eig.values[0])?, root(eig.values[1])?);
    let u = eig.vector;
    let v = Vec2::new(-u.y, u.x);
    Ok(outer(u, u).scale(r0) + outer(v, v).scale(r1))
}

fn outer(a: Vec2, b: Vec2) -> Mat2 {
    Mat2::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
}

/// Squared Gaussian 2-Wasserstein distance evaluated literally:
/// `|dmu|^2 + tr S1 + tr S2 - 2 tr (S1^(1/2) S2 S1^(1/2))^(1/2)`.
pub fn w2_gaussian_numeric(g1: &Gauss2, g2: &Gauss2) -> Result<f64> {
    let (s1, s2) = (g1.sigma, g2.sigma);
    let floor = s1.trace().abs() * s2.trace().abs();
    let r1 = sqrtm_eig(s1, s1.trace().abs())?;
    let inner = (r1 * s2 * r1).symmetrized();
    let cross = sqrtm_eig(inner, floor)?.trace();
    let w = (g1.mu - g2.mu).norm_sq() + s1.trace() + s2.trace() - 2.0 * cross;
    Ok(if w < 0.0 && w > -1e-12 * (1.0 + floor.sqrt()) { 0.0 } else { w })
}

/// Degenerate Gaussian of an edge, built from the edge vector:
/// `sigma = v v^T / 4`.
fn edge_gaussian_direct(e: &DirectedEdge) -> Gauss2 {
    let v = e.vector();
    Gauss2 { mu: e.center(), sigma: outer(v, v).scale(0.25) }
}

/// Enumerate the four cyclic pairings of box edges (target edge `i` against
/// pred edge `i + k`), summing numerical per-edge Gaussian W2. Returns the
/// minimum and the first `k` attaining it.
pub fn egwd_matching_oracle(pred: &OBox5, target: &OBox5) -> Result<(f64, usize)> {
    let pe = pred.to_edges();
    let te = target.to_edges();
    let mut best = (f64::INFINITY, 0);
    for k in 0..4 {
        let mut total = 0.0;
        for i in 0..4 {
            let gp = edge_gaussian_direct(&pe.edges()[(i + k) % 4]);
            let gt = edge_gaussian_direct(&te.edges()[i]);
            total += w2_gaussian_numeric(&gp, &gt)?;
        }
        if total < best.0 {
            best = (total, k);
        }
    }
    Ok(best)
}

/// Symmetric density on `[-1, 1]` placed along an edge.
#[derive(Debug, Clone, Copy)]
pub enum Density {
    /// `1/2`; variance `1/3`.
    Uniform,
    /// `1 - |x|`; variance `1/6`.
    Triangular,
    /// `3/4 (1 - x^2)`; variance `1/5`.
    Epanechnikov,
    /// Caller-supplied density; must integrate to one.
    Custom(fn(f64) -> f64),
}

impl Density {
    pub fn pdf(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            return 0.0;
        }
        match self {
            Density::Uniform => 0.5,
            Density::Triangular => 1.0 - x.abs(),
            Density::Epanechnikov => 0.75 * (1.0 - x * x),
            Density::Custom(f) => f(x),
        }
    }

    /// `E[x^2]`; computed by quadrature for custom densities.
    pub fn variance(&self) -> f64 {
        match self {
            Density::Uniform => 1.0 / 3.0,
            Density::Triangular => 1.0 / 6.0,
            Density::Epanechnikov => 0.2,
            Density::Custom(_) => {
                let n = 20_001;
                trapezoid(|x| x * x * self.pdf(x), n)
            }
        }
    }

    /// Largest `|p(x) - p(-x)|` on a fixed grid.
    pub fn asymmetry(&self) -> f64 {
        (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                (self.pdf(x) - self.pdf(-x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite Simpson; needs an odd point count and is exact for the
    /// quadratic integrand of a polynomial density of degree ≤ 1 piece.
    #[default]
    Simpson,
    Trapezoid,
}

fn trapezoid<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 / (n - 1) as f64;
    let inner: f64 = (1..n - 1).map(|i| f(-1.0 + i as f64 * h)).sum();
    h * (0.5 * (f(-1.0) + f(1.0)) + inner)
}

fn simpson<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 / (n - 1) as f64;
    let mut acc = f(-1.0) + f(1.0);
    for i in 1..n - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(-1.0 + i as f64 * h);
    }
    acc * h / 3.0
}

/// `int p(x) |c1 + x v1/2 - c2 - x v2/2|^2 dx` over `[-1, 1]`: the cost of
/// coupling the two edges point-to-point at equal normalized position.
pub fn edwd_edge_integral(
    e1: &DirectedEdge,
    e2: &DirectedEdge,
    density: &Density,
    n: usize,
    rule: Quadrature,
) -> Result<f64> {
    if n < 3 {
        return Err(EwdError::InvalidArgument(format!("need at least 3 nodes, got {n}")));
    }
    let asym = density.asymmetry();
    if asym > 1e-12 {
        return Err(EwdError::AsymmetricDensity(asym));
    }
    let f = |x: f64| density.pdf(x) * (e1.point_at(x) - e2.point_at(x)).norm_sq();
    match rule {
        Quadrature::Simpson if n % 2 == 0 => Err(EwdError::InvalidArgument(format!(
            "Simpson's rule needs an odd node count, got {n}"
        ))),
        Quadrature::Simpson => Ok(simpson(f, n)),
        Quadrature::Trapezoid => Ok(trapezoid(f, n)),
    }
}

/// Exact squared-Euclidean optimal transport cost between two clouds.
///
/// Equal-size uniform clouds are solved as an assignment problem; anything
/// else as a transportation problem (each side limited to
/// [`TRANSPORT_ATOM_LIMIT`] atoms).
pub fn discrete_ot(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    let cost: Vec<Vec<f64>> = p
        .points
        .iter()
        .map(|a| q.points.iter().map(|b| (*a - *b).norm_sq()).collect())
        .collect();
    if p.len() == q.len() && p.is_uniform() && q.is_uniform() {
        let n = p.len();
        if n > ASSIGNMENT_ATOM_LIMIT {
            return Err(EwdError::TooLarge { atoms: n, limit: ASSIGNMENT_ATOM_LIMIT });
        }
        let assignment = hungarian(&cost);
        let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        return Ok(total / n as f64);
    }
    let atoms = p.len().max(q.len());
    if atoms > TRANSPORT_ATOM_LIMIT {
        return Err(EwdError::TooLarge { atoms, limit: TRANSPORT_ATOM_LIMIT });
    }
    Ok(transport(&p.weights, &q.weights, &cost))
}

/// Minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting paths with potentials). Returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Transportation problem by successive shortest paths on the bipartite
/// residual graph (Bellman-Ford, since reverse arcs carry negative cost).
fn transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    const EPS: f64 = 1e-15;
    let (m, n) = (supply.len(), demand.len());
    let mut flow = vec![vec![0.0; n]; m];
    let mut left: Vec<f64> = supply.to_vec();
    let mut need: Vec<f64> = demand.to_vec();
    // Nodes: sources 0..m, sinks m..m+n.
    loop {
        if left.iter().all(|&s| s <= EPS) || need.iter().all(|&d| d <= EPS) {
            break;
        }
        let mut dist = vec![f64::INFINITY; m + n];
        let mut prev: Vec<Option<usize>> = vec![None; m + n];
        for i in 0..m {
            if left[i] > EPS {
                dist[i] = 0.0;
            }
        }
        for _ in 0..(m + n) {
            let mut changed = false;
            for i in 0..m {
                if dist[i].is_finite() {
                    for j in 0..n {
                        let d = dist[i] + cost[i][j];
                        if d < dist[m + j] - 1e-15 {
                            dist[m + j] = d;
                            prev[m + j] = Some(i);
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..n {
                if dist[m + j].is_finite() {
                    for i in 0..m {
                        if flow[i][j] > EPS {
                            let d = dist[m + j] - cost[i][j];
                            if d < dist[i] - 1e-15 {
                                dist[i] = d;
                                prev[i] = Some(m + j);
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..n)
            .filter(|&j| need[j] > EPS && dist[m + j].is_finite())
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]));
        let Some(sink) = sink else { break };
        // The path alternates source -> sink (forward) and sink -> source
        // (cancelling flow); it starts at a source with spare supply.
        let mut path = vec![m + sink];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        let source = *path.last().unwrap();
        let mut amount = need[sink].min(left[source]);
        for pair in path.windows(2) {
            if pair[0] < m {
                amount = amount.min(flow[pair[0]][pair[1] - m]);
            }
        }
        for pair in path.windows(2) {
            if pair[0] >= m {
                flow[pair[1]][pair[0] - m] += amount;
            } else {
                flow[pair[0]][pair[1] - m] -= amount;
            }
        }
        left[source] -= amount;
        need[sink] -= amount;
    }
    (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| flow[i][j] * cost[i][j])
        .sum()
}

/// Upper bound on the unconstrained OT cost between two `n`-atom midpoint
/// samplings of the edges: the same-position coupling of the samples costs
/// `|dc|^2 + s_n/4 |dv|^2` with `s_n` the sampled second moment, which the
/// uniform-density closed form exceeds by `(1/3 - s_n)/4 |dv|^2`.
pub fn ot_upper_bound(e1: &DirectedEdge, e2: &DirectedEdge, n: usize) -> f64 {
    let dc = (e1.center() - e2.center()).norm_sq();
    let dv = (e1.vector() - e2.vector()).norm_sq();
    let closed = dc + dv / 12.0;
    let sampling = (1.0 / 3.0 - midpoint_variance(n)).abs() * 0.25 * dv;
    closed + sampling + 1e-12 * (1.0 + closed)
}

/// IoU estimated by uniform sampling over the joint bounding rectangle.
pub fn iou_monte_carlo(a: &Quad, b: &Quad, samples: usize, seed: u64) -> f64 {
    let all: Vec<Vec2> = a.corners.iter().chain(b.corners.iter()).copied().collect();
    let (x0, x1) = span(all.iter().map(|p| p.x));
    let (y0, y1) = span(all.iter().map(|p| p.y));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inter, mut union) = (0usize, 0usize);
    for _ in 0..samples {
        let p = Vec2::new(rng.gen_range(x0..=x1), rng.gen_range(y0..=y1));
        let (ia, ib) = (inside(&a.corners, p), inside(&b.corners, p));
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn span(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Inside test by winding: a point is inside a convex quad iff it lies on
/// the same side of all four edges.
fn inside(c: &[Vec2; 4], p: Vec2) -> bool {
    let sides: Vec<f64> = (0..4)
        .map(|i| {
            let (a, b) = (c[i], c[(i + 1) % 4]);
            (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
        })
        .collect();
    sides.iter().all(|&s| s >= 0.0) || sides.iter().all(|&s| s <= 0.0)
}

/// Outcome of one oracle-equivalence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub trials: usize,
    /// Largest deviation seen, in the suite's own metric.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub violations: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const SUITES: [&str; 4] = ["egwd-oracle", "edwd-integral", "ot-bound", "iou-mc"];

/// Run a named suite. `iou-mc` draws [`IOU_MC_SAMPLES`] points per pair.
pub fn run_suite(name: &str, trials: usize, seed: u64) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(EwdError::InvalidArgument("trials must be at least 1".into()));
    }
    match name {
        "egwd-oracle" => verify_egwd_oracle(trials, seed),
        "edwd-integral" => verify_edwd_integral(trials, seed),
        "ot-bound" => verify_ot_bound(trials, seed),
        "iou-mc" => Ok(verify_iou_mc(trials, seed, IOU_MC_SAMPLES)),
        _ => Err(EwdError::InvalidArgument(format!(
            "unknown suite `{name}`; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> OBox5 {
    crate::grad::random_box(rng)
}

fn random_edge(rng: &mut ChaCha8Rng) -> DirectedEdge {
    let mut p = || Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    DirectedEdge::new(p(), p())
}

/// Closed-form box distance against the per-edge Gaussian enumeration;
/// deviation is `|a - b| / max(|a|, 1e-3)`, tolerance `1e-9` relative with a
/// `1e-12` absolute floor.
pub fn verify_egwd_oracle(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "egwd-oracle",
        trials,
        max_deviation: 0.0,
        tolerance: 1e-9,
        violations: 0,
    };
    for _ in 0..trials {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let closed = crate::ewd::egwd_obox(&a, &b).value;
        let (oracle, _) = egwd_matching_oracle(&a, &b)?;
        let diff = (closed - oracle).abs();
        report.max_deviation = report.max_deviation.max(diff / closed.abs().max(1e-3));
        if !(diff <= 1e-9 * closed.abs() + 1e-12) {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Per-edge closed form `|dc|^2 + |dv|^2 / 12` against Simpson at three
/// nodes (exact) and the trapezoid rule at 10^4 nodes; deviation is the
/// larger relative error, tolerance `1e-6` (Simpson must be within `1e-12`).
pub fn verify_edwd_integral(trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "edwd-integral",
        trials,
        max_deviation: 0.0,
        tolerance: 1e-6,
        violations: 0,
    };
    for _ in 0..trials {
        let (e1, e2) = (random_edge(&mut rng), random_edge(&mut rng));
        let closed = (e1.center() - e2.center()).norm_sq() + (e1.vector() - e2.vector()).norm_sq() / 12.0;
        let scale = closed.max(1e-12);
        let simpson = edwd_edge_integral(&e1, &e2, &Density::Uniform, 3, Quadrature::Simpson)?;
        let trap = edwd_edge_integral(&e1, &e2, &Density::Uniform, 10_000, Quadrature::Trapezoid)?;
        let ds = (simpson - closed).abs() / scale;
        let dt = (trap - closed).abs() / scale;
        report.max_deviation = report.max_deviation.max(ds).max(dt);
        if ds > 1e-12 || dt > 1e-6 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Unconstrained OT between 16-atom samplings of random edges must not
/// exceed the constrained coupling bound. Deviation is the largest
/// `ot - bound` (negative when the inequality always held with room).
pub fn verify_ot_bound(trials: usize, seed: u64) -> Result<SuiteReport> {
    const ATOMS: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "ot-bound",
        trials,
        max_deviation: f64::NEG_INFINITY,
        tolerance: 0.0,
        violations: 0,
    };
    for _ in 0..trials {
        let (e1, e2) = (random_edge(&mut rng), random_edge(&mut rng));
        let p = PointCloud::from_edge(&e1, ATOMS)?;
        let q = PointCloud::from_edge(&e2, ATOMS)?;
        let excess = discrete_ot(&p, &q)? - ot_upper_bound(&e1, &e2, ATOMS);
        report.max_deviation = report.max_deviation.max(excess);
        if excess > 0.0 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Points per pair drawn by the `iou-mc` suite.
pub const IOU_MC_SAMPLES: usize = 200_000;

/// Exact rotated IoU against Monte-Carlo estimates on overlapping random
/// pairs; tolerance `0.01` absolute.
pub fn verify_iou_mc(trials: usize, seed: u64, samples: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "iou-mc",
        trials,
        max_deviation: 0.0,
        tolerance: 0.01,
        violations: 0,
    };
    for t in 0..trials {
        let a = OBox5 {
            cx: rng.gen_range(-2.0..2.0),
            cy: rng.gen_range(-2.0..2.0),
            w: rng.gen_range(0.5..6.0),
            h: rng.gen_range(0.5..6.0),
            theta: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        };
        let b = OBox5 {
            cx: a.cx + rng.gen_range(-1.5..1.5),
            cy: a.cy + rng.gen_range(-1.5..1.5),
            w: rng.gen_range(0.5..6.0),
            h: rng.gen_range(0.5..6.0),
            theta: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        };
        let (qa, qb) = (a.to_corners(), b.to_corners());
        let exact = crate::geom::rotated_iou(&qa, &qb);
        let mc = iou_monte_carlo(&qa, &qb, samples, seed.wrapping_add(t as u64));
        let d = (exact - mc).abs();
        report.max_deviation = report.max_deviation.max(d);
        if d > 0.01 {
            report.violations += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ewd::egwd_obox;
    use crate::gaussian::w2_gaussian;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn edge(x0: f64, y0: f64, x1: f64, y1: f64) -> DirectedEdge {
        DirectedEdge::new(Vec2::new(x0, y0), Vec2::new(x1, y1))
    }

    #[test]
    fn eig_sqrt_squares_back() {
        let m = Mat2::new(3.0, 1.2, 1.2, 2.0);
        let r = sqrtm_eig(m, m.trace()).unwrap();
        let back = r * r;
        assert_abs_diff_eq!(back.a, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.b, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(back.d, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn w2_numeric_basics() {
        let g = Gauss2::new(Vec2::new(1.0, 2.0), Mat2::new(2.0, 0.3, 0.3, 1.0)).unwrap();
        assert_abs_diff_eq!(w2_gaussian_numeric(&g, &g).unwrap(), 0.0, epsilon = 1e-12);
        let p = Gauss2 { mu: Vec2::new(0.0, 0.0), sigma: Mat2::ZERO };
        let q = Gauss2 { mu: Vec2::new(3.0, 4.0), sigma: Mat2::ZERO };
        assert_abs_diff_eq!(w2_gaussian_numeric(&p, &q).unwrap(), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn w2_numeric_matches_closed_form_rank_one() {
        let a = edge_gaussian_direct(&edge(0.0, 0.0, 2.0, 0.0));
        let b = edge_gaussian_direct(&edge(0.0, 0.0, 0.0, 3.0));
        // Orthogonal rank-1: the cross term vanishes, leaving |dc|^2 + tr + tr.
        let expected = (1.0 + 2.25) + (1.0 + 2.25);
        let n = w2_gaussian_numeric(&a, &b).unwrap();
        assert_abs_diff_eq!(n, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(n, w2_gaussian(&a, &b).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn matching_oracle_trivial_cases() {
        let a = OBox5::new(1.0, -2.0, 4.0, 2.0, 0.3).unwrap();
        let (d, k) = egwd_matching_oracle(&a, &a).unwrap();
        assert!(d < 1e-12);
        assert_eq!(k, 0);
        let (d, k) = egwd_matching_oracle(&a.shifted(1), &a).unwrap();
        assert!(d < 1e-12);
        assert_eq!(k, 3);
        let b = OBox5::new(0.0, 0.0, 4.0, 2.0, FRAC_PI_2).unwrap();
        let base = OBox5::new(0.0, 0.0, 4.0, 2.0, 0.0).unwrap();
        let (d, k) = egwd_matching_oracle(&base, &b).unwrap();
        let m = egwd_obox(&base, &b);
        assert_abs_diff_eq!(d, m.value, epsilon = 1e-12);
        assert_eq!(k, m.k);
    }

    #[test]
    fn integral_uniform_parallel_is_center_offset() {
        let a = edge(-1.0, 0.0, 1.0, 0.0);
        let b = edge(-1.0, 3.0, 1.0, 3.0);
        let v = edwd_edge_integral(&a, &b, &Density::Uniform, 3, Quadrature::Simpson).unwrap();
        assert_abs_diff_eq!(v, 9.0, epsilon = 1e-14);
        let z = edwd_edge_integral(&a, &a, &Density::Uniform, 3, Quadrature::Simpson).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn integral_perpendicular_matches_closed_form() {
        let a = edge(-1.0, 0.0, 1.0, 0.0);
        let b = edge(0.0, -1.0, 0.0, 1.0);
        // dc = 0, dv = (2,-2): |dv|^2 = 8, uniform variance 1/3.
        let closed = 8.0 / 12.0;
        let t = edwd_edge_integral(&a, &b, &Density::Uniform, 10_000, Quadrature::Trapezoid)
            .unwrap();
        assert_abs_diff_eq!(t, closed, epsilon = 1e-6);
        let s = edwd_edge_integral(&a, &b, &Density::Uniform, 3, Quadrature::Simpson).unwrap();
        assert_abs_diff_eq!(s, closed, epsilon = 1e-14);
    }

    #[test]
    fn integral_other_densities_use_their_variance() {
        let a = edge(-1.0, 0.0, 1.0, 0.0);
        let b = edge(0.0, 1.0, 0.0, -1.0);
        for d in [Density::Triangular, Density::Epanechnikov] {
            let got = edwd_edge_integral(&a, &b, &d, 200_001, Quadrature::Simpson).unwrap();
            assert_abs_diff_eq!(got, 8.0 * d.variance() / 4.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn asymmetric_density_rejected() {
        fn skewed(x: f64) -> f64 {
            0.5 + 0.25 * x
        }
        let a = edge(0.0, 0.0, 1.0, 0.0);
        let err = edwd_edge_integral(&a, &a, &Density::Custom(skewed), 5, Quadrature::Simpson);
        assert!(matches!(err, Err(EwdError::AsymmetricDensity(_))));
    }

    #[test]
    fn ot_trivial_cases() {
        let p = PointCloud::uniform(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)]).unwrap();
        assert_eq!(discrete_ot(&p, &p).unwrap(), 0.0);
        let a = PointCloud::uniform(vec![Vec2::new(0.0, 0.0)]).unwrap();
        let b = PointCloud::uniform(vec![Vec2::new(3.0, 4.0)]).unwrap();
        assert_abs_diff_eq!(discrete_ot(&a, &b).unwrap(), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn hungarian_finds_anti_diagonal() {
        let cost = vec![vec![9.0, 1.0, 9.0], vec![9.0, 9.0, 1.0], vec![1.0, 9.0, 9.0]];
        assert_eq!(hungarian(&cost), vec![1, 2, 0]);
    }

    #[test]
    fn transport_agrees_with_assignment() {
        let pts_a: Vec<Vec2> = (0..5).map(|i| Vec2::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let pts_b: Vec<Vec2> = (0..5).map(|i| Vec2::new(4.0 - i as f64 * 0.7, 1.0)).collect();
        let pa = PointCloud::uniform(pts_a).unwrap();
        let pb = PointCloud::uniform(pts_b).unwrap();
        let cost: Vec<Vec<f64>> = pa
            .points()
            .iter()
            .map(|a| pb.points().iter().map(|b| (*a - *b).norm_sq()).collect())
            .collect();
        let exact = discrete_ot(&pa, &pb).unwrap();
        let lp = transport(pa.weights(), pb.weights(), &cost);
        assert_abs_diff_eq!(exact, lp, epsilon = 1e-12);
    }

    #[test]
    fn transport_splits_mass() {
        let p = PointCloud::new(vec![Vec2::new(0.0, 0.0)], vec![1.0]).unwrap();
        let q = PointCloud::new(vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 2.0)], vec![0.25, 0.75])
            .unwrap();
        assert_abs_diff_eq!(discrete_ot(&p, &q).unwrap(), 0.25 + 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ot_respects_size_limit() {
        let pts: Vec<Vec2> = (0..65).map(|i| Vec2::new(i as f64, 0.0)).collect();
        let p = PointCloud::uniform(pts).unwrap();
        let q = PointCloud::uniform(vec![Vec2::new(0.0, 0.0)]).unwrap();
        assert!(matches!(discrete_ot(&p, &q), Err(EwdError::TooLarge { .. })));
    }

    #[test]
    fn ot_below_constrained_coupling() {
        let a = edge(-1.0, 0.0, 1.0, 0.0);
        let b = edge(1.0, 0.5, -1.0, 0.5);
        let pa = PointCloud::from_edge(&a, 16).unwrap();
        let pb = PointCloud::from_edge(&b, 16).unwrap();
        assert!(discrete_ot(&pa, &pb).unwrap() <= ot_upper_bound(&a, &b, 16));
    }

    #[test]
    fn monte_carlo_iou_tracks_exact() {
        let a = OBox5::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        let b = OBox5::new(1.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        let mc = iou_monte_carlo(&a.to_corners(), &b.to_corners(), 200_000, 3);
        assert_abs_diff_eq!(mc, 1.0 / 3.0, epsilon = 0.01);
    }

    #[test]
    fn suites_pass_on_small_runs() {
        for name in SUITES {
            let trials = if name == "iou-mc" { 5 } else { 50 };
            let r = run_suite(name, trials, 1).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        assert!(run_suite("nope", 1, 0).is_err());
        assert!(run_suite("ot-bound", 0, 0).is_err());
    }
}
