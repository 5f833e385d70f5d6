//! Edge Wasserstein distance (EWD) regression losses for oriented boxes and
//! quadrilaterals.
//!
//! Boxes and polygons are represented by their clockwise sequence of
//! directed edges. The distance between two shapes is the minimum, over all
//! cyclic edge pairings, of a per-edge transport cost. Two per-edge costs are
//! provided: a degenerate-Gaussian one ([`ewd::egwd_obox`]) and a dense
//! point-to-point one ([`ewd::edwd_obox`], [`ewd::edwd_polygon`]).
//!
//! Alongside the losses the crate carries the Gaussian baselines (GWD, KLD),
//! a Smooth-L1 baseline over canonicalized 5-parameter boxes, analytic
//! gradients, brute-force oracles and a small gradient-descent harness.
//!
//! Coordinates are y-down image coordinates. "Clockwise" means a positive
//! shoelace area in that frame. Angles are radians everywhere in this crate.

pub mod error;
pub mod ewd;
pub mod gaussian;
pub mod geom;
pub mod grad;
pub mod harness;
pub mod oracle;

pub use error::{EwdError, Result};
pub use ewd::{LossConfig, LossVariant, NormScheme, PostFn, VarianceMode};
pub use gaussian::{Gauss2, Mat2};
pub use geom::{BoxDef, DirectedEdge, EdgeSeq, OBox5, Quad, Shape, Vec2};
pub use grad::BoxGrad;
