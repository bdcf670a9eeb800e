//! Positive semi-definite metrics with intrinsic cross caps: Taylor jets,
//! symbolic coefficient fields, singular-point analysis, geodesic curvature and
//! Gauss–Bonnet bookkeeping.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod jet;
pub mod expr;
pub mod metric;
pub mod builtins;
pub mod singularity;
pub mod curvature;
pub mod quadrature;
pub mod gaussbonnet;
pub mod report;
pub mod verify;
