//! Rare-event accelerated evaluation with piecewise mixture distributions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel_eval;
pub mod dist;
pub mod fitting;
pub mod optim;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod stats;
