//! Cutting-plane methods that emit accuracy certificates.
//!
//! The crate is organised bottom-up: dense linear algebra ([`numerics`]), a
//! small simplex solver ([`lp`]), solids ([`geometry`]), first-order oracles
//! ([`oracle`]), certificate construction ([`certificate`]), the cutting-plane
//! engines and driver ([`engines`]) and primal recovery from a dual run
//! ([`primal_dual`]).

// `!(x > 0.0)` is the idiom used throughout to reject NaN together with
// non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod engines;
pub mod geometry;
pub mod lp;
pub mod numerics;
pub mod oracle;
pub mod primal_dual;
