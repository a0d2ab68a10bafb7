#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coeff;
pub mod eigen;
pub mod fem;
pub mod geometry;
pub mod homog;
pub mod spectra;
pub mod study;
