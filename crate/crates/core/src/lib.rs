//! Numerical toolkit for the chordal Loewner equation with one or several slits.
//!
//! * [`geometry`]: slits, multi-slits, validation, resampling.
//! * [`slitmaps`]: elementary map-outs and conformal chains.
//! * [`capacity`]: half-plane capacity by chains and by Monte Carlo, capacity inequality checks.
//! * [`forward`]: forward Loewner flow, hull tracing, Carathéodory proxy.
//! * [`inverse`]: driving functions of slits and Loewner parametrizations.
//! * [`fitter`]: weights and driving functions of multi-slits.
//! * [`zipper`]: incremental zipping of slit polylines.
//! * [`io`]: deterministic JSON and the CSV driving-record format.
//! * [`verify`]: seeded property suite over the bundled [`fixtures`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod fitter;
pub mod fixtures;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod io;
pub mod slitmaps;
pub mod verify;
pub mod zipper;

pub use error::{Error, Result};
