//! Chart-based construction and desk-scale numerical verification of real,
//! complex, and augmented blowups of a manifold along a closed submanifold.
//!
//! The library builds blowups from two kinds of input data and checks that
//! they agree:
//!
//! - **local data**: an atlas of adapted charts whose overlaps factor through
//!   matrix-valued maps acting on the normal coordinates ([`local`], [`aug`]);
//! - **global data**: a tubular neighborhood identification of the normal
//!   bundle with a neighborhood in the ambient manifold ([`global`]).
//!
//! The [`equivalence`] module cuts global data into atlases, assembles atlases
//! back into tubular data, and verifies the chart-level relations certifying
//! that the two constructions produce isomorphic blowdown maps. The
//! [`registry`] module wires built-in examples to these verification sweeps;
//! the [`mesh`] module exports sampled chart images for figures.
//!
//! Conventions: the ambient manifold is an open box in `R^n`, the center Y is
//! the slice where the first `c` field coordinates vanish, and complex
//! coordinates are interleaved real pairs (see [`field::Field`]).

// index loops mirror the slot and block arithmetic of the chart formulas
#![allow(clippy::needless_range_loop)]

pub mod aug;
pub mod chart;
pub mod equivalence;
pub mod error;
pub mod field;
pub mod global;
pub mod local;
pub mod mesh;
pub mod proj;
pub mod quadrature;
pub mod registry;
pub mod report;
pub mod sample;
pub mod taut;

pub use chart::{numeric_jacobian, overlap_map, BoxDomain, ChartFn, YChart};
pub use error::{BlowupError, Result};
pub use field::Field;
pub use proj::{proj_normalize, ProjPoint};
pub use sample::{SamplePlan, Tolerances, GRADES};
pub use taut::{taut_chart, taut_chart_inv, TautPoint};
