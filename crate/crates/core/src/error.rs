//! Error type shared by all construction and verification kernels.

use thiserror::Error;

/// Errors raised by chart operations, blowup constructions, and verification sweeps.
#[derive(Debug, Error)]
pub enum BlowupError {
    /// Two charts have no sampled common point.
    #[error("charts have no sampled common domain point")]
    EmptyOverlap,

    /// A chart inverse failed its roundtrip tolerance.
    #[error("chart inverse roundtrip residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    InverseMismatch { residual: f64, tol: f64 },

    /// A requested evaluation point (or a finite-difference stencil point) left the domain box.
    #[error("point left the chart domain during {context}")]
    DomainExit { context: &'static str },

    /// A projective point was constructed from a (numerically) zero vector.
    #[error("zero vector cannot represent a projective point")]
    ZeroVector,

    /// A point does not lie in the requested coordinate chart.
    #[error("point misses chart {chart}: {reason}")]
    ChartMiss { chart: String, reason: String },

    /// An overlap map does not preserve the zero slice cutting out the submanifold.
    #[error("overlap map violates the zero slice (residual {residual:.3e})")]
    SliceViolation { residual: f64 },

    /// Adaptive quadrature failed to reach the identity tolerance.
    #[error("quadrature residual {residual:.3e} above {tol:.3e} after {nodes} nodes")]
    QuadratureFail { residual: f64, tol: f64, nodes: usize },

    /// A transition matrix annihilated a line representative.
    #[error("transition matrix collapsed the line (image norm {norm:.3e})")]
    CollapsedLine { norm: f64 },

    /// A point lies outside the gluing locus of the two sectors.
    #[error("point lies outside the sector gluing locus")]
    GluingMiss,

    /// A blowup point fails its membership constraint against the base point.
    #[error("membership residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    MembershipViolation { residual: f64, tol: f64 },

    /// A transition image left the chart ranges of both sectors.
    #[error("transition image left both sector chart ranges")]
    SectorEscape,

    /// Graded-limit evaluation failed to stabilize along the distance ladder.
    #[error("graded-limit extension did not stabilize (last step {step:.3e})")]
    LimitDivergence { step: f64 },

    /// The conformal factor F of a sector-2 transition was not positive.
    #[error("conformal factor F = {value:.3e} is not positive at the requested point")]
    FNonPositive { value: f64 },

    /// Input data violates a construction contract.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Trivialization domains fail to cover the sampled submanifold.
    #[error("trivialization domains leave sampled submanifold points uncovered")]
    CoverGap,

    /// Tubular neighborhood merging failed at every shrinkage level.
    #[error("merge failed: {0}")]
    MergeFail(String),

    /// Unknown example name.
    #[error("unknown example '{0}'")]
    UnknownExample(String),

    /// Mesh export is not available in this dimension.
    #[error("mesh export unsupported for a {dim}-dimensional chart presentation")]
    DimensionUnsupported { dim: usize },

    /// File output failed.
    #[error("io failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BlowupError>;
