//! Numerical tolerances used by the library's contracts.
//!
//! Everything here is relative to the matrix scale `max(1, max|A|)` unless
//! stated otherwise, so thresholds stay unit-free.

/// Hermiticity: `max|A - A†| ≤ HERMITICITY_REL · max(1, max|A|)`.
pub const HERMITICITY_REL: f64 = 1e-12;

/// Density matrices: `|tr ρ - 1|` bound.
pub const DENSITY_TRACE_TOL: f64 = 1e-10;

/// Density matrices: eigenvalues may undershoot zero by this much.
pub const DENSITY_EIG_FLOOR: f64 = -1e-10;

/// Eigenpair residual: `|A v - λ v| ≤ EIG_RESIDUAL_REL · max(1, ‖A‖)`.
pub const EIG_RESIDUAL_REL: f64 = 1e-10;

/// Eigenvector orthonormality deviation bound.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Unitarity deviation bound for imaginary-scale matrix exponentials.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Partial trace must preserve the trace to this absolute accuracy.
pub const PTRACE_TRACE_TOL: f64 = 1e-12;

/// State norms along a propagated trajectory.
pub const STATE_NORM_TOL: f64 = 1e-9;

/// Schedule boundary contract `f(0)=g(0)=0`, `f(τ)=g(τ)=1`.
pub const SCHEDULE_BOUNDARY_TOL: f64 = 1e-12;

/// Degeneracy classification: gaps below `GAP_TOL_FACTOR · ħΩ` count as
/// degenerate. Far below the engineered level spacing of the drive, well
/// above eigensolver noise.
pub const GAP_TOL_FACTOR: f64 = 1e-8;

/// Finite-difference stencil half-width for eigenstate derivatives, as a
/// fraction of the protocol duration τ.
pub const FD_DELTA_FACTOR: f64 = 1e-6;

/// Adjacent-frame overlap below which eigenvector matching is rejected.
pub const TRACKING_OVERLAP_MIN: f64 = 0.5;

/// Counter-diabatic assembly: Hermiticity and zero-diagonal bounds on the
/// returned operator.
pub const HCD_HERMITICITY_TOL: f64 = 1e-9;
pub const HCD_DIAGONAL_TOL: f64 = 1e-9;

/// Gross-failure gate on the raw (pre-symmetrized) counter-diabatic
/// assembly, relative to its scale. Stencil roundoff sits near `1e-9`
/// relative (machine epsilon over the `1e-6·τ` width, summed across
/// levels); two orders of headroom separate that from real breakage.
pub const HCD_ASSEMBLY_GATE: f64 = 1e-7;

/// Width of the front boundary layer (as a fraction of τ) where eigenstate
/// derivatives prefer the analytic off-diagonal route: difference stencils
/// lose accuracy against schedules whose slope is unbounded at `t = 0`.
pub const FD_BOUNDARY_LAYER: f64 = 1e-2;

/// Eigenstate-velocity term may undershoot zero by at most this much.
pub const MU_FLOOR: f64 = -1e-12;

/// Ergotropy: the two algebraic routes must agree to this absolute accuracy
/// (in the units of the reference Hamiltonian).
pub const ERGOTROPY_CROSSCHECK_TOL: f64 = 1e-10;

/// Quadrature refinement target for the cost integrals (relative).
pub const QUADRATURE_REL_TARGET: f64 = 1e-8;

/// Cost integrands are evaluated no closer than `COST_EDGE_FACTOR · τ` to the
/// interval ends, where the spectrum degenerates (t = τ) or the cube-root
/// schedule derivative blows up (t = 0). The integrands stay bounded for the
/// built-in schedules except cube-root at t = 0, whose singularity is
/// integrable; the induced bias is below the quadrature target for the
/// schedules the cost report covers.
pub const COST_EDGE_FACTOR: f64 = 1e-7;

/// Manifest gate: step-halving deltas above this are flagged.
pub const STEP_HALVING_FLAG: f64 = 1e-6;
