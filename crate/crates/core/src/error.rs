use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymFunError {
    #[error("order {order} out of range for a {dim}x{dim} matrix")]
    OrderOutOfRange { order: usize, dim: usize },
    #[error("matrix is in neither cone of order {order} (sigma_1..sigma_k = {sigmas:?})")]
    ConeViolation { order: usize, sigmas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid dimension {0} unsupported (expected 3 or 4)")]
    Dimension(usize),
    #[error("grid needs one size and one length per axis (dim {dim}, {sizes} sizes, {lengths} lengths)")]
    AxisCount {
        dim: usize,
        sizes: usize,
        lengths: usize,
    },
    #[error("axis {axis} has {size} nodes; at least 3 are required")]
    TooFewNodes { axis: usize, size: usize },
    #[error("axis {axis} has non-positive length {length}")]
    BadLength { axis: usize, length: f64 },
    #[error("fields live on different grids")]
    Mismatch,
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
}

/// Violated hypothesis when assembling a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("order k = {k} must satisfy 1 <= k <= n = {n}")]
    Order { k: usize, n: usize },
    #[error("parameter t = {0} must satisfy t <= 1")]
    ParameterT(f64),
    #[error("solver requires t < 1, got t = {0}")]
    SolverParameterT(f64),
    #[error("f must be negative everywhere: max f = {max}")]
    RhsNotNegative { max: f64 },
    #[error("f must be positive everywhere: min f = {min}")]
    RhsNotPositive { min: f64 },
    #[error("background tensor leaves the {expected} cone of order {k} at {count} node(s), first at {first:?}")]
    BackgroundCone {
        expected: &'static str,
        k: usize,
        count: usize,
        first: Vec<usize>,
    },
    #[error("solver grids need at least 8 nodes per axis, axis {axis} has {size}")]
    GridTooCoarse { axis: usize, size: usize },
    #[error("the continuation solver only handles the negative case")]
    UnsupportedCase,
}

/// Nodes whose augmented Hessian left the positive cone.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("augmented Hessian leaves the positive cone of order {k} at {} node(s), first at {:?}", .nodes.len(), .nodes.first())]
pub struct ConeViolationAt {
    pub k: usize,
    /// Index coordinates of offending nodes.
    pub nodes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("Krylov iteration did not converge in {iterations} iterations (relative residual {relative_residual:e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },
    #[error("dense factorization is singular")]
    Singular,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearizedError {
    #[error("dense assembly limited to {limit} nodes, grid has {nodes}")]
    TooLarge { nodes: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("brute-force evaluation limited to n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("order {order} out of range for dimension {dim}")]
    OrderOutOfRange { order: usize, dim: usize },
    #[error(transparent)]
    Cone(#[from] ConeViolationAt),
    #[error("derived right-hand side is not negative at {0} node(s)")]
    RhsNotNegative(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonFailureKind {
    #[error("initial iterate is outside the positive cone")]
    ConeAtStart,
    #[error("line search stalled below the minimum step")]
    LineSearchStall,
    #[error("iteration cap reached")]
    IterationCap,
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("Newton failed after {iterations} iteration(s) at residual {residual:e}: {kind}")]
pub struct NewtonFailure {
    pub kind: NewtonFailureKind,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("continuation step fell below {ds_min} with last good s = {last_good_s}: {cause}")]
    StepUnderflow {
        last_good_s: f64,
        ds_min: f64,
        cause: NewtonFailure,
    },
}
