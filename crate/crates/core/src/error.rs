use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system definition: {0}")]
    InvalidSystem(String),

    #[error("fixed point not at the origin: f(0) = {0:?}; shift the equilibrium first")]
    NonzeroFixedPoint(Vec<f64>),

    #[error("root on contour: min |det Δ| = {min:.3e} on the boundary (threshold {tol:.3e}); perturb the rectangle")]
    BoundaryRoot { min: f64, tol: f64 },

    #[error("strip bound unavailable for this kernel; supply a bounding box")]
    StripBoundUnavailable,

    #[error("eigenvalue {0} is not simple (|d/dz det Δ| = {1:.3e})")]
    MultipleRoot(crate::C64, f64),

    #[error("series dichotomy mode requires simple roots; {0} has multiplicity {1}")]
    SeriesModeUnjustified(crate::C64, usize),

    #[error("resolvent pole: eigenvalue sum {0} lies within {1:.3e} of the spectrum")]
    ResolventPole(crate::C64, f64),

    #[error("required jet order not available: {0}")]
    NotComputed(String),

    #[error("operation requires {expected}, got a spectral subset with {got}")]
    WrongSigmaShape { expected: String, got: String },

    #[error("homological resonance: divisor {0} has magnitude below tolerance")]
    HomologicalResonance(crate::C64),

    #[error("degenerate Hopf point: Re ξ(λ₁) = {0:.3e} ≈ 0")]
    DegenerateHopf(f64),

    #[error("no global Lipschitz constant on the nonlinearity; set lip_global or use the cutoff route")]
    NoGlobalLipschitz,

    #[error("no ball-Lipschitz bound on the nonlinearity; set lip_ball")]
    MissingBallLipschitz,

    #[error("beta2 = {0} is not admissible; the F-form route requires beta2 < -1")]
    BadBeta2(f64),

    #[error("spectrum slice too shallow: resonance order {order} needs roots down to Re λ = {needed}, slice reaches {reached}")]
    InsufficientDepth { order: usize, needed: f64, reached: f64 },

    #[error("trajectory blew up at t = {0} (|x| > {1})")]
    Blowup(f64, f64),

    #[error("no limit cycle detected: {0}")]
    NoCycle(String),

    #[error("reduced coordinate magnitude {0:.3e} exceeds the jet validity radius {1}")]
    OutOfChart(f64, f64),

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse system file: {0}")]
    Parse(String),
}
