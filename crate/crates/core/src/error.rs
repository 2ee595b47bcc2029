use thiserror::Error;

/// Failures raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-physical state: Bloch vector norm {norm} exceeds 1")]
    NonPhysicalState { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("electron comb has no amplitudes")]
    EmptyComb,

    #[error("Bessel cutoff {cutoff} too small: |J_cutoff| = {tail:e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("sideband window too small: support touches index {index}")]
    WindowUnderflow { index: i64 },

    #[error("pure emitter state required, purity is {purity}")]
    MixedState { purity: f64 },

    #[error("no unique steady state: the Bloch generator is singular")]
    SingularGenerator,

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("Bloch norm {norm} left the unit ball during integration")]
    NormViolation { norm: f64 },

    #[error("electron comb is not a real profile with a linear phase")]
    NonConformingComb,

    #[error("degenerate modulation phases: sin(phi1 - phi2) = {0:e}")]
    DegeneratePhases(f64),

    #[error("no coupling signal in the second sidebands")]
    NoCouplingSignal,

    #[error("boundary leak: amplitude {amplitude:e} reached the lattice edge")]
    BoundaryLeak { amplitude: f64 },

    #[error("no Rabi window: |I1| vanishes")]
    NoRabiWindow,
}

pub type Result<T> = std::result::Result<T, Error>;
