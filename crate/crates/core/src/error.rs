use thiserror::Error;

pub type Result<T> = std::result::Result<T, GhaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GhaError {
    #[error("parameter `{name}` must be strictly positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("label n = {n} outside admissible range {min}..={max}")]
    LabelOutOfRange { n: u32, min: u32, max: u32 },

    #[error("no bound state n = {n}: the Morse well holds states 0..={max} only")]
    NoSuchBoundState { n: u32, max: i64 },

    #[error("energy {energy} outside the bound regime ({lo}, {hi})")]
    EnergyOutOfRegime { energy: f64, lo: f64, hi: f64 },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("phase point is off the energy shell: |H - E| = {deviation:e}")]
    OffShell { deviation: f64 },

    #[error("finite-difference stencil leaves the domain at coordinate {coordinate} (wall at ±{wall}, step {step})")]
    StencilOutOfDomain {
        coordinate: f64,
        wall: f64,
        step: f64,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("ladder value vanishes at t = 0, cannot normalize the drift")]
    DegenerateNormalization,

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("field does not vanish on the diagonal x = y (measured {magnitude:e} relative to its maximum)")]
    SingularDiagonal { magnitude: f64 },

    #[error("K(N) has a pole at n = {n} for integer p = {p}")]
    LadderPole { n: u32, p: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degeneracy theorem violated: r{first:?} = {r_first} equals r{second:?} = {r_second}")]
    TheoremViolation {
        first: (u32, u32),
        second: (u32, u32),
        r_first: f64,
        r_second: f64,
    },
}
