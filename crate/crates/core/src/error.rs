use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state or source is not normalized (norm squared {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("photon index {index} out of range for a {photon_count}-photon state")]
    PhotonOutOfRange { index: usize, photon_count: usize },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("photon count mismatch: {left} vs {right}")]
    PhotonCountMismatch { left: usize, right: usize },
    #[error("operation requires all probe tags to be zero")]
    NonZeroTags,
    #[error("parity check needs two distinct photons, got {0} twice")]
    SamePhoton(usize),
    #[error("at most {max} photons are supported, requested {requested}")]
    TooManyPhotons { requested: usize, max: usize },
    #[error("photon {index} is not in a product state with the rest")]
    NotSeparable { index: usize },
    #[error("label sets differ between analytic values and estimates")]
    LabelMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
