use thiserror::Error;

/// Errors raised by the geometric primitives and the certificate pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("point is not in the upper half-plane (y = {0})")]
    NotInHalfPlane(f64),
    #[error("curvature must be negative and finite, got {0}")]
    BadCurvature(f64),
    #[error("degenerate geodesic: endpoints coincide")]
    DegenerateGeodesic,
    #[error("side lengths ({0}, {1}, {2}) violate the triangle inequality")]
    TriangleInequality(f64, f64, f64),
    #[error("arclength {t} is not on a side of length {len}")]
    NotOnSide { t: f64, len: f64 },
    #[error("bracketing failed while projecting onto a geodesic")]
    Bracketing,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("word is not reduced at position {0}")]
    NotReduced(usize),
    #[error("points belong to different spaces")]
    SpaceMismatch,
    #[error("triangle perimeter {perimeter} exceeds the lifting threshold {threshold}")]
    AboveLiftingThreshold { perimeter: f64, threshold: f64 },
    #[error("return point at distance {distance} is outside the convex neighbourhood of radius {radius}")]
    OutsideConvexNeighbourhood { distance: f64, radius: f64 },
    #[error("closed curve is null-homotopic")]
    TrivialClass,
    #[error("operation is not available for this space: {0}")]
    Unsupported(&'static str),
    #[error("parameter {0} lies outside the generated range of the word")]
    BeyondGeneratedRange(f64),
}

pub type Result<T> = std::result::Result<T, GeomError>;
