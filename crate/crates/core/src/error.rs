use thiserror::Error;

use crate::circle::CirclePoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the valid interval [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid PL homeomorphism: {0}")]
    InvalidHomeo(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("standard profile (sigma = 0): no oscillation sequence exists")]
    StandardProfile,

    #[error("profile yields only {available} oscillation pairs, {requested} requested")]
    InsufficientDepth { requested: usize, available: usize },

    #[error("boundary point of chart {chart} has no image in the other chart")]
    NoTransition { chart: u8 },

    #[error("point lies on boundary circle {boundary}; {what} is undefined there")]
    BoundaryPoint { boundary: u8, what: &'static str },

    #[error(
        "glue constraint violated at y = {y}: f = {value} is not an integer; \
         the boundary action would have to commute with rotation by {constraint}"
    )]
    GlueConstraintViolation {
        y: f64,
        value: f64,
        constraint: CirclePoint,
    },

    #[error("profile is not strictly monotone on the segment starting at u = {u}")]
    FlatSegment { u: f64 },

    #[error("glued evaluation left its block: {0}")]
    Structural(String),

    #[error("no horizontally going point at level y = {y}; min |p(phi(xi)) - y| = {min_residual}")]
    NoHorizontalPoint { y: f64, min_residual: f64 },

    #[error(
        "time-one map of the {axis} action mismatches at sample {sample}: got {got}, expected {expected}"
    )]
    TimeOneMismatch {
        axis: &'static str,
        sample: f64,
        got: f64,
        expected: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
