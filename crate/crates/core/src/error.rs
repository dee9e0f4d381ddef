use thiserror::Error;

use crate::model::Component;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rate constants: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("initial value of {component} is non-positive ({value}) at node {node}")]
    NonPositiveInitial {
        component: Component,
        node: usize,
        value: f64,
    },

    #[error("cosine mode k={k} of {component} is not resolvable on {n_cells} cells")]
    ModeOutOfRange {
        component: Component,
        k: u32,
        n_cells: usize,
    },

    #[error("malformed initial condition for {component}: {reason}")]
    MalformedInitial {
        component: Component,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no regime condition pair holds (numerical degeneracy or invalid input)")]
    NoRegime,

    #[error("closed-form {regime} equilibrium violates its indicator constraints: {detail}")]
    IndicatorViolation { regime: String, detail: String },

    #[error("closed-form {regime} equilibrium has negative component {component} = {value}")]
    NegativeComponent {
        regime: String,
        component: Component,
        value: f64,
    },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("non-finite value in {component} at t = {time}")]
    NaNDetected { component: Component, time: f64 },

    #[error("equilibrium component {component} = {value} is too small to scale")]
    ZeroEquilibriumComponent { component: Component, value: f64 },

    #[error("bracket order violated at iteration {iteration}: {detail}")]
    OrderViolation { iteration: usize, detail: String },

    #[error("invalid scalar limit input: {0}")]
    InvalidScalarInput(String),

    #[error("decay fit requires positive values (found {value} at t = {time})")]
    NonPositiveValues { time: f64, value: f64 },

    #[error("decay fit window has {available} usable samples, need at least {required}")]
    WindowTooShort { available: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
