use thiserror::Error;

use crate::world::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("cell ({x}, {y}) outside the {width}x{height} map")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("timestep {t} outside horizon {horizon}")]
    Horizon { t: usize, horizon: usize },

    #[error("camera coincides with the aim target")]
    DegenerateAim,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("observation (robot {robot}, actor {actor}, face {face}, t {t}) already committed")]
    DoubleCommit {
        robot: usize,
        actor: usize,
        face: usize,
        t: usize,
    },

    #[error("ragged joint path: {0}")]
    Shape(String),

    #[error("no feasible trajectory for robot {robot} from {start:?}")]
    Infeasible { robot: usize, start: Cell },

    #[error("sequential planning failed at robot {robot}")]
    SequentialFailure { robot: usize },

    #[error("constraint tree exhausted after {nodes_expanded} expansions (best g = {best_g:.6})")]
    NoSolution { nodes_expanded: usize, best_g: f64 },

    #[error("scenario parameter error: {0}")]
    Parameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
