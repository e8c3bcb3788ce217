use thiserror::Error;

/// Errors raised while building meshes, time grids, or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("invalid time partition: {0}")]
    TimeGrid(String),

    #[error("final times differ: {0} vs {1}")]
    FinalTimeMismatch(f64, f64),

    #[error("invalid coefficient: {0}")]
    Coefficient(String),

    #[error("factorization failed (slab {slab:?}, dt = {dt}): {reason}")]
    Factorization {
        slab: Option<usize>,
        dt: f64,
        reason: String,
    },

    #[error("edge {0} is not on the requested interface")]
    NotInterfaceEdge(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("GMRES breakdown at iteration {0}")]
    Breakdown(usize),

    #[error("iteration diverged: residual {residual:e} after {iterations} iterations")]
    Diverged { iterations: usize, residual: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
