use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. The string names
    /// the offending key so CLI users can find it.
    #[error("config: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },

    /// Mesh input was syntactically valid but geometrically unusable.
    #[error("mesh: {0}")]
    MeshDefect(String),

    /// Mesh file could not be parsed.
    #[error("mesh parse: {0}")]
    MeshParse(String),

    /// Mesh too large for the all-pairs distance cache.
    #[error("mesh has {vertices} vertices, above the distance cache cap of {cap}; raise distance_cache_cap or coarsen the mesh")]
    MeshTooLarge { vertices: usize, cap: usize },

    /// A field or region specification does not apply to the given manifold.
    #[error("{0}")]
    KindMismatch(String),

    /// Operation requires an analytic gradient the field does not carry.
    #[error("field `{0}` carries no analytic gradient; indicator variation comes from reference_variation")]
    MissingGradient(String),

    /// Kernel dimension differs from the sampling dimension.
    #[error("kernel dimension {kernel} does not match manifold dimension {manifold}")]
    DimensionMismatch { kernel: u32, manifold: u32 },

    /// A pairwise term evaluated to NaN.
    #[error("non-finite term at pair ({i}, {j}){}", context.as_deref().map(|c| format!(" while evaluating {c}")).unwrap_or_default())]
    NonFiniteTerm {
        i: usize,
        j: usize,
        context: Option<String>,
    },

    /// Too few points for the extrapolation fit.
    #[error("extrapolation needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
