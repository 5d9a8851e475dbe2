use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input dimension mismatch: model expects {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported derivative order {0} (supported: 0, 1, 2)")]
    UnsupportedOrder(usize),

    #[error("non-finite value in loss component `{component}`{}", point_suffix(*.point))]
    NonFinite {
        component: String,
        point: Option<usize>,
    },

    #[error("geometry has no interior fluid points")]
    EmptyDomain,

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown case id `{0}`")]
    UnknownCase(String),
}

fn point_suffix(point: Option<usize>) -> String {
    match point {
        Some(i) => alloc::format!(" at point {i}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn non_finite(component: &str, point: Option<usize>) -> Self {
        Error::NonFinite {
            component: component.into(),
            point,
        }
    }
}
