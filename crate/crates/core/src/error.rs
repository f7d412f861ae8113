use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point fell outside the square domain of a layer (after rotating into its frame).
    #[error("point {point:?} is outside the layer domain{}{}", fmt_layer(*.layer), fmt_point(*.point_index))]
    OutOfDomain {
        layer: Option<usize>,
        point_index: Option<usize>,
        point: [f64; 3],
    },

    /// A point is not in the image of a layer, so it cannot be inverted.
    #[error("point {point:?} is not in the image of the layer map{}{}", fmt_layer(*.layer), fmt_point(*.point_index))]
    NotInImage {
        layer: Option<usize>,
        point_index: Option<usize>,
        point: [f64; 3],
    },

    /// A Tutte solve produced a non-positive triangle determinant.
    #[error("injectivity certificate violated: layer {layer:?}, triangle {triangle}, det {det:e}")]
    InjectivityViolation {
        layer: Option<usize>,
        triangle: usize,
        det: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn fmt_layer(layer: Option<usize>) -> String {
    layer.map(|l| format!(" (layer {l})")).unwrap_or_default()
}

fn fmt_point(index: Option<usize>) -> String {
    index.map(|i| format!(" (point #{i})")).unwrap_or_default()
}

impl Error {
    /// Attaches a layer index to domain errors raised below the layer level.
    pub fn at_layer(self, idx: usize) -> Self {
        match self {
            Error::OutOfDomain { point_index, point, .. } => Error::OutOfDomain {
                layer: Some(idx),
                point_index,
                point,
            },
            Error::NotInImage { point_index, point, .. } => Error::NotInImage {
                layer: Some(idx),
                point_index,
                point,
            },
            Error::InjectivityViolation { triangle, det, .. } => Error::InjectivityViolation {
                layer: Some(idx),
                triangle,
                det,
            },
            other => other,
        }
    }

    /// Attaches a point index to domain errors.
    pub fn at_point(self, idx: usize) -> Self {
        match self {
            Error::OutOfDomain { layer, point, .. } => Error::OutOfDomain {
                layer,
                point_index: Some(idx),
                point,
            },
            Error::NotInImage { layer, point, .. } => Error::NotInImage {
                layer,
                point_index: Some(idx),
                point,
            },
            other => other,
        }
    }
}
