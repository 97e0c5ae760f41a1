use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate truncation weights: G_n(y_i) = 0 for every record")]
    DegenerateWeights,

    #[error("degenerate sample: only {observed} of {latent} latent draws were observed")]
    DegenerateSample { observed: usize, latent: usize },

    #[error("no kernel mass at x = {x}")]
    NoLocalData { x: f64 },

    #[error("quantile p = {p} not bracketed on [{a}, {b}]: attained range [{low}, {high}]")]
    NotBracketed {
        p: f64,
        a: f64,
        b: f64,
        low: f64,
        high: f64,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Toml(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Toml(e.to_string())
    }
}
