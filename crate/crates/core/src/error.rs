use std::path::PathBuf;

/// Errors raised anywhere in the recognition pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{path}: unsupported or malformed image ({reason})")]
    Format { path: PathBuf, reason: String },

    #[error("invalid image dimensions {width}x{height}")]
    Dimensions { width: usize, height: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The restricted (lower grey-scale) histogram holds no pixels.
    #[error("no dot-candidate mass in the lower grey-scale range")]
    NoDotMass,

    #[error("histogram is empty")]
    EmptyHistogram,

    /// No component passed the circle test, so no standard diameter exists.
    #[error("no circle candidates; page unreadable")]
    NoCircleCandidates,

    #[error("not enough braille points: {0}")]
    TooFewPoints(String),

    #[error("upper and left margin lines are parallel")]
    ParallelMargins,

    #[error("pitch extraction failed (dominant pitch {dominant:?})")]
    PitchExtraction { dominant: Option<f64> },

    #[error("writing rotation {degrees:.2} degrees is outside the accepted range")]
    RotationOutOfRange { degrees: f64 },

    #[error("mapping table line {line}: {reason}")]
    TableSyntax { line: usize, reason: String },

    #[error("mapping table line {line}: duplicate code {code} (first defined on line {first_line})")]
    DuplicateCode {
        line: usize,
        code: String,
        first_line: usize,
    },

    #[error("invalid braille code {0:?}")]
    InvalidCode(String),

    #[error("no braille code for {grapheme:?} (line {line})")]
    UnmappableGrapheme { grapheme: String, line: usize },

    #[error("synth spec: {0}")]
    SynthSpec(String),

    #[error("truth file line {line}: {reason}")]
    TruthSyntax { line: usize, reason: String },

    #[error("confusion counts are all zero")]
    EmptyConfusion,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}
