//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the segmentation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A feature map contained NaN or infinite values.
    #[error("non-finite feature")]
    NonFiniteFeature,

    /// Mask dimensions are not integer multiples of the target grid.
    #[error("incompatible grid: {full_h}x{full_w} mask cannot be reduced to {target_h}x{target_w}")]
    IncompatibleGrid {
        full_h: usize,
        full_w: usize,
        target_h: usize,
        target_w: usize,
    },

    /// Two grids that must share a spatial shape do not.
    #[error("shape mismatch: {expected_h}x{expected_w} expected, got {got_h}x{got_w}")]
    ShapeMismatch {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },

    /// Feature channel counts disagree.
    #[error("channel mismatch: {expected} expected, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    /// The first-frame mask binarizes to a single class.
    #[error("first-frame mask must contain both classes")]
    MaskSingleClass,

    /// Fitting was requested with no labeled cue stacks.
    #[error("empty training set")]
    EmptyTrainingSet,

    /// A tensor file does not start with the expected magic bytes.
    #[error("bad magic: expected \"DFT1\", got {got:?}")]
    BadMagic { got: [u8; 4] },

    /// A tensor or mask file ends before the declared payload.
    #[error("truncated payload: need {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },

    /// A tensor file carries more bytes than its header declares.
    #[error("size mismatch: header declares {expected} payload bytes, file has {got}")]
    SizeMismatch { expected: usize, got: usize },

    /// A tensor file header declares impossible dimensions.
    #[error("invalid header: {reason}")]
    InvalidHeader { reason: &'static str },

    /// A graymap file is not binary P5 with maxval 255.
    #[error("unsupported graymap: {reason}")]
    PgmFormat { reason: String },

    /// A `key = value` configuration file could not be parsed.
    #[error("config error: {reason}")]
    Config { reason: String },

    /// A synthetic trajectory places the shape outside the grid.
    #[error("shape leaves grid at frame {frame}")]
    ShapeLeavesGrid { frame: usize },

    /// The benchmark's two matching paths disagreed; no timings are reported.
    #[error("benchmark paths disagree: max abs diff {max_abs_diff:e} exceeds {tolerance:e}")]
    BenchMismatch { max_abs_diff: f64, tolerance: f64 },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
