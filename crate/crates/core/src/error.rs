use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("points have zero coordinates")]
    EmptyDimension,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error(
        "point {row} coordinate {col} = {value} lies outside the periodic box [0, {box_length})"
    )]
    OutsideBox {
        row: usize,
        col: usize,
        value: f64,
        box_length: f64,
    },

    #[error("coincident points (first/second neighbor ratio undefined): {}", fmt_pairs(.0))]
    DuplicatePoints(Vec<(usize, usize)>),

    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },

    #[error("negative distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },

    #[error("non-zero diagonal entry {value} at row {i}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("distance matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("ratio {value} at index {index} is not a finite value >= 1")]
    InvalidMu { index: usize, value: f64 },

    #[error("all ratios equal 1, the fit has no spread")]
    NoSpread,

    #[error("only {remaining} fittable points remain after discarding")]
    TooFewAfterDiscard { remaining: usize },

    #[error("discard fraction must lie in [0, 1), got {0}")]
    InvalidDiscard(f64),

    #[error("block size {block_size} is below the minimum of 3")]
    BlockTooSmall { block_size: usize },

    #[error("block size {block_size} exceeds the {n_total} available points")]
    BlockTooLarge { block_size: usize, n_total: usize },

    #[error("block size {0} requested twice")]
    DuplicateBlockSize(usize),

    #[error("block size {block_size}, block {block_index}: {source}")]
    InBlock {
        block_size: usize,
        block_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported generator combination: {0}")]
    UnsupportedCombination(String),

    #[error("{}: parse error at line {line}, column {column}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_pairs(pairs: &[(usize, usize)]) -> String {
    const SHOWN: usize = 8;
    let mut s = pairs
        .iter()
        .take(SHOWN)
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ");
    if pairs.len() > SHOWN {
        s.push_str(&format!(" and {} more", pairs.len() - SHOWN));
    }
    s
}
