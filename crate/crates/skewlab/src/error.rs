use thiserror::Error;

/// Errors shared across the crate. Everything is exact arithmetic, so these
/// signal contract violations, not numerical trouble.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two objects live over different p-adic bases.
    #[error("base mismatch: p = {left} vs p = {right}")]
    BaseMismatch { left: u32, right: u32 },

    /// Refinement target is coarser than the object's own rank.
    #[error("cannot refine to rank {target}: object already has rank {rank}")]
    RankBelow { rank: u32, target: u32 },

    /// p^rank would exceed the configured cell cap.
    #[error("rank {rank} over base {p} needs {cells} cells, above the cap of {max_cells}")]
    CapExceeded {
        p: u32,
        rank: u32,
        cells: u128,
        max_cells: u64,
    },

    /// Index map is not a bijection of the rank-k intervals.
    #[error("map is not a bijection of the {cells} rank-{rank} intervals")]
    NotBijection { rank: u32, cells: u64 },

    /// A point sits on a cell boundary of the rank in use.
    #[error("point {value} lies on a rank-{rank} cell boundary")]
    BoundaryPoint { value: String, rank: u32 },

    /// Conjugation requires the conjugating map to act only on fibers.
    #[error("conjugating map must have an identity base")]
    NonIdentityBase,

    /// Tower construction requires the base to act as one cycle on its intervals.
    #[error("base map is not a single cycle on its rank-{rank} intervals")]
    NotSingleCycle { rank: u32 },

    /// Tower height exceeds the base cycle length.
    #[error("tower height {height} exceeds the base cycle length {cycle}")]
    TowerTooTall { height: u64, cycle: u64 },

    /// Requested accuracy is out of reach under the configured rank cap.
    #[error("resolution limit: accuracy needs rank about {required_rank}, cap allows {max_rank}")]
    Resolution { required_rank: u32, max_rank: u32 },

    /// A function that must be a 0/1 indicator is not.
    #[error("step function is not a 0/1 indicator")]
    NotIndicator,

    /// A stated precondition on the inputs does not hold.
    #[error("{0}")]
    Domain(String),

    /// An exactly checked guarantee failed; the inputs are a counterexample.
    #[error("verification failed: {0}")]
    Falsified(String),

    /// Construction input is malformed.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// A cell index does not fit the stated rank.
    #[error("index {0} out of range for {1} cells")]
    IndexOutOfRange(u64, u64),

    /// Text or JSON input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn falsified(msg: impl Into<String>) -> Self {
        Error::Falsified(msg.into())
    }

    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
