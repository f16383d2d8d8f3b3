use thiserror::Error;

/// Which configured limit a computation ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BudgetKind {
    /// Number of elements of a product structure or cells of an operation table.
    Elements,
    /// Number of search nodes visited by a solver or game evaluation.
    Nodes,
}

impl std::fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BudgetKind::Elements => write!(f, "elements"),
            BudgetKind::Nodes => write!(f, "nodes"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("element {element} out of range 1..={domain}")]
    ElementOutOfRange { element: u64, domain: u32 },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol `{symbol}` has arity {expected}, got {got} arguments")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },

    #[error("variable `{0}` is not bound by the quantifier prefix")]
    FreeVariable(String),

    #[error("variable `{0}` is quantified more than once")]
    DuplicateVariable(String),

    #[error("signatures do not match: {0}")]
    SignatureMismatch(String),

    #[error("domain size mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: u32, got: u32 },

    #[error("budget exceeded: needs {needed} {kind}, budget is {budget}")]
    Budget {
        kind: BudgetKind,
        needed: u64,
        budget: u64,
    },

    #[error("tuple length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("equality atom not allowed here")]
    EqualityAtom,

    #[error("no constant of the structure names element {0}")]
    MissingConstant(u32),

    #[error("`{0}` does not name a universal variable of the sentence")]
    NotUniversal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("adversary length {got} does not match the {expected} universal variables")]
    AdversaryLength { expected: usize, got: usize },

    #[error("degenerate adversary set: the canonical sentence is not defined")]
    Degenerate,

    #[error("operation requires a {expected} path, but `{beta}` is {got}")]
    WrongPathClass {
        beta: String,
        expected: String,
        got: String,
    },

    #[error("not a digraph: expected exactly one binary relation symbol")]
    NotADigraph,

    #[error("structure is not semicomplete")]
    NotSemicomplete,

    #[error("no Hubie construction applies: the digraph has more than one cycle and lacks a source/sink pair")]
    NoHubieCase,

    #[error("every word of {{p,q}}^m is covered by the supplied tuple set; no omitted word exists")]
    NoOmittedWord,

    #[error("internal verification of a constructed witness failed: {0}")]
    WitnessVerification(String),

    #[error("certificate does not verify: {0}")]
    BadCertificate(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
