use thiserror::Error;

use crate::groups::Elem;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),
    #[error("multiplication is not associative at ({0}, {1}, {2})")]
    NotAssociative(Elem, Elem, Elem),
    #[error("element {0} has no inverse")]
    MissingInverse(Elem),
    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("cocycle is not normalized at ({0}, {1}, {2})")]
    NotNormalized(Elem, Elem, Elem),
    #[error("cocycle identity fails at ({0}, {1}, {2}, {3})")]
    CocycleViolation(Elem, Elem, Elem, Elem),
    #[error("2-cocycle identity fails at ({0}, {1}, {2})")]
    TwoCocycleViolation(Elem, Elem, Elem),
    #[error("2-cocycle is not a coboundary: {0}")]
    Unsolvable(String),
    #[error("map is not a homomorphism at ({0}, {1})")]
    NotHomomorphism(Elem, Elem),
    #[error("subgroup is not abelian: {0} and {1} do not commute")]
    NotAbelian(Elem, Elem),

    #[error("character table rejected: {0}")]
    CharacterTable(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no projective characters available for the centralizer of element {0}")]
    UnsupportedCentralizer(Elem),
    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
    #[error("quasi-action axiom fails for g={g}, h={h}, basis vector {v}")]
    QuasiAction { g: Elem, h: Elem, v: usize },
    #[error("not a permutation matrix: {0}")]
    NotPermutation(String),
    #[error("invalid braid word: {0}")]
    BraidWord(String),
    #[error("missing invariant {0}")]
    MissingInvariant(&'static str),
    #[error("bundles are incompatible: {0}")]
    Incompatible(String),

    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
