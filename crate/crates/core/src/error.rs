use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Φ (or a Wronskian) vanished where a quotient by it was required.
    #[error("singularity at r = {r}: {what}")]
    Singularity { r: f64, what: String },

    #[error("series did not converge within {terms} terms (a = {a}, b = {b}, z = {z})")]
    Convergence { a: f64, b: f64, z: f64, terms: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("coincident factorization energies ({0})")]
    CoincidentEnergy(f64),

    #[error("bracket [{lo}, {hi}] holds {found} eigenvalues, {wanted} requested")]
    Bracket { lo: f64, hi: f64, found: usize, wanted: usize },

    #[error("non-finite potential value {value} at r = {r}")]
    NonFinite { r: f64, value: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Domain-class errors map to exit code 2 in the command-line front end.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::CoincidentEnergy(_) | Error::Range(_)
        )
    }
}
