use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, \
         error {abs_error:e} after {evaluations} evaluations"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        abs_error: f64,
        evaluations: usize,
    },

    #[error("characteristic function does not decay: |phi(t_max)| = {magnitude:e} at t_max = {t_max}")]
    Aliasing { t_max: f64, magnitude: f64 },

    #[error("output grid reaches |x| = {requested} beyond the Nyquist limit {nyquist}")]
    Nyquist { requested: f64, nyquist: f64 },

    #[error("inversion produced an imaginary residue of {residue:e}")]
    InversionInconsistency { residue: f64 },

    #[error("Fock truncation too small: tail population {tail:e} with n_cut = {n_cut}")]
    Truncation { tail: f64, n_cut: usize },

    #[error("Wigner evaluation left an imaginary residue of {residue:e}")]
    Hermiticity { residue: f64 },

    #[error("marginal {axis} dips to {min:e}, below the nonnegativity tolerance")]
    Negativity { axis: &'static str, min: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("verification unreliable: {fraction:.3} of pixels decoded out of gamut")]
    Unreliable { fraction: f64 },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape { expected: expected.to_string(), found: found.to_string() }
    }
}
