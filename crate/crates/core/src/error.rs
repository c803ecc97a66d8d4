use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized: squared norm {norm_sq} (expected 1)")]
    Normalization { norm_sq: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("{what} is not self-adjoint: max |A - A*| = {defect:.3e}")]
    SelfAdjointness { what: &'static str, defect: f64 },

    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e}); minimal admissible epsilon is {min_epsilon}")]
    NotPositive { min_eigenvalue: f64, min_epsilon: f64 },

    #[error("expected a real value, got {re} + {im}i")]
    NonReal { re: f64, im: f64 },

    #[error("{what} is not unitary: max |U*U - I| = {defect:.3e}")]
    NotUnitary { what: &'static str, defect: f64 },

    #[error("Hamiltonian contains an interaction term (residual {residual:.3e}); only H = H1 (x) I + I (x) H2 admits a classical channel")]
    Interaction { residual: f64 },

    #[error("estimator needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid input: {0}")]
    Invalid(String),
}
