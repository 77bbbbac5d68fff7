//! Numerical laboratory for the relativistic magnetic Hamiltonian
//!
//! The object of study is the operator
//!
//! ```text
//!     H(A, V) = sqrt(1 + (D - A(x))^2) - 1 + V(x)
//! ```
//!
//! on `R^d` for `d in {1, 2, 3}`: the kinetic symbol `h(xi) = sqrt(1 + |xi|^2) - 1`
//! twisted by a magnetic vector potential `A` and perturbed by an electric
//! potential `V`. Everything about this operator that is usually left abstract
//! is made explicit and checkable here:
//!
//! * [`specfun`]: the modified Bessel function `K_nu` and the exponential
//!   integral `E_1`, the two special functions every closed form below rests on;
//! * [`kernel`]: the free semigroup kernel, the jump (Levy) measure of `h`, and
//!   the Levy-Khinchin reconstruction of the symbol from its jumps;
//! * [`fields`]: magnetic fields `B`, transversal-gauge vector potentials,
//!   gauge functions, and line-segment circulations `Gamma^A(x, y)`;
//! * [`discrete`]: two dense lattice quantizations of `H(A, V)` (a spectral
//!   periodic builder and a jump-weight builder with exact entrywise
//!   diamagnetic structure), eigenvalue counting, and semigroup application;
//! * [`birman`]: the Birman-Schwinger operator `K_alpha`, the `Phi`-transform
//!   linking weight functions `g` to trace functionals `F`, and the full
//!   eigenvalue-counting chain;
//! * [`bounds`]: CLR-type right-hand sides, the dimensional coefficient
//!   `cbar_d`, Lieb-Thirring sums, and coupling-constant scans;
//! * [`levy`]: the subordinated jump process underlying `e^{-tH}`, plain
//!   Feynman-Kac weights, and the magnetic (Feynman-Kac-Ito) phase, with
//!   reproducible splittable-stream Monte Carlo;
//! * [`cli`]: config-driven experiment runner behind the `relmag` binary.
//!
//! The crate is deliberately desk-scale: dense matrices, explicit quadratures,
//! hard size caps. The point is that every inequality in the counting chain
//! can be evaluated on both sides, not that any of it scales.

pub mod birman;
pub mod bounds;
pub mod cli;
pub mod discrete;
pub mod fields;
pub mod kernel;
pub mod levy;
pub mod specfun;

pub(crate) mod quadrature;

pub use num_complex::Complex64;

/// Crate-wide error type. Variants mirror the failure modes of the numerical
/// contracts: domain violations, size caps, quadrature ranges, and solver
/// failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument left the mathematical domain of the routine.
    #[error("{context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    /// A requested dense operator exceeds the hard size cap.
    #[error("grid has {size} points, above the dense-solve cap {cap}")]
    GridTooLarge { size: usize, cap: usize },

    /// A quadrature specification cannot be evaluated reliably.
    #[error("quadrature range: {0}")]
    QuadratureRange(String),

    /// The dense eigensolver failed to converge.
    #[error("eigensolver: {0}")]
    Eigensolver(String),

    /// A linear solve hit a (numerically) singular operator.
    #[error("singular operator: {0}")]
    Singular(String),

    /// A mathematical invariant that the code promises to uphold was violated
    /// at runtime. The message carries the violating values.
    #[error("invariant '{check}' violated: {message}")]
    Invariant { check: &'static str, message: String },

    /// A multi-step computation failed; `stage` names the step.
    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            context,
            message: message.into(),
        }
    }

    pub(crate) fn invariant(check: &'static str, message: impl Into<String>) -> Self {
        Error::Invariant {
            check,
            message: message.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
