//! The Birman-Schwinger operator and the eigenvalue-counting duality.
//!
//! For a kinetic operator `H0 >= lower bound` (free or magnetic, but with no
//! potential of its own) and an attractive coupling `V_-`, the operator
//!
//! ```text
//! K_alpha = V_-^{1/2} (H0 + alpha)^{-1} V_-^{1/2}
//! ```
//!
//! turns spectral counting inside out: `H0 - V_-` has exactly as many
//! eigenvalues below `-alpha` as `K_alpha` has eigenvalues above `1`. The
//! left side is a question about an operator difference; the right side is a
//! question about a compact positive operator that is *linear* in the
//! potential, which is what every bound downstream exploits.
//!
//! [`BirmanSchwinger`] diagonalizes the kinetic operator once and then
//! serves `K_alpha` for any admissible `alpha` with two matrix products, so
//! scanning a grid of spectral parameters costs one eigendecomposition
//! total, not one per grid point.
//!
//! Counting alone is not yet a bound: the count is converted into a trace by
//! an increasing transform `F` with `F(0) = 0`, since
//!
//! ```text
//! #{mu > 1} <= F(1)^{-1} sum_mu F(mu) = F(1)^{-1} Tr F(K_alpha).
//! ```
//!
//! The transforms used here are Laplace-type integrals of profile functions
//! ([`GFunction`], [`phi_transform`]), chosen so that `Tr F(K_alpha)` with a
//! magnetic field is dominated by the same trace without one. The whole
//! two-sided comparison is packaged in [`counting_chain`].

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::discrete::{add_diagonal, eigh, eigvalsh, Eigen, Operator};
use crate::fields::Potential;
use crate::quadrature::composite_gl;
use crate::specfun::exp_integral_e1;
use crate::{Complex64, Error, Result};

/// Counts eigenvalues strictly below `bound` in an unsorted slice.
pub fn count_below(values: &[f64], bound: f64) -> usize {
    values.iter().filter(|&&v| v < bound).count()
}

/// Value of the saturating transform at `t = 1`: `e^{-1} - E_1(1)`.
///
/// Dividing a trace of [`f_saturating`] by this constant turns it into an
/// eigenvalue-count bound, because every eigenvalue above `1` contributes at
/// least `F(1)` to the trace.
pub const F_SATURATING_AT_ONE: f64 = 0.14849550677592205;

/// Profile functions `g` fed to the Laplace-type transform
/// [`phi_transform`]. All profiles map `[0, inf)` into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GFunction {
    /// `exp(-lambda r)` with `lambda > 0`.
    Exponential { lambda: f64 },
    /// `1 - 1/r` for `r > 1`, zero otherwise; saturates to one at infinity.
    Saturating,
    /// Equals the saturating profile up to `r = n`, then `(2n - 1)/r - 1`
    /// until that hits zero at `r = 2n - 1`, zero beyond: a compactly
    /// supported approximant, increasing in `n`, converging to the
    /// saturating profile uniformly on compact sets (not on `[0, inf)`:
    /// the gap beyond the window tends to one).
    Windowed { n: u32 },
}

impl GFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            GFunction::Exponential { lambda } => (-lambda * r).exp(),
            GFunction::Saturating => {
                if r > 1.0 {
                    1.0 - 1.0 / r
                } else {
                    0.0
                }
            }
            GFunction::Windowed { n } => {
                let n = f64::from(n);
                if r <= 1.0 || r >= 2.0 * n - 1.0 {
                    0.0
                } else if r <= n {
                    1.0 - 1.0 / r
                } else {
                    (2.0 * n - 1.0) / r - 1.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GFunction::Exponential { lambda } if !(lambda > 0.0) || !lambda.is_finite() => {
                Err(Error::domain(
                    "g-function",
                    format!("exponential rate must be positive and finite, got {lambda}"),
                ))
            }
            GFunction::Windowed { n } if n == 0 => Err(Error::domain(
                "g-function",
                "window index must be at least 1".to_string(),
            )),
            _ => Ok(()),
        }
    }
}

/// The transform `Phi(g)(t) = int_0^inf exp(-r/t) g(r) dr` by quadrature.
///
/// `panels` and `order` control a composite Gauss-Legendre rule applied to
/// each smooth piece of the integrand separately. The integration window
/// adapts to the decay rate of the integrand, keeping the truncation error
/// far below the quadrature error.
pub fn phi_transform(g: &GFunction, t: f64, panels: usize, order: usize) -> Result<f64> {
    g.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(
            "phi_transform",
            format!("t must be positive and finite, got {t}"),
        ));
    }
    if panels == 0 || order == 0 {
        return Err(Error::domain(
            "phi_transform",
            "quadrature needs at least one panel and one node".to_string(),
        ));
    }
    let damped = |r: f64| (-r / t).exp() * g.eval(r);
    let value = match *g {
        GFunction::Exponential { lambda } => {
            let rate = 1.0 / t + lambda;
            composite_gl(damped, 0.0, 50.0 / rate, panels, order)
        }
        GFunction::Saturating => composite_gl(damped, 1.0, 1.0 + 50.0 * t, panels, order),
        GFunction::Windowed { n } => {
            let n = f64::from(n);
            if n < 1.5 {
                0.0
            } else {
                composite_gl(damped, 1.0, n, panels, order)
                    + composite_gl(damped, n, 2.0 * n - 1.0, panels, order)
            }
        }
    };
    Ok(value)
}

/// Closed form of the transform of [`GFunction::Exponential`]:
/// `t / (1 + lambda t)` for `t > 0`, zero for `t <= 0`.
pub fn f_exponential(lambda: f64, t: f64) -> f64 {
    if t > 0.0 {
        t / (1.0 + lambda * t)
    } else {
        0.0
    }
}

/// Closed form of the transform of [`GFunction::Saturating`]:
/// `t exp(-1/t) - E_1(1/t)` for `t > 0`, zero for `t <= 0`.
///
/// The zero extension is deliberate: eigenvalues of a positive compact
/// operator can round to tiny negative values, whose transform is zero in
/// exact arithmetic.
pub fn f_saturating(t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let x = 1.0 / t;
    if x == 0.0 {
        return f64::INFINITY;
    }
    t * (-x).exp() - exp_integral_e1(x).expect("E_1 converges on positive arguments")
}

/// Applies a real scalar function to a Hermitian matrix through one
/// eigendecomposition: `f(M) = U diag(f(s)) U^*`.
pub fn matrix_function(m: &Mat<Complex64>, f: impl Fn(f64) -> f64) -> Result<Mat<Complex64>> {
    let eigen = eigh(m)?;
    let nn = eigen.values.len();
    let mut scaled = Mat::<Complex64>::zeros(nn, nn);
    for k in 0..nn {
        let fv = Complex64::new(f(eigen.values[k]), 0.0);
        for x in 0..nn {
            scaled[(x, k)] = eigen.vectors[(x, k)] * fv;
        }
    }
    Ok(&scaled * eigen.vectors.adjoint())
}

/// Factory for Birman-Schwinger operators sharing one kinetic
/// eigendecomposition.
pub struct BirmanSchwinger {
    kinetic: Eigen,
    /// `B = V_-^{1/2} U`, so that `K_alpha = B diag(1/(lambda + alpha)) B*`.
    b: Mat<Complex64>,
    v_minus: Vec<f64>,
    coupling_norm: f64,
}

impl BirmanSchwinger {
    /// `kinetic` must be the potential-free operator; the potential enters
    /// only through its negative part `V_- = max(-V, 0)` evaluated on the
    /// grid sites.
    pub fn new(kinetic: &Operator, v: &Potential) -> Result<Self> {
        Self::with_floor(kinetic, v, 0.0)
    }

    /// Like [`BirmanSchwinger::new`], but couples through
    /// `max(V_-, floor)` on every site. A strictly positive floor makes the
    /// coupling square root injective, so the eigenvector correspondence
    /// behind the counting identity cannot lose vectors supported where the
    /// potential vanishes. The counted operator is then `H0 - max(V_-, floor)`,
    /// not `H0 - V_-`; keep the floor far below every scale of interest.
    pub fn with_floor(kinetic: &Operator, v: &Potential, floor: f64) -> Result<Self> {
        if !floor.is_finite() || floor < 0.0 {
            return Err(Error::domain(
                "birman-schwinger",
                format!("coupling floor must be finite and nonnegative, got {floor}"),
            ));
        }
        v.validate(kinetic.grid.d)?;
        let eigen = eigh(&kinetic.matrix).map_err(|e| e.at_stage("birman-schwinger setup"))?;
        let nn = kinetic.matrix.nrows();
        let d = kinetic.grid.d;
        let mut coupling_norm = 0.0f64;
        let mut v_minus = Vec::with_capacity(nn);
        let mut b = Mat::<Complex64>::zeros(nn, nn);
        for x in 0..nn {
            let site = kinetic.grid.site(x);
            let vm = v.v_minus(&site[..d]).max(floor);
            v_minus.push(vm);
            coupling_norm = coupling_norm.max(vm);
            let root = Complex64::new(vm.sqrt(), 0.0);
            for k in 0..nn {
                b[(x, k)] = root * eigen.vectors[(x, k)];
            }
        }
        Ok(BirmanSchwinger {
            kinetic: eigen,
            b,
            v_minus,
            coupling_norm,
        })
    }

    /// Eigenvalues of the kinetic operator, ascending.
    pub fn kinetic_eigenvalues(&self) -> &[f64] {
        &self.kinetic.values
    }

    /// The coupling actually used, site by site: `max(V_-, floor)`.
    pub fn v_minus(&self) -> &[f64] {
        &self.v_minus
    }

    /// Largest value of `V_-` on the grid; zero means the potential has no
    /// attractive part and every `K_alpha` vanishes.
    pub fn coupling_norm(&self) -> f64 {
        self.coupling_norm
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        let bottom = self.kinetic.values.first().copied().unwrap_or(0.0);
        if bottom + alpha <= 0.0 {
            Err(Error::Singular(format!(
                "alpha = {alpha} does not clear the kinetic bottom {bottom}"
            )))
        } else {
            Ok(())
        }
    }

    /// The matrix `K_alpha`.
    pub fn matrix(&self, alpha: f64) -> Result<Mat<Complex64>> {
        self.check_alpha(alpha)?;
        let nn = self.kinetic.values.len();
        let mut scaled = Mat::<Complex64>::zeros(nn, nn);
        for k in 0..nn {
            let r = Complex64::new(1.0 / (self.kinetic.values[k] + alpha), 0.0);
            for x in 0..nn {
                scaled[(x, k)] = self.b[(x, k)] * r;
            }
        }
        Ok(&scaled * self.b.adjoint())
    }

    /// Eigenvalues of `K_alpha`, descending. All lie in `[0, inf)` up to
    /// rounding: the resolvent is positive and the coupling is a square.
    pub fn eigenvalues(&self, alpha: f64) -> Result<Vec<f64>> {
        let mut vals = eigvalsh(&self.matrix(alpha)?)?;
        vals.reverse();
        Ok(vals)
    }

    /// `#{mu(K_alpha) > level}`. With `level = 1` this equals the number of
    /// eigenvalues of `H0 - V_-` below `-alpha`, exactly, whenever `-alpha`
    /// is not itself an eigenvalue of `H0 - V_-`.
    pub fn count_above(&self, alpha: f64, level: f64) -> Result<usize> {
        Ok(self
            .eigenvalues(alpha)?
            .iter()
            .filter(|&&mu| mu > level)
            .count())
    }

    /// `Tr f(K_alpha) = sum over the spectrum of f(mu)`.
    pub fn trace_transform(&self, alpha: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(self.eigenvalues(alpha)?.iter().map(|&mu| f(mu)).sum())
    }
}

/// Slack granted to the floating-point links of the counting chain.
pub const CHAIN_SLACK: f64 = 1e-9;

/// One row of the two-sided eigenvalue-counting comparison at a fixed
/// spectral parameter `alpha`, using the saturating transform `F`:
///
/// ```text
/// n_count <= bs_count <= F(1)^{-1} trace_mag <= F(1)^{-1} trace_free.
/// ```
#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub alpha: f64,
    /// Eigenvalues of the magnetic operator `H_A - V_-` below `-alpha`.
    pub n_count: usize,
    /// Birman-Schwinger eigenvalues of `K_alpha(A)` above one.
    pub bs_count: usize,
    /// `Tr F(K_alpha)` for the field-free kinetic operator.
    pub trace_free: f64,
    /// `Tr F(K_alpha(A))` for the magnetic kinetic operator.
    pub trace_mag: f64,
    /// `trace_free / F(1)`, the closing counting bound.
    pub bound_value: f64,
}

/// Runs the counting chain at every `alpha`, enforcing each link.
///
/// `kinetic_free` and `kinetic_mag` must be potential-free operators from
/// the same builder on the same grid, without and with the magnetic field;
/// `v` supplies the attractive coupling through its negative part. The last
/// link, `trace_mag <= trace_free`, is the diamagnetic comparison: it relies
/// on the magnetic hop amplitudes being phase twists of the field-free ones,
/// which is how the jump builder constructs them.
///
/// Each returned row has been checked against the chain inequalities; a
/// violation beyond [`CHAIN_SLACK`] aborts with [`Error::Invariant`].
pub fn counting_chain(
    kinetic_free: &Operator,
    kinetic_mag: &Operator,
    v: &Potential,
    alphas: &[f64],
) -> Result<Vec<ChainLink>> {
    if kinetic_free.grid != kinetic_mag.grid || kinetic_free.kind != kinetic_mag.kind {
        return Err(Error::domain(
            "counting-chain",
            "kinetic operators disagree on grid or builder".to_string(),
        ));
    }
    let mag = BirmanSchwinger::new(kinetic_mag, v)
        .map_err(|e| e.at_stage("counting-chain magnetic setup"))?;
    let free = BirmanSchwinger::new(kinetic_free, v)
        .map_err(|e| e.at_stage("counting-chain free setup"))?;
    let attracted: Vec<f64> = mag.v_minus().iter().map(|vm| -vm).collect();
    let full = add_diagonal(kinetic_mag, &attracted)?;
    let full_eigs = eigvalsh(&full.matrix).map_err(|e| e.at_stage("counting-chain spectrum"))?;

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let n_count = count_below(&full_eigs, -alpha);
        let mu_mag = mag.eigenvalues(alpha)?;
        let mu_free = free.eigenvalues(alpha)?;
        let bs_count = mu_mag.iter().filter(|&&mu| mu > 1.0).count();
        let trace_mag: f64 = mu_mag.iter().map(|&mu| f_saturating(mu)).sum();
        let trace_free: f64 = mu_free.iter().map(|&mu| f_saturating(mu)).sum();
        let bound_value = trace_free / F_SATURATING_AT_ONE;

        if n_count > bs_count {
            return Err(Error::invariant(
                "counting-chain",
                format!(
                    "at alpha = {alpha}: direct count {n_count} exceeds \
                     Birman-Schwinger count {bs_count}"
                ),
            ));
        }
        if bs_count as f64 * F_SATURATING_AT_ONE > trace_mag + CHAIN_SLACK {
            return Err(Error::invariant(
                "counting-chain",
                format!(
                    "at alpha = {alpha}: count {bs_count} breaks the trace bound \
                     {:.12e}",
                    trace_mag / F_SATURATING_AT_ONE
                ),
            ));
        }
        if trace_mag > trace_free + CHAIN_SLACK {
            return Err(Error::invariant(
                "counting-chain",
                format!(
                    "at alpha = {alpha}: magnetic trace {trace_mag:.12e} exceeds \
                     field-free trace {trace_free:.12e}"
                ),
            ));
        }
        rows.push(ChainLink {
            alpha,
            n_count,
            bs_count,
            trace_free,
            trace_mag,
            bound_value,
        });
    }
    Ok(rows)
}
