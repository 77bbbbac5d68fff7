//! Scalar potentials, magnetic fields, vector potentials and gauge
//! functions entering `H(A, V) = sqrt(1 + (D - A)^2) - 1 + V`.
//!
//! Magnetic data enters twice. A [`MagneticField`] is the physical 2-form
//! `B_jk`; [`transversal_gauge`] turns it into the canonical vector
//! potential `A_j(x) = -sum_k int_0^1 B_jk(sx) s x_k ds`, the gauge with
//! `x . A(x) = 0`. A [`VectorPotential`] then reaches the lattice operator
//! through one quantity only: the line average
//! `Gamma_A(x, y) = int_0^1 A((1-s)x + sy) ds` and the Peierls phase
//! `(y - x) . Gamma_A(x, y)` built from it. The quadrature behind
//! [`circulation`] is Gauss-Legendre of order 8, exact for polynomial
//! integrands up to degree 15; every potential provided here is polynomial
//! of degree at most 2, so circulations and phases carry no quadrature
//! error at all. That exactness is what lets gauge covariance hold to
//! machine precision downstream instead of merely up to discretization
//! error.
//!
//! Sign convention for potentials: `depth`/`amplitude` are the depths of
//! attractive wells, so `eval` returns negative values inside a well with
//! positive depth.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

const CIRCULATION_ORDER: usize = 8;

fn gl8() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(CIRCULATION_ORDER))
}

/// A scalar potential `V`. All variants are bounded and compactly
/// supported or decaying, which keeps every operator built from them
/// bounded below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    Zero,
    /// `V(x) = -depth` for `|x - center| <= radius`, `0` outside.
    SquareWell {
        depth: f64,
        radius: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// `V(x) = -amplitude exp(-|x - center|^2 / (2 width^2))`.
    GaussianWell {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// Smooth compactly supported well:
    /// `V(x) = -amplitude exp(-s / (1 - s))` with `s = |x - center|^2 / radius^2`
    /// for `s < 1`, `0` outside. Infinitely differentiable across the edge.
    CompactBump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// Pointwise sum of the parts; overlapping wells add.
    Sum { parts: Vec<Potential> },
}

fn center_dist2(x: &[f64], center: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let c = center.get(i).copied().unwrap_or(0.0);
            (xi - c) * (xi - c)
        })
        .sum()
}

impl Potential {
    /// Checks the variant is usable in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Potential::Zero => Ok(()),
            Potential::SquareWell { radius, center, .. }
            | Potential::CompactBump { radius, center, .. } => {
                if !(radius > &0.0) {
                    return Err(Error::domain("potential", "well radius must be positive"));
                }
                check_center(center, d)
            }
            Potential::GaussianWell { width, center, .. } => {
                if !(width > &0.0) {
                    return Err(Error::domain("potential", "gaussian width must be positive"));
                }
                check_center(center, d)
            }
            Potential::Sum { parts } => parts.iter().try_for_each(|p| p.validate(d)),
        }
    }

    /// The potential value `V(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::SquareWell {
                depth,
                radius,
                center,
            } => {
                if center_dist2(x, center) <= radius * radius {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::GaussianWell {
                amplitude,
                width,
                center,
            } => -amplitude * (-center_dist2(x, center) / (2.0 * width * width)).exp(),
            Potential::CompactBump {
                amplitude,
                radius,
                center,
            } => {
                let s = center_dist2(x, center) / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    -amplitude * (-s / (1.0 - s)).exp()
                }
            }
            Potential::Sum { parts } => parts.iter().map(|p| p.eval(x)).sum(),
        }
    }

    /// Negative part `V_-(x) = max(-V(x), 0)`, the coupling in the
    /// Birman-Schwinger operator.
    pub fn v_minus(&self, x: &[f64]) -> f64 {
        (-self.eval(x)).max(0.0)
    }

    /// Positive part `V_+(x) = max(V(x), 0)`.
    pub fn v_plus(&self, x: &[f64]) -> f64 {
        self.eval(x).max(0.0)
    }
}

fn check_center(center: &[f64], d: usize) -> Result<()> {
    if center.is_empty() || center.len() == d {
        Ok(())
    } else {
        Err(Error::domain(
            "potential",
            format!(
                "center has {} coordinates but the grid dimension is {d}",
                center.len()
            ),
        ))
    }
}

/// A magnetic field as an antisymmetric 2-form `B_jk(x)`; only closed
/// fields (`dB = 0`) are representable. Components above `d = 3` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MagneticField {
    Zero,
    /// Constant field `B_12 = b`, all other components zero. Needs `d >= 2`.
    #[serde(rename = "constant-b")]
    ConstantB { b: f64 },
    /// Linearly growing field `B_12(x) = slope x_1`, all other components
    /// zero. Closed: the only nonzero component varies inside its own
    /// plane, so `dB = 0` and a vector potential exists. Needs `d >= 2`.
    #[serde(rename = "linear-b")]
    LinearB { slope: f64 },
}

impl MagneticField {
    /// The component `B_jk(x)`; antisymmetric in `(j, k)`.
    pub fn component(&self, j: usize, k: usize, x: &[f64]) -> f64 {
        if j == k {
            return 0.0;
        }
        if j > k {
            return -self.component(k, j, x);
        }
        match self {
            MagneticField::Zero => 0.0,
            MagneticField::ConstantB { b } => {
                if (j, k) == (0, 1) {
                    *b
                } else {
                    0.0
                }
            }
            MagneticField::LinearB { slope } => {
                if (j, k) == (0, 1) {
                    slope * x[0]
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks the variant is usable in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            MagneticField::Zero => Ok(()),
            MagneticField::ConstantB { .. } => {
                if d >= 2 {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "magnetic field",
                        "a constant field needs dimension at least 2",
                    ))
                }
            }
            MagneticField::LinearB { .. } => {
                if d >= 2 {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "magnetic field",
                        "a linearly growing field needs dimension at least 2",
                    ))
                }
            }
        }
    }
}

/// Transversal (Poincare) gauge of a magnetic field:
/// `A_j(x) = -sum_k int_0^1 B_jk(sx) s x_k ds`, evaluated with a
/// Gauss-Legendre rule of `nodes` points. Satisfies `x . A(x) = 0` and
/// `dA = B` for closed fields. For a constant field this reproduces the
/// symmetric gauge `(-b x_2 / 2, b x_1 / 2, 0)`; for `B_12 = slope x_1` it
/// gives `(-slope x_1 x_2 / 3, slope x_1^2 / 3, 0)`.
pub fn transversal_gauge(field: &MagneticField, x: &[f64], nodes: usize) -> [f64; 3] {
    transversal_with_rule(field, x, &gauss_legendre(nodes))
}

fn transversal_with_rule(field: &MagneticField, x: &[f64], rule: &[(f64, f64)]) -> [f64; 3] {
    let d = x.len();
    let mut a = [0.0; 3];
    if matches!(field, MagneticField::Zero) {
        return a;
    }
    let mut point = [0.0; 3];
    for &(node, w) in rule {
        let s = 0.5 * (node + 1.0);
        let ws = 0.5 * w * s;
        for i in 0..d {
            point[i] = s * x[i];
        }
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                if k != j {
                    acc += field.component(j, k, &point[..d]) * x[k];
                }
            }
            a[j] -= ws * acc;
        }
    }
    a
}

/// Max over `points` and component pairs `j < k` of
/// `|d_j A_k - d_k A_j - B_jk|`, with central differences of step
/// `fd_step`. A vector potential genuinely carrying the field `B` should
/// push this below `1e-8` at `fd_step = 1e-4` for the polynomial variants.
pub fn check_da_equals_b(
    a: &VectorPotential,
    field: &MagneticField,
    points: &[Vec<f64>],
    fd_step: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for p in points {
        let d = p.len();
        let mut shifted = p.clone();
        let mut partial = |i: usize, comp: usize| {
            shifted.copy_from_slice(p);
            shifted[i] = p[i] + fd_step;
            let hi = a.eval(&shifted)[comp];
            shifted[i] = p[i] - fd_step;
            let lo = a.eval(&shifted)[comp];
            (hi - lo) / (2.0 * fd_step)
        };
        for j in 0..d {
            for k in (j + 1)..d {
                let curl = partial(j, k) - partial(k, j);
                worst = worst.max((curl - field.component(j, k, p)).abs());
            }
        }
    }
    worst
}

/// A quadratic gauge function `phi(x) = c + l . x + x^T Q x / 2`.
///
/// Quadratic is the sweet spot: the gradient is affine, so the order-8
/// circulation rule integrates it exactly and gauge transformations hold to
/// rounding error; at the same time `Q != 0` makes the gradient
/// position-dependent, which is what a covariance test needs to exercise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeFunction {
    #[serde(default)]
    pub constant: f64,
    /// Coefficients of the linear term; missing trailing entries are zero.
    #[serde(default)]
    pub linear: Vec<f64>,
    /// Row-major symmetric part is used: `Q -> (Q + Q^T) / 2`.
    #[serde(default)]
    pub quad: Vec<Vec<f64>>,
}

impl GaugeFunction {
    fn q_sym(&self, i: usize, j: usize) -> f64 {
        let a = self
            .quad
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0.0);
        let b = self
            .quad
            .get(j)
            .and_then(|row| row.get(i))
            .copied()
            .unwrap_or(0.0);
        0.5 * (a + b)
    }

    /// `phi(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (i, &xi) in x.iter().enumerate() {
            v += self.linear.get(i).copied().unwrap_or(0.0) * xi;
            for (j, &xj) in x.iter().enumerate() {
                v += 0.5 * self.q_sym(i, j) * xi * xj;
            }
        }
        v
    }

    /// `grad phi(x)`, padded with zeros beyond `x.len()`.
    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for i in 0..x.len() {
            g[i] = self.linear.get(i).copied().unwrap_or(0.0);
            for (j, &xj) in x.iter().enumerate() {
                g[i] += self.q_sym(i, j) * xj;
            }
        }
        g
    }

    /// Checks coefficient shapes against dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.linear.len() > d || self.quad.iter().any(|row| row.len() > d) || self.quad.len() > d
        {
            return Err(Error::domain(
                "gauge",
                format!("gauge coefficients exceed dimension {d}"),
            ));
        }
        Ok(())
    }
}

/// A vector potential `A: R^d -> R^d`. Evaluation returns a zero-padded
/// `[f64; 3]`; only the first `x.len()` components are meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorPotential {
    Zero,
    /// Transversal gauge of a magnetic field; see [`transversal_gauge`].
    Transversal { field: MagneticField },
    /// Landau gauge for a constant field: `A = (-b x2, 0, ...)`.
    /// Differs from the transversal gauge of the same field by the
    /// gradient of `(b/2) x1 x2`. Needs `d >= 2`.
    Landau { b: f64 },
    /// `base + grad phi`: the gauge transform of another potential.
    Gauged {
        base: Box<VectorPotential>,
        gauge: GaugeFunction,
    },
}

impl VectorPotential {
    /// Transversal gauge of `field`; the canonical `A` carrying it.
    pub fn from_field(field: MagneticField) -> VectorPotential {
        VectorPotential::Transversal { field }
    }

    /// Symmetric gauge `(b/2)(-x2, x1, 0)` of a constant field.
    pub fn constant_field(b: f64) -> VectorPotential {
        VectorPotential::from_field(MagneticField::ConstantB { b })
    }

    /// Checks the variant is usable in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            VectorPotential::Zero => Ok(()),
            VectorPotential::Transversal { field } => field.validate(d),
            VectorPotential::Landau { .. } => {
                if d >= 2 {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "vector potential",
                        "the Landau gauge needs dimension at least 2",
                    ))
                }
            }
            VectorPotential::Gauged { base, gauge } => {
                base.validate(d)?;
                gauge.validate(d)
            }
        }
    }

    /// `A(x)`.
    pub fn eval(&self, x: &[f64]) -> [f64; 3] {
        match self {
            VectorPotential::Zero => [0.0; 3],
            VectorPotential::Transversal { field } => transversal_with_rule(field, x, gl8()),
            VectorPotential::Landau { b } => {
                let mut a = [0.0; 3];
                a[0] = -b * x.get(1).copied().unwrap_or(0.0);
                a
            }
            VectorPotential::Gauged { base, gauge } => {
                let mut a = base.eval(x);
                let g = gauge.gradient(x);
                for i in 0..3 {
                    a[i] += g[i];
                }
                a
            }
        }
    }

    /// Wraps `self` in a gauge transform.
    pub fn gauged(self, gauge: GaugeFunction) -> VectorPotential {
        VectorPotential::Gauged {
            base: Box::new(self),
            gauge,
        }
    }
}

/// Line average `Gamma_A(x, y) = int_0^1 A((1-s)x + sy) ds`, zero-padded to
/// three components.
pub fn circulation(a: &VectorPotential, x: &[f64], y: &[f64]) -> [f64; 3] {
    debug_assert_eq!(x.len(), y.len());
    if matches!(a, VectorPotential::Zero) {
        return [0.0; 3];
    }
    let mut out = [0.0; 3];
    let mut point = [0.0; 3];
    for &(node, w) in gl8() {
        let s = 0.5 * (node + 1.0);
        for i in 0..x.len() {
            point[i] = (1.0 - s) * x[i] + s * y[i];
        }
        let val = a.eval(&point[..x.len()]);
        for i in 0..3 {
            out[i] += 0.5 * w * val[i];
        }
    }
    out
}

/// Peierls phase `(y - x) . Gamma_A(x, y)`, the argument of the unimodular
/// factor attached to the lattice hop `x -> y`. Antisymmetric under swapping
/// the endpoints, which is what makes the magnetic operator Hermitian.
pub fn peierls_phase(a: &VectorPotential, x: &[f64], y: &[f64]) -> f64 {
    let gamma = circulation(a, x, y);
    (0..x.len()).map(|i| (y[i] - x[i]) * gamma[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(b: f64) -> VectorPotential {
        VectorPotential::constant_field(b)
    }

    #[test]
    fn transversal_of_constant_field_is_the_symmetric_gauge() {
        let b = 0.85;
        let field = MagneticField::ConstantB { b };
        for x in [[0.0, 0.0], [1.7, -2.3], [-0.4, 0.9]] {
            let a = transversal_gauge(&field, &x, 8);
            assert!((a[0] + 0.5 * b * x[1]).abs() < 1e-15, "x {x:?}");
            assert!((a[1] - 0.5 * b * x[0]).abs() < 1e-15, "x {x:?}");
            assert_eq!(a[2], 0.0);
        }
    }

    #[test]
    fn transversal_of_linear_field_matches_closed_form() {
        let slope = 1.4;
        let field = MagneticField::LinearB { slope };
        for x in [[1.0, 2.0, 3.0], [-0.7, 0.2, 1.9], [0.0, 5.0, -2.0]] {
            let a = transversal_gauge(&field, &x, 8);
            let want0 = -slope * x[0] * x[1] / 3.0;
            let want1 = slope * x[0] * x[0] / 3.0;
            assert!((a[0] - want0).abs() < 1e-14, "x {x:?} a0 {}", a[0]);
            assert!((a[1] - want1).abs() < 1e-14, "x {x:?} a1 {}", a[1]);
            assert!(a[2].abs() < 1e-14);
        }
    }

    #[test]
    fn transversal_gauge_is_orthogonal_to_the_ray() {
        let field = MagneticField::LinearB { slope: 0.6 };
        for x in [[1.0, -2.0, 0.5], [2.2, 0.1, -1.3]] {
            let a = transversal_gauge(&field, &x, 8);
            let dot: f64 = (0..3).map(|i| a[i] * x[i]).sum();
            assert!(dot.abs() < 1e-14, "x . A = {dot}");
        }
    }

    #[test]
    fn derivative_of_gauge_recovers_the_field() {
        let constant = MagneticField::ConstantB { b: 0.85 };
        let pts2: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.7, -2.3], vec![-0.4, 0.9]];
        let a2 = VectorPotential::from_field(constant.clone());
        assert!(check_da_equals_b(&a2, &constant, &pts2, 1e-4) < 1e-8);
        let landau = VectorPotential::Landau { b: 0.85 };
        assert!(check_da_equals_b(&landau, &constant, &pts2, 1e-4) < 1e-8);

        let linear = MagneticField::LinearB { slope: 1.4 };
        let pts3: Vec<Vec<f64>> = vec![vec![1.0, 2.0, 3.0], vec![-0.7, 0.2, 1.9]];
        let a3 = VectorPotential::from_field(linear.clone());
        assert!(check_da_equals_b(&a3, &linear, &pts3, 1e-4) < 1e-8);

        // A gauge transform changes A but not dA.
        let gauged = a3.gauged(GaugeFunction {
            linear: vec![0.3, -0.2, 0.5],
            quad: vec![
                vec![1.0, 0.4, 0.0],
                vec![0.4, -0.6, 0.1],
                vec![0.0, 0.1, 0.2],
            ],
            ..GaugeFunction::default()
        });
        assert!(check_da_equals_b(&gauged, &linear, &pts3, 1e-4) < 1e-8);

        // Mismatched field is caught.
        let wrong = MagneticField::ConstantB { b: 2.0 };
        assert!(check_da_equals_b(&a2, &wrong, &pts2, 1e-4) > 1.0);
    }

    #[test]
    fn field_components_are_antisymmetric() {
        let field = MagneticField::LinearB { slope: 0.9 };
        let x = [1.0, -0.5, 2.0];
        for j in 0..3 {
            for k in 0..3 {
                let sum = field.component(j, k, &x) + field.component(k, j, &x);
                assert_eq!(sum, 0.0, "({j}, {k})");
            }
        }
        assert_eq!(field.component(0, 1, &x), 0.9 * 1.0);
    }

    #[test]
    fn circulation_of_linear_potential_is_midpoint_value() {
        let a = sym(0.7);
        let x = [1.5, -2.0];
        let y = [-0.5, 3.0];
        let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
        let gamma = circulation(&a, &x, &y);
        let at_mid = a.eval(&mid);
        for i in 0..2 {
            assert!((gamma[i] - at_mid[i]).abs() < 1e-15, "component {i}");
        }
    }

    #[test]
    fn peierls_phase_is_antisymmetric() {
        let a = VectorPotential::Landau { b: 1.3 }.gauged(GaugeFunction {
            constant: 0.2,
            linear: vec![0.4, -0.1],
            quad: vec![vec![0.3, 0.8], vec![0.0, -0.5]],
        });
        let x = [0.3, 1.1];
        let y = [2.0, -0.7];
        let fwd = peierls_phase(&a, &x, &y);
        let bwd = peierls_phase(&a, &y, &x);
        assert!((fwd + bwd).abs() < 1e-14, "fwd {fwd} bwd {bwd}");
        assert!(fwd.abs() > 0.1, "phase should be nontrivial here");
    }

    #[test]
    fn gauge_transform_shifts_phase_by_boundary_values() {
        let base = sym(0.9);
        let phi = GaugeFunction {
            constant: -1.0,
            linear: vec![0.3, 0.0, -0.2],
            quad: vec![
                vec![1.0, 0.4, 0.0],
                vec![0.4, -0.6, 0.1],
                vec![0.0, 0.1, 0.2],
            ],
        };
        let x = [0.2, -1.0, 0.5];
        let y = [1.4, 0.3, -0.8];
        let plain = peierls_phase(&base, &x, &y);
        let gauged = peierls_phase(&base.clone().gauged(phi.clone()), &x, &y);
        let boundary = phi.eval(&y) - phi.eval(&x);
        assert!(
            (gauged - plain - boundary).abs() < 1e-13,
            "defect {:e}",
            gauged - plain - boundary
        );
    }

    #[test]
    fn landau_is_a_gauge_transform_of_the_symmetric_gauge() {
        let b = 1.1;
        let phi = GaugeFunction {
            quad: vec![vec![0.0, b], vec![0.0, 0.0]],
            ..GaugeFunction::default()
        };
        // grad((b/2) x1 x2) = (b x2 / 2, b x1 / 2); Landau + that = symmetric.
        let gauged = VectorPotential::Landau { b }.gauged(phi);
        for x in [[0.3, 0.7], [-1.2, 2.5]] {
            let u = sym(b).eval(&x);
            let g = gauged.eval(&x);
            for i in 0..2 {
                assert!((u[i] - g[i]).abs() < 1e-15, "x {x:?} component {i}");
            }
        }
    }

    #[test]
    fn potential_shapes_evaluate_as_documented() {
        let well = Potential::SquareWell {
            depth: 2.0,
            radius: 1.0,
            center: vec![1.0, 0.0],
        };
        assert_eq!(well.eval(&[1.0, 0.0]), -2.0);
        assert_eq!(well.eval(&[1.0, 0.999]), -2.0);
        assert_eq!(well.eval(&[1.0, 1.001]), 0.0);

        let gauss = Potential::GaussianWell {
            amplitude: 3.0,
            width: 0.5,
            center: vec![],
        };
        assert_eq!(gauss.eval(&[0.0]), -3.0);
        let v = gauss.eval(&[0.5]);
        assert!((v - (-3.0 * (-0.5f64).exp())).abs() < 1e-15);

        let sum = Potential::Sum {
            parts: vec![well.clone(), gauss.clone()],
        };
        let x = [0.9, 0.1];
        assert!((sum.eval(&x) - well.eval(&x) - gauss.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn compact_bump_is_smooth_and_compactly_supported() {
        let bump = Potential::CompactBump {
            amplitude: 2.0,
            radius: 1.5,
            center: vec![],
        };
        assert_eq!(bump.eval(&[0.0]), -2.0);
        assert_eq!(bump.eval(&[1.5]), 0.0);
        assert_eq!(bump.eval(&[1.7]), 0.0);
        // Values vanish to all orders at the edge: still tiny just inside.
        assert!(bump.eval(&[1.499]).abs() < 1e-100);
        // Strictly between peak and zero in the interior.
        let mid = bump.eval(&[0.75]);
        assert!(mid < 0.0 && mid > -2.0);
        // Radially monotone on a sample ray.
        let mut last = bump.eval(&[0.0]);
        for i in 1..15 {
            let v = bump.eval(&[0.1 * i as f64]);
            assert!(v >= last, "not monotone at {i}");
            last = v;
        }
    }

    #[test]
    fn positive_and_negative_parts_split_the_potential() {
        let barrier = Potential::SquareWell {
            depth: -1.5,
            radius: 0.8,
            center: vec![],
        };
        assert_eq!(barrier.eval(&[0.0]), 1.5);
        assert_eq!(barrier.v_plus(&[0.0]), 1.5);
        assert_eq!(barrier.v_minus(&[0.0]), 0.0);
        let well = Potential::SquareWell {
            depth: 1.5,
            radius: 0.8,
            center: vec![],
        };
        for x in [[0.0], [0.5], [2.0]] {
            let v = well.eval(&x);
            assert!((well.v_plus(&x) - well.v_minus(&x) - v).abs() < 1e-15);
            assert!(well.v_plus(&x) >= 0.0 && well.v_minus(&x) >= 0.0);
        }
    }

    #[test]
    fn validation_rejects_mismatched_shapes() {
        let well = Potential::SquareWell {
            depth: 1.0,
            radius: 1.0,
            center: vec![0.0, 0.0, 0.0],
        };
        assert!(well.validate(2).is_err());
        assert!(well.validate(3).is_ok());
        assert!(sym(1.0).validate(1).is_err());
        assert!(sym(1.0).validate(2).is_ok());
        assert!(MagneticField::LinearB { slope: 1.0 }.validate(1).is_err());
        assert!(MagneticField::LinearB { slope: 1.0 }.validate(2).is_ok());
        assert!(MagneticField::LinearB { slope: 1.0 }.validate(3).is_ok());
        let lopsided = GaugeFunction {
            linear: vec![0.0; 4],
            ..GaugeFunction::default()
        };
        assert!(lopsided.validate(3).is_err());
        let bad_radius = Potential::SquareWell {
            depth: 1.0,
            radius: 0.0,
            center: vec![],
        };
        assert!(bad_radius.validate(1).is_err());
    }

    #[test]
    fn config_round_trips_through_toml_with_catalog_names() {
        let a = sym(0.5).gauged(GaugeFunction {
            linear: vec![1.0, 2.0],
            ..GaugeFunction::default()
        });
        let text = toml::to_string(&a).unwrap();
        let back: VectorPotential = toml::from_str(&text).unwrap();
        assert_eq!(a, back);

        let field: MagneticField = toml::from_str("kind = \"constant-b\"\nb = 0.5").unwrap();
        assert_eq!(field, MagneticField::ConstantB { b: 0.5 });
        let field: MagneticField = toml::from_str("kind = \"linear-b\"\nslope = 2.0").unwrap();
        assert_eq!(field, MagneticField::LinearB { slope: 2.0 });

        let v: Potential = toml::from_str(
            r#"
            kind = "gaussian-well"
            amplitude = 5.0
            width = 0.7071
            "#,
        )
        .unwrap();
        assert!(matches!(v, Potential::GaussianWell { .. }));
        let v: Potential = toml::from_str(
            r#"
            kind = "compact-bump"
            amplitude = 2.0
            radius = 1.5
            "#,
        )
        .unwrap();
        assert!(matches!(v, Potential::CompactBump { .. }));
    }
}
