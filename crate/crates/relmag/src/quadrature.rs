//! Internal quadrature helpers shared across modules.
//!
//! Nothing here is exported: the public modules expose quadrature only
//! through their own typed specifications.

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; nodes are accurate to a few
/// ulp for the orders used in this crate (n <= 64). An n-point rule is exact
/// for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            pp = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.push((-x, w));
        if 2 * (i + 1) <= n {
            rule.push((x, w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]` with a composite Gauss-Legendre rule on
/// `panels` equal subintervals, `order` nodes each.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let base = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in &base {
            s += w * f(mid + 0.5 * h * x);
        }
        acc.push(0.5 * h * s);
    }
    pairwise_sum(&acc)
}

/// Integrates `f` over `[a, b]` (0 < a < b) with Gauss-Legendre panels whose
/// endpoints are log-spaced: the grid refines toward `a` exactly where
/// singular-at-zero integrands need it.
pub fn composite_gl_log<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> f64 {
    assert!(a > 0.0 && b > a);
    let base = gauss_legendre(order);
    let la = a.ln();
    let h = (b.ln() - la) / panels as f64;
    let mut acc = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = (la + p as f64 * h).exp();
        let hi = (la + (p as f64 + 1.0) * h).exp();
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut s = 0.0;
        for &(x, w) in &base {
            s += w * f(mid + half * x);
        }
        acc.push(half * s);
    }
    pairwise_sum(&acc)
}

/// Order-fixed pairwise summation: deterministic regardless of how the
/// addends were produced, and with O(log n) rounding-error growth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise summation for complex addends.
pub fn pairwise_sum_complex(xs: &[num_complex::Complex64]) -> num_complex::Complex64 {
    match xs.len() {
        0 => num_complex::Complex64::new(0.0, 0.0),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        // 8 nodes: exact through degree 15.
        for degree in 0..=15 {
            let exact = 1.0 / (degree as f64 + 1.0);
            let got = composite_gl(|x| x.powi(degree), 0.0, 1.0, 1, 8);
            assert!(
                (got - exact).abs() < 1e-14,
                "degree {degree}: got {got}, want {exact}"
            );
        }
    }

    #[test]
    fn gl_weights_sum_to_interval_length() {
        for n in [1, 2, 3, 5, 8, 11, 20, 64] {
            let total: f64 = gauss_legendre(n).iter().map(|&(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}: weights sum {total}");
        }
    }

    #[test]
    fn composite_panels_hit_known_integrals() {
        let v = composite_gl(|x: f64| x.exp(), 0.0, 1.0, 4, 6);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        let v = composite_gl(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, 4, 6);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn log_panels_integrate_power_singularity() {
        // int_1e-6^1 x^(-1/2) dx = 2(1 - 1e-3)
        let v = composite_gl_log(|x| x.powf(-0.5), 1e-6, 1.0, 40, 6);
        assert!((v - 2.0 * (1.0 - 1e-3)).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn pairwise_sum_matches_sequential_on_benign_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let seq: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - seq).abs() < 1e-9);
    }
}
