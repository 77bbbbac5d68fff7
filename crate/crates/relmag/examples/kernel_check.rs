//! Consistency checks on the closed-form kernel data: total mass of the
//! semigroup kernel, the Chapman-Kolmogorov property, reconstruction of the
//! symbol from the jump density, and the diagonal envelope bound.

use relmag::kernel::{
    chapman_kolmogorov_residual, free_kernel_mass, free_kernel_radial, levy_khinchin_residual,
    symbol_h, QuadSpec, DIAGONAL_ENVELOPE_COEFF,
};

fn main() -> Result<(), relmag::Error> {
    println!("semigroup kernel mass (should be 1):");
    for d in 1..=3 {
        for &t in &[0.5, 1.0, 2.0] {
            let mass = free_kernel_mass(t, d)?;
            println!("  d={d} t={t:<4} mass = {mass:.12}  defect {:+.2e}", mass - 1.0);
        }
    }

    println!("\nChapman-Kolmogorov residual (d = 1):");
    for &(t, s, x, y) in &[(0.5, 0.5, 0.0, 0.0), (1.0, 0.5, 1.0, -0.5), (0.25, 1.25, 3.0, 2.0)] {
        let r = chapman_kolmogorov_residual(t, s, x, y)?;
        println!("  t={t} s={s} x={x} y={y}: residual {r:.2e}");
    }

    println!("\nLevy-Khinchin reconstruction vs closed-form symbol:");
    let quad = QuadSpec::default();
    for d in 1..=3usize {
        for &xi_abs in &[0.5, 1.0, 2.0] {
            let mut xi = vec![0.0; d];
            xi[d - 1] = xi_abs;
            let res = levy_khinchin_residual(&xi, &quad)?;
            println!(
                "  d={d} |xi|={xi_abs}: h = {:.6}, residual {res:.2e}",
                symbol_h(&xi)
            );
        }
    }

    println!("\ndiagonal envelope p_t(0) <= C_d t^-d (1 + t^(d/2)):");
    for d in 1..=3usize {
        let coeff = DIAGONAL_ENVELOPE_COEFF[d - 1];
        let mut worst_ratio: f64 = 0.0;
        let mut t = 1e-3;
        while t < 200.0 {
            let p0 = free_kernel_radial(t, 0.0, d)?;
            let envelope = coeff * t.powi(-(d as i32)) * (1.0 + t.powf(0.5 * d as f64));
            worst_ratio = worst_ratio.max(p0 / envelope);
            t *= 1.02;
        }
        println!("  d={d}: C = {coeff}, sharpest ratio on t in [1e-3, 200] = {worst_ratio:.4}");
    }
    Ok(())
}
