//! Eigenvalue-moment sums and their exact Stieltjes rewriting: the sum of
//! `|lambda_j|^k` over the negative spectrum equals a boundary term at
//! `-beta` plus `k` times the integral of the counting function, with no
//! quadrature error, because the counting function is a step function the
//! integral sees in closed form.

use relmag::bounds::{default_beta, lt_sum, stieltjes_lt};
use relmag::discrete::{build_levy, eigvalsh, Grid};
use relmag::fields::{Potential, VectorPotential};

fn main() -> Result<(), relmag::Error> {
    let grid = Grid::new(1, 128, 20.0)?;
    let v = Potential::GaussianWell {
        amplitude: 3.0,
        width: 1.5,
        center: vec![0.0],
    };
    let full = build_levy(&grid, &VectorPotential::Zero, &v)?;
    let spectrum = eigvalsh(&full.matrix)?;
    let negatives: Vec<f64> = spectrum.iter().copied().filter(|&l| l < 0.0).collect();
    println!(
        "{} negative levels, bottom {:.6}, shallowest {:.6}",
        negatives.len(),
        negatives.first().copied().unwrap_or(0.0),
        negatives.last().copied().unwrap_or(0.0)
    );

    let beta = default_beta(&spectrum).expect("well is deep enough to bind");
    let bottom = spectrum[0];
    println!("beta = {beta:.3e} (a thousandth of the shallowest level)");
    println!();
    println!("{:>5} {:>18} {:>18} {:>12}", "k", "direct sum", "Stieltjes form", "difference");
    for k in [0.5, 1.0, 1.5, 2.0] {
        let kept: Vec<f64> = spectrum.iter().copied().filter(|&l| l < -beta).collect();
        let direct = lt_sum(&kept, k)?;
        let rewritten = stieltjes_lt(&spectrum, k, beta, bottom)?;
        println!(
            "{k:>5.1} {direct:>18.12} {rewritten:>18.12} {:>12.2e}",
            (direct - rewritten).abs()
        );
    }
    Ok(())
}
