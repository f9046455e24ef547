//! Free Gaussian packet on the lattice, checked against closed forms.
//!
//! The continuum formulas (centre x0 + k0·t, width² σ0² + (t/2σ0)²) hold
//! only for small k0 on a 3-point lattice; the lattice forms hold at any k0.
//!
//!     cargo run --release --example free_packet [k0]

use tunnelsim::observables::max_position;
use tunnelsim::oracles::{spectral_free_evolution, FreeGaussianParams};
use tunnelsim::{gaussian_packet, Grid, Stepper};

fn main() -> tunnelsim::Result<()> {
    let k0: f64 = std::env::args()
        .nth(1)
        .map_or(0.5, |a| a.parse().expect("k0 must be a number"));
    let (x0, sigma) = (3000.0, 10.0);
    let grid = Grid::new(8192)?;
    let stepper = Stepper::new(&grid, &vec![0.0; grid.n_sites()], 0.05)?;
    let initial = gaussian_packet(&grid, x0, sigma, k0)?;
    let params = FreeGaussianParams::new(x0, sigma, k0)?;

    println!("k0 = {k0}");
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}",
        "t", "peak", "spectral", "k0*t", "width^2", "lattice", "contin."
    );
    let mut psi = initial.clone();
    let mut t = 0.0;
    for target in [200.0, 400.0, 800.0, 1600.0] {
        let steps = ((target - t) / stepper.dt()).round() as usize;
        psi = stepper.evolve(psi, steps)?;
        t = target;

        let dens = psi.density();
        let norm: f64 = dens.iter().sum();
        let mean = dens
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum::<f64>()
            / norm;
        let var = dens
            .iter()
            .enumerate()
            .map(|(j, p)| (j as f64 - mean).powi(2) * p)
            .sum::<f64>()
            / norm;
        let exact: Vec<f64> = spectral_free_evolution(&initial, t)
            .iter()
            .map(|a| a.norm_sqr())
            .collect();
        println!(
            "{t:>6} {:>10.3} {:>10.3} {:>10.3} {var:>9.2} {:>9.2} {:>9.2}",
            max_position(&dens, 0..dens.len())?,
            max_position(&exact, 0..exact.len())?,
            params.centre(t),
            params.lattice_width_squared(t),
            params.width_squared(t),
        );
    }
    println!("norm after {t}: {:.15}", psi.norm());
    Ok(())
}
