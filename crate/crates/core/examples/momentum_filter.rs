//! The barrier as a momentum filter: plane-wave transmission T(k), the
//! packet-averaged transmission, and the spectrum of what actually got
//! through, on a small grid.
//!
//!     cargo run --release --example momentum_filter

use tunnelsim::experiments::{run_pair, ExperimentConfig};
use tunnelsim::observables::momentum_distribution;
use tunnelsim::oracles::{packet_transmission, plane_wave_transmission, Dispersion};
use tunnelsim::propagator::Propagation;
use tunnelsim::{gaussian_packet, sample_potential, SquareBarrier, Stepper};

fn main() -> tunnelsim::Result<()> {
    let (k0, sigma, d, h) = (0.5, 10.0, 10, 1.5);
    let config = ExperimentConfig {
        grid_size: 2400,
        x0: 400.0,
        barrier_start: 500,
        sigma,
        k0,
        d_list: vec![d],
        h_list: vec![h],
        ..ExperimentConfig::default()
    };
    let barrier = SquareBarrier::new(config.barrier_start, d, h)?;
    let v0 = barrier.height(k0);

    println!("plane waves, V0 = {v0}, d = {d}");
    for k in [0.35, 0.45, 0.5, 0.55, 0.65, 0.75] {
        let e = Dispersion::Lattice.energy(k);
        println!(
            "  k = {k:.2}  E = {e:.4}  T = {:.4e}",
            plane_wave_transmission(e, v0, d as f64)?
        );
    }

    let out = run_pair(&config, config.single_point())?;
    let quadrature = packet_transmission(sigma, k0, v0, d as f64, Dispersion::Lattice)?;
    println!(
        "packet: simulated {:.4e}, quadrature {quadrature:.4e}",
        out.summary.transmitted_norm
    );

    // spectrum of the transmitted part at the snapshot
    let grid = config.grid()?;
    let stepper = Stepper::new(&grid, &sample_potential(&barrier, &grid, k0)?, config.dt)?;
    let mut run = Propagation::new(&stepper, gaussian_packet(&grid, config.x0, sigma, k0)?)?;
    run.advance(*out.record.steps.last().unwrap())?;
    let spectrum = momentum_distribution(run.psi(), barrier.transmitted_region(&grid))?;
    let incident = momentum_distribution(
        &gaussian_packet(&grid, config.x0, sigma, k0)?,
        0..grid.n_sites(),
    )?;
    println!(
        "mean k: incident {:.4}, transmitted {:.4}",
        incident.mean_positive_k(),
        spectrum.mean_positive_k()
    );
    Ok(())
}
