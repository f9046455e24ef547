//! Shift of the transmitted maximum as the barrier gets taller, at fixed
//! width d = 20 and sigma = 10.
//!
//!     cargo run --release --example height_sweep

use tunnelsim::experiments::{height_sweep, ExperimentConfig, FIGURE_K0};
use tunnelsim::oracles::{packet_transmission, Dispersion};
use tunnelsim::SquareBarrier;

fn main() -> tunnelsim::Result<()> {
    let config = ExperimentConfig {
        k0: FIGURE_K0,
        sigma: 10.0,
        d_list: vec![20],
        h_list: vec![0.0, 1.0, 1.5, 2.0, 3.0, 4.0],
        ..ExperimentConfig::default()
    };
    let table = height_sweep(&config)?;
    println!(
        "k0 = {}, d = 20, t = {}",
        config.k0, table.rows[0].snapshot_time
    );
    println!(
        "{:>4} {:>10} {:>12} {:>12} {:>10}",
        "h", "shift", "transmitted", "quadrature", "mean k"
    );
    for row in &table.rows {
        let v0 = SquareBarrier::new(config.barrier_start, row.d, row.h)?.height(config.k0);
        let oracle =
            packet_transmission(row.sigma, config.k0, v0, row.d as f64, Dispersion::Lattice)?;
        println!(
            "{:>4} {:>10.2} {:>12.4e} {:>12.4e} {:>10.4}",
            row.h, row.shift, row.transmitted_norm, oracle, row.mean_transmitted_k
        );
    }
    Ok(())
}
