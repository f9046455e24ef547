//! Tunneled packets for several barrier widths next to the free packet at
//! one common time. Prints the summary and, given a path, writes the
//! density snapshot CSV (`site,free,d5,d10,...`) for plotting.
//!
//!     cargo run --release --example barrier_snapshot [densities.csv]

use std::path::Path;

use tunnelsim::cli::write_density_csv;
use tunnelsim::experiments::{snapshot_experiment, ExperimentConfig, FIGURE_K0};

fn main() -> tunnelsim::Result<()> {
    let config = ExperimentConfig {
        k0: FIGURE_K0,
        sigma: 10.0,
        d_list: vec![5, 10, 15, 20, 25],
        h_list: vec![2.0],
        ..ExperimentConfig::default()
    };
    let table = snapshot_experiment(&config)?;
    println!(
        "snapshot after {} steps (t = {})",
        table.snapshot_steps, table.rows[0].snapshot_time
    );
    println!(
        "{:>4} {:>10} {:>12} {:>12} {:>10}",
        "d", "shift", "transmitted", "peak", "mean k"
    );
    for row in &table.rows {
        println!(
            "{:>4} {:>10.2} {:>12.4e} {:>12.4e} {:>10.4}",
            row.d, row.shift, row.transmitted_norm, row.peak_amplitude, row.mean_transmitted_k
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        write_density_csv(Path::new(&path), &config.grid()?, &table.densities)?;
        println!("densities written to {path}");
    }
    Ok(())
}
