//! Shift against barrier width for two packet widths. The narrow packet's
//! shift peaks at an intermediate width; the wide packet's stays smaller.
//! Writes the summary CSV if given a path.
//!
//!     cargo run --release --example width_scan [summary.csv]

use std::path::Path;

use tunnelsim::cli::write_summary_csv;
use tunnelsim::experiments::{width_scan, ExperimentConfig, FIGURE_K0};

fn main() -> tunnelsim::Result<()> {
    let config = ExperimentConfig {
        k0: FIGURE_K0,
        d_list: (0..=30).step_by(5).collect(),
        h_list: vec![2.0],
        sigma_list: vec![10.0, 20.0],
        ..ExperimentConfig::default()
    };
    let table = width_scan(&config)?;
    println!(
        "k0 = {}, h = 2, t = {}",
        config.k0, table.rows[0].snapshot_time
    );
    for sigma in &config.sigma_list {
        println!("sigma = {sigma}");
        for row in table.rows.iter().filter(|r| r.sigma == *sigma) {
            let bar = "#".repeat((row.shift.max(0.0) / 5.0) as usize);
            println!("  d={:>2} shift {:>8.2} {bar}", row.d, row.shift);
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        write_summary_csv(Path::new(&path), &table.rows)?;
        println!("summary written to {path}");
    }
    Ok(())
}
