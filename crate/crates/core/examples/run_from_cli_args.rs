//! Drive the same code path as the `tunnelsim` binary from a program:
//! parse an argument list, run it, and inspect the manifest.
//!
//!     cargo run --release --example run_from_cli_args [output-dir]

use tunnelsim::cli::{execute, parse_invocation};

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "tunnelsim-example-out".to_string());
    let argv = [
        "tunnelsim",
        "height-sweep",
        "--grid-size",
        "3000",
        "--x0",
        "700",
        "--barrier-start",
        "800",
        "--d-list",
        "10",
        "--h-list",
        "0,1.5,3",
        "--output-dir",
        &out_dir,
    ];
    let inv = match parse_invocation(argv) {
        Ok(inv) => inv,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let output = match execute(&inv) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for row in &output.rows {
        println!(
            "h={:<4} shift={:>8.3} transmitted={:.3e}",
            row.h, row.shift, row.transmitted_norm
        );
    }
    println!(
        "{} (snapshot after {} steps):",
        output.output_dir.display(),
        output.manifest.snapshot_steps
    );
    for (name, hash) in &output.manifest.files {
        println!("  {name}  {hash}");
    }
}
