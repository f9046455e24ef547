use std::process::ExitCode;

use tunnelsim::cli::{execute, parse_invocation, ParseFailure};

fn main() -> ExitCode {
    let inv = match parse_invocation(std::env::args_os()) {
        Ok(inv) => inv,
        Err(ParseFailure::Usage(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
        Err(e) => {
            eprintln!("tunnelsim: {e}");
            return ExitCode::from(1);
        }
    };
    match execute(&inv) {
        Ok(out) => {
            for row in &out.rows {
                let flags: Vec<String> = row.flags.iter().map(|f| f.to_string()).collect();
                println!(
                    "sigma={} d={} h={} shift={:.3} T={:.3e} {}",
                    row.sigma,
                    row.d,
                    row.h,
                    row.shift,
                    row.transmitted_norm,
                    flags.join(",")
                );
            }
            println!("wrote {}", out.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tunnelsim: {e}");
            ExitCode::from(2)
        }
    }
}
