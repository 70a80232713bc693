//! Driving the command-line layer in-process: JSON reports, exit statuses
//! and batches.
//!
//! ```bash
//! cargo run -p biaslab --example reports
//! ```

use biaslab::cli::dispatch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = dispatch(&["quad", "--field", "5", "--nvars", "2", "--poly", "x1^2 + x1*x2"]);
    println!("status {}:\n{}", out.status, out.stdout);

    let out = dispatch(&["profile", "--field", "3", "--nvars", "2", "--poly", "x1*x2", "--nmax", "3", "--format", "csv"]);
    print!("{}", out.stdout);

    // budget exhaustion is exit status 3
    let out = dispatch(&["sum", "--field", "7", "--nvars", "12", "--poly", "x1*x2*x3", "--budget", "1000"]);
    println!("status {}: {}", out.status, out.stderr.trim());

    let dir = std::env::temp_dir().join("biaslab-example-batch.txt");
    std::fs::write(
        &dir,
        "sum --field 5 --nvars 3 --poly x1*x2*x3\nsum --field 5 --nvars 1 --poly x7\nrank --field 7 --nvars 3 --poly \"x1^3+x2^3+x3^3\"\n",
    )?;
    let out = dispatch(&["batch", dir.to_str().unwrap()]);
    for line in out.stdout.lines() {
        println!("{}", &line[..line.len().min(120)]);
    }
    Ok(())
}
