//! Statistical parity gaps next to their information-theoretic bounds for a
//! joint read from disk (atom CSV or JSON), defaulting to a bundled table.

use fedpid::metrics;

fn main() -> fedpid::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/redundancy.csv").to_string());
    let joint = fedpid::cli::load_joint(std::path::Path::new(&path))?;
    let report = metrics::fairness_report(&joint)?;
    print!("{}", report.table());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
