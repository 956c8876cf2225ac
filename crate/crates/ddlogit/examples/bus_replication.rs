//! End-to-end empirical application on the embedded bus-engine maintenance
//! histories: cutoff selection and conditional estimation on the replacement
//! histories, a full-solution grid over maintenance-cost shapes and cutoffs,
//! and the specification test between the two estimates.
//!
//! Run with: `cargo run --example bus_replication`

use ddlogit::harness::{bus_report_text, run_bus_replication};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = run_bus_replication(0.95, 8, 3..=9)?;
    print!("{}", bus_report_text(&report));
    Ok(())
}
