//! A small Monte Carlo experiment comparing the conditional and
//! full-solution estimators of the duration contrast.
//!
//! Run with: `cargo run --release --example monte_carlo`

use ddlogit::harness::{mc_summary_csv, run_monte_carlo, McConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Preset 4 is homogeneous (one type), so both estimators are consistent
    // and the specification test should rarely reject.
    let cfg = McConfig {
        dgp: 4,
        n: 1000,
        window: (1, 7),
        reps: 50,
        seed: 2024,
        run_cmle: true,
        mle_types: 1,
        select_l: 0,
        run_hausman: true,
    };
    let summary = run_monte_carlo(&cfg)?;
    print!("{}", mc_summary_csv(&summary));
    Ok(())
}
