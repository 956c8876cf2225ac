//! Simulate a panel from a preset data-generating process and summarize it.
//!
//! Run with: `cargo run --example simulate_panel`

use ddlogit::simulate::{simulate_panel, DgpSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Preset 1: renewal cost drawn from a normal law across individuals.
    let mut dgp = DgpSpec::preset(1)?;
    dgp.n = 500;
    dgp.t = 25;
    let panel = simulate_panel(&dgp, 42)?;

    let n = panel.histories.len();
    let total_periods: usize = panel.histories.iter().map(|h| h.t()).sum();
    let renewals: u32 = panel
        .histories
        .iter()
        .map(|h| h.stats().hit(0))
        .sum();
    let mean_rc = panel.rcs.iter().sum::<f64>() / n as f64;

    println!("simulated {n} individuals over {} periods each", dgp.t);
    println!("mean renewal cost drawn: {mean_rc:.4}");
    println!(
        "baseline (renewal) share: {:.4}",
        f64::from(renewals) / total_periods as f64
    );
    println!("first three histories:");
    for h in &panel.histories[..3] {
        let s: String = h.choices().iter().map(|y| y.to_string()).collect();
        println!("  {s}");
    }
    Ok(())
}
