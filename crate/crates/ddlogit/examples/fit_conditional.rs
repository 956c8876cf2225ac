//! Conditional (fixed-effects) estimation of the identified duration
//! contrast: the unobserved renewal cost is absorbed by conditioning on the
//! sufficient statistic, so no distributional assumption on it is needed.
//!
//! Run with: `cargo run --example fit_conditional`

use ddlogit::cmle::{fit_cmle, CmleOptions};
use ddlogit::simulate::{simulate_panel, window_panel, DgpSpec};
use ddlogit::suffstats::{StatKey, Variant, VariantKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Preset 1: normal heterogeneity in the renewal cost; the conditional
    // estimator never needs to know that law.
    let dgp = DgpSpec::preset(1)?;
    let panel = simulate_panel(&dgp, 7)?;
    let sample = window_panel(&panel.histories, 1, 7)?;

    let variant = Variant::new(
        VariantKind::ForwardDurAssumption2,
        1,
        Some(vec![0, dgp.dstar]),
    )?;
    let fit = fit_cmle(&sample, &variant, &CmleOptions::default())?;

    println!(
        "conditional log likelihood {:.4} on {} informative histories ({} dropped)",
        fit.loglik, fit.n_informative, fit.n_dropped
    );
    let (contrast, se) = fit.component(StatKey::NegDeltaStar(1))?;
    // The component estimates the duration-return difference at the cutoff;
    // the preset is a maintenance cost, so report the positive cost scale.
    println!(
        "marginal maintenance cost at the cutoff: {:.4} (se {:.4}), truth 1.0",
        -contrast, se
    );
    Ok(())
}
