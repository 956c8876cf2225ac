//! Full-solution maximum likelihood with a finite mixture of latent types:
//! the dynamic program is re-solved per type at every trial parameter
//! (nested fixed point) and the type weights are estimated jointly.
//!
//! Run with: `cargo run --example fit_mixture`

use ddlogit::mle::{fit_mle_nfxp, MleOptions, RenewalMixtureTemplate};
use ddlogit::simulate::{simulate_panel, window_panel, DgpSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Preset 2: two equally likely types with renewal costs 4.5 and 9.
    let dgp = DgpSpec::preset(2)?;
    let panel = simulate_panel(&dgp, 5)?;
    let sample = window_panel(&panel.histories, 1, 7)?;

    let template = RenewalMixtureTemplate {
        k: 2,
        dstar: dgp.dstar,
        shape: dgp.shape,
        delta: dgp.delta,
    };
    let start = vec![-1.0, 5.0, 8.0, 0.0];
    let fit = fit_mle_nfxp(&sample, &template, &[start], &MleOptions::default())?;

    println!("log likelihood {:.4} in {} iterations", fit.loglik, fit.iterations);
    let (coef, coef_se) = fit.coef();
    println!("duration coefficient: {coef:.4} (se {coef_se:.4}), truth -1.0");
    for (k, (rc, se)) in fit.rcs().iter().enumerate() {
        println!("type {} renewal cost: {rc:.4} (se {se:.4})", k + 1);
    }
    println!("type weights: {:?} (truth [0.5, 0.5])", fit.weights());
    Ok(())
}
