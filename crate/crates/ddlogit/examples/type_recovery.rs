//! Recover a latent type distribution by least squares: regress history
//! probabilities on the per-type model probabilities of the same histories.
//!
//! Run with: `cargo run --example type_recovery`

use ddlogit::histories::enumerate_histories;
use ddlogit::mle::{mixture_loglik_per_obs, recover_type_distribution, MixtureSpec};
use ddlogit::model::{renewal_spec, CostShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let types = vec![
        renewal_spec(4.5, -1.0, 3, CostShape::Linear, 0.95),
        renewal_spec(9.0, -1.0, 3, CostShape::Linear, 0.95),
    ];
    let mix = MixtureSpec {
        components: types.clone(),
        weights: vec![0.3, 0.7],
    };

    // Model-implied probabilities of every length-6 history stand in for the
    // empirical frequencies an infinite sample would deliver.
    let histories = enumerate_histories(1, 6, (0, 0), 1 << 20)?;
    let p_hat: Vec<f64> = mixture_loglik_per_obs(&mix, &histories)?
        .iter()
        .map(|lp| lp.exp())
        .collect();

    let rec = recover_type_distribution(&types, &histories, &p_hat)?;
    println!("recovered weights: {:?} (truth [0.3, 0.7])", rec.weights);
    println!("residual norm: {:.3e}", rec.residual_norm);
    println!("all weights inside [0, 1]: {}", rec.within_unit_interval);
    Ok(())
}
