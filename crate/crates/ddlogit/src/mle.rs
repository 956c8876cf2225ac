//! Full-solution maximum likelihood for finite mixtures of structural types,
//! and least-squares recovery of a type distribution from fitted choice
//! probabilities.
//!
//! The mixture likelihood solves the dynamic model once per type at each
//! parameter value (nested fixed point) and integrates the per-type history
//! likelihoods over the type weights. The outer optimizer is BFGS on
//! central-difference gradients, with standard errors from the outer product
//! of per-observation scores.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use rayon::prelude::*;

use crate::error::{DdError, Result};
use crate::histories::ChoiceHistory;
use crate::model::{
    renewal_spec, solve_bellman, CostShape, ModelSpec, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// A finite mixture of structural types.
#[derive(Clone, Debug)]
pub struct MixtureSpec {
    /// Per-type payoff parameters; all must share `J` and the discount factor.
    pub components: Vec<ModelSpec>,
    /// Type weights, positive and summing to one.
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    /// Validates dimensions and weights.
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.components.len() != self.weights.len() {
            return Err(DdError::Config(
                "mixture needs matching non-empty components and weights".into(),
            ));
        }
        let j = self.components[0].j;
        for c in &self.components {
            c.validate()?;
            if c.j != j {
                return Err(DdError::VariantMismatch(
                    "mixture components must share J".into(),
                ));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| w <= 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(DdError::Config(
                "mixture weights must be positive and sum to one".into(),
            ));
        }
        Ok(())
    }
}

/// Per-observation mixture log likelihoods.
pub fn mixture_loglik_per_obs(
    mix: &MixtureSpec,
    histories: &[ChoiceHistory],
) -> Result<Vec<f64>> {
    mix.validate()?;
    let solved = mix
        .components
        .iter()
        .map(|c| solve_bellman(c, DEFAULT_TOL, DEFAULT_MAX_ITER))
        .collect::<Result<Vec<_>>>()?;
    let log_w: Vec<f64> = mix.weights.iter().map(|w| w.ln()).collect();
    Ok(histories
        .par_iter()
        .map(|h| {
            let terms: Vec<f64> = solved
                .iter()
                .zip(&log_w)
                .map(|(s, lw)| lw + s.history_log_prob(h))
                .collect();
            crate::model::log_sum_exp(&terms)
        })
        .collect())
}

/// Total mixture log likelihood of a panel.
pub fn mixture_loglik(mix: &MixtureSpec, histories: &[ChoiceHistory]) -> Result<f64> {
    Ok(mixture_loglik_per_obs(mix, histories)?.iter().sum())
}

/// Parameter layout for the binary renewal mixture: the duration coefficient
/// is common across types; each type has its own renewal cost; weights are
/// multinomial-logit transformed against the last type.
#[derive(Clone, Debug)]
pub struct RenewalMixtureTemplate {
    /// Number of types.
    pub k: usize,
    /// Duration cutoff (held fixed during estimation).
    pub dstar: u32,
    /// Duration transform.
    pub shape: CostShape,
    /// Discount factor.
    pub delta: f64,
}

impl RenewalMixtureTemplate {
    /// Parameter dimension: `coef`, `k` costs, `k - 1` weight logits.
    pub fn dim(&self) -> usize {
        2 * self.k
    }

    /// Human-readable parameter names aligned with the vector layout.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["coef".to_string()];
        for k in 1..=self.k {
            names.push(format!("rc_{k}"));
        }
        for k in 1..self.k {
            names.push(format!("logit_w_{k}"));
        }
        names
    }

    /// Builds the mixture at a parameter vector.
    pub fn mixture(&self, params: &[f64]) -> Result<MixtureSpec> {
        if params.len() != self.dim() {
            return Err(DdError::Config(format!(
                "expected {} parameters, found {}",
                self.dim(),
                params.len()
            )));
        }
        let coef = params[0];
        let rcs = &params[1..=self.k];
        let logits = &params[self.k + 1..];
        let mut exps: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
        exps.push(1.0);
        let total: f64 = exps.iter().sum();
        let weights: Vec<f64> = exps.iter().map(|e| e / total).collect();
        Ok(MixtureSpec {
            components: rcs
                .iter()
                .map(|&rc| renewal_spec(rc, coef, self.dstar, self.shape, self.delta))
                .collect(),
            weights,
        })
    }

    /// The identified duration contrast at the cutoff,
    /// `coef * (m(d*) - m(d* - 1))`, and its delta-method multiplier.
    pub fn cutoff_contrast(&self, coef: f64) -> (f64, f64) {
        let mult = self.shape.m(self.dstar) - self.shape.m(self.dstar.saturating_sub(1));
        (coef * mult, mult.abs())
    }
}

/// Options for the outer quasi-Newton optimizer.
#[derive(Clone, Debug)]
pub struct MleOptions {
    /// Convergence criterion on the gradient sup-norm.
    pub grad_tol: f64,
    /// Maximum BFGS iterations.
    pub max_iter: usize,
    /// Central-difference step for numeric gradients.
    pub fd_step: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iter: 300,
            fd_step: 1e-6,
        }
    }
}

/// Result of a mixture maximum likelihood fit.
#[derive(Clone, Debug)]
pub struct MleFit {
    /// Template describing the parameter layout.
    pub template: RenewalMixtureTemplate,
    /// Parameter estimates (types sorted by renewal cost).
    pub params: Vec<f64>,
    /// Parameter names aligned with `params`.
    pub param_names: Vec<String>,
    /// Covariance from the inverse score outer product.
    pub cov: DMatrix<f64>,
    /// Maximized log likelihood.
    pub loglik: f64,
    /// BFGS iterations used.
    pub iterations: usize,
}

impl MleFit {
    /// Duration coefficient estimate and standard error.
    pub fn coef(&self) -> (f64, f64) {
        (self.params[0], self.cov[(0, 0)].max(0.0).sqrt())
    }

    /// Renewal cost estimates with standard errors, one per type.
    pub fn rcs(&self) -> Vec<(f64, f64)> {
        (1..=self.template.k)
            .map(|i| (self.params[i], self.cov[(i, i)].max(0.0).sqrt()))
            .collect()
    }

    /// Mixture weights implied by the estimated logits.
    pub fn weights(&self) -> Vec<f64> {
        self.template
            .mixture(&self.params)
            .expect("stored params are valid")
            .weights
    }

    /// Identified duration contrast at the cutoff, with its standard error.
    pub fn cutoff_contrast(&self) -> (f64, f64) {
        let (coef, se) = self.coef();
        let (value, mult) = self.template.cutoff_contrast(coef);
        (value, mult * se)
    }
}

fn numeric_gradient<F: Fn(&DVector<f64>) -> Result<f64>>(
    f: &F,
    x: &DVector<f64>,
    step: f64,
) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        g[i] = (f(&xp)? - f(&xm)?) / (2.0 * h);
    }
    Ok(g)
}

/// Maximizes `f` by BFGS with numeric gradients and Armijo backtracking.
fn bfgs_maximize<F: Fn(&DVector<f64>) -> Result<f64>>(
    f: &F,
    start: DVector<f64>,
    options: &MleOptions,
) -> Result<(DVector<f64>, f64, usize)> {
    let dim = start.len();
    let mut x = start;
    let mut value = f(&x)?;
    let mut grad = numeric_gradient(f, &x, options.fd_step)?;
    let mut inv_h = DMatrix::<f64>::identity(dim, dim);
    let mut iterations = 0;
    // Scale the tolerance by the objective magnitude: finite-difference
    // gradients of a large log likelihood carry rounding noise of that order.
    let tol = options.grad_tol * (1.0 + value.abs());
    while grad.amax() > tol {
        if iterations >= options.max_iter {
            return Err(DdError::Optimization(format!(
                "BFGS gradient sup-norm {:.3e} after {iterations} iterations",
                grad.amax()
            )));
        }
        iterations += 1;
        let mut direction = &inv_h * &grad;
        let mut fresh = false;
        if direction.dot(&grad) <= 0.0 {
            // Restart on a non-ascent direction.
            inv_h = DMatrix::identity(dim, dim);
            direction = grad.clone();
            fresh = true;
        }
        let line_search = |direction: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
            let mut step = 1.0 / (1.0 + direction.amax()).max(1.0);
            while step >= 1e-13 {
                let candidate = &x + direction * step;
                if let Ok(v) = f(&candidate) {
                    if v > value {
                        return Some((candidate, v));
                    }
                }
                step *= 0.5;
            }
            None
        };
        let improved = line_search(&direction).or_else(|| {
            if fresh {
                None
            } else {
                // Quasi-Newton direction stalled: retry along the gradient.
                inv_h = DMatrix::identity(dim, dim);
                line_search(&grad.clone())
            }
        });
        let Some((x_new, v_new)) = improved else {
            // No ascent even along the gradient: numeric optimum reached.
            break;
        };
        let g_new = numeric_gradient(f, &x_new, options.fd_step)?;
        let s = &x_new - &x;
        let y = &g_new - &grad;
        let sy = s.dot(&y);
        if sy < -1e-12 {
            // BFGS update for maximization (curvature condition s'y < 0);
            // equivalent to the standard update on the negated objective.
            let rho = -1.0 / sy;
            let i = DMatrix::<f64>::identity(dim, dim);
            let left = &i + &s * y.transpose() * rho;
            inv_h = &left * inv_h * left.transpose() + &s * s.transpose() * rho;
        }
        x = x_new;
        value = v_new;
        grad = g_new;
    }
    Ok((x, value, iterations))
}

/// Fits the renewal mixture by nested fixed point maximum likelihood.
///
/// `starts` supplies one or more initial parameter vectors; the best
/// converged fit wins. Types are sorted by renewal cost in the result.
pub fn fit_mle_nfxp(
    histories: &[ChoiceHistory],
    template: &RenewalMixtureTemplate,
    starts: &[Vec<f64>],
    options: &MleOptions,
) -> Result<MleFit> {
    if histories.is_empty() {
        return Err(DdError::Config("empty panel".into()));
    }
    if starts.is_empty() {
        return Err(DdError::Config("at least one start point required".into()));
    }
    let objective = |x: &DVector<f64>| -> Result<f64> {
        let mix = template.mixture(x.as_slice())?;
        mixture_loglik(&mix, histories)
    };
    let mut best: Option<(DVector<f64>, f64, usize)> = None;
    let mut last_err = None;
    for start in starts {
        if start.len() != template.dim() {
            return Err(DdError::Config(format!(
                "start point has {} entries, expected {}",
                start.len(),
                template.dim()
            )));
        }
        match bfgs_maximize(&objective, DVector::from_row_slice(start), options) {
            Ok(candidate) => {
                if best.as_ref().map_or(true, |b| candidate.1 > b.1) {
                    best = Some(candidate);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (x, loglik, iterations) =
        best.ok_or_else(|| last_err.unwrap_or(DdError::Optimization("no start converged".into())))?;

    // Sort types by renewal cost and rebuild the weight logits accordingly.
    let mix = template.mixture(x.as_slice())?;
    let mut order: Vec<usize> = (0..template.k).collect();
    order.sort_by(|&a, &b| x[1 + a].partial_cmp(&x[1 + b]).expect("finite costs"));
    let mut params = vec![x[0]];
    params.extend(order.iter().map(|&i| x[1 + i]));
    let sorted_w: Vec<f64> = order.iter().map(|&i| mix.weights[i]).collect();
    let last = sorted_w[template.k - 1];
    params.extend(sorted_w[..template.k - 1].iter().map(|w| (w / last).ln()));
    let x = DVector::from_row_slice(&params);

    // Covariance from the outer product of per-observation numeric scores.
    let dim = template.dim();
    let mut per_obs = vec![DVector::zeros(dim); histories.len()];
    for i in 0..dim {
        let h = options.fd_step * (1.0 + x[i].abs());
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        let lp = mixture_loglik_per_obs(&template.mixture(xp.as_slice())?, histories)?;
        let lm = mixture_loglik_per_obs(&template.mixture(xm.as_slice())?, histories)?;
        for (obs, (p, m)) in per_obs.iter_mut().zip(lp.iter().zip(&lm)) {
            obs[i] = (p - m) / (2.0 * h);
        }
    }
    let mut info = DMatrix::zeros(dim, dim);
    for s in &per_obs {
        info += s * s.transpose();
    }
    let cov = Cholesky::new(info)
        .map(|c| c.inverse())
        .ok_or(DdError::SingularMatrix {
            context: "MLE score outer product".into(),
            rank: 0,
        })?;
    Ok(MleFit {
        template: template.clone(),
        params,
        param_names: template.param_names(),
        cov,
        loglik,
        iterations,
    })
}

/// Result of recovering a type distribution from fitted probabilities.
#[derive(Clone, Debug)]
pub struct TypeRecovery {
    /// Least-squares weights, one per candidate type.
    pub weights: Vec<f64>,
    /// Residual norm of the least-squares fit.
    pub residual_norm: f64,
    /// True when every recovered weight lies in `[0, 1]`.
    pub within_unit_interval: bool,
}

/// Recovers type weights by regressing empirical history probabilities on the
/// per-type model probabilities of the same histories.
pub fn recover_type_distribution(
    types: &[ModelSpec],
    histories: &[ChoiceHistory],
    p_hat: &[f64],
) -> Result<TypeRecovery> {
    if types.is_empty() || histories.len() != p_hat.len() {
        return Err(DdError::Config(
            "need types and matching histories/probabilities".into(),
        ));
    }
    let solved = types
        .iter()
        .map(|c| solve_bellman(c, DEFAULT_TOL, DEFAULT_MAX_ITER))
        .collect::<Result<Vec<_>>>()?;
    let mut l = DMatrix::zeros(histories.len(), types.len());
    for (i, h) in histories.iter().enumerate() {
        for (k, s) in solved.iter().enumerate() {
            l[(i, k)] = s.history_log_prob(h).exp();
        }
    }
    let p = DVector::from_row_slice(p_hat);
    let svd = SVD::new(l.clone(), true, true);
    let tol = 1e-10 * svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < types.len() {
        return Err(DdError::SingularMatrix {
            context: "type-probability design matrix".into(),
            rank,
        });
    }
    let weights = svd
        .solve(&p, tol)
        .map_err(|e| DdError::Optimization(e.to_string()))?;
    let residual_norm = (&l * &weights - &p).norm();
    let within = weights.iter().all(|&w| (-1e-9..=1.0 + 1e-9).contains(&w));
    Ok(TypeRecovery {
        weights: weights.iter().copied().collect(),
        residual_norm,
        within_unit_interval: within,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::histories::enumerate_histories;
    use crate::simulate::{simulate_panel, DgpSpec, RcLaw};

    #[test]
    fn single_type_mixture_is_plain_likelihood() {
        let spec = renewal_spec(2.0, 1.0, 3, CostShape::Linear, 0.9);
        let solved = solve_bellman(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let hs = enumerate_histories(1, 4, (0, 0), 1 << 20).unwrap();
        let mix = MixtureSpec {
            components: vec![spec],
            weights: vec![1.0],
        };
        let total = mixture_loglik(&mix, &hs).unwrap();
        let direct: f64 = hs.iter().map(|h| solved.history_log_prob(h)).sum();
        assert_abs_diff_eq!(total, direct, epsilon = 1e-10);
    }

    #[test]
    fn mixture_probabilities_integrate_to_one() {
        let mix = MixtureSpec {
            components: vec![
                renewal_spec(1.0, 0.5, 2, CostShape::Linear, 0.9),
                renewal_spec(3.0, 0.5, 2, CostShape::Linear, 0.9),
            ],
            weights: vec![0.3, 0.7],
        };
        let hs = enumerate_histories(1, 5, (0, 0), 1 << 20).unwrap();
        let lps = mixture_loglik_per_obs(&mix, &hs).unwrap();
        let total: f64 = lps.iter().map(|lp| lp.exp()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn homogeneous_fit_recovers_the_generating_parameters() {
        let dgp = DgpSpec {
            rc_law: RcLaw::Fixed(2.5),
            coef: 1.0,
            dstar: 2,
            shape: CostShape::Linear,
            delta: 0.9,
            n: 3000,
            t: 8,
            init: (0, 0),
        };
        let panel = simulate_panel(&dgp, 11).unwrap();
        let template = RenewalMixtureTemplate {
            k: 1,
            dstar: 2,
            shape: CostShape::Linear,
            delta: 0.9,
        };
        let fit = fit_mle_nfxp(
            &panel.histories,
            &template,
            &[vec![0.5, 2.0]],
            &MleOptions::default(),
        )
        .unwrap();
        let (coef, coef_se) = fit.coef();
        let (rc, rc_se) = fit.rcs()[0];
        assert!((coef - 1.0).abs() < 4.0 * coef_se, "coef {coef} se {coef_se}");
        assert!((rc - 2.5).abs() < 4.0 * rc_se, "rc {rc} se {rc_se}");
        assert_eq!(fit.weights(), vec![1.0]);
    }

    #[test]
    fn recovery_reproduces_exact_mixture_weights() {
        let types = vec![
            renewal_spec(1.5, 0.8, 2, CostShape::Linear, 0.9),
            renewal_spec(4.0, 0.8, 2, CostShape::Linear, 0.9),
        ];
        let mix = MixtureSpec {
            components: types.clone(),
            weights: vec![0.4, 0.6],
        };
        let hs = enumerate_histories(1, 5, (0, 0), 1 << 20).unwrap();
        let p: Vec<f64> = mixture_loglik_per_obs(&mix, &hs)
            .unwrap()
            .iter()
            .map(|lp| lp.exp())
            .collect();
        let rec = recover_type_distribution(&types, &hs, &p).unwrap();
        assert_abs_diff_eq!(rec.weights[0], 0.4, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.weights[1], 0.6, epsilon = 1e-8);
        assert!(rec.within_unit_interval);
        assert!(rec.residual_norm < 1e-10);
    }

    #[test]
    fn recovery_rejects_duplicate_types() {
        let t = renewal_spec(2.0, 0.5, 2, CostShape::Linear, 0.9);
        let types = vec![t.clone(), t];
        let hs = enumerate_histories(1, 4, (0, 0), 1 << 20).unwrap();
        let p = vec![1.0 / hs.len() as f64; hs.len()];
        match recover_type_distribution(&types, &hs, &p) {
            Err(DdError::SingularMatrix { rank, .. }) => assert_eq!(rank, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }
}
