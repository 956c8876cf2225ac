//! Conditional maximum likelihood: class-based estimation of the identified
//! structural parameters, and joint estimation of the duration cutoff via a
//! concentrated likelihood with a BIC penalty.
//!
//! The conditional likelihood of an observation is the probability of its
//! history among all histories sharing its sufficient statistic `U` within
//! its `(J, T, y0, d1)` stratum. Because `log P = U' g + S' beta*`, this
//! conditional probability is a softmax in `S' beta*` over the class and is
//! free of the unobserved type; the resulting log likelihood is globally
//! concave in `beta*`.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{DdError, Result};
use crate::histories::{enumerate_histories, ChoiceHistory, DEFAULT_ENUMERATION_CAP};
use crate::suffstats::{group_histories, StatKey, Variant};

/// Options for the conditional maximum likelihood fit.
#[derive(Clone, Debug)]
pub struct CmleOptions {
    /// Convergence criterion on the gradient sup-norm.
    pub grad_tol: f64,
    /// Maximum Newton iterations.
    pub max_iter: usize,
    /// Cap on per-stratum full enumeration.
    pub enumeration_cap: u128,
}

impl Default for CmleOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 200,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// One `U`-equivalence class prepared for likelihood evaluation: the
/// identifying vectors of every enumerated member, and how many observations
/// sit on each member.
#[derive(Clone, Debug)]
pub struct CmleClass {
    /// Dense identifying vectors (global parameter layout), one per member.
    pub member_s: Vec<DVector<f64>>,
    /// Observed count per member (zero for unobserved members).
    pub counts: Vec<f64>,
    /// Total observations in the class.
    pub n_obs: f64,
}

/// Observed data grouped into informative equivalence classes.
#[derive(Clone, Debug)]
pub struct GroupedData {
    /// Parameter names, one per column of the identifying vectors.
    pub parameter_keys: Vec<StatKey>,
    /// Informative classes (at least one observation, `S` varies within).
    pub classes: Vec<CmleClass>,
    /// Observations kept.
    pub n_informative: usize,
    /// Observations dropped because their class has no identifying variation.
    pub n_dropped: usize,
}

/// Result of a conditional maximum likelihood fit.
#[derive(Clone, Debug)]
pub struct CmleFit {
    /// Parameter names, aligned with `beta_star`.
    pub parameter_keys: Vec<StatKey>,
    /// Estimated identified parameters.
    pub beta_star: Vec<f64>,
    /// Covariance of the estimates (inverse observed information).
    pub cov: DMatrix<f64>,
    /// Maximized conditional log likelihood.
    pub loglik: f64,
    /// Observations contributing to the likelihood.
    pub n_informative: usize,
    /// Observations dropped as uninformative.
    pub n_dropped: usize,
    /// Newton iterations used.
    pub iterations: usize,
    /// True when the covariance fell back to the score outer product.
    pub used_bhhh: bool,
}

impl CmleFit {
    /// Standard errors on the diagonal of the covariance.
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.beta_star.len())
            .map(|i| self.cov[(i, i)].max(0.0).sqrt())
            .collect()
    }

    /// Estimate and standard error of one named component.
    pub fn component(&self, key: StatKey) -> Result<(f64, f64)> {
        let idx = self
            .parameter_keys
            .iter()
            .position(|&k| k == key)
            .ok_or_else(|| DdError::UnknownComponent(format!("{key:?}")))?;
        Ok((self.beta_star[idx], self.cov[(idx, idx)].max(0.0).sqrt()))
    }
}

/// Groups observed histories into likelihood-ready classes.
///
/// Observations are stratified by `(J, T, y0, d1)`; within each stratum all
/// `(J+1)^T` histories are enumerated so that class denominators sum over
/// every history sharing the observed `U`. Classes whose members all carry
/// the same `S` cannot move the likelihood and are dropped (counted).
pub fn group_observations(
    v: &Variant,
    observations: &[ChoiceHistory],
    cap: u128,
) -> Result<GroupedData> {
    // Stratify.
    let mut strata: BTreeMap<(u8, usize, u8, u32), Vec<&ChoiceHistory>> = BTreeMap::new();
    for h in observations {
        strata.entry(h.stratum()).or_default().push(h);
    }

    struct RawClass {
        member_s: Vec<Vec<(StatKey, i64)>>,
        counts: Vec<f64>,
    }
    let mut raw_classes: Vec<RawClass> = Vec::new();
    let mut n_informative = 0usize;
    let mut n_dropped = 0usize;

    for ((j, t, y0, d1), obs) in &strata {
        let universe = enumerate_histories(*j, *t, (*y0, *d1), cap)?;
        let classes = group_histories(v, &universe)?;
        // Map a choice sequence to its class and member position.
        let mut locator: BTreeMap<&[u8], (usize, usize)> = BTreeMap::new();
        for (ci, class) in classes.iter().enumerate() {
            for (mi, &hi) in class.members.iter().enumerate() {
                locator.insert(universe[hi].choices(), (ci, mi));
            }
        }
        let mut counts: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for h in obs {
            let &(ci, mi) = locator
                .get(h.choices())
                .expect("every valid history is in the enumeration");
            counts
                .entry(ci)
                .or_insert_with(|| vec![0.0; classes[ci].members.len()])[mi] += 1.0;
        }
        for (ci, class_counts) in counts {
            let class = &classes[ci];
            let n_here = class_counts.iter().sum::<f64>() as usize;
            if class.is_degenerate() {
                n_dropped += n_here;
                continue;
            }
            n_informative += n_here;
            raw_classes.push(RawClass {
                member_s: class
                    .s
                    .iter()
                    .map(|sv| sv.keys.iter().copied().zip(sv.values.iter().copied()).collect())
                    .collect(),
                counts: class_counts,
            });
        }
    }

    if raw_classes.is_empty() {
        return Err(DdError::NoIdentifyingVariation);
    }

    // Keep only parameter keys with within-class variation somewhere.
    let mut keys: Vec<StatKey> = Vec::new();
    for rc in &raw_classes {
        let mut all_keys: Vec<StatKey> = Vec::new();
        for m in &rc.member_s {
            for &(k, _) in m {
                if !all_keys.contains(&k) {
                    all_keys.push(k);
                }
            }
        }
        for k in all_keys {
            let vals: Vec<i64> = rc
                .member_s
                .iter()
                .map(|m| m.iter().find(|&&(mk, _)| mk == k).map_or(0, |&(_, v)| v))
                .collect();
            if vals.windows(2).any(|w| w[0] != w[1]) && !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    keys.sort();
    if keys.is_empty() {
        return Err(DdError::NoIdentifyingVariation);
    }

    let dim = keys.len();
    let classes = raw_classes
        .into_iter()
        .map(|rc| {
            let member_s = rc
                .member_s
                .iter()
                .map(|m| {
                    let mut dense = DVector::zeros(dim);
                    for &(k, val) in m {
                        if let Some(pos) = keys.iter().position(|&kk| kk == k) {
                            dense[pos] = val as f64;
                        }
                    }
                    dense
                })
                .collect();
            let n_obs = rc.counts.iter().sum();
            CmleClass { member_s, counts: rc.counts, n_obs }
        })
        .collect();

    Ok(GroupedData {
        parameter_keys: keys,
        classes,
        n_informative,
        n_dropped,
    })
}

/// Conditional log likelihood with its analytic gradient and Hessian.
pub fn conditional_loglik(
    beta: &DVector<f64>,
    data: &GroupedData,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let dim = beta.len();
    let mut value = 0.0;
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    for class in &data.classes {
        let etas: Vec<f64> = class.member_s.iter().map(|s| s.dot(beta)).collect();
        let lse = crate::model::log_sum_exp(&etas);
        let probs: Vec<f64> = etas.iter().map(|e| (e - lse).exp()).collect();
        let mut mean = DVector::zeros(dim);
        for (p, s) in probs.iter().zip(&class.member_s) {
            mean += s * *p;
        }
        for ((count, eta), s) in class.counts.iter().zip(&etas).zip(&class.member_s) {
            if *count > 0.0 {
                value += count * (eta - lse);
                grad += (s - &mean) * *count;
            }
        }
        let mut second = DMatrix::zeros(dim, dim);
        for (p, s) in probs.iter().zip(&class.member_s) {
            second += (s * s.transpose()) * *p;
        }
        second -= &mean * mean.transpose();
        hess -= second * class.n_obs;
    }
    (value, grad, hess)
}

/// Per-observation score outer product (BHHH information matrix).
fn bhhh_information(beta: &DVector<f64>, data: &GroupedData) -> DMatrix<f64> {
    let dim = beta.len();
    let mut info = DMatrix::zeros(dim, dim);
    for class in &data.classes {
        let etas: Vec<f64> = class.member_s.iter().map(|s| s.dot(beta)).collect();
        let lse = crate::model::log_sum_exp(&etas);
        let probs: Vec<f64> = etas.iter().map(|e| (e - lse).exp()).collect();
        let mut mean = DVector::zeros(dim);
        for (p, s) in probs.iter().zip(&class.member_s) {
            mean += s * *p;
        }
        for (count, s) in class.counts.iter().zip(&class.member_s) {
            if *count > 0.0 {
                let score = s - &mean;
                info += (&score * score.transpose()) * *count;
            }
        }
    }
    info
}

/// Fits the conditional maximum likelihood estimator by damped Newton steps,
/// falling back to the score outer product when the Hessian is singular.
pub fn fit_cmle(
    observations: &[ChoiceHistory],
    v: &Variant,
    options: &CmleOptions,
) -> Result<CmleFit> {
    let data = group_observations(v, observations, options.enumeration_cap)?;
    fit_cmle_grouped(&data, options)
}

/// Fits the conditional likelihood on pre-grouped data.
pub fn fit_cmle_grouped(data: &GroupedData, options: &CmleOptions) -> Result<CmleFit> {
    let dim = data.parameter_keys.len();
    let mut beta = DVector::zeros(dim);
    let (mut value, mut grad, mut hess) = conditional_loglik(&beta, data);
    let mut used_bhhh = false;
    let mut iterations = 0;
    while grad.amax() > options.grad_tol {
        if iterations >= options.max_iter {
            return Err(DdError::Optimization(format!(
                "CMLE gradient sup-norm {:.3e} after {} iterations",
                grad.amax(),
                iterations
            )));
        }
        iterations += 1;
        let neg_hess = -&hess;
        let direction = match Cholesky::new(neg_hess) {
            Some(chol) => chol.solve(&grad),
            None => {
                used_bhhh = true;
                let info = bhhh_information(&beta, data);
                Cholesky::new(info)
                    .map(|c| c.solve(&grad))
                    .ok_or(DdError::SingularMatrix {
                        context: "CMLE Hessian and BHHH information".into(),
                        rank: 0,
                    })?
            }
        };
        // Backtracking line search on the concave objective. When no step
        // improves the value, the iterate is at the numeric optimum and the
        // residual gradient is rounding noise.
        let mut step = 1.0;
        let mut improved = false;
        while step >= 1e-12 {
            let candidate = &beta + &direction * step;
            let (v_new, g_new, h_new) = conditional_loglik(&candidate, data);
            if v_new > value {
                beta = candidate;
                value = v_new;
                grad = g_new;
                hess = h_new;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let neg_hess = -&hess;
    let (cov, cov_bhhh) = match Cholesky::new(neg_hess.clone()) {
        Some(chol) => (chol.inverse(), false),
        None => {
            let info = bhhh_information(&beta, data);
            let chol = Cholesky::new(info).ok_or(DdError::SingularMatrix {
                context: "CMLE covariance".into(),
                rank: 0,
            })?;
            (chol.inverse(), true)
        }
    };
    Ok(CmleFit {
        parameter_keys: data.parameter_keys.clone(),
        beta_star: beta.iter().copied().collect(),
        cov,
        loglik: value,
        n_informative: data.n_informative,
        n_dropped: data.n_dropped,
        iterations,
        used_bhhh: used_bhhh || cov_bhhh,
    })
}

/// Observed counts of the generalized probe pairs, pooled across strata.
#[derive(Clone, Debug)]
pub struct PairCounts {
    /// One entry per candidate duration `n = 2..=L`.
    pub entries: Vec<PairCountEntry>,
    /// Total number of observations (for the BIC sample size).
    pub n_total: usize,
}

/// Pooled counts of the two members of the probe pair at one duration.
#[derive(Clone, Debug)]
pub struct PairCountEntry {
    /// Candidate duration `n`.
    pub n: u32,
    /// Observations matching the first pair member (baseline spell at `n`).
    pub count_a: f64,
    /// Observations matching the second pair member (spell at `n + 1`).
    pub count_b: f64,
}

impl PairCountEntry {
    /// Unconstrained log-odds estimate `ln(count_a / count_b)`; `None` when a
    /// count is zero.
    pub fn nu_hat(&self) -> Option<f64> {
        (self.count_a > 0.0 && self.count_b > 0.0).then(|| (self.count_a / self.count_b).ln())
    }

    /// Binomial standard error of the log-odds; `None` when undefined.
    pub fn nu_se(&self) -> Option<f64> {
        (self.count_a > 0.0 && self.count_b > 0.0)
            .then(|| (1.0 / self.count_a + 1.0 / self.count_b).sqrt())
    }
}

/// How probe-pair events are located in the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    /// A pair member is an entire history with a single baseline spell:
    /// the first member of the pair at duration `n` places it at period `n`,
    /// the second at `n + 1` (valid for `2 <= n <= T - 2` per stratum).
    FullHistory,
    /// Pair members are symmetric windows of `2n + 1` periods starting at a
    /// renewal state (the initial condition `(0, 0)` or the period right
    /// after a baseline choice): `n - 1` stays, baseline, `n + 1` stays
    /// versus `n` stays, baseline, `n` stays. Every renewal point that fits
    /// the window contributes, so long panels yield many more events.
    RenewalWindows,
}

/// Counts the generalized pair histories in the data, pooling across
/// `(T, y0, d1)` strata.
///
/// Within a stratum of horizon `T`, the pair at duration `n` exists for
/// `2 <= n <= T - 2`; strata too short for a given `n` contribute nothing.
pub fn pair_counts(observations: &[ChoiceHistory], l: u32) -> PairCounts {
    let mut entries: Vec<PairCountEntry> = (2..=l)
        .map(|n| PairCountEntry { n, count_a: 0.0, count_b: 0.0 })
        .collect();
    for h in observations {
        if h.j() != 1 || h.y0() != 0 || h.d1() != 0 {
            continue;
        }
        let t = h.t();
        // A history with a single baseline spell at period m is the first
        // pair member at n = m and the second at n = m - 1.
        let spells: Vec<usize> = h
            .choices()
            .iter()
            .enumerate()
            .filter_map(|(i, &y)| (y == 0).then_some(i + 1))
            .collect();
        if spells.len() != 1 {
            continue;
        }
        let m = spells[0] as u32;
        for e in entries.iter_mut() {
            if e.n as usize + 2 > t {
                continue;
            }
            if m == e.n {
                e.count_a += 1.0;
            } else if m == e.n + 1 {
                e.count_b += 1.0;
            }
        }
    }
    PairCounts { entries, n_total: observations.len() }
}

/// Counts symmetric probe-pair windows at every renewal point.
///
/// A renewal point is a period entered in state `(0, 0)`: the first period
/// when the history starts there, and the period after any baseline choice.
/// From each renewal point the next `2n + 1` periods are matched against the
/// symmetric pair at duration `n`. Only the difference at the cutoff is
/// restricted under the flat-tail assumption, which is exactly what the
/// selection step tests, so pooling windows across renewal points is valid
/// for every candidate at or above the true cutoff.
pub fn renewal_pair_counts(observations: &[ChoiceHistory], l: u32) -> PairCounts {
    let mut entries: Vec<PairCountEntry> = (2..=l)
        .map(|n| PairCountEntry { n, count_a: 0.0, count_b: 0.0 })
        .collect();
    for h in observations {
        if h.j() != 1 {
            continue;
        }
        let t = h.t();
        let choices = h.choices();
        // 0-based period indices entered in state (0, 0).
        let mut renewal_starts = Vec::new();
        if h.y0() == 0 && h.d1() == 0 {
            renewal_starts.push(0usize);
        }
        for (i, &y) in choices.iter().enumerate() {
            if y == 0 && i + 1 < t {
                renewal_starts.push(i + 1);
            }
        }
        for &start in &renewal_starts {
            for e in entries.iter_mut() {
                let n = e.n as usize;
                if start + 2 * n + 1 > t {
                    continue;
                }
                let window = &choices[start..start + 2 * n + 1];
                let is_a = window[..n - 1].iter().all(|&y| y == 1)
                    && window[n - 1] == 0
                    && window[n..].iter().all(|&y| y == 1);
                let is_b = window[..n].iter().all(|&y| y == 1)
                    && window[n] == 0
                    && window[n + 1..].iter().all(|&y| y == 1);
                if is_a {
                    e.count_a += 1.0;
                } else if is_b {
                    e.count_b += 1.0;
                }
            }
        }
    }
    PairCounts { entries, n_total: observations.len() }
}

/// Concentrated log likelihood at a candidate cutoff.
///
/// Unconstrained log-odds are used for `n <= dstar`; the log-odds are pinned
/// to zero for `n > dstar`, which turns those pair contributions into
/// `ln(1/2)` per observation.
pub fn concentrated_loglik(counts: &PairCounts, dstar: u32) -> f64 {
    let mut total = 0.0;
    for e in &counts.entries {
        let a = e.count_a;
        let b = e.count_b;
        if a + b == 0.0 {
            continue;
        }
        if e.n <= dstar {
            if a > 0.0 {
                total += a * (a / (a + b)).ln();
            }
            if b > 0.0 {
                total += b * (b / (a + b)).ln();
            }
        } else {
            total += (a + b) * 0.5f64.ln();
        }
    }
    total
}

/// One candidate row of the cutoff search.
#[derive(Clone, Debug)]
pub struct DstarCandidate {
    /// Candidate cutoff.
    pub dstar: u32,
    /// Concentrated log likelihood.
    pub loglik: f64,
    /// BIC value `loglik - (dstar / 2) ln N`.
    pub bic: f64,
}

/// Result of the BIC cutoff selection.
#[derive(Clone, Debug)]
pub struct DstarSelection {
    /// All candidate rows, `dstar = 2..=L`.
    pub candidates: Vec<DstarCandidate>,
    /// Log-odds table: `(n, nu_hat, se)` per probe duration.
    pub nu_table: Vec<(u32, Option<f64>, Option<f64>)>,
    /// Selected cutoff (argmax BIC, ties to the smaller cutoff).
    pub selected: u32,
    /// Estimate at the selected cutoff: `nu_hat(selected)`.
    pub beta_at_selected: Option<f64>,
    /// Standard error of the estimate at the selected cutoff.
    pub se_at_selected: Option<f64>,
    /// Sample size used in the BIC penalty.
    pub n: usize,
}

/// Selects the duration cutoff by maximizing the BIC over `2..=l`.
pub fn select_dstar_bic(
    observations: &[ChoiceHistory],
    l: u32,
    mode: PairMode,
) -> Result<DstarSelection> {
    if l < 2 {
        return Err(DdError::Config("cutoff search requires L >= 2".into()));
    }
    let counts = match mode {
        PairMode::FullHistory => pair_counts(observations, l),
        PairMode::RenewalWindows => renewal_pair_counts(observations, l),
    };
    let n = counts.n_total;
    if n == 0 {
        return Err(DdError::NoIdentifyingVariation);
    }
    let penalty = (n as f64).ln();
    let candidates: Vec<DstarCandidate> = (2..=l)
        .map(|d| {
            let loglik = concentrated_loglik(&counts, d);
            DstarCandidate {
                dstar: d,
                loglik,
                bic: loglik - 0.5 * f64::from(d) * penalty,
            }
        })
        .collect();
    let selected = candidates
        .iter()
        .fold(None::<&DstarCandidate>, |best, c| match best {
            Some(b) if c.bic > b.bic => Some(c),
            None => Some(c),
            other => other,
        })
        .expect("at least one candidate")
        .dstar;
    let at = counts
        .entries
        .iter()
        .find(|e| e.n == selected)
        .expect("selected candidate exists");
    Ok(DstarSelection {
        nu_table: counts
            .entries
            .iter()
            .map(|e| (e.n, e.nu_hat(), e.nu_se()))
            .collect(),
        candidates,
        selected,
        beta_at_selected: at.nu_hat(),
        se_at_selected: at.nu_se(),
        n,
    })
}
