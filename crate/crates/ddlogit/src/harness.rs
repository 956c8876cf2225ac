//! Experiment harnesses: specification test, Monte Carlo driver, embedded
//! bus-engine maintenance data, and the empirical replication pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cmle::{fit_cmle, select_dstar_bic, CmleOptions, DstarSelection, PairMode};
use crate::error::{DdError, Result};
use crate::histories::ChoiceHistory;
use crate::mle::{fit_mle_nfxp, MleFit, MleOptions, RenewalMixtureTemplate};
use crate::model::CostShape;
use crate::simulate::{derive_seed, simulate_panel, window_panel, DgpSpec};
use crate::suffstats::{StatKey, Variant, VariantKind};

// ---------------------------------------------------------------------------
// Specification test
// ---------------------------------------------------------------------------

/// Result of the specification test comparing a robust and an efficient
/// estimator of the same scalar.
#[derive(Clone, Copy, Debug)]
pub struct HausmanResult {
    /// Test statistic, chi-squared with one degree of freedom under the null.
    pub statistic: f64,
    /// Upper-tail p-value.
    pub p_value: f64,
    /// Variance difference `var_robust - var_efficient`.
    pub var_diff: f64,
    /// True when the variance difference was non-positive and the statistic
    /// was clamped to zero.
    pub clamped: bool,
}

/// Specification test: under correct specification both estimators are
/// consistent and the efficient one has the smaller variance, so
/// `(b_r - b_e)^2 / (var_r - var_e)` is chi-squared(1).
pub fn hausman_test(
    beta_robust: f64,
    var_robust: f64,
    beta_efficient: f64,
    var_efficient: f64,
) -> HausmanResult {
    let var_diff = var_robust - var_efficient;
    let (statistic, clamped) = if var_diff > 0.0 {
        ((beta_robust - beta_efficient).powi(2) / var_diff, false)
    } else {
        (0.0, true)
    };
    let chi = ChiSquared::new(1.0).expect("df = 1 is valid");
    HausmanResult {
        statistic,
        p_value: 1.0 - chi.cdf(statistic),
        var_diff,
        clamped,
    }
}

// ---------------------------------------------------------------------------
// Flat key=value configuration
// ---------------------------------------------------------------------------

/// Flat `key = value` configuration with `#` comments.
#[derive(Clone, Debug, Default)]
pub struct Config(BTreeMap<String, String>);

impl Config {
    /// Parses configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DdError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self(map))
    }

    /// Reads and parses a configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Raw string value.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Typed value with a default when the key is absent.
    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| DdError::Config(format!("cannot parse '{raw}' for key '{key}'"))),
        }
    }

    /// Typed value that must be present.
    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| DdError::Config(format!("missing required key '{key}'")))?;
        raw.parse()
            .map_err(|_| DdError::Config(format!("cannot parse '{raw}' for key '{key}'")))
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo driver
// ---------------------------------------------------------------------------

/// Configuration of one Monte Carlo experiment.
#[derive(Clone, Debug)]
pub struct McConfig {
    /// Preset data-generating process (1-4).
    pub dgp: u8,
    /// Individuals per replication.
    pub n: usize,
    /// Estimation window, 1-based inclusive periods of the simulated panel.
    pub window: (usize, usize),
    /// Replications.
    pub reps: usize,
    /// Base seed; replication `r` uses an independent derived stream.
    pub seed: u64,
    /// Fit the conditional estimator at the true cutoff.
    pub run_cmle: bool,
    /// Number of mixture types for the full-solution fit; 0 skips it.
    pub mle_types: usize,
    /// Largest cutoff candidate for the selection step; 0 skips it.
    pub select_l: u32,
    /// Run the specification test (requires both estimators).
    pub run_hausman: bool,
}

impl McConfig {
    /// Builds a Monte Carlo configuration from flat keys: `dgp`, `n`,
    /// `t_start`, `t_end`, `reps`, `cmle`, `mle_types`, `select_l`, `hausman`.
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            dgp: cfg.get_or("dgp", 1)?,
            n: cfg.get_or("n", 1000)?,
            window: (cfg.get_or("t_start", 1)?, cfg.get_or("t_end", 7)?),
            reps: cfg.get_or("reps", 200)?,
            seed,
            run_cmle: cfg.get_or("cmle", true)?,
            mle_types: cfg.get_or("mle_types", 0)?,
            select_l: cfg.get_or("select_l", 0)?,
            run_hausman: cfg.get_or("hausman", false)?,
        })
    }
}

/// Mean, dispersion, and average reported standard error of one estimator
/// across replications.
#[derive(Clone, Copy, Debug, Default)]
pub struct EstimatorSummary {
    /// Mean point estimate.
    pub mean: f64,
    /// Standard deviation of the point estimates.
    pub sd: f64,
    /// Mean of the reported standard errors.
    pub mean_se: f64,
    /// Replications contributing.
    pub n: usize,
}

fn summarize(values: &[(f64, f64)]) -> EstimatorSummary {
    let n = values.len();
    if n == 0 {
        return EstimatorSummary::default();
    }
    let mean = values.iter().map(|v| v.0).sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    EstimatorSummary {
        mean,
        sd: var.sqrt(),
        mean_se: values.iter().map(|v| v.1).sum::<f64>() / n as f64,
        n,
    }
}

/// Aggregate results of a Monte Carlo experiment.
#[derive(Clone, Debug)]
pub struct McSummary {
    /// Configuration the experiment ran under.
    pub config: McConfig,
    /// Conditional estimator of the cutoff cost contrast, positive
    /// maintenance-cost scale (true value 1 under the presets).
    pub cmle: Option<EstimatorSummary>,
    /// Full-solution estimator of the same contrast.
    pub mle: Option<EstimatorSummary>,
    /// Specification-test rejection rates at the 1/5/10 percent levels.
    pub hausman_reject: Option<(f64, f64, f64)>,
    /// Frequency of each selected cutoff.
    pub dstar_freq: Option<BTreeMap<u32, f64>>,
    /// Replications where an estimator failed (excluded from summaries).
    pub failures: usize,
}

struct RepOutcome {
    cmle: Option<(f64, f64)>,
    mle: Option<(f64, f64)>,
    hausman_p: Option<f64>,
    dstar: Option<u32>,
    failed: bool,
}

fn run_one_rep(cfg: &McConfig, rep: usize) -> Result<RepOutcome> {
    let mut dgp = DgpSpec::preset(cfg.dgp)?;
    dgp.n = cfg.n;
    let panel = simulate_panel(&dgp, derive_seed(cfg.seed, rep as u64))?;
    let sample = window_panel(&panel.histories, cfg.window.0, cfg.window.1)?;

    let mut out = RepOutcome {
        cmle: None,
        mle: None,
        hausman_p: None,
        dstar: None,
        failed: false,
    };

    if cfg.run_cmle {
        let variant = Variant::new(
            VariantKind::ForwardDurAssumption2,
            1,
            Some(vec![0, dgp.dstar]),
        )?;
        match fit_cmle(&sample, &variant, &CmleOptions::default())
            .and_then(|fit| fit.component(StatKey::NegDeltaStar(1)))
        {
            // Negate onto the positive maintenance-cost scale (true value 1).
            Ok((b, se)) => out.cmle = Some((-b, se)),
            Err(_) => out.failed = true,
        }
    }

    if cfg.mle_types > 0 {
        let template = RenewalMixtureTemplate {
            k: cfg.mle_types,
            dstar: dgp.dstar,
            shape: dgp.shape,
            delta: dgp.delta,
        };
        // Spread the cost starts around the common preset location.
        let mut start = vec![-1.0];
        for k in 0..cfg.mle_types {
            start.push(6.0 + 3.0 * k as f64 / cfg.mle_types.max(1) as f64);
        }
        start.extend(vec![0.0; cfg.mle_types - 1]);
        match fit_mle_nfxp(&sample, &template, &[start], &MleOptions::default()) {
            // Negate onto the positive maintenance-cost scale (true value 1).
            Ok(fit) => {
                let (b, se) = fit.cutoff_contrast();
                out.mle = Some((-b, se));
            }
            Err(_) => out.failed = true,
        }
    }

    if cfg.run_hausman {
        if let (Some((bc, sc)), Some((bm, sm))) = (out.cmle, out.mle) {
            out.hausman_p = Some(hausman_test(bc, sc * sc, bm, sm * sm).p_value);
        }
    }

    if cfg.select_l >= 2 {
        // Long panels hold many renewal cycles; counting windows at every
        // renewal point gives the selection step its power.
        match select_dstar_bic(&sample, cfg.select_l, PairMode::RenewalWindows) {
            Ok(sel) => out.dstar = Some(sel.selected),
            Err(_) => out.failed = true,
        }
    }
    Ok(out)
}

/// Runs a Monte Carlo experiment; replications are independent and run in
/// parallel, each on its own derived random stream.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<McSummary> {
    let outcomes: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_one_rep(cfg, rep))
        .collect::<Result<_>>()?;

    let cmle_vals: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.cmle).collect();
    let mle_vals: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.mle).collect();
    let pvals: Vec<f64> = outcomes.iter().filter_map(|o| o.hausman_p).collect();
    let selections: Vec<u32> = outcomes.iter().filter_map(|o| o.dstar).collect();

    let rate = |alpha: f64| {
        pvals.iter().filter(|&&p| p < alpha).count() as f64 / pvals.len().max(1) as f64
    };
    let dstar_freq = if selections.is_empty() {
        None
    } else {
        let mut freq = BTreeMap::new();
        for &d in &selections {
            *freq.entry(d).or_insert(0.0) += 1.0 / selections.len() as f64;
        }
        Some(freq)
    };
    Ok(McSummary {
        config: cfg.clone(),
        cmle: cfg.run_cmle.then(|| summarize(&cmle_vals)),
        mle: (cfg.mle_types > 0).then(|| summarize(&mle_vals)),
        hausman_reject: (!pvals.is_empty()).then(|| (rate(0.01), rate(0.05), rate(0.10))),
        dstar_freq,
        failures: outcomes.iter().filter(|o| o.failed).count(),
    })
}

/// Renders a Monte Carlo summary as CSV (`quantity,statistic,value`).
pub fn mc_summary_csv(s: &McSummary) -> String {
    let mut out = String::from("quantity,statistic,value\n");
    let mut push_est = |label: &str, e: &EstimatorSummary| {
        let _ = writeln!(out, "{label},mean,{:.6}", e.mean);
        let _ = writeln!(out, "{label},sd,{:.6}", e.sd);
        let _ = writeln!(out, "{label},mean_se,{:.6}", e.mean_se);
        let _ = writeln!(out, "{label},reps,{}", e.n);
    };
    if let Some(e) = &s.cmle {
        push_est("cmle_cutoff_contrast", e);
    }
    if let Some(e) = &s.mle {
        push_est("mle_cutoff_contrast", e);
    }
    if let Some((r1, r5, r10)) = s.hausman_reject {
        let _ = writeln!(out, "hausman,reject_1pct,{r1:.6}");
        let _ = writeln!(out, "hausman,reject_5pct,{r5:.6}");
        let _ = writeln!(out, "hausman,reject_10pct,{r10:.6}");
    }
    if let Some(freq) = &s.dstar_freq {
        for (d, f) in freq {
            let _ = writeln!(out, "dstar_selected,{d},{f:.6}");
        }
    }
    let _ = writeln!(out, "failures,count,{}", s.failures);
    out
}

// ---------------------------------------------------------------------------
// Bus maintenance data
// ---------------------------------------------------------------------------

/// Observed maintenance histories of a bus fleet: `1` = keep the engine for
/// the month, `0` = replace it. Patterns are grouped with their multiplicity.
const BUS_PATTERNS: &[(&str, usize)] = &[
    ("110111", 2),
    ("111011", 7),
    ("111101", 7),
    ("111110", 11),
    ("1101111111", 1),
    ("1110111111", 4),
    ("1111011111", 2),
    ("1111101111", 7),
    ("1111110111", 7),
    ("1111111011", 5),
    ("1111111101", 3),
    ("1111111110", 2),
    ("1101110111", 1),
];

/// Buses observed over the short horizon with no replacement at all. These
/// carry no within-history variation (and so never enter the conditional
/// likelihood) but contribute to the full-solution likelihood.
const BUS_ZERO_REPLACEMENT: (&str, usize) = ("111111", 45);

/// Loads the embedded bus maintenance histories. All buses start the sample
/// in the month after a replacement, so the initial condition is `(0, 0)`.
pub fn load_bus_histories(include_zero_replacement: bool) -> Vec<ChoiceHistory> {
    let mut histories = Vec::new();
    let mut push = |pattern: &str, count: usize| {
        let h = ChoiceHistory::from_binary_str(pattern).expect("embedded pattern is valid");
        for _ in 0..count {
            histories.push(h.clone());
        }
    };
    for &(pattern, count) in BUS_PATTERNS {
        push(pattern, count);
    }
    if include_zero_replacement {
        push(BUS_ZERO_REPLACEMENT.0, BUS_ZERO_REPLACEMENT.1);
    }
    histories
}

// ---------------------------------------------------------------------------
// Empirical replication
// ---------------------------------------------------------------------------

/// One full-solution fit in the shape/cutoff grid.
#[derive(Clone, Debug)]
pub struct BusMleRow {
    /// Duration transform used.
    pub shape: CostShape,
    /// Cutoff imposed.
    pub dstar: u32,
    /// Replacement cost estimate and standard error.
    pub rc: (f64, f64),
    /// Marginal maintenance cost at the cutoff (positive-cost scale,
    /// `-(beta_d(d*) - beta_d(d*-1))`) and its standard error.
    pub marginal_cost: (f64, f64),
    /// Maximized log likelihood.
    pub loglik: f64,
}

/// Output of the empirical replication.
#[derive(Clone, Debug)]
pub struct BusReport {
    /// Cutoff selection on the conditional side.
    pub selection: DstarSelection,
    /// Conditional estimate of the marginal maintenance cost at the selected
    /// cutoff (positive-cost scale) with its standard error.
    pub cmle_marginal_cost: Option<(f64, f64)>,
    /// Full-solution grid, one row per shape/cutoff pair.
    pub mle_grid: Vec<BusMleRow>,
    /// Best row per shape by log likelihood.
    pub mle_best: Vec<BusMleRow>,
    /// Specification test comparing the conditional estimate with the
    /// full-solution estimate at the same (linear) shape and cutoff.
    pub hausman: Option<HausmanResult>,
    /// Discount factor used on the full-solution side.
    pub delta: f64,
}

/// Runs the empirical replication: cutoff selection and conditional
/// estimation on the replacement histories, a full-solution grid over
/// maintenance-cost shapes and cutoffs, and the specification test.
///
/// `dstar_max` bounds the cutoff search; `cutoff_grid` gives the cutoffs
/// fitted on the full-solution side.
pub fn run_bus_replication(
    delta: f64,
    dstar_max: u32,
    cutoff_grid: std::ops::RangeInclusive<u32>,
) -> Result<BusReport> {
    let conditional_data = load_bus_histories(false);
    let full_data = load_bus_histories(true);

    let selection = select_dstar_bic(&conditional_data, dstar_max, PairMode::FullHistory)?;
    // The conditional log-odds estimates beta_d(d*) - beta_d(d*-1); report on
    // the positive marginal-cost scale.
    let cmle_marginal_cost = selection
        .beta_at_selected
        .zip(selection.se_at_selected)
        .map(|(b, se)| (-b, se));

    let shapes = [CostShape::Sqrt, CostShape::Linear, CostShape::Square];
    let grid_points: Vec<(CostShape, u32)> = shapes
        .iter()
        .flat_map(|&s| cutoff_grid.clone().map(move |d| (s, d)))
        .collect();
    let mle_grid: Vec<BusMleRow> = grid_points
        .par_iter()
        .map(|&(shape, dstar)| {
            let template = RenewalMixtureTemplate {
                k: 1,
                dstar,
                shape,
                delta,
            };
            let fit = fit_mle_nfxp(
                &full_data,
                &template,
                &[vec![-0.3, 8.0], vec![-1.0, 12.0]],
                &MleOptions::default(),
            )?;
            Ok(bus_row(shape, dstar, &fit))
        })
        .collect::<Result<_>>()?;

    let mut mle_best = Vec::new();
    for &shape in &shapes {
        if let Some(best) = mle_grid
            .iter()
            .filter(|r| r.shape == shape)
            .max_by(|a, b| a.loglik.partial_cmp(&b.loglik).expect("finite loglik"))
        {
            mle_best.push(best.clone());
        }
    }

    // Specification test: conditional vs full-solution marginal cost, linear
    // shape at the conditionally selected cutoff.
    let hausman = match (
        cmle_marginal_cost,
        mle_grid
            .iter()
            .find(|r| r.shape == CostShape::Linear && r.dstar == selection.selected),
    ) {
        (Some((bc, sc)), Some(row)) => {
            let (bm, sm) = row.marginal_cost;
            Some(hausman_test(bc, sc * sc, bm, sm * sm))
        }
        _ => None,
    };

    Ok(BusReport {
        selection,
        cmle_marginal_cost,
        mle_grid,
        mle_best,
        hausman,
        delta,
    })
}

fn bus_row(shape: CostShape, dstar: u32, fit: &MleFit) -> BusMleRow {
    let (contrast, contrast_se) = fit.cutoff_contrast();
    BusMleRow {
        shape,
        dstar,
        rc: fit.rcs()[0],
        marginal_cost: (-contrast, contrast_se),
        loglik: fit.loglik,
    }
}

/// Renders the replication report as human-readable text.
pub fn bus_report_text(r: &BusReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Cutoff selection on replacement histories (N = {})", r.selection.n);
    let _ = writeln!(out, "  n, log-odds, se:");
    for (n, nu, se) in &r.selection.nu_table {
        match (nu, se) {
            (Some(nu), Some(se)) => {
                let _ = writeln!(out, "    {n}: {nu:.4} ({se:.4})");
            }
            _ => {
                let _ = writeln!(out, "    {n}: undefined (zero pair count)");
            }
        }
    }
    let _ = writeln!(out, "  candidate, loglik, bic:");
    for c in &r.selection.candidates {
        let _ = writeln!(out, "    {}: {:.4}, {:.4}", c.dstar, c.loglik, c.bic);
    }
    let _ = writeln!(out, "  selected cutoff: {}", r.selection.selected);
    if let Some((b, se)) = r.cmle_marginal_cost {
        let _ = writeln!(out, "  conditional marginal cost at cutoff: {b:.4} ({se:.4})");
    }
    let _ = writeln!(out, "\nFull-solution grid (delta = {}):", r.delta);
    let _ = writeln!(out, "  shape, dstar, rc (se), marginal cost (se), loglik");
    for row in &r.mle_grid {
        let _ = writeln!(
            out,
            "  {}, {}, {:.4} ({:.4}), {:.4} ({:.4}), {:.4}",
            row.shape.label(),
            row.dstar,
            row.rc.0,
            row.rc.1,
            row.marginal_cost.0,
            row.marginal_cost.1,
            row.loglik
        );
    }
    let _ = writeln!(out, "\nBest cutoff per shape:");
    for row in &r.mle_best {
        let _ = writeln!(
            out,
            "  {}: dstar = {}, rc = {:.4}, marginal cost = {:.4}, loglik = {:.4}",
            row.shape.label(),
            row.dstar,
            row.rc.0,
            row.marginal_cost.0,
            row.loglik
        );
    }
    if let Some(h) = &r.hausman {
        let _ = writeln!(
            out,
            "\nSpecification test (conditional vs full-solution): statistic = {:.4}, p = {:.4}{}",
            h.statistic,
            h.p_value,
            if h.clamped { " (variance difference clamped)" } else { "" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn hausman_reproduces_known_values() {
        // Inputs and outputs cross-checked against an independent chi-squared
        // implementation.
        let h = hausman_test(1.7009, 1.0244_f64.powi(2), 0.4548, 0.0739_f64.powi(2));
        assert_abs_diff_eq!(h.statistic, 1.4873, epsilon = 5e-4);
        assert_abs_diff_eq!(h.p_value, 0.2226, epsilon = 5e-4);
        let h2 = hausman_test(1.7009, 1.0244_f64.powi(2), 0.3623, 0.0549_f64.powi(2));
        assert_abs_diff_eq!(h2.statistic, 1.7123, epsilon = 5e-4);
        assert_abs_diff_eq!(h2.p_value, 0.1907, epsilon = 5e-4);
        let h3 = hausman_test(1.7009, 1.0244_f64.powi(2), 0.3476, 0.0512_f64.powi(2));
        assert_abs_diff_eq!(h3.statistic, 1.7494, epsilon = 5e-4);
        assert_abs_diff_eq!(h3.p_value, 0.186, epsilon = 5e-4);
    }

    #[test]
    fn hausman_clamps_nonpositive_variance_difference() {
        let h = hausman_test(1.0, 0.1, 0.5, 0.2);
        assert!(h.clamped);
        assert_eq!(h.statistic, 0.0);
        assert_abs_diff_eq!(h.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn config_parses_flat_key_values() {
        let cfg = Config::parse("a = 1\n# comment\nb= 2.5 # trailing\n\nname = linear\n").unwrap();
        assert_eq!(cfg.get_or::<u32>("a", 0).unwrap(), 1);
        assert_abs_diff_eq!(cfg.get_or::<f64>("b", 0.0).unwrap(), 2.5);
        assert_eq!(cfg.get("name"), Some("linear"));
        assert_eq!(cfg.get_or::<u32>("missing", 7).unwrap(), 7);
        assert!(cfg.require::<u32>("missing").is_err());
        assert!(Config::parse("no equals sign").is_err());
    }

    #[test]
    fn bus_data_has_documented_composition() {
        let hs = load_bus_histories(false);
        assert_eq!(hs.len(), 59);
        assert_eq!(hs.iter().filter(|h| h.t() == 6).count(), 27);
        assert_eq!(hs.iter().filter(|h| h.t() == 10).count(), 32);
        assert!(hs.iter().all(|h| h.y0() == 0 && h.d1() == 0));
        let with_extras = load_bus_histories(true);
        assert_eq!(with_extras.len(), 104);
        assert_eq!(
            with_extras
                .iter()
                .filter(|h| h.choices().iter().all(|&y| y == 1))
                .count(),
            45
        );
    }

    #[test]
    fn bus_pair_counts_match_hand_tally() {
        // Pooled counts of single-replacement histories by replacement month,
        // restricted per stratum to months the pair construction can use.
        let hs = load_bus_histories(false);
        let counts = crate::cmle::pair_counts(&hs, 8);
        let expect = [
            (2u32, 0.0, 3.0),
            (3, 3.0, 11.0),
            (4, 11.0, 9.0),
            (5, 2.0, 7.0),
            (6, 7.0, 7.0),
            (7, 7.0, 5.0),
            (8, 5.0, 3.0),
        ];
        for (n, a, b) in expect {
            let e = counts.entries.iter().find(|e| e.n == n).unwrap();
            assert_eq!((e.count_a, e.count_b), (a, b), "at n = {n}");
        }
    }

    #[test]
    fn bus_selection_picks_three_with_documented_profile() {
        let hs = load_bus_histories(false);
        let sel = select_dstar_bic(&hs, 8, PairMode::FullHistory).unwrap();
        assert_eq!(sel.selected, 3);
        let at = |d: u32| {
            sel.candidates
                .iter()
                .find(|c| c.dstar == d)
                .unwrap()
                .loglik
        };
        assert_abs_diff_eq!(at(2), -53.372, epsilon = 1e-3);
        assert_abs_diff_eq!(at(3), -50.943, epsilon = 1e-3);
        assert_abs_diff_eq!(at(8), -48.951, epsilon = 1e-3);
        // The estimate at the selected cutoff is the log-odds of the pooled
        // pair counts (3, 11); positive on the marginal-cost scale.
        assert_abs_diff_eq!(
            -sel.beta_at_selected.unwrap(),
            (11f64 / 3.0).ln(),
            epsilon = 1e-12
        );
    }
}
