//! Structural dynamic logit model for one unobserved type: payoff
//! specification, infinite-horizon fixed point, and choice probabilities.
//!
//! The per-period payoff of alternative `y` in state `(y_prev, d)` is
//! `alpha(y) + beta(y, y_prev, d)` where the state-dependent part is a
//! switching cost `beta_y(y, y_prev)` when `y != y_prev` and a duration
//! return `beta_d(y, d)` when `y == y_prev`. The duration return is flat
//! beyond a per-choice cutoff `d*_y`, which makes the state space finite and
//! the smoothed Bellman operator a contraction for any discount factor below
//! one.

use crate::error::{DdError, Result};
use crate::histories::ChoiceHistory;

/// Default sup-norm tolerance for value iteration.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for value iteration.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Functional form of the duration return in the binary renewal model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostShape {
    /// `m(d) = d`.
    Linear,
    /// `m(d) = sqrt(d)`.
    Sqrt,
    /// `m(d) = d^2`.
    Square,
}

impl CostShape {
    /// The duration transform `m(d)`, with `m(0) = 0`.
    pub fn m(self, d: u32) -> f64 {
        let d = f64::from(d);
        match self {
            CostShape::Linear => d,
            CostShape::Sqrt => d.sqrt(),
            CostShape::Square => d * d,
        }
    }

    /// Lowercase label used in reports and configs.
    pub fn label(self) -> &'static str {
        match self {
            CostShape::Linear => "linear",
            CostShape::Sqrt => "sqrt",
            CostShape::Square => "square",
        }
    }

    /// Parses a label produced by [`CostShape::label`].
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CostShape::Linear),
            "sqrt" => Ok(CostShape::Sqrt),
            "square" => Ok(CostShape::Square),
            other => Err(DdError::Config(format!("unknown cost shape '{other}'"))),
        }
    }
}

/// Binary renewal model: alternative 0 pays a lump renewal cost `-rc`, and
/// staying with alternative 1 accrues `coef * m(d)` per period of tenure `d`,
/// flat beyond `dstar`.
pub fn renewal_spec(rc: f64, coef: f64, dstar: u32, shape: CostShape, delta: f64) -> ModelSpec {
    let dstar = dstar.max(1);
    ModelSpec {
        j: 1,
        delta,
        alpha: vec![-rc, 0.0],
        beta_y: vec![vec![0.0; 2]; 2],
        beta_d: vec![
            vec![0.0; dstar as usize + 1],
            (0..=dstar).map(|d| coef * shape.m(d)).collect(),
        ],
        dstar: vec![dstar; 2],
        forward_looking: delta > 0.0,
        duration_on: true,
    }
}

/// Structural payoff parameters for one unobserved type.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Number of non-baseline alternatives `J` (choices are `0..=J`).
    pub j: u8,
    /// Discount factor in `[0, 1)`.
    pub delta: f64,
    /// Per-choice intercepts `alpha(y)`, length `J + 1`.
    pub alpha: Vec<f64>,
    /// Switching costs `beta_y[y][y_prev]`, `(J+1) x (J+1)`, zero diagonal.
    pub beta_y: Vec<Vec<f64>>,
    /// Duration returns `beta_d[y][d]` for `d = 0..=dstar[y]`; row `0` must be
    /// all zeros. Values beyond `dstar[y]` are clamped to `beta_d[y][dstar[y]]`.
    pub beta_d: Vec<Vec<f64>>,
    /// Per-choice cutoffs `d*_y` beyond which the duration return is flat.
    pub dstar: Vec<u32>,
    /// When false, continuation values are forced to zero (myopic agent).
    pub forward_looking: bool,
    /// When false, `beta_d` is ignored entirely.
    pub duration_on: bool,
}

impl ModelSpec {
    /// Validates the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.j as usize + 1;
        if self.j < 1 {
            return Err(DdError::VariantMismatch("J >= 1 required".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(DdError::VariantMismatch(format!(
                "discount factor {} outside [0, 1)",
                self.delta
            )));
        }
        if self.alpha.len() != n || self.beta_y.len() != n || self.beta_d.len() != n
            || self.dstar.len() != n
        {
            return Err(DdError::VariantMismatch(
                "parameter tables must all have J + 1 rows".into(),
            ));
        }
        for (y, row) in self.beta_y.iter().enumerate() {
            if row.len() != n {
                return Err(DdError::VariantMismatch("beta_y must be square".into()));
            }
            if row[y] != 0.0 {
                return Err(DdError::VariantMismatch(format!(
                    "beta_y({y},{y}) must be zero"
                )));
            }
        }
        if self.beta_d[0].iter().any(|&v| v != 0.0) {
            return Err(DdError::VariantMismatch("beta_d(0, d) must be zero".into()));
        }
        for (y, row) in self.beta_d.iter().enumerate() {
            if row.len() != self.dstar[y] as usize + 1 {
                return Err(DdError::VariantMismatch(format!(
                    "beta_d row {y} must have dstar + 1 = {} entries, found {}",
                    self.dstar[y] + 1,
                    row.len()
                )));
            }
        }
        let finite = self.alpha.iter().all(|v| v.is_finite())
            && self.beta_y.iter().flatten().all(|v| v.is_finite())
            && self.beta_d.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(DdError::VariantMismatch("non-finite payoff entry".into()));
        }
        Ok(())
    }

    /// A binary no-frills spec with everything zero, useful as a base point.
    pub fn zero(j: u8, delta: f64) -> Self {
        let n = j as usize + 1;
        Self {
            j,
            delta,
            alpha: vec![0.0; n],
            beta_y: vec![vec![0.0; n]; n],
            beta_d: vec![vec![0.0; 1]; n],
            dstar: vec![0; n],
            forward_looking: delta > 0.0,
            duration_on: false,
        }
    }

    /// `beta_d(y, d)` with the flat-beyond-`d*_y` clamp applied.
    pub fn beta_d_at(&self, y: u8, d: u32) -> f64 {
        if !self.duration_on {
            return 0.0;
        }
        let row = &self.beta_d[y as usize];
        let idx = d.min(self.dstar[y as usize]) as usize;
        row[idx]
    }

    /// State-dependent payoff component `beta(y | y_prev, d)`.
    pub fn beta(&self, y: u8, y_prev: u8, d: u32) -> f64 {
        if y == y_prev {
            self.beta_d_at(y, d)
        } else {
            self.beta_y[y as usize][y_prev as usize]
        }
    }

    /// Next-period duration `d'(y | y_prev, d)`.
    pub fn next_duration(&self, y: u8, y_prev: u8, d: u32) -> u32 {
        if y == 0 {
            0
        } else if y == y_prev {
            d + 1
        } else {
            1
        }
    }

    /// Effective discount factor (zero for a myopic agent).
    pub fn effective_delta(&self) -> f64 {
        if self.forward_looking {
            self.delta
        } else {
            0.0
        }
    }

    /// Largest duration the solver needs to represent.
    pub fn d_max(&self) -> u32 {
        self.dstar.iter().copied().max().unwrap_or(0).max(1)
    }
}

/// The fixed point of the smoothed Bellman operator for one [`ModelSpec`].
///
/// The integrated value `V(y_prev, d)` is stored on the grid
/// `y_prev = 0..=J`, `d = 0..=d_max`; durations beyond the grid are clamped,
/// which is exact because both the payoff and the value are flat there.
#[derive(Clone, Debug)]
pub struct SolvedModel {
    spec: ModelSpec,
    d_max: u32,
    /// `value[y_prev][d]` = integrated value of entering state `(y_prev, d)`.
    value: Vec<Vec<f64>>,
    /// `sigma[y_prev][d]` = minus the log-sum-exp denominator at the state.
    sigma: Vec<Vec<f64>>,
    residual: f64,
    iterations: usize,
}

/// Numerically stable log-sum-exp.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Solves the infinite-horizon fixed point by value iteration.
pub fn solve_bellman(spec: &ModelSpec, tol: f64, max_iter: usize) -> Result<SolvedModel> {
    spec.validate()?;
    let n = spec.j as usize + 1;
    let d_max = spec.d_max();
    let delta = spec.effective_delta();
    let mut value = vec![vec![0.0; d_max as usize + 1]; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut weights = vec![0.0; n];
    while iterations < max_iter {
        let mut next = vec![vec![0.0; d_max as usize + 1]; n];
        let mut sup = 0.0f64;
        for y_prev in 0..n {
            for d in 0..=d_max as usize {
                for y in 0..n {
                    let dn = spec.next_duration(y as u8, y_prev as u8, d as u32).min(d_max);
                    weights[y] = spec.alpha[y]
                        + spec.beta(y as u8, y_prev as u8, d as u32)
                        + delta * value[y][dn as usize];
                }
                let v = log_sum_exp(&weights);
                sup = sup.max((v - value[y_prev][d]).abs());
                next[y_prev][d] = v;
            }
        }
        value = next;
        residual = sup;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(DdError::Convergence { residual, iterations });
    }
    let mut sigma = vec![vec![0.0; d_max as usize + 1]; n];
    for y_prev in 0..n {
        for d in 0..=d_max as usize {
            for y in 0..n {
                let dn = spec.next_duration(y as u8, y_prev as u8, d as u32).min(d_max);
                weights[y] = spec.alpha[y]
                    + spec.beta(y as u8, y_prev as u8, d as u32)
                    + delta * value[y][dn as usize];
            }
            sigma[y_prev][d] = -log_sum_exp(&weights);
        }
    }
    Ok(SolvedModel {
        spec: spec.clone(),
        d_max,
        value,
        sigma,
        residual,
        iterations,
    })
}

impl SolvedModel {
    /// The specification that was solved.
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Final sup-norm residual of the fixed point.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Iterations used by value iteration.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Integrated value `V(y_prev, d)` (durations clamped to the grid).
    pub fn value(&self, y_prev: u8, d: u32) -> f64 {
        self.value[y_prev as usize][d.min(self.d_max) as usize]
    }

    /// Continuation value `v(y, d) = delta * V(y, d)` of arriving in `(y, d)`.
    pub fn continuation(&self, y: u8, d: u32) -> f64 {
        self.spec.effective_delta() * self.value(y, d)
    }

    /// Log-denominator `sigma(y_prev, d)` of the choice probabilities.
    pub fn sigma(&self, y_prev: u8, d: u32) -> f64 {
        self.sigma[y_prev as usize][d.min(self.d_max) as usize]
    }

    /// Log of the conditional choice probability `P(y | y_prev, d)`.
    pub fn log_ccp(&self, y: u8, state: (u8, u32)) -> f64 {
        let (y_prev, d) = state;
        let d = d.min(self.d_max);
        let dn = self.spec.next_duration(y, y_prev, d).min(self.d_max);
        let w = self.spec.alpha[y as usize]
            + self.spec.beta(y, y_prev, d)
            + self.spec.effective_delta() * self.value[y as usize][dn as usize];
        w + self.sigma(y_prev, d)
    }

    /// Conditional choice probability `P(y | y_prev, d)`.
    pub fn ccp(&self, y: u8, state: (u8, u32)) -> f64 {
        self.log_ccp(y, state).exp()
    }

    /// Log-probability of a full history: the sum of per-period log CCPs
    /// along its duration path.
    pub fn history_log_prob(&self, h: &ChoiceHistory) -> f64 {
        debug_assert_eq!(h.j(), self.spec.j, "history/model dimension mismatch");
        let durations = h.duration_path();
        let mut y_prev = h.y0();
        let mut total = 0.0;
        for (idx, &y) in h.choices().iter().enumerate() {
            total += self.log_ccp(y, (y_prev, durations[idx]));
            y_prev = y;
        }
        total
    }
}
