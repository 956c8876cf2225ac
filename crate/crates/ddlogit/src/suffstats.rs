//! Sufficient statistics `U`, identifying statistics `S`, equivalence-class
//! grouping, and the probe pairs used for cutoff estimation.
//!
//! For each model variant, the log-probability of a history decomposes as
//! `U' g_theta + S' beta*`: the vector `U` absorbs everything that depends on
//! the unobserved type, and the within-class variation of `S` identifies the
//! structural parameters. This module builds the canonical `U`/`S` vectors,
//! partitions histories into `U`-equivalence classes within an initial
//! condition, and provides the duration-cutoff probe pairs.

use std::collections::BTreeMap;

use crate::error::{DdError, Result};
use crate::histories::ChoiceHistory;
use crate::model::SolvedModel;

/// The identified model cases governing `U`/`S` construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariantKind {
    /// Myopic, no duration dependence.
    MyopicNoDur,
    /// Forward-looking, no duration dependence.
    ForwardNoDur,
    /// Myopic with duration dependence.
    MyopicDur,
    /// Forward-looking with duration dependence, no flat-return restriction.
    /// Duration-return parameters are not identified in this case.
    ForwardDurUnrestricted,
    /// Forward-looking with duration dependence and flat returns beyond the
    /// per-choice cutoffs `d*_y`.
    ForwardDurAssumption2,
}

/// A model variant: the case plus the dimensions it needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    /// Which identified case applies.
    pub kind: VariantKind,
    /// Number of non-baseline alternatives.
    pub j: u8,
    /// Per-choice duration cutoffs, indexed by `y` (entry 0 unused);
    /// required exactly when `kind` is `ForwardDurAssumption2`.
    pub dstar: Option<Vec<u32>>,
}

impl Variant {
    /// Convenience constructor; validates the `dstar` requirement.
    pub fn new(kind: VariantKind, j: u8, dstar: Option<Vec<u32>>) -> Result<Self> {
        let needs = kind == VariantKind::ForwardDurAssumption2;
        match (&dstar, needs) {
            (None, true) => {
                return Err(DdError::VariantMismatch(
                    "this variant requires per-choice duration cutoffs".into(),
                ))
            }
            (Some(_), false) => {
                return Err(DdError::VariantMismatch(
                    "duration cutoffs supplied to a variant that does not use them".into(),
                ))
            }
            (Some(ds), true) => {
                if ds.len() != j as usize + 1 {
                    return Err(DdError::VariantMismatch(
                        "dstar must have J + 1 entries (entry 0 unused)".into(),
                    ));
                }
                if ds[1..].iter().any(|&d| d < 1) {
                    return Err(DdError::VariantMismatch("dstar entries must be >= 1".into()));
                }
            }
            (None, false) => {}
        }
        Ok(Self { kind, j, dstar })
    }

    fn check_history(&self, h: &ChoiceHistory) -> Result<()> {
        if h.j() != self.j {
            return Err(DdError::VariantMismatch(format!(
                "history has J = {} but variant expects J = {}",
                h.j(),
                self.j
            )));
        }
        Ok(())
    }
}

/// One named component of a `U` or `S` vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatKey {
    /// Visit count `T^(y)`.
    Hit(u8),
    /// Endpoint difference `Delta^(y)`.
    DeltaChoice(u8),
    /// State histogram `H^(y)(d)`.
    HDur(u8, u32),
    /// Endpoint state difference `Delta^(y)(d)`.
    DeltaDur(u8, u32),
    /// Tail aggregate `sum_{d >= d*_y} H^(y)(d)`.
    TailH(u8),
    /// Tail aggregate `sum_{d >= d*_y} Delta^(y)(d)`.
    TailDelta(u8),
    /// Transition count `D^(y_prev, y)`.
    Dyad(u8, u8),
    /// Negated cutoff difference `-Delta^(y)(d*_y)`; stored negated so the
    /// associated coefficient is `beta_d(y, d*_y) - beta_d(y, d*_y - 1)`.
    NegDeltaStar(u8),
}

/// An ordered integer vector with a canonical, named component layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyedVector {
    /// Component names in canonical order.
    pub keys: Vec<StatKey>,
    /// Component values, aligned with `keys`.
    pub values: Vec<i64>,
}

impl KeyedVector {
    /// Vector length.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the vector has no components.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of a named component, zero when absent.
    pub fn get(&self, key: StatKey) -> i64 {
        self.keys
            .iter()
            .position(|&k| k == key)
            .map_or(0, |i| self.values[i])
    }
}

/// Largest duration any history in the stratum of `h` can reach.
fn d_hi(h: &ChoiceHistory) -> u32 {
    h.d1() + h.t() as u32
}

/// Builds the canonical sufficient-statistic vector `U` for a history.
///
/// Canonical component order: visit counts by `y`, endpoint differences by
/// `y`, histograms by `(y, d)` lexicographic, tail aggregates last.
pub fn u_vector(v: &Variant, h: &ChoiceHistory) -> Result<KeyedVector> {
    v.check_history(h)?;
    let s = h.stats();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    let mut push = |k: StatKey, val: i64| {
        keys.push(k);
        values.push(val);
    };
    let top = d_hi(h);
    match v.kind {
        VariantKind::MyopicNoDur | VariantKind::ForwardNoDur => {
            for y in 1..=v.j {
                push(StatKey::Hit(y), i64::from(s.hit(y)));
            }
            for y in 1..=v.j {
                push(StatKey::DeltaChoice(y), i64::from(s.delta_choice_at(y)));
            }
        }
        VariantKind::MyopicDur => {
            for y in 1..=v.j {
                push(StatKey::DeltaChoice(y), i64::from(s.delta_choice_at(y)));
            }
            for y in 1..=v.j {
                for d in 1..=top {
                    push(StatKey::HDur(y, d), i64::from(s.state_count(y, d)));
                }
            }
        }
        VariantKind::ForwardDurUnrestricted => {
            for y in 1..=v.j {
                for d in 1..=top {
                    push(StatKey::HDur(y, d), i64::from(s.state_count(y, d)));
                }
            }
            for y in 1..=v.j {
                for d in 1..=top {
                    push(StatKey::DeltaDur(y, d), i64::from(s.delta_state_at(y, d)));
                }
            }
        }
        VariantKind::ForwardDurAssumption2 => {
            let dstar = v.dstar.as_ref().expect("validated at construction");
            for y in 1..=v.j {
                for d in 1..dstar[y as usize] {
                    push(StatKey::HDur(y, d), i64::from(s.state_count(y, d)));
                }
            }
            for y in 1..=v.j {
                for d in 1..dstar[y as usize] {
                    push(StatKey::DeltaDur(y, d), i64::from(s.delta_state_at(y, d)));
                }
            }
            for y in 1..=v.j {
                let tail: i64 = (dstar[y as usize]..=top)
                    .map(|d| i64::from(s.state_count(y, d)))
                    .sum();
                push(StatKey::TailH(y), tail);
            }
            for y in 1..=v.j {
                let tail: i64 = (dstar[y as usize]..=top)
                    .map(|d| i64::from(s.delta_state_at(y, d)))
                    .sum();
                push(StatKey::TailDelta(y), tail);
            }
        }
    }
    Ok(KeyedVector { keys, values })
}

/// Builds the identifying-statistic vector `S` for a history.
///
/// The coefficient attached to each component is the identified structural
/// parameter: switching-cost contrasts for `Dyad` components, duration
/// contrasts `gamma(y, d - 1)` for `DeltaDur(y, d)` components, and the
/// cutoff difference `beta_d(y, d*_y) - beta_d(y, d*_y - 1)` for
/// `NegDeltaStar` components.
pub fn s_vector(v: &Variant, h: &ChoiceHistory) -> Result<KeyedVector> {
    v.check_history(h)?;
    let s = h.stats();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    let mut push = |k: StatKey, val: i64| {
        keys.push(k);
        values.push(val);
    };
    let top = d_hi(h);
    match v.kind {
        VariantKind::MyopicNoDur | VariantKind::ForwardNoDur => {
            for y_prev in 1..=v.j {
                for y in 1..=v.j {
                    push(StatKey::Dyad(y_prev, y), i64::from(s.dyad(y_prev, y)));
                }
            }
        }
        VariantKind::MyopicDur => {
            for y_prev in 1..=v.j {
                for y in 1..=v.j {
                    if y != y_prev {
                        push(StatKey::Dyad(y_prev, y), i64::from(s.dyad(y_prev, y)));
                    }
                }
            }
            for y in 1..=v.j {
                for d in 2..=top {
                    push(StatKey::DeltaDur(y, d), i64::from(s.delta_state_at(y, d)));
                }
            }
        }
        VariantKind::ForwardDurUnrestricted => {
            if v.j == 1 {
                // Binary case: no identified parameters; S lies inside U.
                for d in 2..=top {
                    push(StatKey::DeltaDur(1, d), i64::from(s.delta_state_at(1, d)));
                }
            } else {
                for y_prev in 1..=v.j {
                    for y in 1..=v.j {
                        if y != y_prev {
                            push(StatKey::Dyad(y_prev, y), i64::from(s.dyad(y_prev, y)));
                        }
                    }
                }
            }
        }
        VariantKind::ForwardDurAssumption2 => {
            let dstar = v.dstar.as_ref().expect("validated at construction");
            if v.j > 1 {
                for y_prev in 1..=v.j {
                    for y in 1..=v.j {
                        if y != y_prev {
                            push(StatKey::Dyad(y_prev, y), i64::from(s.dyad(y_prev, y)));
                        }
                    }
                }
            }
            for y in 1..=v.j {
                let d = dstar[y as usize];
                push(StatKey::NegDeltaStar(y), -i64::from(s.delta_state_at(y, d)));
            }
        }
    }
    Ok(KeyedVector { keys, values })
}

/// A `U`-equivalence class: histories (by index into the grouped slice) with
/// identical sufficient statistics, each carrying its identifying vector.
#[derive(Clone, Debug)]
pub struct UClass {
    /// The shared sufficient-statistic vector.
    pub u: KeyedVector,
    /// Indices into the grouped history slice.
    pub members: Vec<usize>,
    /// Identifying vectors aligned with `members`.
    pub s: Vec<KeyedVector>,
}

impl UClass {
    /// True when every member has the same identifying vector, so the class
    /// cannot move the conditional likelihood.
    pub fn is_degenerate(&self) -> bool {
        self.members.len() < 2 || self.s.windows(2).all(|w| w[0].values == w[1].values)
    }
}

/// Partitions histories (sharing one initial condition) into `U` classes.
pub fn group_histories(v: &Variant, hs: &[ChoiceHistory]) -> Result<Vec<UClass>> {
    if hs.is_empty() {
        return Ok(Vec::new());
    }
    let stratum = hs[0].stratum();
    for h in hs {
        if h.stratum() != stratum {
            return Err(DdError::MixedGroup(format!(
                "expected (J,T,y0,d1) = {:?}, found {:?}",
                stratum,
                h.stratum()
            )));
        }
    }
    let mut classes: BTreeMap<Vec<i64>, UClass> = BTreeMap::new();
    for (idx, h) in hs.iter().enumerate() {
        let u = u_vector(v, h)?;
        let s = s_vector(v, h)?;
        let class = classes
            .entry(u.values.clone())
            .or_insert_with(|| UClass { u, members: Vec::new(), s: Vec::new() });
        class.members.push(idx);
        class.s.push(s);
    }
    Ok(classes.into_values().collect())
}

/// Maximum deviation between the two types' within-class conditional
/// probabilities: zero (to numerical precision) certifies sufficiency of `U`.
pub fn check_sufficiency(
    class: &UClass,
    hs: &[ChoiceHistory],
    theta1: &SolvedModel,
    theta2: &SolvedModel,
) -> f64 {
    let cond = |solved: &SolvedModel| -> Vec<f64> {
        let lps: Vec<f64> = class
            .members
            .iter()
            .map(|&i| solved.history_log_prob(&hs[i]))
            .collect();
        let lse = crate::model::log_sum_exp(&lps);
        lps.iter().map(|lp| (lp - lse).exp()).collect()
    };
    let p1 = cond(theta1);
    let p2 = cond(theta2);
    p1.iter()
        .zip(&p2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Binary history with a single switch to the baseline at period `m`
/// (1-based) and ones elsewhere; initial condition `(0, 0)`.
pub fn single_replacement(m: usize, t: usize) -> Result<ChoiceHistory> {
    if m < 1 || m > t {
        return Err(DdError::InvalidHistory(format!(
            "replacement period {m} outside 1..={t}"
        )));
    }
    let mut choices = vec![1u8; t];
    choices[m - 1] = 0;
    ChoiceHistory::new(1, 0, 0, choices)
}

/// The symmetric probe pair at duration `n`: histories of length `2n + 1`
/// with the baseline spell at period `n` (first member) or `n + 1` (second).
///
/// Requires `2n + 1 <= t`.
pub fn dstar_probe_pairs(n: u32, t: usize) -> Result<(ChoiceHistory, ChoiceHistory)> {
    if 2 * n as usize + 1 > t {
        return Err(DdError::HorizonTooShort {
            n,
            t,
            requirement: "2n+1 <= T".into(),
        });
    }
    let len = 2 * n as usize + 1;
    Ok((
        single_replacement(n as usize, len)?,
        single_replacement(n as usize + 1, len)?,
    ))
}

/// The generalized probe pair at duration `n`: full-horizon histories with
/// the baseline spell at period `n` (first member) or `n + 1` (second).
///
/// Requires `2 <= n <= T - 2`.
pub fn generalized_probe_pairs(n: u32, t: usize) -> Result<(ChoiceHistory, ChoiceHistory)> {
    if n < 2 || n as usize + 2 > t {
        return Err(DdError::HorizonTooShort {
            n,
            t,
            requirement: "2 <= n <= T-2".into(),
        });
    }
    Ok((
        single_replacement(n as usize, t)?,
        single_replacement(n as usize + 1, t)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::{enumerate_histories, DEFAULT_ENUMERATION_CAP};

    fn binary(s: &str) -> ChoiceHistory {
        ChoiceHistory::from_binary_str(s).unwrap()
    }

    #[test]
    fn myopic_no_dur_u_and_s() {
        let v = Variant::new(VariantKind::MyopicNoDur, 1, None).unwrap();
        let a = binary("011");
        let b = binary("101");
        let ua = u_vector(&v, &a).unwrap();
        let ub = u_vector(&v, &b).unwrap();
        assert_eq!(ua.values, vec![2, 1]);
        assert_eq!(ua.values, ub.values);
        assert_eq!(s_vector(&v, &a).unwrap().values, vec![1]);
        assert_eq!(s_vector(&v, &b).unwrap().values, vec![0]);
    }

    #[test]
    fn all_zero_history_has_zero_u() {
        let v = Variant::new(VariantKind::MyopicDur, 1, None).unwrap();
        let h = binary("0000");
        assert!(u_vector(&v, &h).unwrap().values.iter().all(|&x| x == 0));
    }

    #[test]
    fn assumption2_pair_shares_u() {
        // Symmetric pair at the cutoff (d* = 2, T = 5).
        let v = Variant::new(VariantKind::ForwardDurAssumption2, 1, Some(vec![0, 2])).unwrap();
        let (a, b) = dstar_probe_pairs(2, 5).unwrap();
        assert_eq!(a.choices(), &[1, 0, 1, 1, 1]);
        assert_eq!(b.choices(), &[1, 1, 0, 1, 1]);
        let ua = u_vector(&v, &a).unwrap();
        let ub = u_vector(&v, &b).unwrap();
        assert_eq!(ua.values, ub.values);
        let sa = s_vector(&v, &a).unwrap();
        let sb = s_vector(&v, &b).unwrap();
        assert_eq!(sa.values, vec![0]);
        assert_eq!(sb.values, vec![-1]);
    }

    #[test]
    fn probe_pair_horizon_check() {
        assert!(dstar_probe_pairs(3, 5).is_err());
        assert!(dstar_probe_pairs(2, 5).is_ok());
        assert!(generalized_probe_pairs(1, 10).is_err());
        assert!(generalized_probe_pairs(8, 10).is_ok());
        assert!(generalized_probe_pairs(9, 10).is_err());
    }

    #[test]
    fn grouping_partitions_enumeration() {
        let v = Variant::new(VariantKind::MyopicNoDur, 1, None).unwrap();
        let hs = enumerate_histories(1, 3, (0, 0), DEFAULT_ENUMERATION_CAP).unwrap();
        let classes = group_histories(&v, &hs).unwrap();
        assert_eq!(classes.iter().map(|c| c.members.len()).sum::<usize>(), 8);
        assert_eq!(classes.len(), 6);
        let informative: Vec<&UClass> =
            classes.iter().filter(|c| !c.is_degenerate()).collect();
        assert_eq!(informative.len(), 1);
        let members: Vec<&[u8]> = informative[0]
            .members
            .iter()
            .map(|&i| hs[i].choices())
            .collect();
        assert_eq!(members, vec![&[0, 1, 1][..], &[1, 0, 1][..]]);
    }

    #[test]
    fn grouping_rejects_mixed_strata() {
        let v = Variant::new(VariantKind::MyopicNoDur, 1, None).unwrap();
        let hs = vec![binary("011"), binary("0110")];
        assert!(matches!(group_histories(&v, &hs), Err(DdError::MixedGroup(_))));
    }

    #[test]
    fn variant_requires_dstar_consistency() {
        assert!(Variant::new(VariantKind::ForwardDurAssumption2, 1, None).is_err());
        assert!(Variant::new(VariantKind::MyopicDur, 1, Some(vec![0, 2])).is_err());
        assert!(Variant::new(VariantKind::ForwardDurAssumption2, 1, Some(vec![0, 2])).is_ok());
    }
}
