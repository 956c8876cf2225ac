//! Choice histories, the duration path, and per-history count statistics.
//!
//! A history records an individual's initial condition `(y0, d1)` and the
//! observed choice sequence `y1..yT` over `J+1` alternatives `{0, ..., J}`.
//! Alternative `0` is the baseline whose duration is pinned to zero: duration
//! counts consecutive periods spent in the currently occupied non-baseline
//! alternative and resets on every switch.
//!
//! The statistics bundle collects, for one history, the visit counts, the
//! transition (dyad) counts, the histograms of the occupied `(choice,
//! duration)` states, and the terminal-minus-initial indicator differences.
//! These are the building blocks of the sufficient statistics used by the
//! conditional likelihood.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{DdError, Result};

/// Default cap on `(J+1)^T` for full enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// An individual's choice history with its initial condition.
///
/// Immutable after construction; all statistics are computed eagerly and
/// cached so they can be reused across likelihood evaluations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceHistory {
    j: u8,
    y0: u8,
    d1: u32,
    choices: Vec<u8>,
    stats: StatisticsBundle,
}

/// All count statistics for one history.
///
/// Sums run over `t = 1..=T`. The `delta_*` fields are differences of
/// endpoint indicators: final period `T` (with the post-sample duration
/// `d_{T+1}`) minus the initial condition.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StatisticsBundle {
    /// Visit counts `T^(y) = sum_t 1{y_t = y}`, indexed by `y`.
    pub hits: Vec<u32>,
    /// Transition counts `D^(y_prev, y) = sum_t 1{y_{t-1} = y_prev, y_t = y}`,
    /// indexed `dyads[y_prev][y]`.
    pub dyads: Vec<Vec<u32>>,
    /// State histogram `H^(y)(d) = sum_t 1{y_{t-1} = y, d_t = d}`.
    pub state_hist: BTreeMap<(u8, u32), u32>,
    /// Extended histogram `X^(y)(d) = sum_t 1{y_{t-1} = y_t = y, d_t = d}`.
    pub ext_hist: BTreeMap<(u8, u32), u32>,
    /// `Delta^(y)(d) = 1{y_T = y, d_{T+1} = d} - 1{y0 = y, d1 = d}`.
    pub delta_state: BTreeMap<(u8, u32), i32>,
    /// `Delta^(y) = 1{y_T = y} - 1{y0 = y}`, indexed by `y`.
    pub delta_choice: Vec<i32>,
}

impl ChoiceHistory {
    /// Builds a history, validating the structural invariants.
    pub fn new(j: u8, y0: u8, d1: u32, choices: Vec<u8>) -> Result<Self> {
        if j < 1 {
            return Err(DdError::InvalidHistory(
                "need at least one non-baseline alternative (J >= 1)".into(),
            ));
        }
        if choices.is_empty() {
            return Err(DdError::InvalidHistory("empty choice sequence (T >= 1 required)".into()));
        }
        if y0 > j {
            return Err(DdError::InvalidHistory(format!(
                "initial choice {y0} out of range 0..={j}"
            )));
        }
        if let Some(&bad) = choices.iter().find(|&&y| y > j) {
            return Err(DdError::InvalidHistory(format!(
                "choice {bad} out of range 0..={j}"
            )));
        }
        if y0 == 0 && d1 != 0 {
            return Err(DdError::InvalidHistory(
                "y0 = 0 requires d1 = 0 (duration is pinned to zero at the baseline)".into(),
            ));
        }
        if y0 > 0 && d1 == 0 {
            return Err(DdError::InvalidHistory("y0 > 0 requires d1 >= 1".into()));
        }
        let mut h = Self {
            j,
            y0,
            d1,
            choices,
            stats: StatisticsBundle::default(),
        };
        h.stats = compute_statistics(&h);
        Ok(h)
    }

    /// Parses a compact binary history string such as `"110111"`.
    ///
    /// The initial condition is `(0, 0)` and `J = 1`; each character must be
    /// `'0'` or `'1'`.
    pub fn from_binary_str(s: &str) -> Result<Self> {
        let choices: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(DdError::InvalidHistory(format!(
                    "unexpected character {other:?} in binary history"
                ))),
            })
            .collect::<Result<_>>()?;
        Self::new(1, 0, 0, choices)
    }

    /// Number of non-baseline alternatives `J`.
    pub fn j(&self) -> u8 {
        self.j
    }

    /// Initial choice `y0`.
    pub fn y0(&self) -> u8 {
        self.y0
    }

    /// Initial duration `d1`.
    pub fn d1(&self) -> u32 {
        self.d1
    }

    /// The choice sequence `y1..yT`.
    pub fn choices(&self) -> &[u8] {
        &self.choices
    }

    /// Horizon `T`.
    pub fn t(&self) -> usize {
        self.choices.len()
    }

    /// Cached statistics.
    pub fn stats(&self) -> &StatisticsBundle {
        &self.stats
    }

    /// The deterministic duration path `d1..d_{T+1}` (length `T + 1`).
    ///
    /// Transition rule: `d_{t+1} = 1{y_t = y_{t-1}} * d_t + 1` when `y_t > 0`,
    /// and `d_{t+1} = 0` when `y_t = 0`.
    pub fn duration_path(&self) -> Vec<u32> {
        let mut path = Vec::with_capacity(self.t() + 1);
        let mut d = self.d1;
        let mut y_prev = self.y0;
        path.push(d);
        for &y in &self.choices {
            d = if y == 0 {
                0
            } else if y == y_prev {
                d + 1
            } else {
                1
            };
            path.push(d);
            y_prev = y;
        }
        path
    }

    /// The stratum key `(J, T, y0, d1)` within which sufficient statistics
    /// are comparable.
    pub fn stratum(&self) -> (u8, usize, u8, u32) {
        (self.j, self.t(), self.y0, self.d1)
    }
}

/// Computes every statistic in one `O(T)` pass.
pub fn compute_statistics(h: &ChoiceHistory) -> StatisticsBundle {
    let n = h.j as usize + 1;
    let mut stats = StatisticsBundle {
        hits: vec![0; n],
        dyads: vec![vec![0; n]; n],
        state_hist: BTreeMap::new(),
        ext_hist: BTreeMap::new(),
        delta_state: BTreeMap::new(),
        delta_choice: vec![0; n],
    };
    let durations = h.duration_path();
    let mut y_prev = h.y0;
    for (idx, &y) in h.choices.iter().enumerate() {
        let d = durations[idx];
        stats.hits[y as usize] += 1;
        stats.dyads[y_prev as usize][y as usize] += 1;
        *stats.state_hist.entry((y_prev, d)).or_insert(0) += 1;
        if y == y_prev {
            *stats.ext_hist.entry((y, d)).or_insert(0) += 1;
        }
        y_prev = y;
    }
    let y_last = *h.choices.last().expect("T >= 1");
    let d_end = *durations.last().expect("T+1 durations");
    *stats.delta_state.entry((y_last, d_end)).or_insert(0) += 1;
    *stats.delta_state.entry((h.y0, h.d1)).or_insert(0) -= 1;
    stats.delta_state.retain(|_, v| *v != 0);
    stats.delta_choice[y_last as usize] += 1;
    stats.delta_choice[h.y0 as usize] -= 1;
    stats
}

impl StatisticsBundle {
    /// `T^(y)` with out-of-range `y` treated as zero.
    pub fn hit(&self, y: u8) -> u32 {
        self.hits.get(y as usize).copied().unwrap_or(0)
    }

    /// `D^(y_prev, y)`.
    pub fn dyad(&self, y_prev: u8, y: u8) -> u32 {
        self.dyads
            .get(y_prev as usize)
            .and_then(|row| row.get(y as usize))
            .copied()
            .unwrap_or(0)
    }

    /// `H^(y)(d)`.
    pub fn state_count(&self, y: u8, d: u32) -> u32 {
        self.state_hist.get(&(y, d)).copied().unwrap_or(0)
    }

    /// `X^(y)(d)`.
    pub fn ext_count(&self, y: u8, d: u32) -> u32 {
        self.ext_hist.get(&(y, d)).copied().unwrap_or(0)
    }

    /// `Delta^(y)(d)`.
    pub fn delta_state_at(&self, y: u8, d: u32) -> i32 {
        self.delta_state.get(&(y, d)).copied().unwrap_or(0)
    }

    /// `Delta^(y)`.
    pub fn delta_choice_at(&self, y: u8) -> i32 {
        self.delta_choice.get(y as usize).copied().unwrap_or(0)
    }
}

/// Enumerates all `(J+1)^T` histories sharing one initial condition, in
/// lexicographic order of the choice sequence.
pub fn enumerate_histories(
    j: u8,
    t: usize,
    init: (u8, u32),
    cap: u128,
) -> Result<Vec<ChoiceHistory>> {
    let base = j as u128 + 1;
    let total = base
        .checked_pow(t as u32)
        .ok_or(DdError::EnumerationTooLarge { total: u128::MAX, cap })?;
    if total > cap {
        return Err(DdError::EnumerationTooLarge { total, cap });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut current = vec![0u8; t];
    loop {
        out.push(ChoiceHistory::new(j, init.0, init.1, current.clone())?);
        // Lexicographic increment with the most significant digit first.
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if current[pos] < j {
                current[pos] += 1;
                current[pos + 1..].fill(0);
                break;
            }
        }
    }
}

/// Reads a long-format panel from CSV with columns `id,t,y` and optional `d`.
///
/// Rows must be grouped by `id` and sorted by `t` within an id. A row with
/// `t = 0` carries the initial condition: its `y` is `y0` and its `d` (when
/// the column is present) is `d1`. Ids without a `t = 0` row default to the
/// initial condition `(0, 0)`. When `y0 > 0` and no `d` column exists, `d1`
/// defaults to 1. `J` is inferred as the largest `y` in the file.
pub fn read_panel_csv<R: Read>(reader: R) -> Result<Vec<ChoiceHistory>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, t_col, y_col) = match (col("id"), col("t"), col("y")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(DdError::Config(
                "panel CSV must have columns id,t,y (optional d)".into(),
            ))
        }
    };
    let d_col = col("d");

    struct Raw {
        id: String,
        rows: Vec<(i64, u8, Option<u32>)>,
    }
    let mut panels: Vec<Raw> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let id = record
            .get(id_col)
            .ok_or_else(|| DdError::Config("missing id field".into()))?
            .to_string();
        let t: i64 = parse_field(&record, t_col, "t")?;
        let y: u8 = parse_field(&record, y_col, "y")?;
        let d: Option<u32> = match d_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse().map_err(|_| {
                        DdError::Config(format!("cannot parse d value {raw:?}"))
                    })?)
                }
            }
            None => None,
        };
        match panels.last_mut() {
            Some(last) if last.id == id => last.rows.push((t, y, d)),
            _ => panels.push(Raw { id, rows: vec![(t, y, d)] }),
        }
    }

    let j = panels
        .iter()
        .flat_map(|p| p.rows.iter().map(|r| r.1))
        .max()
        .unwrap_or(1)
        .max(1);

    let mut out = Vec::with_capacity(panels.len());
    for p in panels {
        let mut rows = p.rows;
        rows.sort_by_key(|r| r.0);
        let (y0, d1, start) = if rows[0].0 == 0 {
            let y0 = rows[0].1;
            let d1 = rows
                .get(1)
                .and_then(|r| r.2)
                .or(rows[0].2)
                .unwrap_or(u32::from(y0 > 0));
            (y0, d1, 1)
        } else {
            (0u8, 0u32, 0)
        };
        let choices: Vec<u8> = rows[start..].iter().map(|r| r.1).collect();
        out.push(ChoiceHistory::new(j, y0, d1, choices).map_err(|e| {
            DdError::InvalidHistory(format!("id {}: {e}", p.id))
        })?);
    }
    Ok(out)
}

/// Writes a panel in the long CSV format accepted by [`read_panel_csv`].
pub fn write_panel_csv<W: Write>(writer: W, histories: &[ChoiceHistory]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "t", "y", "d"])?;
    for (i, h) in histories.iter().enumerate() {
        let durations = h.duration_path();
        wtr.write_record([
            i.to_string(),
            "0".to_string(),
            h.y0().to_string(),
            h.d1().to_string(),
        ])?;
        for (t, &y) in h.choices().iter().enumerate() {
            wtr.write_record([
                i.to_string(),
                (t + 1).to_string(),
                y.to_string(),
                durations[t].to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<T> {
    let raw = record
        .get(col)
        .ok_or_else(|| DdError::Config(format!("missing {name} field")))?;
    raw.parse()
        .map_err(|_| DdError::Config(format!("cannot parse {name} value {raw:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(y0: u8, d1: u32, s: &str) -> ChoiceHistory {
        let choices: Vec<u8> = s.bytes().map(|b| b - b'0').collect();
        ChoiceHistory::new(1, y0, d1, choices).unwrap()
    }

    #[test]
    fn duration_path_single_replacement() {
        // {0,0 | 1,1,1,0,1}: durations 0,1,2,3,0 then d_{T+1} = 1.
        let h = binary(0, 0, "11101");
        assert_eq!(h.duration_path(), vec![0, 1, 2, 3, 0, 1]);
    }

    #[test]
    fn duration_path_leading_zero() {
        // {0,0 | 0,1,1,1}: durations 0,0,1,2 then d_{T+1} = 3.
        let h = binary(0, 0, "0111");
        assert_eq!(h.duration_path(), vec![0, 0, 1, 2, 3]);
    }

    #[test]
    fn duration_pinned_at_baseline() {
        let h = binary(0, 0, "000");
        assert_eq!(h.duration_path(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn statistics_match_worked_example() {
        // {0,0 | 1,1,1,0,1}
        let h = binary(0, 0, "11101");
        let s = h.stats();
        assert_eq!(s.state_count(1, 1), 1);
        assert_eq!(s.state_count(1, 2), 1);
        assert_eq!(s.state_count(1, 3), 1);
        assert_eq!(s.ext_count(1, 1), 1);
        assert_eq!(s.ext_count(1, 2), 1);
        assert_eq!(s.dyad(1, 1), 2);
        assert_eq!(s.delta_state_at(1, 1), 1);
        assert_eq!(s.delta_choice_at(1), 1);
    }

    #[test]
    fn statistics_short_history() {
        // {0 | 0,1,1}
        let h = binary(0, 0, "011");
        let s = h.stats();
        assert_eq!(s.hit(1), 2);
        assert_eq!(s.delta_choice_at(1), 1);
        assert_eq!(s.dyad(1, 1), 1);
    }

    #[test]
    fn all_zero_history_has_empty_statistics() {
        let h = binary(0, 0, "00000");
        let s = h.stats();
        assert_eq!(s.hit(1), 0);
        assert_eq!(s.dyad(1, 1), 0);
        assert_eq!(s.delta_choice_at(1), 0);
        assert!(s.state_hist.keys().all(|&(y, _)| y == 0));
    }

    #[test]
    fn invariant_violations_rejected() {
        assert!(ChoiceHistory::new(1, 0, 1, vec![1]).is_err());
        assert!(ChoiceHistory::new(1, 1, 0, vec![1]).is_err());
        assert!(ChoiceHistory::new(1, 0, 0, vec![]).is_err());
        assert!(ChoiceHistory::new(1, 0, 0, vec![2]).is_err());
        assert!(ChoiceHistory::new(1, 2, 1, vec![1]).is_err());
    }

    #[test]
    fn enumeration_counts_and_cap() {
        let hs = enumerate_histories(1, 3, (0, 0), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(hs.len(), 8);
        let hs2 = enumerate_histories(2, 2, (0, 0), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(hs2.len(), 9);
        match enumerate_histories(3, 30, (0, 0), DEFAULT_ENUMERATION_CAP) {
            Err(DdError::EnumerationTooLarge { total, .. }) => {
                assert_eq!(total, 4u128.pow(30));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_finds_exchangeable_pair() {
        let hs = enumerate_histories(1, 3, (0, 0), DEFAULT_ENUMERATION_CAP).unwrap();
        let matching: Vec<String> = hs
            .iter()
            .filter(|h| h.stats().hit(1) == 2 && h.stats().delta_choice_at(1) == 1)
            .map(|h| h.choices().iter().map(|y| y.to_string()).collect())
            .collect();
        assert_eq!(matching, vec!["011".to_string(), "101".to_string()]);
    }

    #[test]
    fn csv_round_trip() {
        let hs = vec![binary(0, 0, "11011"), binary(1, 2, "10111")];
        let mut buf = Vec::new();
        write_panel_csv(&mut buf, &hs).unwrap();
        let back = read_panel_csv(buf.as_slice()).unwrap();
        assert_eq!(back, hs);
    }

    #[test]
    fn csv_defaults_initial_condition() {
        let data = "id,t,y\nb1,1,1\nb1,2,0\nb1,3,1\n";
        let hs = read_panel_csv(data.as_bytes()).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].y0(), 0);
        assert_eq!(hs[0].d1(), 0);
        assert_eq!(hs[0].choices(), &[1, 0, 1]);
    }
}
