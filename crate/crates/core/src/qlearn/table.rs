use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::state::{DiscreteState, ScaleAction, BINS};
use crate::error::{Error, Result};

pub const QTABLE_HEADER: &str = "n_hat,phi_bin,tau_bin,window,delta,q_value,visits";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QEntry {
    pub value: f64,
    pub visits: u64,
}

/// Sparse state-action value table; absent pairs read as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTable {
    entries: BTreeMap<(DiscreteState, ScaleAction), QEntry>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: &DiscreteState, a: ScaleAction) -> f64 {
        self.entries.get(&(*s, a)).map_or(0.0, |e| e.value)
    }

    pub fn visits(&self, s: &DiscreteState, a: ScaleAction) -> u64 {
        self.entries.get(&(*s, a)).map_or(0, |e| e.visits)
    }

    pub fn entry(&self, s: &DiscreteState, a: ScaleAction) -> Option<&QEntry> {
        self.entries.get(&(*s, a))
    }

    pub(crate) fn entry_mut(&mut self, s: DiscreteState, a: ScaleAction) -> &mut QEntry {
        self.entries.entry((s, a)).or_default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(DiscreteState, ScaleAction), &QEntry)> {
        self.entries.iter()
    }

    /// One row per visited pair, ordered by key.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{QTABLE_HEADER}\n");
        for ((s, a), e) in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.n_hat, s.phi_bin, s.tau_bin, s.window, a.0, e.value, e.visits
            )
            .unwrap();
        }
        out
    }

    /// Parses [`QTable::to_csv`] output; `source` names the input in errors.
    pub fn from_csv(text: &str, source: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::QTableLoad {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == QTABLE_HEADER => {}
            Some((_, h)) => return Err(err(1, format!("unexpected header {h:?}"))),
            None => return Err(err(1, "empty file".into())),
        }
        let mut entries = BTreeMap::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 7 {
                return Err(err(line, format!("expected 7 fields, found {}", fields.len())));
            }
            let parse_err = |name: &str| err(line, format!("bad {name} {:?}", raw));
            let n_hat: u32 = fields[0].parse().map_err(|_| parse_err("n_hat"))?;
            let phi_bin: u8 = fields[1].parse().map_err(|_| parse_err("phi_bin"))?;
            let tau_bin: u8 = fields[2].parse().map_err(|_| parse_err("tau_bin"))?;
            let window: u32 = fields[3].parse().map_err(|_| parse_err("window"))?;
            let delta: i32 = fields[4].parse().map_err(|_| parse_err("delta"))?;
            let value: f64 = fields[5].parse().map_err(|_| parse_err("q_value"))?;
            let visits: u64 = fields[6].parse().map_err(|_| parse_err("visits"))?;
            if n_hat < 1 || phi_bin >= BINS || tau_bin >= BINS {
                return Err(err(line, "state out of range".into()));
            }
            if (n_hat as i64) + (delta as i64) < 1 {
                return Err(err(line, format!("delta {delta} invalid for n_hat {n_hat}")));
            }
            if !value.is_finite() {
                return Err(err(line, "non-finite q_value".into()));
            }
            let key = (
                DiscreteState {
                    n_hat,
                    phi_bin,
                    tau_bin,
                    window,
                },
                ScaleAction(delta),
            );
            if entries.insert(key, QEntry { value, visits }).is_some() {
                return Err(err(line, "duplicate state-action pair".into()));
            }
        }
        Ok(QTable { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: u32, p: u8, t: u8, w: u32) -> DiscreteState {
        DiscreteState {
            n_hat: n,
            phi_bin: p,
            tau_bin: t,
            window: w,
        }
    }

    #[test]
    fn missing_pairs_read_zero() {
        let q = QTable::new();
        assert_eq!(q.get(&s(1, 0, 0, 0), ScaleAction(3)), 0.0);
        assert_eq!(q.visits(&s(1, 0, 0, 0), ScaleAction(3)), 0);
    }

    #[test]
    fn load_errors_name_the_row() {
        let p = Path::new("q.csv");
        let text = format!("{QTABLE_HEADER}\n1,0,0,0,0,1.5,2\n1,0,0,0,x,1.5,2\n");
        match QTable::from_csv(&text, p) {
            Err(Error::QTableLoad { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(QTable::from_csv("nope\n", p), Err(Error::QTableLoad { line: 1, .. })));
        let bad_delta = format!("{QTABLE_HEADER}\n1,0,0,0,-1,1.5,2\n");
        assert!(matches!(QTable::from_csv(&bad_delta, p), Err(Error::QTableLoad { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in prop::collection::vec(
                (1u32..=7, 0u8..11, 0u8..11, 0u32..5, 0i32..7, -1e6f64..1e6, 0u64..1000),
                0..60,
            )
        ) {
            let mut q = QTable::new();
            for (n, p, t, w, d, v, visits) in rows {
                let e = q.entry_mut(s(n, p, t, w), ScaleAction(d - (n as i32 - 1)));
                e.value = v;
                e.visits = visits;
            }
            let back = QTable::from_csv(&q.to_csv(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}
