//! Instances, vote vectors, trajectories, and the quota predicates every
//! other module is tested against.
//!
//! An instance is a finite sequence of vote vectors `v^t` with entries in
//! `[0, 1)` and integral row sums `H^t`. A trajectory records, on top of the
//! votes, the per-step allocation sets chosen by some method, and exposes the
//! surplus, global-quota, and deviation predicates.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// One election step: entries in `[0, 1)` summing exactly to the house size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteVector {
    entries: Vec<Rational>,
    house: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VoteVectorError {
    #[error("entry {party} = {value} outside [0, 1)")]
    EntryOutOfRange { party: usize, value: Rational },
    #[error("row sum {sum} is not a non-negative integer")]
    NonIntegralSum { sum: Rational },
}

impl VoteVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self, VoteVectorError> {
        for (party, value) in entries.iter().enumerate() {
            if value.is_negative() || *value >= Rational::one() {
                return Err(VoteVectorError::EntryOutOfRange {
                    party,
                    value: value.clone(),
                });
            }
        }
        let sum: Rational = entries.iter().sum();
        if !sum.is_integer() || sum.is_negative() {
            return Err(VoteVectorError::NonIntegralSum { sum });
        }
        let house = u64::try_from(sum.floor_int()).expect("house fits in u64");
        Ok(VoteVector { entries, house })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Result<Self, VoteVectorError> {
        Self::new(pairs.iter().map(|&(n, d)| Rational::new(n, d)).collect())
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &Rational {
        &self.entries[i]
    }

    pub fn house(&self) -> u64 {
        self.house
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parties with strictly positive votes this step.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_positive())
            .map(|(i, _)| i)
    }
}

/// A finite vote sequence, stored raw so that invalid data can be loaded and
/// then diagnosed by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub votes: Vec<Vec<Rational>>,
}

/// A single invariant violation, with step (1-based) and party coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EntryOutOfRange {
        step: usize,
        party: usize,
        value: Rational,
    },
    NonIntegralRowSum {
        step: usize,
        sum: Rational,
    },
    LengthMismatch {
        step: usize,
        len: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryOutOfRange { step, party, value } => {
                write!(
                    f,
                    "step {step}: entry for party {party} = {value} outside [0, 1)"
                )
            }
            Violation::NonIntegralRowSum { step, sum } => {
                write!(
                    f,
                    "step {step}: row sum {sum} is not a non-negative integer"
                )
            }
            Violation::LengthMismatch {
                step,
                len,
                expected,
            } => {
                write!(f, "step {step}: row has {len} entries, expected {expected}")
            }
        }
    }
}

impl Instance {
    pub fn new(n: usize, votes: Vec<Vec<Rational>>) -> Self {
        Instance { n, votes }
    }

    /// Build an instance by repeating one vote vector.
    pub fn repeated(row: Vec<Rational>, steps: usize) -> Self {
        Instance {
            n: row.len(),
            votes: vec![row; steps],
        }
    }

    pub fn horizon(&self) -> usize {
        self.votes.len()
    }

    /// Returns every invariant violation; the instance is valid iff the list
    /// is empty.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (idx, row) in self.votes.iter().enumerate() {
            let step = idx + 1;
            if row.len() != self.n {
                out.push(Violation::LengthMismatch {
                    step,
                    len: row.len(),
                    expected: self.n,
                });
                continue;
            }
            let mut row_ok = true;
            for (party, value) in row.iter().enumerate() {
                if value.is_negative() || *value >= Rational::one() {
                    out.push(Violation::EntryOutOfRange {
                        step,
                        party,
                        value: value.clone(),
                    });
                    row_ok = false;
                }
            }
            if row_ok {
                let sum: Rational = row.iter().sum();
                if !sum.is_integer() || sum.is_negative() {
                    out.push(Violation::NonIntegralRowSum { step, sum });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// The validated vote vector for step `t` (1-based).
    pub fn vote_vector(&self, t: usize) -> Result<VoteVector, VoteVectorError> {
        VoteVector::new(self.votes[t - 1].clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Outcome of the global-quota check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotaStatus {
    Satisfied,
    /// First prefix `t` (1-based) and party `i` with
    /// `A^t_i not in {floor(V^t_i), ceil(V^t_i)}`.
    Violated {
        step: usize,
        party: usize,
    },
}

impl QuotaStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, QuotaStatus::Satisfied)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("vote vector: {0}")]
    Votes(#[from] VoteVectorError),
    #[error("step {step}: vote vector has {len} entries, trajectory has {expected} parties")]
    LengthMismatch {
        step: usize,
        len: usize,
        expected: usize,
    },
    #[error("step {step}: chose {chosen} parties, house is {house}")]
    WrongHouse {
        step: usize,
        chosen: usize,
        house: u64,
    },
    #[error("step {step}: seat assigned to party {party} with zero votes")]
    SeatWithoutVotes { step: usize, party: usize },
    #[error("step {step}: chosen party {party} out of range")]
    PartyOutOfRange { step: usize, party: usize },
}

/// Votes and allocations accumulated over a prefix of an instance.
///
/// The per-step data is kept so that global quota and deviation can be
/// evaluated at every prefix, not just the final state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryState {
    n: usize,
    votes: Vec<VoteVector>,
    allocations: Vec<BTreeSet<usize>>,
    cum_votes: Vec<Rational>,
    cum_seats: Vec<u64>,
}

impl TrajectoryState {
    pub fn new(n: usize) -> Self {
        TrajectoryState {
            n,
            votes: Vec::new(),
            allocations: Vec::new(),
            cum_votes: vec![Rational::zero(); n],
            cum_seats: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of recorded steps.
    pub fn t(&self) -> usize {
        self.votes.len()
    }

    pub fn cumulative_votes(&self) -> &[Rational] {
        &self.cum_votes
    }

    pub fn cumulative_seats(&self) -> &[u64] {
        &self.cum_seats
    }

    pub fn step(&self, t: usize) -> (&VoteVector, &BTreeSet<usize>) {
        (&self.votes[t - 1], &self.allocations[t - 1])
    }

    pub fn steps(&self) -> impl Iterator<Item = (&VoteVector, &BTreeSet<usize>)> {
        self.votes.iter().zip(self.allocations.iter())
    }

    /// Record one step, enforcing the house size and local feasibility.
    pub fn push(&mut self, votes: VoteVector, chosen: BTreeSet<usize>) -> Result<(), StepError> {
        let step = self.t() + 1;
        if votes.len() != self.n {
            return Err(StepError::LengthMismatch {
                step,
                len: votes.len(),
                expected: self.n,
            });
        }
        if chosen.len() as u64 != votes.house() {
            return Err(StepError::WrongHouse {
                step,
                chosen: chosen.len(),
                house: votes.house(),
            });
        }
        for &i in &chosen {
            if i >= self.n {
                return Err(StepError::PartyOutOfRange { step, party: i });
            }
            if !votes.entry(i).is_positive() {
                return Err(StepError::SeatWithoutVotes { step, party: i });
            }
        }
        for i in 0..self.n {
            self.cum_votes[i] += votes.entry(i);
            if chosen.contains(&i) {
                self.cum_seats[i] += 1;
            }
        }
        self.votes.push(votes);
        self.allocations.push(chosen);
        Ok(())
    }

    /// Surplus `s^t_i = A^t_i - V^t_i` at the current step.
    pub fn surplus(&self) -> Vec<Rational> {
        (0..self.n)
            .map(|i| Rational::from(self.cum_seats[i]) - &self.cum_votes[i])
            .collect()
    }

    /// Checks `A^t_i in {floor(V^t_i), ceil(V^t_i)}` at every recorded
    /// prefix, returning the first violating `(t, i)` in step order.
    pub fn check_global_quota(&self) -> QuotaStatus {
        let mut cum_v = vec![Rational::zero(); self.n];
        let mut cum_a = vec![0u64; self.n];
        for (k, (votes, chosen)) in self.steps().enumerate() {
            for i in 0..self.n {
                cum_v[i] += votes.entry(i);
                if chosen.contains(&i) {
                    cum_a[i] += 1;
                }
                let a = BigInt::from(cum_a[i]);
                if a != cum_v[i].floor_int() && a != cum_v[i].ceil_int() {
                    return QuotaStatus::Violated {
                        step: k + 1,
                        party: i,
                    };
                }
            }
        }
        QuotaStatus::Satisfied
    }

    /// `max_{t, i} |A^t_i - V^t_i|` over all recorded prefixes.
    pub fn max_deviation(&self) -> Rational {
        let mut best = Rational::zero();
        let mut cum_v = vec![Rational::zero(); self.n];
        let mut cum_a = vec![0u64; self.n];
        for (votes, chosen) in self.steps() {
            for i in 0..self.n {
                cum_v[i] += votes.entry(i);
                if chosen.contains(&i) {
                    cum_a[i] += 1;
                }
                let dev = (Rational::from(cum_a[i]) - &cum_v[i]).abs();
                if dev > best {
                    best = dev;
                }
            }
        }
        best
    }

    /// Serializes the trajectory as CSV with columns `t,i,v,V,a,A,s`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,i,v,V,a,A,s")?;
        let mut cum_v = vec![Rational::zero(); self.n];
        let mut cum_a = vec![0u64; self.n];
        for (k, (votes, chosen)) in self.steps().enumerate() {
            for i in 0..self.n {
                cum_v[i] += votes.entry(i);
                let a = u8::from(chosen.contains(&i));
                if a == 1 {
                    cum_a[i] += 1;
                }
                let s = Rational::from(cum_a[i]) - &cum_v[i];
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    k + 1,
                    i,
                    votes.entry(i),
                    cum_v[i],
                    a,
                    cum_a[i],
                    s
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// A trajectory CSV as loaded from disk, before any consistency check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub i: usize,
    pub v: Rational,
    pub cum_v: Rational,
    pub a: u8,
    pub cum_a: u64,
    pub s: Rational,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// A consistency problem between the declared cumulative columns of a CSV
/// and the values recomputed from `v` and `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyIssue {
    pub step: usize,
    pub party: usize,
    pub field: &'static str,
    pub declared: Rational,
    pub recomputed: Rational,
}

impl fmt::Display for ConsistencyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} party {}: declared {} = {}, recomputed {}",
            self.step, self.party, self.field, self.declared, self.recomputed
        )
    }
}

/// Parsed trajectory CSV plus the checks `cmd verify` runs over it.
#[derive(Debug, Clone)]
pub struct ParsedTrajectory {
    pub n: usize,
    pub rows: Vec<TrajectoryRow>,
}

impl ParsedTrajectory {
    pub fn read<R: BufRead>(reader: R) -> Result<Self, CsvError> {
        let mut rows = Vec::new();
        let mut n = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if idx == 0 {
                if trimmed != "t,i,v,V,a,A,s" {
                    return Err(CsvError::Malformed {
                        line: lineno,
                        reason: format!("expected header t,i,v,V,a,A,s, found {trimmed:?}"),
                    });
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 7 {
                return Err(CsvError::Malformed {
                    line: lineno,
                    reason: format!("expected 7 fields, found {}", fields.len()),
                });
            }
            let parse_err = |what: &str| CsvError::Malformed {
                line: lineno,
                reason: format!("bad {what} field"),
            };
            let row = TrajectoryRow {
                t: fields[0].parse().map_err(|_| parse_err("t"))?,
                i: fields[1].parse().map_err(|_| parse_err("i"))?,
                v: fields[2].parse().map_err(|_| parse_err("v"))?,
                cum_v: fields[3].parse().map_err(|_| parse_err("V"))?,
                a: fields[4].parse().map_err(|_| parse_err("a"))?,
                cum_a: fields[5].parse().map_err(|_| parse_err("A"))?,
                s: fields[6].parse().map_err(|_| parse_err("s"))?,
            };
            if row.a > 1 {
                return Err(CsvError::Malformed {
                    line: lineno,
                    reason: "a must be 0 or 1".to_string(),
                });
            }
            n = n.max(row.i + 1);
            rows.push(row);
        }
        Ok(ParsedTrajectory { n, rows })
    }

    /// Recomputes `V`, `A`, and `s` from the `v` and `a` columns and reports
    /// every mismatch against the declared values.
    pub fn check_consistency(&self) -> Vec<ConsistencyIssue> {
        let mut issues = Vec::new();
        let mut cum_v = vec![Rational::zero(); self.n];
        let mut cum_a = vec![0u64; self.n];
        for row in &self.rows {
            cum_v[row.i] += &row.v;
            cum_a[row.i] += u64::from(row.a);
            let mut push = |field: &'static str, declared: Rational, recomputed: Rational| {
                if declared != recomputed {
                    issues.push(ConsistencyIssue {
                        step: row.t,
                        party: row.i,
                        field,
                        declared,
                        recomputed,
                    });
                }
            };
            push("V", row.cum_v.clone(), cum_v[row.i].clone());
            push("A", Rational::from(row.cum_a), Rational::from(cum_a[row.i]));
            push(
                "s",
                row.s.clone(),
                Rational::from(cum_a[row.i]) - &cum_v[row.i],
            );
        }
        issues
    }

    /// Rebuilds a [`TrajectoryState`] from the `v` and `a` columns, enforcing
    /// vote-vector validity and local feasibility.
    pub fn into_state(&self) -> Result<TrajectoryState, StepError> {
        let mut state = TrajectoryState::new(self.n);
        let steps = self.rows.iter().map(|r| r.t).max().unwrap_or(0);
        for t in 1..=steps {
            let mut entries = vec![Rational::zero(); self.n];
            let mut chosen = BTreeSet::new();
            for row in self.rows.iter().filter(|r| r.t == t) {
                entries[row.i] = row.v.clone();
                if row.a == 1 {
                    chosen.insert(row.i);
                }
            }
            state.push(VoteVector::new(entries)?, chosen)?;
        }
        Ok(state)
    }
}
