//! Adaptive adversarial vote streams.
//!
//! A *splitter* is a two-party election that forces the two surpluses exactly
//! one apart while preserving their average, whichever party the method
//! seats. The *booster* composes splitters recursively (two parties at a
//! time) until some party in a chosen subset of size `n'` reaches deviation
//! `(n'-1)/2 - epsilon`, against an arbitrary online method queried as a
//! black box. Fixed splitter schedules reproduce the reference hard
//! trajectories for three and four parties.

use serde::Serialize;
use std::collections::BTreeSet;

use crate::greedy::{MethodError, OnlineMethod};
use crate::instance::{StepError, TrajectoryState, VoteVector};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct AdversaryConfig {
    /// Distinct party indices the booster drives apart.
    pub parties: Vec<usize>,
    pub epsilon: Rational,
    /// Safety cap on emitted steps; termination is guaranteed, so hitting
    /// the cap signals a bug rather than a hard instance.
    pub max_steps: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error("splitter needs 0 <= s_i - s_j < 1, got {difference} for parties ({i}, {j})")]
    SplitterDomain {
        i: usize,
        j: usize,
        difference: Rational,
    },
    #[error("invalid adversary config: {0}")]
    InvalidConfig(String),
    #[error("adversary exceeded {steps} steps; termination proof violated")]
    Timeout { steps: usize },
    #[error("adversary invariant broken: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// One emitted adversary step.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptEntry {
    pub step: usize,
    /// `"splitter"` for splitters applied by the top-level loop,
    /// `"booster-descend"` for splitters emitted inside recursive calls.
    pub rule: String,
    pub pair: (usize, usize),
    pub vote_vector: Vec<Rational>,
    pub allocation: Vec<usize>,
}

pub type Transcript = Vec<TranscriptEntry>;

/// Loop-progress record of the outer booster iterations, used to check the
/// geometric lower bounds on the tracked extreme deviation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopRecord {
    pub kind: IterationKind,
    /// Extreme surplus (type I) or deficit (type II) at the start of the
    /// iteration, before its splitter.
    pub extreme_before: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationKind {
    SurplusEnd,
    DeficitEnd,
}

#[derive(Debug)]
pub struct BoosterOutcome {
    pub state: TrajectoryState,
    /// Party of maximum final deviation within the configured subset.
    pub witness: usize,
    pub achieved: Rational,
    pub transcript: Transcript,
    /// Outer loop records of the top-level call.
    pub loop_log: Vec<LoopRecord>,
}

/// The two-party election that splits the surpluses of `i` and `j` one unit
/// apart: `v_i = (1 + (s_i - s_j))/2`, `v_j = (1 - (s_i - s_j))/2`, zero
/// elsewhere. Requires `0 <= s_i - s_j < 1`.
pub fn splitter(state: &TrajectoryState, i: usize, j: usize) -> Result<VoteVector, AdversaryError> {
    let s = state.surplus();
    let diff = &s[i] - &s[j];
    if diff.is_negative() || diff >= Rational::one() {
        return Err(AdversaryError::SplitterDomain {
            i,
            j,
            difference: diff,
        });
    }
    let half = Rational::new(1, 2);
    let mut entries = vec![Rational::zero(); state.n()];
    entries[i] = &half * &(Rational::one() + &diff);
    entries[j] = half * (Rational::one() - diff);
    Ok(VoteVector::new(entries).expect("splitter votes are valid"))
}

struct AdversaryRun<'m, M: OnlineMethod + ?Sized> {
    method: &'m mut M,
    state: TrajectoryState,
    transcript: Transcript,
    max_steps: Option<usize>,
}

impl<'m, M: OnlineMethod + ?Sized> AdversaryRun<'m, M> {
    fn apply_splitter(&mut self, i: usize, j: usize, rule: &str) -> Result<(), AdversaryError> {
        if let Some(cap) = self.max_steps {
            if self.state.t() >= cap {
                return Err(AdversaryError::Timeout { steps: cap });
            }
        }
        let votes = splitter(&self.state, i, j)?;
        let chosen = self.method.choose(
            self.state.cumulative_votes(),
            self.state.cumulative_seats(),
            &votes,
        )?;
        self.transcript.push(TranscriptEntry {
            step: self.state.t() + 1,
            rule: rule.to_string(),
            pair: (i, j),
            vote_vector: votes.entries().to_vec(),
            allocation: chosen.iter().copied().collect(),
        });
        self.state.push(votes, chosen)?;
        Ok(())
    }

    fn surplus_of(&self, party: usize) -> Rational {
        Rational::from(self.state.cumulative_seats()[party]) - &self.state.cumulative_votes()[party]
    }

    /// Parties sorted by surplus, largest first, ties by lowest index.
    fn sorted_desc(&self, parties: &[usize]) -> Vec<usize> {
        let mut order = parties.to_vec();
        order.sort_by(|&a, &b| self.surplus_of(b).cmp(&self.surplus_of(a)).then(a.cmp(&b)));
        order
    }

    fn max_abs_surplus(&self, parties: &[usize]) -> (usize, Rational) {
        let mut best = (parties[0], self.surplus_of(parties[0]).abs());
        for &p in &parties[1..] {
            let dev = self.surplus_of(p).abs();
            if dev > best.1 {
                best = (p, dev);
            }
        }
        best
    }

    /// The recursion of the lower-bound construction: drive some party in
    /// `parties` to deviation at least `(|parties| - 1)/2 - epsilon`.
    fn boost(
        &mut self,
        parties: &[usize],
        epsilon: &Rational,
        depth: usize,
    ) -> Result<Vec<LoopRecord>, AdversaryError> {
        let np = parties.len();
        let rule = if depth == 0 {
            "splitter"
        } else {
            "booster-descend"
        };
        let goal = Rational::new(np as i64 - 1, 2) - epsilon;
        let goal_hit = |run: &Self| run.max_abs_surplus(parties).1 >= goal;
        if np == 1 || goal_hit(self) {
            return Ok(Vec::new());
        }
        if np == 2 {
            // One splitter separates the pair by exactly one, leaving a
            // surplus of at least 1/2 or a deficit of at most -1/2.
            let order = self.sorted_desc(parties);
            self.apply_splitter(order[0], order[1], rule)?;
            return Ok(Vec::new());
        }

        let inner_eps = epsilon / &Rational::from_int(2);
        // Threshold the inner booster guarantees: (np - 3)/2 - epsilon/2.
        let threshold = Rational::new(np as i64 - 3, 2) - &inner_eps;
        let two_at_top = |run: &Self| {
            parties
                .iter()
                .filter(|&&p| run.surplus_of(p) >= threshold)
                .count()
                >= 2
        };
        let two_at_bottom = |run: &Self| {
            parties
                .iter()
                .filter(|&&p| run.surplus_of(p) <= -&threshold)
                .count()
                >= 2
        };

        // Boost inner subsets (excluding the current extremes) until two
        // parties share an extreme end; each pass fixes a new party at one
        // end, so three passes suffice.
        let mut passes = 0;
        while !(two_at_top(self) || two_at_bottom(self) || goal_hit(self)) {
            passes += 1;
            if passes > 3 {
                return Err(AdversaryError::Internal(
                    "inner boosters did not pair an extreme end in three passes",
                ));
            }
            let order = self.sorted_desc(parties);
            self.boost(&order[1..np - 1], &inner_eps, depth + 1)?;
        }

        // Alternate a splitter at the shared end with an inner booster that
        // restores the shared-end invariant.
        let mut log = Vec::new();
        loop {
            if goal_hit(self) {
                return Ok(log);
            }
            let order = self.sorted_desc(parties);
            let second = self.surplus_of(order[1]);
            let second_last = self.surplus_of(order[np - 2]);
            if second >= threshold {
                log.push(LoopRecord {
                    kind: IterationKind::SurplusEnd,
                    extreme_before: self.surplus_of(order[0]),
                });
                self.apply_splitter(order[0], order[1], rule)?;
            } else if second_last <= -&threshold {
                log.push(LoopRecord {
                    kind: IterationKind::DeficitEnd,
                    extreme_before: self.surplus_of(order[np - 1]),
                });
                self.apply_splitter(order[np - 2], order[np - 1], rule)?;
            } else {
                return Err(AdversaryError::Internal(
                    "no extreme end shared by two parties in the boost loop",
                ));
            }
            if goal_hit(self) {
                return Ok(log);
            }
            let order = self.sorted_desc(parties);
            self.boost(&order[1..np - 1], &inner_eps, depth + 1)?;
        }
    }
}

/// Extends the trajectory until some configured party has deviation at
/// least `(n' - 1)/2 - epsilon`, where `n'` is the subset size.
pub fn booster<M: OnlineMethod + ?Sized>(
    method: &mut M,
    state: TrajectoryState,
    cfg: &AdversaryConfig,
) -> Result<BoosterOutcome, AdversaryError> {
    if cfg.parties.is_empty() {
        return Err(AdversaryError::InvalidConfig("empty party subset".into()));
    }
    if !cfg.epsilon.is_positive() {
        return Err(AdversaryError::InvalidConfig(
            "epsilon must be positive".into(),
        ));
    }
    let distinct: BTreeSet<usize> = cfg.parties.iter().copied().collect();
    if distinct.len() != cfg.parties.len() {
        return Err(AdversaryError::InvalidConfig(
            "duplicate party index".into(),
        ));
    }
    if cfg.parties.iter().any(|&p| p >= state.n()) {
        return Err(AdversaryError::InvalidConfig(
            "party index out of range".into(),
        ));
    }
    let mut run = AdversaryRun {
        method,
        state,
        transcript: Vec::new(),
        max_steps: cfg.max_steps,
    };
    let loop_log = run.boost(&cfg.parties, &cfg.epsilon, 0)?;
    let (witness, achieved) = run.max_abs_surplus(&cfg.parties);
    Ok(BoosterOutcome {
        state: run.state,
        witness,
        achieved,
        transcript: run.transcript,
        loop_log,
    })
}

/// The fixed splitter schedules behind the reference hard trajectories:
/// three parties reach surplus 63/64 and deficit 127/128 within seven
/// steps, four parties reach surplus and deficit 11/8 within ten. Pairs are
/// chosen by surplus rank, so the reached multiset of deviations does not
/// depend on the method under attack.
pub fn figure3_schedule<M: OnlineMethod + ?Sized>(
    method: &mut M,
    n: usize,
) -> Result<(TrajectoryState, Transcript), AdversaryError> {
    let rank_pairs: &[(usize, usize)] = match n {
        3 => &[(0, 1), (0, 1), (1, 2), (0, 1), (1, 2), (0, 1), (1, 2)],
        4 => &[
            (0, 1),
            (1, 2),
            (0, 1),
            (2, 3),
            (1, 2),
            (0, 1),
            (2, 3),
            (1, 2),
            (0, 1),
            (2, 3),
        ],
        _ => {
            return Err(AdversaryError::InvalidConfig(format!(
                "fixed schedule exists for 3 or 4 parties, not {n}"
            )))
        }
    };
    let mut run = AdversaryRun {
        method,
        state: TrajectoryState::new(n),
        transcript: Vec::new(),
        max_steps: None,
    };
    for &(a, b) in rank_pairs {
        let order = run.sorted_desc(&(0..n).collect::<Vec<_>>());
        run.apply_splitter(order[a], order[b], "splitter")?;
    }
    Ok((run.state, run.transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{GreedyMethod, MaxSurplusMethod, RandomFeasibleMethod};
    use crate::rat;

    #[test]
    fn splitter_symmetric() {
        let state = TrajectoryState::new(3);
        let votes = splitter(&state, 0, 2).unwrap();
        assert_eq!(votes.entries(), &[rat!(1 / 2), rat!(0), rat!(1 / 2)]);
        // Whatever the allocation, surpluses split to +1/2 and -1/2.
        for seat in [0usize, 2] {
            let mut next = state.clone();
            next.push(votes.clone(), BTreeSet::from([seat])).unwrap();
            let s = next.surplus();
            assert_eq!((&s[0] - &s[2]).abs(), rat!(1));
            assert!((&s[0] + &s[2]).is_zero());
        }
    }

    #[test]
    fn splitter_half_gap() {
        // Seat to the 3/4 party leaves s = (1/4, -1/4), a gap of 1/2.
        let mut state = TrajectoryState::new(2);
        state
            .push(
                VoteVector::new(vec![rat!(3 / 4), rat!(1 / 4)]).unwrap(),
                BTreeSet::from([0]),
            )
            .unwrap();
        let votes = splitter(&state, 0, 1).unwrap();
        assert_eq!(votes.entries(), &[rat!(3 / 4), rat!(1 / 4)]);
    }

    #[test]
    fn splitter_rejects_unit_gap() {
        let mut state = TrajectoryState::new(2);
        for _ in 0..2 {
            state
                .push(
                    VoteVector::new(vec![rat!(1 / 2), rat!(1 / 2)]).unwrap(),
                    BTreeSet::from([0]),
                )
                .unwrap();
        }
        assert!(matches!(
            splitter(&state, 0, 1),
            Err(AdversaryError::SplitterDomain { .. })
        ));
    }

    #[test]
    fn splitter_average_preserved_against_any_method() {
        // Run a few steps of an arbitrary method first, then check the
        // splitter postcondition for both possible continuations.
        let mut method = MaxSurplusMethod;
        let mut state = TrajectoryState::new(3);
        for _ in 0..3 {
            let votes = VoteVector::new(vec![rat!(2 / 5), rat!(2 / 5), rat!(1 / 5)]).unwrap();
            let chosen = method
                .choose(state.cumulative_votes(), state.cumulative_seats(), &votes)
                .unwrap();
            state.push(votes, chosen).unwrap();
        }
        let s = state.surplus();
        let (i, j) = if s[0] >= s[1] { (0, 1) } else { (1, 0) };
        if (&s[i] - &s[j]) < rat!(1) {
            let votes = splitter(&state, i, j).unwrap();
            let avg = (&s[i] + &s[j]) / &rat!(2);
            for seat in [i, j] {
                let mut next = state.clone();
                next.push(votes.clone(), BTreeSet::from([seat])).unwrap();
                let s2 = next.surplus();
                assert_eq!((&s2[i] - &s2[j]).abs(), rat!(1));
                assert_eq!((&s2[i] + &s2[j]) / &rat!(2), avg);
            }
        }
    }

    #[test]
    fn figure3_three_parties() {
        let (state, transcript) = figure3_schedule(&mut GreedyMethod, 3).unwrap();
        assert_eq!(state.t(), 7);
        assert_eq!(state.max_deviation(), rat!(127 / 128));
        let mut max_surplus = rat!(0);
        let mut replay = TrajectoryState::new(3);
        for (v, chosen) in state.steps() {
            replay.push(v.clone(), chosen.clone()).unwrap();
            for s in replay.surplus() {
                if s > max_surplus {
                    max_surplus = s;
                }
            }
        }
        assert_eq!(max_surplus, rat!(63 / 64));
        assert_eq!(transcript.len(), 7);
        // First splitter on a fresh state yields surpluses {1/2, 0, -1/2}.
        let mut prefix = TrajectoryState::new(3);
        let (v1, c1) = state.step(1);
        prefix.push(v1.clone(), c1.clone()).unwrap();
        let mut s = prefix.surplus();
        s.sort();
        assert_eq!(s, vec![rat!(-1 / 2), rat!(0), rat!(1 / 2)]);
    }

    #[test]
    fn figure3_four_parties() {
        for seed in [1u64, 9] {
            let mut method = RandomFeasibleMethod::new(seed);
            let (state, _) = figure3_schedule(&mut method, 4).unwrap();
            assert_eq!(state.t(), 10);
            assert_eq!(state.max_deviation(), rat!(11 / 8));
        }
        let (state, _) = figure3_schedule(&mut GreedyMethod, 4).unwrap();
        assert_eq!(state.max_deviation(), rat!(11 / 8));
    }

    #[test]
    fn figure3_rejects_other_sizes() {
        assert!(figure3_schedule(&mut GreedyMethod, 5).is_err());
    }

    #[test]
    fn booster_single_party_is_trivial() {
        let cfg = AdversaryConfig {
            parties: vec![0],
            epsilon: rat!(1 / 10),
            max_steps: Some(100),
        };
        let out = booster(&mut GreedyMethod, TrajectoryState::new(2), &cfg).unwrap();
        assert_eq!(out.state.t(), 0);
        assert_eq!(out.achieved, rat!(0));
    }

    #[test]
    fn booster_pair_uses_one_splitter() {
        let cfg = AdversaryConfig {
            parties: vec![0, 1],
            epsilon: rat!(1 / 100),
            max_steps: Some(100),
        };
        let out = booster(&mut GreedyMethod, TrajectoryState::new(2), &cfg).unwrap();
        assert_eq!(out.state.t(), 1);
        assert_eq!(out.achieved, rat!(1 / 2));
    }

    #[test]
    fn booster_three_parties_against_greedy() {
        let cfg = AdversaryConfig {
            parties: vec![0, 1, 2],
            epsilon: rat!(1 / 64),
            max_steps: Some(10_000),
        };
        let out = booster(&mut GreedyMethod, TrajectoryState::new(3), &cfg).unwrap();
        assert!(out.achieved >= rat!(1) - rat!(1 / 64));
        // Independent audit through the core surplus oracle.
        let s = out.state.surplus();
        assert_eq!(s[out.witness].abs(), out.achieved);
    }

    #[test]
    fn booster_reaches_bound_for_all_methods() {
        for n in [2usize, 3, 4] {
            let goal = Rational::new(n as i64 - 1, 2) - rat!(1 / 20);
            let cfg = AdversaryConfig {
                parties: (0..n).collect(),
                epsilon: rat!(1 / 20),
                max_steps: Some(50_000),
            };
            let against: Vec<Box<dyn OnlineMethod>> = vec![
                Box::new(GreedyMethod),
                Box::new(MaxSurplusMethod),
                Box::new(RandomFeasibleMethod::new(42)),
            ];
            for mut m in against {
                let out = booster(m.as_mut(), TrajectoryState::new(n), &cfg).unwrap();
                assert!(
                    out.achieved >= goal,
                    "{} on n={n}: achieved {} < {goal}",
                    m.name(),
                    out.achieved
                );
                // Every emitted vote vector is a one-seat two-party election.
                for (v, _) in out.state.steps() {
                    assert_eq!(v.house(), 1);
                    assert_eq!(v.support().count(), 2);
                    let total: Rational = v.entries().iter().sum();
                    assert_eq!(total, rat!(1));
                }
            }
        }
    }

    #[test]
    fn booster_loop_progress_dominates_geometric_bound() {
        let eps = rat!(1 / 32);
        let cfg = AdversaryConfig {
            parties: vec![0, 1, 2, 3],
            epsilon: eps.clone(),
            max_steps: Some(50_000),
        };
        let out = booster(&mut GreedyMethod, TrajectoryState::new(4), &cfg).unwrap();
        // Inner subset size is 2, so type-I extremes dominate
        // (m+1)/2 - eps/2 - 1/2^l = 3/2 - eps/2 - 1/2^l.
        let half_eps = &eps / &rat!(2);
        let base = rat!(3 / 2) - &half_eps;
        let mut pow = rat!(1);
        let (mut type1, mut type2) = (0usize, 0usize);
        let mut last_top: Option<Rational> = None;
        for record in &out.loop_log {
            match record.kind {
                IterationKind::SurplusEnd => {
                    let bound = &base - &pow;
                    assert!(
                        record.extreme_before >= bound,
                        "type-I iteration {type1}: {} < {bound}",
                        record.extreme_before
                    );
                    // The tracked maximum never drops between surplus-end
                    // iterations, including across deficit-end rounds.
                    if let Some(prev) = &last_top {
                        assert!(record.extreme_before >= *prev);
                    }
                    last_top = Some(record.extreme_before.clone());
                    type1 += 1;
                    pow = pow / rat!(2);
                }
                IterationKind::DeficitEnd => {
                    type2 += 1;
                }
            }
        }
        // Symmetric check for the deficit end.
        let mut pow = rat!(1);
        for record in &out.loop_log {
            if record.kind == IterationKind::DeficitEnd {
                let bound = -(&base - &pow);
                assert!(record.extreme_before <= bound);
                pow = pow / rat!(2);
            }
        }
        // Termination bound: smallest even L with 2^(L/2) >= 2/eps, plus
        // the two iterations of slack from the proof.
        let mut l_half = 0u32;
        while Rational::from_int(2i64.pow(l_half)) < rat!(2) / &eps {
            l_half += 1;
        }
        let bound = 2 * l_half as usize + 2;
        assert!(
            out.loop_log.len() <= bound,
            "{} loop iterations exceed bound {bound} (I={type1}, II={type2})",
            out.loop_log.len()
        );
    }

    #[test]
    fn booster_against_prior_history() {
        // Start from a non-trivial greedy prefix, then boost a subset.
        let inst = crate::instance::Instance::repeated(
            vec![rat!(2 / 5), rat!(2 / 5), rat!(1 / 5), rat!(0)],
            5,
        );
        let state = crate::greedy::run_method(&mut GreedyMethod, &inst).unwrap();
        let cfg = AdversaryConfig {
            parties: vec![1, 2, 3],
            epsilon: rat!(1 / 16),
            max_steps: Some(20_000),
        };
        let out = booster(&mut GreedyMethod, state, &cfg).unwrap();
        assert!(out.achieved >= rat!(1) - rat!(1 / 16));
        assert!([1, 2, 3].contains(&out.witness));
    }
}
