//! The deterministic greedy apportionment method and the online-method
//! interface consumed by the adversary and simulation code.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flow::InfeasibilityWitness;
use crate::instance::TrajectoryState;
use crate::instance::{Instance, StepError, Violation, VoteVector};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum MethodError {
    #[error("step with house {house} has only {support} parties with positive votes")]
    InfeasibleStep { house: u64, support: usize },
    #[error("method does not support this input: {0}")]
    Unsupported(String),
    #[error("no feasible step network: {witness}")]
    NetworkInfeasible { witness: InfeasibilityWitness },
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Step(#[from] StepError),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// An online apportionment method: given the history pair `(V^{t-1}, A^{t-1})`
/// and the current votes, choose `H^t` parties with positive votes.
///
/// Decisions may depend only on the arguments and on state the method owns
/// (its randomness stream, its tracked distribution); future votes are never
/// visible. The adversary queries implementations adaptively through this
/// trait.
pub trait OnlineMethod {
    fn choose(
        &mut self,
        cum_votes: &[Rational],
        cum_seats: &[u64],
        votes: &VoteVector,
    ) -> Result<BTreeSet<usize>, MethodError>;

    /// Short identifier for reports and transcripts.
    fn name(&self) -> &'static str {
        "method"
    }
}

/// One greedy step: the `H^t` supported parties with the smallest key
/// `s^{t-1}_i - v^t_i`, ties broken by lowest party index.
pub fn greedy_step(
    cum_votes: &[Rational],
    cum_seats: &[u64],
    votes: &VoteVector,
) -> Result<BTreeSet<usize>, MethodError> {
    let house = votes.house() as usize;
    let mut keyed: Vec<(Rational, usize)> = votes
        .support()
        .map(|i| {
            let surplus = Rational::from(cum_seats[i]) - &cum_votes[i];
            (surplus - votes.entry(i), i)
        })
        .collect();
    if keyed.len() < house {
        return Err(MethodError::InfeasibleStep {
            house: votes.house(),
            support: keyed.len(),
        });
    }
    keyed.sort();
    Ok(keyed.into_iter().take(house).map(|(_, i)| i).collect())
}

/// The greedy apportionment method. `(n-1)/2`-proportional on every
/// n-dimensional instance and strictly 1-proportional for three parties.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyMethod;

impl OnlineMethod for GreedyMethod {
    fn choose(
        &mut self,
        cum_votes: &[Rational],
        cum_seats: &[u64],
        votes: &VoteVector,
    ) -> Result<BTreeSet<usize>, MethodError> {
        greedy_step(cum_votes, cum_seats, votes)
    }

    fn name(&self) -> &'static str {
        "greedy"
    }
}

/// Seats the parties with the *largest* surplus instead of the largest
/// deficit. A deliberately bad baseline used to exercise adversary and
/// verification code against a method with poor proportionality.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxSurplusMethod;

impl OnlineMethod for MaxSurplusMethod {
    fn choose(
        &mut self,
        cum_votes: &[Rational],
        cum_seats: &[u64],
        votes: &VoteVector,
    ) -> Result<BTreeSet<usize>, MethodError> {
        let house = votes.house() as usize;
        let mut keyed: Vec<(Rational, usize)> = votes
            .support()
            .map(|i| {
                let surplus = Rational::from(cum_seats[i]) - &cum_votes[i];
                (surplus - votes.entry(i), i)
            })
            .collect();
        if keyed.len() < house {
            return Err(MethodError::InfeasibleStep {
                house: votes.house(),
                support: keyed.len(),
            });
        }
        // Largest key first; ties still by lowest index.
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(keyed.into_iter().take(house).map(|(_, i)| i).collect())
    }

    fn name(&self) -> &'static str {
        "max-surplus"
    }
}

/// Seats a uniformly random feasible subset each step, from an owned seeded
/// stream.
#[derive(Debug, Clone)]
pub struct RandomFeasibleMethod {
    rng: ChaCha8Rng,
}

impl RandomFeasibleMethod {
    pub fn new(seed: u64) -> Self {
        RandomFeasibleMethod {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl OnlineMethod for RandomFeasibleMethod {
    fn choose(
        &mut self,
        _cum_votes: &[Rational],
        _cum_seats: &[u64],
        votes: &VoteVector,
    ) -> Result<BTreeSet<usize>, MethodError> {
        let house = votes.house() as usize;
        let mut support: Vec<usize> = votes.support().collect();
        if support.len() < house {
            return Err(MethodError::InfeasibleStep {
                house: votes.house(),
                support: support.len(),
            });
        }
        let mut chosen = BTreeSet::new();
        for _ in 0..house {
            let k = self.rng.gen_range(0..support.len());
            chosen.insert(support.swap_remove(k));
        }
        Ok(chosen)
    }

    fn name(&self) -> &'static str {
        "random-feasible"
    }
}

/// Folds a method over an instance, producing the full trajectory.
pub fn run_method<M: OnlineMethod + ?Sized>(
    method: &mut M,
    inst: &Instance,
) -> Result<TrajectoryState, RunError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(RunError::InvalidInstance(violations));
    }
    let mut state = TrajectoryState::new(inst.n);
    for t in 1..=inst.horizon() {
        let votes = inst.vote_vector(t).expect("validated instance");
        let chosen = method.choose(state.cumulative_votes(), state.cumulative_seats(), &votes)?;
        state.push(votes, chosen)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HamiltonError {
    #[error("total votes are zero but house is {house}")]
    ZeroTotalVotes { house: u64 },
    #[error("negative vote value {value} for party {party}")]
    NegativeVotes { party: usize, value: Rational },
}

/// Largest-remainder (Hamilton) allocation: each party gets the floor of its
/// quota `house * v_i / sum(v)`, and the leftover seats go to the parties
/// with the largest quota residues, ties broken by lowest index.
///
/// Accepts general non-negative vote values since it is used as a comparison
/// rule over aggregated multi-seat totals.
pub fn hamilton_allocation(votes: &[Rational], house: u64) -> Result<Vec<u64>, HamiltonError> {
    for (party, value) in votes.iter().enumerate() {
        if value.is_negative() {
            return Err(HamiltonError::NegativeVotes {
                party,
                value: value.clone(),
            });
        }
    }
    let mut seats = vec![0u64; votes.len()];
    if house == 0 {
        return Ok(seats);
    }
    let total: Rational = votes.iter().sum();
    if total.is_zero() {
        return Err(HamiltonError::ZeroTotalVotes { house });
    }
    let mut residues: Vec<(Rational, usize)> = Vec::with_capacity(votes.len());
    let mut assigned = 0u64;
    for (i, v) in votes.iter().enumerate() {
        let quota = Rational::from(house) * v / &total;
        let floor = u64::try_from(quota.floor_int()).expect("non-negative quota");
        seats[i] = floor;
        assigned += floor;
        residues.push((quota.fract(), i));
    }
    // Largest residue first; ties by lowest index.
    residues.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in residues.into_iter().take((house - assigned) as usize) {
        seats[i] += 1;
    }
    Ok(seats)
}

/// Random valid instance: each step uses a single denominator and a house
/// size drawn in `0..n`, with every entry strictly below one. Intended for
/// simulations and property tests.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, steps: usize, max_denom: u64) -> Instance {
    assert!(n >= 1);
    let min_denom = (n as u64 + 1).max(2);
    let max_denom = max_denom.max(min_denom);
    let mut votes = Vec::with_capacity(steps);
    for _ in 0..steps {
        let q = rng.gen_range(min_denom..=max_denom);
        let house = if n == 1 {
            0
        } else {
            rng.gen_range(0..n as u64)
        };
        let mut counts = vec![0u64; n];
        let mut placed = 0;
        while placed < house * q {
            let i = rng.gen_range(0..n);
            if counts[i] < q - 1 {
                counts[i] += 1;
                placed += 1;
            }
        }
        votes.push(
            counts
                .into_iter()
                .map(|c| Rational::from_big(c.into(), q.into()))
                .collect(),
        );
    }
    Instance::new(n, votes)
}
