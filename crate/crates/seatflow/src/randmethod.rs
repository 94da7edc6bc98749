//! Randomized online apportionment via per-step flow networks.
//!
//! The method tracks, exactly, the probability `pi(u)` of every upper-quota
//! set `u` (the parties currently holding the ceiling of their cumulative
//! votes). Each step builds a small capacitated network whose feasible flows
//! of value one are in bijection with valid continuations; the flow is
//! converted into one conditional seat lottery per `u` by hypersimplex
//! decomposition, and `pi` is pushed forward. For up to three parties a
//! feasible flow always exists, giving global quota ex post and exact
//! per-step expected seats ex ante. For four or more parties the first
//! infeasible step is reported with its cut certificate.
//!
//! The two-party systematic sampler (a single shared uniform offset) and the
//! exact trajectory-distribution enumerator used by the correlation checks
//! live here as well.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, RandBigInt};
use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::flow::{
    feasible_flow, hypersimplex_decompose, CapacitatedNetwork, Flow, FlowOutcome,
    InfeasibilityWitness,
};
use crate::instance::TrajectoryState;
use crate::instance::{Instance, StepError, Violation, VoteVector};
use crate::rational::Rational;

/// An upper-quota set: the parties whose cumulative seats equal the ceiling
/// of their cumulative votes. Parties with integral cumulative votes always
/// belong to it.
pub type UpperSet = BTreeSet<usize>;

/// Exact distribution over upper-quota sets after step `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotaDistribution {
    pub t: usize,
    pub pi: BTreeMap<UpperSet, Rational>,
}

impl QuotaDistribution {
    /// State before any step: every party trivially holds its ceiling.
    pub fn initial(n: usize) -> Self {
        QuotaDistribution {
            t: 0,
            pi: BTreeMap::from([((0..n).collect(), Rational::one())]),
        }
    }

    pub fn total_mass(&self) -> Rational {
        self.pi.values().sum()
    }

    /// Recovers the cumulative seat vector summarized by `u`.
    pub fn seats_for(u: &UpperSet, cum_votes: &[Rational]) -> Vec<u64> {
        cum_votes
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let seats = if u.contains(&i) {
                    v.ceil_int()
                } else {
                    v.floor_int()
                };
                u64::try_from(seats).expect("cumulative seats are non-negative")
            })
            .collect()
    }
}

fn upper_set_label(u: &UpperSet) -> String {
    let inner = u
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!("u{{{inner}}}")
}

/// The per-step flow network together with arc lookups by role.
#[derive(Debug, Clone)]
pub struct StepNetworkSpec {
    pub network: CapacitatedNetwork,
    pub source_arcs: BTreeMap<UpperSet, usize>,
    pub assign_arcs: BTreeMap<(UpperSet, usize), usize>,
    pub sink_arcs: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum AdvanceError {
    #[error("house size is zero; the step network is undefined for empty steps")]
    EmptyHouse,
    #[error("dimension mismatch between distribution, votes, and vote vector")]
    DimensionMismatch,
    #[error("no feasible step flow: {witness}")]
    Infeasible { witness: InfeasibilityWitness },
    #[error("injected flow is not a feasible flow of value one")]
    BadInjectedFlow,
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

/// Builds the step network: source arcs carry `pi(u)`, assignment arcs
/// `(u, i)` are closed when a seat for `i` would break quota (ceiling
/// already matched and not increasing, or zero votes), forced open at
/// `pi(u)/H` when the floor of `i` increases, and sink arcs carry `v_i/H`.
pub fn build_step_network(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
) -> Result<StepNetworkSpec, AdvanceError> {
    let n = cum_votes.len();
    if votes.len() != n {
        return Err(AdvanceError::DimensionMismatch);
    }
    if votes.house() == 0 {
        return Err(AdvanceError::EmptyHouse);
    }
    let house = Rational::from(votes.house());
    let mut network = CapacitatedNetwork::new("o", "d");
    let mut source_arcs = BTreeMap::new();
    let mut assign_arcs = BTreeMap::new();
    let mut u_nodes = Vec::new();
    for (u, prob) in &dist.pi {
        let node = network.add_node(upper_set_label(u));
        let arc = network.add_arc(network.origin, node, Rational::zero(), prob.clone());
        source_arcs.insert(u.clone(), arc);
        u_nodes.push((u.clone(), node));
    }
    let party_nodes: Vec<usize> = (0..n).map(|i| network.add_node(format!("p{i}"))).collect();
    for (u, node) in &u_nodes {
        let prob = &dist.pi[u];
        for i in 0..n {
            let v_i = votes.entry(i);
            let ceil_stays = cum_votes[i].ceil() == (&cum_votes[i] + v_i).ceil();
            let floor_jumps =
                cum_votes[i].floor() + Rational::one() == (&cum_votes[i] + v_i).floor();
            let upper = if (u.contains(&i) && ceil_stays) || v_i.is_zero() {
                Rational::zero()
            } else {
                prob / &house
            };
            let lower = if !u.contains(&i) && floor_jumps {
                prob / &house
            } else {
                Rational::zero()
            };
            let arc = network.add_arc(*node, party_nodes[i], lower, upper);
            assign_arcs.insert((u.clone(), i), arc);
        }
    }
    let sink_arcs: Vec<usize> = (0..n)
        .map(|i| {
            network.add_arc(
                party_nodes[i],
                network.dest,
                Rational::zero(),
                votes.entry(i) / &house,
            )
        })
        .collect();
    Ok(StepNetworkSpec {
        network,
        source_arcs,
        assign_arcs,
        sink_arcs,
    })
}

/// Conditional seat lottery for one upper-quota set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalLottery {
    /// Fractional assignment `z_i(u) = f(u, i) * H / pi(u)`.
    pub z: Vec<Rational>,
    /// Convex decomposition of `z` into seat sets of size `H`.
    pub sets: Vec<(Rational, BTreeSet<usize>)>,
}

/// Everything one advance produces: the network and flow (absent for empty
/// steps), the conditional lotteries, and the pushed-forward distribution.
#[derive(Debug, Clone)]
pub struct StepAdvance {
    pub network: Option<StepNetworkSpec>,
    pub flow: Option<Flow>,
    pub lotteries: BTreeMap<UpperSet, ConditionalLottery>,
    pub next: QuotaDistribution,
}

impl StepAdvance {
    /// `sum_u pi(u) z_i(u)`, the expected seats per party this step; equals
    /// the vote vector exactly whenever the advance succeeds.
    pub fn marginals(&self, dist: &QuotaDistribution, n: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); n];
        for (u, lottery) in &self.lotteries {
            let prob = &dist.pi[u];
            for i in 0..n {
                out[i] += prob * &lottery.z[i];
            }
        }
        out
    }
}

/// Upper-quota set after adding `v` to the cumulative votes and seating
/// `chosen` on top of the seats summarized by `u`.
fn successor(
    u: &UpperSet,
    cum_votes: &[Rational],
    votes: &VoteVector,
    chosen: &BTreeSet<usize>,
) -> UpperSet {
    let seats = QuotaDistribution::seats_for(u, cum_votes);
    let mut next = UpperSet::new();
    for (i, prev) in seats.iter().enumerate() {
        let total = prev + u64::from(chosen.contains(&i));
        let cum = &cum_votes[i] + votes.entry(i);
        let total_r = Rational::from(total);
        debug_assert!(
            total_r == cum.floor() || total_r == cum.ceil(),
            "global quota broken at party {i}"
        );
        if total_r == cum.ceil() {
            next.insert(i);
        }
    }
    next
}

/// Advances the distribution by one step using the solver's feasible flow.
pub fn advance(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
) -> Result<StepAdvance, AdvanceError> {
    if votes.house() == 0 {
        return advance_empty(dist, cum_votes, votes);
    }
    let spec = build_step_network(dist, cum_votes, votes)?;
    let outcome = feasible_flow(&spec.network, &Rational::one())
        .map_err(|e| AdvanceError::Internal(e.to_string()))?;
    match outcome {
        FlowOutcome::Feasible(flow) => advance_from_flow(dist, cum_votes, votes, spec, flow),
        FlowOutcome::Infeasible(witness) => Err(AdvanceError::Infeasible { witness }),
    }
}

/// Advances with a caller-chosen feasible flow of value one, realizing any
/// other method consistent with the same history (the flow-injection hook
/// behind the characterization of quota-and-proportional methods).
pub fn advance_with_flow(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
    flow: Flow,
) -> Result<StepAdvance, AdvanceError> {
    let spec = build_step_network(dist, cum_votes, votes)?;
    if !flow.is_feasible(&spec.network) || flow.value(&spec.network) != Rational::one() {
        return Err(AdvanceError::BadInjectedFlow);
    }
    advance_from_flow(dist, cum_votes, votes, spec, flow)
}

fn advance_empty(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
) -> Result<StepAdvance, AdvanceError> {
    let n = cum_votes.len();
    if votes.len() != n {
        return Err(AdvanceError::DimensionMismatch);
    }
    let mut lotteries = BTreeMap::new();
    for u in dist.pi.keys() {
        lotteries.insert(
            u.clone(),
            ConditionalLottery {
                z: vec![Rational::zero(); n],
                sets: vec![(Rational::one(), BTreeSet::new())],
            },
        );
    }
    Ok(StepAdvance {
        network: None,
        flow: None,
        lotteries,
        next: QuotaDistribution {
            t: dist.t + 1,
            pi: dist.pi.clone(),
        },
    })
}

fn advance_from_flow(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
    spec: StepNetworkSpec,
    flow: Flow,
) -> Result<StepAdvance, AdvanceError> {
    let n = cum_votes.len();
    let house = Rational::from(votes.house());
    let mut lotteries = BTreeMap::new();
    let mut next_pi: BTreeMap<UpperSet, Rational> = BTreeMap::new();
    for (u, prob) in &dist.pi {
        let z: Vec<Rational> = (0..n)
            .map(|i| {
                let arc = spec.assign_arcs[&(u.clone(), i)];
                &flow.values[arc] * &house / prob
            })
            .collect();
        let sets = hypersimplex_decompose(&z, votes.house())
            .map_err(|e| AdvanceError::Internal(format!("assignment vector: {e}")))?;
        for (weight, chosen) in &sets {
            let next_u = successor(u, cum_votes, votes, chosen);
            *next_pi.entry(next_u).or_insert_with(Rational::zero) += prob * weight;
        }
        lotteries.insert(u.clone(), ConditionalLottery { z, sets });
    }
    let next = QuotaDistribution {
        t: dist.t + 1,
        pi: next_pi,
    };
    debug_assert_eq!(next.total_mass(), Rational::one());
    Ok(StepAdvance {
        network: Some(spec),
        flow: Some(flow),
        lotteries,
        next,
    })
}

/// Expected seats per party for the coming step; exact equality with the
/// vote vector is the ex-ante proportionality guarantee.
pub fn exact_step_marginals(
    dist: &QuotaDistribution,
    cum_votes: &[Rational],
    votes: &VoteVector,
) -> Result<Vec<Rational>, AdvanceError> {
    let adv = advance(dist, cum_votes, votes)?;
    Ok(adv.marginals(dist, cum_votes.len()))
}

/// Invariant audit of a tracked distribution against the cumulative votes.
/// Returns human-readable violations; empty means consistent.
pub fn check_quota_distribution(dist: &QuotaDistribution, cum_votes: &[Rational]) -> Vec<String> {
    let mut problems = Vec::new();
    if dist.total_mass() != Rational::one() {
        problems.push(format!("total mass {} differs from 1", dist.total_mass()));
    }
    let n = cum_votes.len();
    let integral: Vec<usize> = (0..n).filter(|&i| cum_votes[i].is_integer()).collect();
    let mut sizes = BTreeSet::new();
    for (u, prob) in &dist.pi {
        sizes.insert(u.len());
        if !prob.is_positive() {
            problems.push(format!(
                "pi({}) = {prob} is not positive",
                upper_set_label(u)
            ));
        }
        for &i in &integral {
            if !u.contains(&i) {
                problems.push(format!(
                    "party {i} has integral cumulative votes but is outside {}",
                    upper_set_label(u)
                ));
            }
        }
    }
    if sizes.len() > 1 {
        problems.push(format!(
            "upper-set sizes differ across the support: {sizes:?}"
        ));
    }
    if n == 3 {
        for (u, prob) in &dist.pi {
            if u.len() == 1 {
                let i = *u.iter().next().unwrap();
                let expected = cum_votes[i].fract();
                if *prob != expected {
                    problems.push(format!(
                        "pi({}) = {prob}, expected fractional part {expected}",
                        upper_set_label(u)
                    ));
                }
            } else if u.len() == 2 {
                let i = (0..3).find(|i| !u.contains(i)).unwrap();
                let gap = cum_votes[i].ceil() - &cum_votes[i];
                if *prob < gap {
                    problems.push(format!(
                        "pi({}) = {prob} below the ceiling gap {gap} of excluded party {i}",
                        upper_set_label(u)
                    ));
                }
            }
        }
    }
    problems
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("invalid instance: {0:?}")]
    InvalidInstance(Vec<Violation>),
    #[error("step {step}: {source}")]
    Advance { step: usize, source: AdvanceError },
}

impl BuildError {
    /// The infeasibility witness, if the failure was an infeasible step.
    pub fn witness(&self) -> Option<(usize, &InfeasibilityWitness)> {
        match self {
            BuildError::Advance {
                step,
                source: AdvanceError::Infeasible { witness },
            } => Some((*step, witness)),
            _ => None,
        }
    }
}

/// One tracked step of a network flow method.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub votes: VoteVector,
    pub dist_before: QuotaDistribution,
    pub cum_votes_before: Vec<Rational>,
    pub lotteries: BTreeMap<UpperSet, ConditionalLottery>,
    pub marginals: Vec<Rational>,
}

/// The exact state of a network flow method over a whole instance: per-step
/// conditional lotteries plus the final distribution. Sampling trajectories
/// and enumerating the trajectory distribution both replay these records.
#[derive(Debug, Clone)]
pub struct NetworkFlowMethod {
    n: usize,
    records: Vec<StepRecord>,
    final_dist: QuotaDistribution,
    final_votes: Vec<Rational>,
}

impl NetworkFlowMethod {
    pub fn run(inst: &Instance) -> Result<Self, BuildError> {
        let violations = inst.validate();
        if !violations.is_empty() {
            return Err(BuildError::InvalidInstance(violations));
        }
        let mut dist = QuotaDistribution::initial(inst.n);
        let mut cum = vec![Rational::zero(); inst.n];
        let mut records = Vec::with_capacity(inst.horizon());
        for t in 1..=inst.horizon() {
            let votes = inst.vote_vector(t).expect("validated instance");
            let adv = advance(&dist, &cum, &votes)
                .map_err(|source| BuildError::Advance { step: t, source })?;
            let marginals = adv.marginals(&dist, inst.n);
            records.push(StepRecord {
                votes: votes.clone(),
                dist_before: dist.clone(),
                cum_votes_before: cum.clone(),
                lotteries: adv.lotteries,
                marginals,
            });
            for i in 0..inst.n {
                cum[i] += votes.entry(i);
            }
            dist = adv.next;
        }
        Ok(NetworkFlowMethod {
            n: inst.n,
            records,
            final_dist: dist,
            final_votes: cum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn final_distribution(&self) -> &QuotaDistribution {
        &self.final_dist
    }

    pub fn final_votes(&self) -> &[Rational] {
        &self.final_votes
    }

    /// Draws one trajectory. Identical `(seed, stream)` pairs give identical
    /// trajectories; distinct streams are independent substreams.
    pub fn sample(&self, seed: u64, stream: u64) -> TrajectoryState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut state = TrajectoryState::new(self.n);
        let mut u: UpperSet = (0..self.n).collect();
        for record in &self.records {
            let lottery = record
                .lotteries
                .get(&u)
                .expect("realized upper set is tracked");
            let chosen = sample_set(&mut rng, &lottery.sets);
            u = successor(&u, &record.cum_votes_before, &record.votes, &chosen);
            state
                .push(record.votes.clone(), chosen)
                .expect("lottery sets are locally feasible");
        }
        state
    }

    /// Exact distribution over full allocation histories. Exponential in the
    /// horizon; intended for the small counterexample fixtures.
    pub fn trajectory_distribution(&self) -> Vec<(Vec<BTreeSet<usize>>, Rational)> {
        let mut histories: Vec<(Vec<BTreeSet<usize>>, Rational, UpperSet)> =
            vec![(Vec::new(), Rational::one(), (0..self.n).collect())];
        for record in &self.records {
            let mut next = Vec::with_capacity(histories.len());
            for (prefix, prob, u) in &histories {
                let lottery = record
                    .lotteries
                    .get(u)
                    .expect("realized upper set is tracked");
                for (weight, chosen) in &lottery.sets {
                    let mut longer = prefix.clone();
                    longer.push(chosen.clone());
                    next.push((
                        longer,
                        prob * weight,
                        successor(u, &record.cum_votes_before, &record.votes, chosen),
                    ));
                }
            }
            assert!(
                next.len() <= 1 << 20,
                "trajectory support too large to enumerate"
            );
            histories = next;
        }
        histories
            .into_iter()
            .map(|(traj, prob, _)| (traj, prob))
            .collect()
    }

    /// Machine-readable dump of the exact method state: the distribution at
    /// every step with the conditional lottery applied at that step.
    pub fn state_dump(&self) -> serde_json::Value {
        let mut steps = Vec::new();
        for (idx, record) in self.records.iter().enumerate() {
            let pi: Vec<serde_json::Value> = record
                .dist_before
                .pi
                .iter()
                .map(|(u, prob)| {
                    let lottery: Vec<serde_json::Value> = record.lotteries[u]
                        .sets
                        .iter()
                        .map(|(w, s)| {
                            json!({
                                "set": s.iter().copied().collect::<Vec<usize>>(),
                                "weight": w.to_string(),
                            })
                        })
                        .collect();
                    json!({
                        "u": u.iter().copied().collect::<Vec<usize>>(),
                        "prob": prob.to_string(),
                        "lottery": lottery,
                    })
                })
                .collect();
            steps.push(json!({
                "t": idx,
                "V": record
                    .cum_votes_before
                    .iter()
                    .map(Rational::to_string)
                    .collect::<Vec<_>>(),
                "pi": pi,
            }));
        }
        steps.push(json!({
            "t": self.records.len(),
            "V": self
                .final_votes
                .iter()
                .map(Rational::to_string)
                .collect::<Vec<_>>(),
            "pi": self
                .final_dist
                .pi
                .iter()
                .map(|(u, prob)| {
                    json!({
                        "u": u.iter().copied().collect::<Vec<usize>>(),
                        "prob": prob.to_string(),
                    })
                })
                .collect::<Vec<_>>(),
        }));
        json!({ "n": self.n, "steps": steps })
    }
}

/// Exact draw from a rational lottery: weights are brought to a common
/// denominator and a uniform big integer below it picks the component.
fn sample_set(rng: &mut ChaCha8Rng, sets: &[(Rational, BTreeSet<usize>)]) -> BTreeSet<usize> {
    debug_assert!(!sets.is_empty());
    let mut denom = BigInt::from(1);
    for (w, _) in sets {
        denom = num_integer::lcm(denom, w.denom().clone());
    }
    let draw = rng.gen_bigint_range(&BigInt::zero(), &denom);
    let mut acc = BigInt::zero();
    for (w, s) in sets {
        acc += w.numer() * (&denom / w.denom());
        if draw < acc {
            return s.clone();
        }
    }
    sets.last().expect("non-empty lottery").1.clone()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeCorrelationCheck {
    pub conditional: Rational,
    pub unconditional: Rational,
}

impl NegativeCorrelationCheck {
    pub fn satisfied(&self) -> bool {
        self.conditional <= self.unconditional
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("conditioning event has probability zero")]
pub struct UndefinedConditional;

/// `P[a^t_i = 1]` under an exact trajectory distribution. Steps are 1-based.
pub fn seat_probability(
    dist: &[(Vec<BTreeSet<usize>>, Rational)],
    party: usize,
    t: usize,
) -> Rational {
    dist.iter()
        .filter(|(traj, _)| traj[t - 1].contains(&party))
        .map(|(_, p)| p.clone())
        .sum()
}

/// `P[a^t_i = 1 | a^{t'}_j = value]`.
pub fn conditional_seat_probability(
    dist: &[(Vec<BTreeSet<usize>>, Rational)],
    party: usize,
    t: usize,
    condition: (usize, usize, bool),
) -> Result<Rational, UndefinedConditional> {
    let (cond_party, cond_t, cond_value) = condition;
    let mut joint = Rational::zero();
    let mut base = Rational::zero();
    for (traj, p) in dist {
        if traj[cond_t - 1].contains(&cond_party) == cond_value {
            base += p;
            if traj[t - 1].contains(&party) {
                joint += p;
            }
        }
    }
    if base.is_zero() {
        return Err(UndefinedConditional);
    }
    Ok(joint / base)
}

/// Compares `P[a^t_i = 1 | a^{t'}_i = 1]` against `P[a^t_i = 1]`; negative
/// correlation over time requires the conditional not to exceed the
/// unconditional.
pub fn check_negative_correlation(
    dist: &[(Vec<BTreeSet<usize>>, Rational)],
    party: usize,
    t: usize,
    t_prime: usize,
) -> Result<NegativeCorrelationCheck, UndefinedConditional> {
    Ok(NegativeCorrelationCheck {
        conditional: conditional_seat_probability(dist, party, t, (party, t_prime, true))?,
        unconditional: seat_probability(dist, party, t),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum GrimmettError {
    #[error("systematic sampling handles at most two parties, got {n}")]
    TooManyParties { n: usize },
    #[error("offset {lambda} outside [0, 1)")]
    LambdaOutOfRange { lambda: Rational },
    #[error("invalid instance: {0:?}")]
    InvalidInstance(Vec<Violation>),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Systematic sampling for one or two parties: party 0 receives a seat in
/// step `t` iff `floor(V^{t-1}_0 + lambda) < floor(V^t_0 + lambda)`; with
/// two parties, party 1 takes the seat otherwise. Deterministic given the
/// offset; integrating the offset over `[0, 1)` yields the vote shares
/// exactly.
pub fn grimmett_sample(
    inst: &Instance,
    lambda: &Rational,
) -> Result<TrajectoryState, GrimmettError> {
    if inst.n > 2 {
        return Err(GrimmettError::TooManyParties { n: inst.n });
    }
    if lambda.is_negative() || *lambda >= Rational::one() {
        return Err(GrimmettError::LambdaOutOfRange {
            lambda: lambda.clone(),
        });
    }
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(GrimmettError::InvalidInstance(violations));
    }
    let mut state = TrajectoryState::new(inst.n);
    let mut shifted = lambda.clone();
    for t in 1..=inst.horizon() {
        let votes = inst.vote_vector(t).expect("validated instance");
        let before = shifted.floor_int();
        shifted += votes.entry(0);
        let fires = shifted.floor_int() > before;
        let chosen: BTreeSet<usize> = match votes.house() {
            0 => BTreeSet::new(),
            1 if fires => BTreeSet::from([0]),
            1 => BTreeSet::from([1]),
            h => unreachable!("two-party house {h} exceeds 1"),
        };
        state.push(votes, chosen)?;
    }
    Ok(state)
}

/// Exact rational offset derived from a seed, for seed-reproducible
/// systematic sampling.
pub fn grimmett_lambda_from_seed(seed: u64, stream: u64) -> Rational {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let numer = rng.gen_bigint_range(&BigInt::zero(), &(BigInt::from(1u8) << 64));
    Rational::from_big(numer, BigInt::from(1u8) << 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn rats(pairs: &[(i64, i64)]) -> Vec<Rational> {
        pairs.iter().map(|&(n, d)| Rational::new(n, d)).collect()
    }

    fn fig2_instance() -> Instance {
        Instance::new(
            3,
            vec![
                rats(&[(3, 5), (3, 10), (1, 10)]),
                rats(&[(1, 2), (1, 5), (3, 10)]),
            ],
        )
    }

    #[test]
    fn first_step_matches_votes() {
        let inst = fig2_instance();
        let dist = QuotaDistribution::initial(3);
        let votes = inst.vote_vector(1).unwrap();
        let adv = advance(&dist, &vec![rat!(0); 3], &votes).unwrap();
        // pi'({i}) = v^1_i.
        assert_eq!(adv.next.pi.len(), 3);
        for (i, expected) in [(0usize, rat!(3 / 5)), (1, rat!(3 / 10)), (2, rat!(1 / 10))] {
            assert_eq!(adv.next.pi[&BTreeSet::from([i])], expected);
        }
        let marginals = adv.marginals(&dist, 3);
        assert_eq!(marginals, votes.entries().to_vec());
    }

    #[test]
    fn fig2_network_capacities_and_flow() {
        let inst = fig2_instance();
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let record = &method.records()[1];
        let spec = build_step_network(&record.dist_before, &record.cum_votes_before, &record.votes)
            .unwrap();
        let u = |parties: &[usize]| -> UpperSet { parties.iter().copied().collect() };
        let cap = |arc: usize| -> (Rational, Rational) {
            let a = &spec.network.arcs[arc];
            (a.lower.clone(), a.upper.clone())
        };
        // Source arcs carry pi({i}) = v^1_i.
        assert_eq!(cap(spec.source_arcs[&u(&[0])]), (rat!(0), rat!(3 / 5)));
        assert_eq!(cap(spec.source_arcs[&u(&[1])]), (rat!(0), rat!(3 / 10)));
        assert_eq!(cap(spec.source_arcs[&u(&[2])]), (rat!(0), rat!(1 / 10)));
        // Assignment arcs out of {0} are open at pi/H = 3/5.
        for i in 0..3 {
            assert_eq!(cap(spec.assign_arcs[&(u(&[0]), i)]), (rat!(0), rat!(3 / 5)));
        }
        // Forced arcs ({1}, 0) and ({2}, 0): party 0's floor increases.
        assert_eq!(
            cap(spec.assign_arcs[&(u(&[1]), 0)]),
            (rat!(3 / 10), rat!(3 / 10))
        );
        assert_eq!(
            cap(spec.assign_arcs[&(u(&[2]), 0)]),
            (rat!(1 / 10), rat!(1 / 10))
        );
        // Ceiling already matched and not increasing: closed arcs.
        assert_eq!(cap(spec.assign_arcs[&(u(&[1]), 1)]), (rat!(0), rat!(0)));
        assert_eq!(cap(spec.assign_arcs[&(u(&[2]), 2)]), (rat!(0), rat!(0)));
        // Open cross arcs.
        assert_eq!(
            cap(spec.assign_arcs[&(u(&[1]), 2)]),
            (rat!(0), rat!(3 / 10))
        );
        assert_eq!(
            cap(spec.assign_arcs[&(u(&[2]), 1)]),
            (rat!(0), rat!(1 / 10))
        );
        // Sink arcs carry v^2_i.
        assert_eq!(cap(spec.sink_arcs[0]), (rat!(0), rat!(1 / 2)));
        assert_eq!(cap(spec.sink_arcs[1]), (rat!(0), rat!(1 / 5)));
        assert_eq!(cap(spec.sink_arcs[2]), (rat!(0), rat!(3 / 10)));

        // The unique feasible flow of value one.
        let flow = feasible_flow(&spec.network, &Rational::one())
            .unwrap()
            .feasible()
            .unwrap();
        let at = |arc: usize| flow.values[arc].clone();
        assert_eq!(at(spec.assign_arcs[&(u(&[0]), 0)]), rat!(1 / 10));
        assert_eq!(at(spec.assign_arcs[&(u(&[0]), 1)]), rat!(1 / 5));
        assert_eq!(at(spec.assign_arcs[&(u(&[0]), 2)]), rat!(3 / 10));
        assert_eq!(at(spec.assign_arcs[&(u(&[1]), 2)]), rat!(0));
        assert_eq!(at(spec.assign_arcs[&(u(&[2]), 1)]), rat!(0));
        // Every other arc sits at its upper capacity.
        for (key, &arc) in &spec.assign_arcs {
            if ![
                (u(&[0]), 0),
                (u(&[0]), 1),
                (u(&[0]), 2),
                (u(&[1]), 2),
                (u(&[2]), 1),
            ]
            .contains(key)
            {
                assert_eq!(flow.values[arc], spec.network.arcs[arc].upper, "{key:?}");
            }
        }
        for &arc in spec.source_arcs.values() {
            assert_eq!(flow.values[arc], spec.network.arcs[arc].upper);
        }
        for &arc in &spec.sink_arcs {
            assert_eq!(flow.values[arc], spec.network.arcs[arc].upper);
        }

        // Conditional assignment from u = {0}: party 0 w.p. 1/6, party 1
        // w.p. 1/3, party 2 w.p. 1/2.
        let z = &record.lotteries[&u(&[0])].z;
        assert_eq!(z, &vec![rat!(1 / 6), rat!(1 / 3), rat!(1 / 2)]);
    }

    #[test]
    fn zero_votes_close_assignment_arcs() {
        let dist = QuotaDistribution::initial(3);
        let votes = VoteVector::new(rats(&[(1, 2), (1, 2), (0, 1)])).unwrap();
        let spec = build_step_network(&dist, &vec![rat!(0); 3], &votes).unwrap();
        let u: UpperSet = (0..3).collect();
        let arc = spec.assign_arcs[&(u, 2)];
        assert_eq!(spec.network.arcs[arc].upper, rat!(0));
    }

    #[test]
    fn four_party_witness_infeasible_at_step_two() {
        let inst = Instance::new(
            4,
            vec![
                rats(&[(1, 2), (1, 2), (1, 2), (1, 2)]),
                rats(&[(1, 2), (1, 2), (0, 1), (0, 1)]),
            ],
        );
        let err = NetworkFlowMethod::run(&inst).unwrap_err();
        let (step, witness) = err.witness().expect("infeasible step");
        assert_eq!(step, 2);
        assert!(witness.lower_into_cut > witness.upper_out_of_cut);
        // The blocked upper set {0, 1} has positive probability but zero
        // outgoing capacity.
        let dist = {
            let d = QuotaDistribution::initial(4);
            let v1 = inst.vote_vector(1).unwrap();
            advance(&d, &vec![rat!(0); 4], &v1).unwrap().next
        };
        let blocked: UpperSet = BTreeSet::from([0, 1]);
        assert!(dist.pi[&blocked].is_positive());
        let spec = build_step_network(
            &dist,
            &rats(&[(1, 2), (1, 2), (1, 2), (1, 2)]),
            &inst.vote_vector(2).unwrap(),
        )
        .unwrap();
        for i in 0..4 {
            let arc = spec.assign_arcs[&(blocked.clone(), i)];
            assert_eq!(spec.network.arcs[arc].upper, rat!(0));
        }
    }

    #[test]
    fn counterexample_distribution_and_correlation() {
        let inst = Instance::new(
            3,
            vec![
                rats(&[(1, 2), (1, 2), (0, 1)]),
                rats(&[(0, 1), (3, 5), (2, 5)]),
                rats(&[(0, 1), (1, 5), (4, 5)]),
            ],
        );
        let method = NetworkFlowMethod::run(&inst).unwrap();
        for record in method.records() {
            assert_eq!(record.marginals, record.votes.entries().to_vec());
        }
        let dist = method.trajectory_distribution();
        let mut table: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (traj, p) in &dist {
            let key: Vec<usize> = traj
                .iter()
                .map(|s| *s.iter().next().expect("one seat per step"))
                .collect();
            *table.entry(key).or_insert_with(Rational::zero) += p;
        }
        assert_eq!(table.len(), 4);
        assert_eq!(table[&vec![0, 1, 2]], rat!(1 / 2));
        assert_eq!(table[&vec![1, 1, 2]], rat!(1 / 10));
        assert_eq!(table[&vec![1, 2, 1]], rat!(1 / 5));
        assert_eq!(table[&vec![1, 2, 2]], rat!(1 / 5));

        // P[a^3_1 = 1 | a^1_1 = 0] = 0 < 1/5 = P[a^3_1 = 1].
        let conditional = conditional_seat_probability(&dist, 1, 3, (1, 1, false)).unwrap();
        assert_eq!(conditional, rat!(0));
        assert_eq!(seat_probability(&dist, 1, 3), rat!(1 / 5));
        // The formal negative-correlation check fails as well: conditioning
        // on party 1 seated at step 1 raises its step-3 probability.
        let check = check_negative_correlation(&dist, 1, 3, 1).unwrap();
        assert_eq!(check.conditional, rat!(2 / 5));
        assert_eq!(check.unconditional, rat!(1 / 5));
        assert!(!check.satisfied());
    }

    #[test]
    fn independent_single_step_has_equal_conditionals() {
        let inst = Instance::new(2, vec![rats(&[(1, 2), (1, 2)])]);
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let dist = method.trajectory_distribution();
        let check = check_negative_correlation(&dist, 0, 1, 1).unwrap();
        // Trivially conditional on itself.
        assert_eq!(check.conditional, rat!(1));
        assert_eq!(check.unconditional, rat!(1 / 2));
    }

    #[test]
    fn sampled_trajectories_respect_quota_and_support() {
        let inst = fig2_instance();
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let support = method.trajectory_distribution();
        assert_eq!(support.len(), 5);
        for seed in 0..40u64 {
            let traj = method.sample(7, seed);
            assert!(traj.check_global_quota().is_ok());
            let realized: Vec<BTreeSet<usize>> =
                traj.steps().map(|(_, chosen)| chosen.clone()).collect();
            assert!(
                support.iter().any(|(t, _)| *t == realized),
                "sampled trajectory outside the exact support"
            );
        }
        // Determinism per (seed, stream).
        assert_eq!(method.sample(3, 5), method.sample(3, 5));
    }

    #[test]
    fn empty_step_is_identity() {
        let inst = Instance::new(1, vec![vec![rat!(0)], vec![rat!(0)]]);
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let traj = method.sample(1, 0);
        assert_eq!(traj.cumulative_seats(), &[0]);
        assert!(traj.check_global_quota().is_ok());
    }

    #[test]
    fn tracker_invariants_on_fig2() {
        let inst = fig2_instance();
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let mut cum = vec![rat!(0); 3];
        for record in method.records() {
            let problems = check_quota_distribution(&record.dist_before, &cum);
            assert!(problems.is_empty(), "{problems:?}");
            for i in 0..3 {
                cum[i] += record.votes.entry(i);
            }
        }
        let problems = check_quota_distribution(method.final_distribution(), &cum);
        assert!(problems.is_empty(), "{problems:?}");
    }

    #[test]
    fn injected_flow_realizes_alternative_method() {
        // First step (3/5, 3/10, 1/10), second step with no closed or
        // forced arcs: singleton upper sets, one seat, no ceiling increase.
        let inst = Instance::new(
            3,
            vec![
                rats(&[(3, 5), (3, 10), (1, 10)]),
                rats(&[(1, 5), (2, 5), (2, 5)]),
            ],
        );
        let dist = {
            let d = QuotaDistribution::initial(3);
            advance(&d, &vec![rat!(0); 3], &inst.vote_vector(1).unwrap())
                .unwrap()
                .next
        };
        let cum = rats(&[(3, 5), (3, 10), (1, 10)]);
        let votes = inst.vote_vector(2).unwrap();
        let spec = build_step_network(&dist, &cum, &votes).unwrap();
        // All diagonal arcs are closed; the off-diagonal flow has one degree
        // of freedom c = f(({2}, 0)) in [0, 1/10]. Realize both extremes.
        let u = |parties: &[usize]| -> UpperSet { parties.iter().copied().collect() };
        let build = |c: Rational| -> Flow {
            let mut values = vec![rat!(0); spec.network.arcs.len()];
            for (set, prob) in &dist.pi {
                values[spec.source_arcs[set]] = prob.clone();
            }
            for i in 0..3 {
                values[spec.sink_arcs[i]] = votes.entry(i).clone();
            }
            values[spec.assign_arcs[&(u(&[2]), 0)]] = c.clone();
            values[spec.assign_arcs[&(u(&[2]), 1)]] = rat!(1 / 10) - &c;
            values[spec.assign_arcs[&(u(&[1]), 0)]] = rat!(1 / 5) - &c;
            values[spec.assign_arcs[&(u(&[1]), 2)]] = rat!(1 / 10) + &c;
            values[spec.assign_arcs[&(u(&[0]), 1)]] = rat!(3 / 10) + &c;
            values[spec.assign_arcs[&(u(&[0]), 2)]] = rat!(3 / 10) - &c;
            Flow { values }
        };
        let mut advs = Vec::new();
        for c in [rat!(0), rat!(1 / 10)] {
            let flow = build(c);
            assert!(flow.is_feasible(&spec.network));
            let adv = advance_with_flow(&dist, &cum, &votes, flow).unwrap();
            // Each injected method still meets the marginals exactly.
            assert_eq!(adv.marginals(&dist, 3), votes.entries().to_vec());
            // Successor states remain quota-consistent.
            let mut next_votes = cum.clone();
            for i in 0..3 {
                next_votes[i] += votes.entry(i);
            }
            assert!(check_quota_distribution(&adv.next, &next_votes).is_empty());
            advs.push(adv);
        }
        // Two distinct valid methods realized on the same history.
        assert_ne!(advs[0].lotteries[&u(&[0])].z, advs[1].lotteries[&u(&[0])].z);
        // A flow breaking a closed arc is rejected.
        let mut bad = build(rat!(0));
        bad.values[spec.assign_arcs[&(u(&[0]), 0)]] = rat!(1 / 100);
        assert!(matches!(
            advance_with_flow(&dist, &cum, &votes, bad),
            Err(AdvanceError::BadInjectedFlow)
        ));
    }

    #[test]
    fn grimmett_third_step_seat() {
        let inst = Instance::repeated(rats(&[(1, 3), (2, 3)]), 3);
        let state = grimmett_sample(&inst, &rat!(0)).unwrap();
        let seats: Vec<BTreeSet<usize>> = state.steps().map(|(_, chosen)| chosen.clone()).collect();
        assert_eq!(seats[0], BTreeSet::from([1]));
        assert_eq!(seats[1], BTreeSet::from([1]));
        assert_eq!(seats[2], BTreeSet::from([0]));
        assert!(state.check_global_quota().is_ok());
    }

    #[test]
    fn grimmett_rejects_bad_inputs() {
        let inst = Instance::repeated(rats(&[(1, 3), (2, 3)]), 2);
        assert!(matches!(
            grimmett_sample(&inst, &rat!(1)),
            Err(GrimmettError::LambdaOutOfRange { .. })
        ));
        let three = Instance::repeated(rats(&[(1, 3), (1, 3), (1, 3)]), 1);
        assert!(matches!(
            grimmett_sample(&three, &rat!(0)),
            Err(GrimmettError::TooManyParties { n: 3 })
        ));
    }

    #[test]
    fn sampling_frequencies_match_exact_distribution() {
        // Empirical trajectory frequencies over 10^5 samples stay within
        // four standard errors of the exact probabilities.
        let inst = Instance::new(
            3,
            vec![
                rats(&[(1, 2), (1, 2), (0, 1)]),
                rats(&[(0, 1), (3, 5), (2, 5)]),
                rats(&[(0, 1), (1, 5), (4, 5)]),
            ],
        );
        let method = NetworkFlowMethod::run(&inst).unwrap();
        let exact = method.trajectory_distribution();
        let trials = 100_000u64;
        let mut counts: BTreeMap<Vec<BTreeSet<usize>>, u64> = BTreeMap::new();
        for trial in 0..trials {
            let traj = method.sample(99, trial);
            let key: Vec<BTreeSet<usize>> =
                traj.steps().map(|(_, chosen)| chosen.clone()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), exact.len());
        for (traj, p) in &exact {
            let expected = p.to_f64() * trials as f64;
            let sigma = (trials as f64 * p.to_f64() * (1.0 - p.to_f64())).sqrt();
            let observed = counts[traj] as f64;
            assert!(
                (observed - expected).abs() <= 4.0 * sigma,
                "{traj:?}: observed {observed}, expected {expected}, sigma {sigma}"
            );
        }
    }

    #[test]
    fn injected_product_flow_gives_independent_steps() {
        // Steps on disjoint party sets leave the step network ambiguous;
        // injecting the product flow realizes the method whose second step
        // ignores the first, making the conditionals equal by construction.
        let v1 = VoteVector::new(rats(&[(1, 2), (1, 2), (0, 1), (0, 1)])).unwrap();
        let v2 = VoteVector::new(rats(&[(0, 1), (0, 1), (1, 2), (1, 2)])).unwrap();
        let adv1 = advance(&QuotaDistribution::initial(4), &vec![rat!(0); 4], &v1).unwrap();
        let dist1 = adv1.next.clone();
        let cum1 = v1.entries().to_vec();
        let spec = build_step_network(&dist1, &cum1, &v2).unwrap();
        let mut values = vec![rat!(0); spec.network.arcs.len()];
        for (u, prob) in &dist1.pi {
            values[spec.source_arcs[u]] = prob.clone();
            for i in 0..4 {
                values[spec.assign_arcs[&(u.clone(), i)]] = prob * v2.entry(i);
            }
        }
        for i in 0..4 {
            values[spec.sink_arcs[i]] = v2.entry(i).clone();
        }
        let adv2 = advance_with_flow(&dist1, &cum1, &v2, Flow { values }).unwrap();
        // Identical conditional assignment from every upper set.
        for lottery in adv2.lotteries.values() {
            assert_eq!(lottery.z, v2.entries().to_vec());
        }
        // Joint distribution is the product; conditioning on step one does
        // not move step two.
        let first = &adv1.lotteries[&(0..4).collect::<UpperSet>()];
        let second = adv2.lotteries.values().next().unwrap();
        let mut dist = Vec::new();
        for (w1, s1) in &first.sets {
            for (w2, s2) in &second.sets {
                dist.push((vec![s1.clone(), s2.clone()], w1 * w2));
            }
        }
        for party in [2usize, 3] {
            let unconditional = seat_probability(&dist, party, 2);
            assert_eq!(unconditional, *v2.entry(party));
            for value in [true, false] {
                let conditional =
                    conditional_seat_probability(&dist, party, 2, (0, 1, value)).unwrap();
                assert_eq!(conditional, unconditional);
            }
        }
        // Conditioning on an impossible event is flagged.
        assert_eq!(
            conditional_seat_probability(&dist, 2, 2, (2, 1, true)),
            Err(UndefinedConditional)
        );
    }

    #[test]
    fn grimmett_correlation_structure() {
        // Exact trajectory distribution of systematic sampling from the
        // offset intervals. The shared offset makes the fired regions of
        // consecutive steps adjacent arcs, so consecutive steps are always
        // negatively correlated; distant steps need not be, and the fixed
        // instance below witnesses a strict violation at (t, t') = (1, 3).
        let inst = Instance::new(
            2,
            vec![
                rats(&[(1, 3), (2, 3)]),
                rats(&[(3, 5), (2, 5)]),
                rats(&[(1, 2), (1, 2)]),
                rats(&[(3, 10), (7, 10)]),
            ],
        );
        let mut cuts: BTreeSet<Rational> = BTreeSet::from([Rational::zero()]);
        let mut cum = Rational::zero();
        for row in &inst.votes {
            cum += &row[0];
            if !cum.is_integer() {
                cuts.insert(cum.ceil() - &cum);
            }
        }
        let mut points: Vec<Rational> = cuts.into_iter().collect();
        points.push(Rational::one());
        let mut dist: Vec<(Vec<BTreeSet<usize>>, Rational)> = Vec::new();
        for window in points.windows(2) {
            let measure = &window[1] - &window[0];
            let traj = grimmett_sample(&inst, &window[0]).unwrap();
            dist.push((
                traj.steps().map(|(_, chosen)| chosen.clone()).collect(),
                measure,
            ));
        }
        let total: Rational = dist.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, Rational::one());
        for party in 0..2 {
            for t in 1..=inst.horizon() {
                assert_eq!(seat_probability(&dist, party, t), inst.votes[t - 1][party]);
            }
            // Consecutive steps: the fired arcs are adjacent, hence
            // disjoint up to wraparound, and overlap never exceeds the
            // product of the lengths.
            for t in 1..inst.horizon() {
                for (a, b) in [(t, t + 1), (t + 1, t)] {
                    if let Ok(check) = check_negative_correlation(&dist, party, a, b) {
                        assert!(
                            check.satisfied(),
                            "party {party}, consecutive ({a}, {b}): {} > {}",
                            check.conditional,
                            check.unconditional
                        );
                    }
                }
            }
        }
        // Distant pair (1, 3) for party 0: the fired arcs overlap on
        // [2/3, 1), and conditioning raises 1/3 to 2/3.
        let check = check_negative_correlation(&dist, 0, 1, 3).unwrap();
        assert_eq!(check.conditional, rat!(2 / 3));
        assert_eq!(check.unconditional, rat!(1 / 3));
        assert!(!check.satisfied());
    }

    #[test]
    fn grimmett_single_party_empty() {
        let inst = Instance::repeated(vec![rat!(0)], 4);
        let state = grimmett_sample(&inst, &rat!(1 / 3)).unwrap();
        assert_eq!(state.cumulative_seats(), &[0]);
    }
}
