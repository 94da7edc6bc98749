//! Offline lottery over deterministic global-quota methods.
//!
//! With the whole horizon known, a layered network ties each step's seats to
//! per-party cumulative arcs bounded by the floor and ceiling of the
//! cumulative votes. The proportional fractional flow (each step arc carries
//! the vote share itself) is feasible, and decomposing it into integral
//! flows yields a lottery over deterministic methods that all satisfy global
//! quota while meeting every per-step vote share exactly in expectation.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::flow::{decompose_integral, CapacitatedNetwork, DecomposeError, Flow};
use crate::instance::{Instance, StepError, TrajectoryState, Violation};
use crate::rational::Rational;

/// The horizon network plus arc lookups: `seat_arcs[t-1][i]` is the unit
/// arc giving party `i` a seat at step `t`, absent when `v^t_i = 0`.
#[derive(Debug, Clone)]
pub struct OfflineNetworkSpec {
    pub network: CapacitatedNetwork,
    pub house_arcs: Vec<usize>,
    pub seat_arcs: Vec<Vec<Option<usize>>>,
    pub carry_arcs: Vec<Vec<usize>>,
}

#[derive(Debug, thiserror::Error)]
pub enum OfflineError {
    #[error("invalid instance: {0:?}")]
    InvalidInstance(Vec<Violation>),
    #[error("decomposition failed: {0}")]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Builds the layered horizon network for a valid instance.
pub fn build_offline_network(inst: &Instance) -> Result<OfflineNetworkSpec, OfflineError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(OfflineError::InvalidInstance(violations));
    }
    let horizon = inst.horizon();
    let n = inst.n;
    let mut network = CapacitatedNetwork::new("o", "d");
    let step_nodes: Vec<usize> = (1..=horizon)
        .map(|t| network.add_node(format!("u^{t}")))
        .collect();
    let party_nodes: Vec<Vec<usize>> = (1..=horizon)
        .map(|t| {
            (0..n)
                .map(|i| network.add_node(format!("w^{t}_{i}")))
                .collect()
        })
        .collect();

    let mut house_arcs = Vec::with_capacity(horizon);
    let mut seat_arcs = Vec::with_capacity(horizon);
    let mut carry_arcs = Vec::with_capacity(horizon);
    let mut cum = vec![Rational::zero(); n];
    for t in 1..=horizon {
        let votes = inst.vote_vector(t).expect("validated instance");
        house_arcs.push(network.add_arc(
            network.origin,
            step_nodes[t - 1],
            Rational::zero(),
            Rational::from(votes.house()),
        ));
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            if votes.entry(i).is_positive() {
                row.push(Some(network.add_arc(
                    step_nodes[t - 1],
                    party_nodes[t - 1][i],
                    Rational::zero(),
                    Rational::one(),
                )));
            } else {
                row.push(None);
            }
            cum[i] += votes.entry(i);
        }
        seat_arcs.push(row);
        let mut carries = Vec::with_capacity(n);
        for i in 0..n {
            let head = if t == horizon {
                network.dest
            } else {
                party_nodes[t][i]
            };
            carries.push(network.add_arc(
                party_nodes[t - 1][i],
                head,
                cum[i].floor(),
                cum[i].ceil(),
            ));
        }
        carry_arcs.push(carries);
    }
    Ok(OfflineNetworkSpec {
        network,
        house_arcs,
        seat_arcs,
        carry_arcs,
    })
}

/// The fractional flow that routes each step's vote shares directly: seat
/// arcs carry `v^t_i` and carry arcs the cumulative `V^t_i`. Always feasible
/// for a valid instance.
pub fn proportional_flow(spec: &OfflineNetworkSpec, inst: &Instance) -> Flow {
    let mut values = vec![Rational::zero(); spec.network.arcs.len()];
    let mut cum = vec![Rational::zero(); inst.n];
    for t in 1..=inst.horizon() {
        let votes = inst.vote_vector(t).expect("validated instance");
        values[spec.house_arcs[t - 1]] = Rational::from(votes.house());
        for i in 0..inst.n {
            if let Some(arc) = spec.seat_arcs[t - 1][i] {
                values[arc] = votes.entry(i).clone();
            }
            cum[i] += votes.entry(i);
            values[spec.carry_arcs[t - 1][i]] = cum[i].clone();
        }
    }
    Flow { values }
}

/// A lottery over deterministic offline methods: positive weights summing
/// to one, every component satisfying global quota, and the weighted seat
/// indicators reproducing each vote share exactly.
#[derive(Debug, Clone, Serialize)]
pub struct OfflineLottery {
    pub components: Vec<OfflineComponent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OfflineComponent {
    pub weight: Rational,
    pub sets: Vec<BTreeSet<usize>>,
}

impl OfflineLottery {
    /// `sum_j weight_j [i in X^t_j]`, the probability party `i` is seated
    /// at step `t` (1-based).
    pub fn marginal(&self, t: usize, party: usize) -> Rational {
        self.components
            .iter()
            .filter(|c| c.sets[t - 1].contains(&party))
            .map(|c| c.weight.clone())
            .sum()
    }

    pub fn total_weight(&self) -> Rational {
        self.components.iter().map(|c| c.weight.clone()).sum()
    }

    /// Replays one component as a trajectory of the instance.
    pub fn component_trajectory(
        &self,
        inst: &Instance,
        index: usize,
    ) -> Result<TrajectoryState, StepError> {
        let mut state = TrajectoryState::new(inst.n);
        for (t, chosen) in self.components[index].sets.iter().enumerate() {
            let votes = inst.vote_vector(t + 1)?;
            state.push(votes, chosen.clone())?;
        }
        Ok(state)
    }
}

/// Builds the offline lottery: proportional flow, integral decomposition,
/// and the seat sets `X^t = { i : f((u^t, w^t_i)) = 1 }` per component.
pub fn offline_lottery(inst: &Instance) -> Result<OfflineLottery, OfflineError> {
    let spec = build_offline_network(inst)?;
    if inst.horizon() == 0 {
        return Ok(OfflineLottery {
            components: vec![OfflineComponent {
                weight: Rational::one(),
                sets: Vec::new(),
            }],
        });
    }
    let fractional = proportional_flow(&spec, inst);
    debug_assert!(fractional.is_feasible(&spec.network));
    let parts = decompose_integral(&spec.network, &fractional)?;
    let components = parts
        .into_iter()
        .map(|(weight, flow)| {
            let sets = spec
                .seat_arcs
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, arc)| arc.is_some_and(|a| flow.values[a] == Rational::one()))
                        .map(|(i, _)| i)
                        .collect::<BTreeSet<usize>>()
                })
                .collect();
            OfflineComponent { weight, sets }
        })
        .collect();
    Ok(OfflineLottery { components })
}
