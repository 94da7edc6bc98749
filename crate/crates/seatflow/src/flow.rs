//! Capacitated networks over exact rationals: feasible `(o,d)`-flows with
//! lower bounds, decomposition of fractional flows into convex combinations
//! of integral flows, and hypersimplex decomposition of fractional vectors.
//!
//! Rational capacities are scaled to a common denominator, the lower bounds
//! are eliminated by the standard excess transformation, and the resulting
//! integer max-flow instance is solved with shortest augmenting paths. All
//! answers are exact; infeasibility comes with a violated-cut certificate.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// Directed arc with rational capacity bounds `lower <= flow <= upper`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArc {
    pub tail: usize,
    pub head: usize,
    pub lower: Rational,
    pub upper: Rational,
}

/// A directed network with distinguished origin and destination nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacitatedNetwork {
    pub nodes: Vec<String>,
    pub origin: usize,
    pub dest: usize,
    pub arcs: Vec<NetArc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetworkError {
    #[error("arc {arc} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        arc: usize,
        lower: Rational,
        upper: Rational,
    },
    #[error("arc {arc} references node {node} out of range")]
    BadNode { arc: usize, node: usize },
    #[error("requested flow value {value} is negative")]
    NegativeValue { value: Rational },
}

impl CapacitatedNetwork {
    /// Fresh network containing only the origin and destination.
    pub fn new(origin_label: &str, dest_label: &str) -> Self {
        CapacitatedNetwork {
            nodes: vec![origin_label.to_string(), dest_label.to_string()],
            origin: 0,
            dest: 1,
            arcs: Vec::new(),
        }
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> usize {
        self.nodes.push(label.into());
        self.nodes.len() - 1
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, lower: Rational, upper: Rational) -> usize {
        debug_assert!(!lower.is_negative() && lower <= upper);
        self.arcs.push(NetArc {
            tail,
            head,
            lower,
            upper,
        });
        self.arcs.len() - 1
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        for (idx, arc) in self.arcs.iter().enumerate() {
            if arc.tail >= self.nodes.len() {
                return Err(NetworkError::BadNode {
                    arc: idx,
                    node: arc.tail,
                });
            }
            if arc.head >= self.nodes.len() {
                return Err(NetworkError::BadNode {
                    arc: idx,
                    node: arc.head,
                });
            }
            if arc.lower.is_negative() || arc.lower > arc.upper {
                return Err(NetworkError::InvalidBounds {
                    arc: idx,
                    lower: arc.lower.clone(),
                    upper: arc.upper.clone(),
                });
            }
        }
        Ok(())
    }

    /// True iff every arc bound is an integer.
    pub fn has_integral_bounds(&self) -> bool {
        self.arcs
            .iter()
            .all(|a| a.lower.is_integer() && a.upper.is_integer())
    }

    pub fn arc_index(&self, tail: usize, head: usize) -> Option<usize> {
        self.arcs
            .iter()
            .position(|a| a.tail == tail && a.head == head)
    }
}

/// Per-arc flow values, parallel to [`CapacitatedNetwork::arcs`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub values: Vec<Rational>,
}

impl Flow {
    /// Net outflow of the origin.
    pub fn value(&self, net: &CapacitatedNetwork) -> Rational {
        let mut total = Rational::zero();
        for (arc, f) in net.arcs.iter().zip(&self.values) {
            if arc.tail == net.origin {
                total += f;
            }
            if arc.head == net.origin {
                total -= f;
            }
        }
        total
    }

    /// Exact feasibility: capacity bounds on every arc and conservation at
    /// every node other than origin and destination.
    pub fn is_feasible(&self, net: &CapacitatedNetwork) -> bool {
        if self.values.len() != net.arcs.len() {
            return false;
        }
        for (arc, f) in net.arcs.iter().zip(&self.values) {
            if *f < arc.lower || *f > arc.upper {
                return false;
            }
        }
        let mut balance = vec![Rational::zero(); net.nodes.len()];
        for (arc, f) in net.arcs.iter().zip(&self.values) {
            balance[arc.tail] -= f;
            balance[arc.head] += f;
        }
        balance
            .iter()
            .enumerate()
            .all(|(i, b)| i == net.origin || i == net.dest || b.is_zero())
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(Rational::is_integer)
    }
}

/// A cut certifying that no feasible flow of the requested value exists:
/// the lower bounds forced into the cut exceed the capacity leaving it
/// (Hoffman's condition, with the implicit `dest -> origin` return arc of
/// the requested value included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityWitness {
    pub cut: BTreeSet<usize>,
    pub cut_labels: Vec<String>,
    pub lower_into_cut: Rational,
    pub upper_out_of_cut: Rational,
}

impl fmt::Display for InfeasibilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cut {{{}}} requires inflow >= {} but has outgoing capacity {}",
            self.cut_labels.join(", "),
            self.lower_into_cut,
            self.upper_out_of_cut
        )
    }
}

/// Result of a feasible-flow computation; infeasibility is data, not an
/// error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowOutcome {
    Feasible(Flow),
    Infeasible(InfeasibilityWitness),
}

impl FlowOutcome {
    pub fn feasible(self) -> Option<Flow> {
        match self {
            FlowOutcome::Feasible(f) => Some(f),
            FlowOutcome::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, FlowOutcome::Feasible(_))
    }
}

/// Computes an exact `(o,d)`-flow of the requested value respecting all
/// lower and upper capacities, or a violated-cut certificate.
pub fn feasible_flow(
    net: &CapacitatedNetwork,
    value: &Rational,
) -> Result<FlowOutcome, NetworkError> {
    net.validate()?;
    if value.is_negative() {
        return Err(NetworkError::NegativeValue {
            value: value.clone(),
        });
    }
    // Common denominator of all bounds and the value.
    let mut scale = BigInt::one();
    for arc in &net.arcs {
        scale = scale.lcm(arc.lower.denom());
        scale = scale.lcm(arc.upper.denom());
    }
    scale = scale.lcm(value.denom());
    let to_int = |r: &Rational| -> BigInt {
        let scaled = r * &Rational::from_bigint(scale.clone());
        debug_assert!(scaled.is_integer());
        scaled.floor_int()
    };
    let mut arcs_int: Vec<(usize, usize, BigInt, BigInt)> = net
        .arcs
        .iter()
        .map(|a| (a.tail, a.head, to_int(&a.lower), to_int(&a.upper)))
        .collect();
    // Return arc pins the flow value and turns the problem into a
    // circulation.
    let int_value = to_int(value);
    arcs_int.push((net.dest, net.origin, int_value.clone(), int_value));

    match feasible_circulation_int(net.nodes.len(), &arcs_int) {
        Ok(values) => {
            let denom = Rational::from_bigint(scale);
            let flow = Flow {
                values: values
                    .into_iter()
                    .take(net.arcs.len())
                    .map(|v| Rational::from_bigint(v) / &denom)
                    .collect(),
            };
            debug_assert!(flow.is_feasible(net));
            debug_assert_eq!(flow.value(net), *value);
            Ok(FlowOutcome::Feasible(flow))
        }
        Err(in_cut) => {
            let cut: BTreeSet<usize> = (0..net.nodes.len()).filter(|&x| in_cut[x]).collect();
            let mut lower_in = Rational::zero();
            let mut upper_out = Rational::zero();
            let mut tally = |tail: usize, head: usize, lower: &Rational, upper: &Rational| {
                if !cut.contains(&tail) && cut.contains(&head) {
                    lower_in += lower;
                }
                if cut.contains(&tail) && !cut.contains(&head) {
                    upper_out += upper;
                }
            };
            for arc in &net.arcs {
                tally(arc.tail, arc.head, &arc.lower, &arc.upper);
            }
            tally(net.dest, net.origin, value, value);
            debug_assert!(lower_in > upper_out);
            Ok(FlowOutcome::Infeasible(InfeasibilityWitness {
                cut_labels: cut.iter().map(|&x| net.nodes[x].clone()).collect(),
                cut,
                lower_into_cut: lower_in,
                upper_out_of_cut: upper_out,
            }))
        }
    }
}

/// Feasible circulation with integer bounds, via lower-bound elimination and
/// max-flow. On failure returns the residual source side, whose original
/// nodes violate Hoffman's condition.
fn feasible_circulation_int(
    num_nodes: usize,
    arcs: &[(usize, usize, BigInt, BigInt)],
) -> Result<Vec<BigInt>, Vec<bool>> {
    let source = num_nodes;
    let sink = num_nodes + 1;
    let mut mf = MaxFlowInt::new(num_nodes + 2);
    let mut excess = vec![BigInt::zero(); num_nodes];
    for &(tail, head, ref lo, ref hi) in arcs {
        mf.add_edge(tail, head, hi - lo);
        excess[head] += lo;
        excess[tail] -= lo;
    }
    let mut required = BigInt::zero();
    for (x, b) in excess.iter().enumerate() {
        if b.is_positive() {
            mf.add_edge(source, x, b.clone());
            required += b;
        } else if b.is_negative() {
            mf.add_edge(x, sink, -b);
        }
    }
    let pushed = mf.max_flow(source, sink);
    if pushed == required {
        let values = arcs
            .iter()
            .enumerate()
            .map(|(e, (_, _, lo, _))| lo + mf.flow_on(e))
            .collect();
        Ok(values)
    } else {
        let reachable = mf.residual_reachable(source);
        Err(reachable[..num_nodes].to_vec())
    }
}

/// Plain shortest-augmenting-path max-flow over big integers. Networks here
/// are tiny, so no scaling tricks are needed.
struct MaxFlowInt {
    to: Vec<usize>,
    cap: Vec<BigInt>,
    adj: Vec<Vec<usize>>,
}

impl MaxFlowInt {
    fn new(n: usize) -> Self {
        MaxFlowInt {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Edges are added in pairs; the forward edge of the `e`-th call is
    /// `2e`, its reverse `2e + 1`.
    fn add_edge(&mut self, from: usize, to: usize, cap: BigInt) {
        debug_assert!(!cap.is_negative());
        self.adj[from].push(self.to.len());
        self.to.push(to);
        self.cap.push(cap);
        self.adj[to].push(self.to.len());
        self.to.push(from);
        self.cap.push(BigInt::zero());
    }

    fn flow_on(&self, edge_pair: usize) -> BigInt {
        self.cap[2 * edge_pair + 1].clone()
    }

    fn max_flow(&mut self, s: usize, t: usize) -> BigInt {
        let mut total = BigInt::zero();
        loop {
            let mut parent: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if !seen[v] && self.cap[e].is_positive() {
                        seen[v] = true;
                        parent[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<BigInt> = None;
            let mut v = t;
            while v != s {
                let e = parent[v].unwrap();
                if bottleneck.as_ref().is_none_or(|b| self.cap[e] < *b) {
                    bottleneck = Some(self.cap[e].clone());
                }
                v = self.to[e ^ 1];
            }
            let push = bottleneck.unwrap();
            let mut v = t;
            while v != s {
                let e = parent[v].unwrap();
                self.cap[e] -= &push;
                self.cap[e ^ 1] += &push;
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if !seen[v] && self.cap[e].is_positive() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("network bounds must be integral")]
    NonIntegralBounds,
    #[error("flow is not feasible for the network")]
    InfeasibleInput,
    #[error("flow value {value} is not integral")]
    NonIntegralValue { value: Rational },
    #[error("internal extraction failure; residual should stay feasible")]
    Extraction,
}

/// Decomposes a feasible fractional flow on an integrally bounded network
/// into a convex combination of integral feasible flows of the same value.
///
/// Iterative extraction: while mass `mu` remains, pick an integral flow `h`
/// with `floor(g_e/mu) <= h_e <= ceil(g_e/mu)` (feasible because the rounded
/// polytope has integral vertices), peel off the largest multiple that keeps
/// the residual feasible, and recurse. Every iteration makes at least one
/// arc ratio integral, and integral ratios stay integral, so at most
/// `arcs + 1` components are produced.
pub fn decompose_integral(
    net: &CapacitatedNetwork,
    flow: &Flow,
) -> Result<Vec<(Rational, Flow)>, DecomposeError> {
    if !net.has_integral_bounds() {
        return Err(DecomposeError::NonIntegralBounds);
    }
    if !flow.is_feasible(net) {
        return Err(DecomposeError::InfeasibleInput);
    }
    let value = flow.value(net);
    if !value.is_integer() {
        return Err(DecomposeError::NonIntegralValue { value });
    }

    // Work on the circulation closure so every component keeps the value.
    let mut bounds: Vec<(usize, usize, BigInt, BigInt)> = net
        .arcs
        .iter()
        .map(|a| (a.tail, a.head, a.lower.floor_int(), a.upper.floor_int()))
        .collect();
    bounds.push((net.dest, net.origin, value.floor_int(), value.floor_int()));
    let mut residual: Vec<Rational> = flow.values.clone();
    residual.push(value);

    let mut mass = Rational::one();
    let mut components = Vec::new();
    while !mass.is_zero() {
        let ratios: Vec<Rational> = residual.iter().map(|g| g / &mass).collect();
        if ratios.iter().all(Rational::is_integer) {
            components.push((
                mass.clone(),
                Flow {
                    values: ratios[..net.arcs.len()].to_vec(),
                },
            ));
            break;
        }
        let rounded: Vec<(usize, usize, BigInt, BigInt)> = bounds
            .iter()
            .zip(&ratios)
            .map(|(&(tail, head, _, _), r)| (tail, head, r.floor_int(), r.ceil_int()))
            .collect();
        let h = feasible_circulation_int(net.nodes.len(), &rounded)
            .map_err(|_| DecomposeError::Extraction)?;
        // Largest multiple of h that keeps the residual within
        // (mass - lambda) * [lower, upper].
        let mut lambda = mass.clone();
        for ((g, h_e), (_, _, lo, hi)) in residual.iter().zip(&h).zip(&bounds) {
            let h_r = Rational::from_bigint(h_e.clone());
            let lo_r = Rational::from_bigint(lo.clone());
            let hi_r = Rational::from_bigint(hi.clone());
            if h_r > lo_r {
                let cap = (g - &mass * &lo_r) / (&h_r - &lo_r);
                lambda = lambda.min(cap);
            }
            if h_r < hi_r {
                let cap = (&mass * &hi_r - g) / (&hi_r - &h_r);
                lambda = lambda.min(cap);
            }
        }
        if !lambda.is_positive() {
            return Err(DecomposeError::Extraction);
        }
        for (g, h_e) in residual.iter_mut().zip(&h) {
            *g -= &lambda * &Rational::from_bigint(h_e.clone());
        }
        mass -= &lambda;
        components.push((
            lambda,
            Flow {
                values: h[..net.arcs.len()]
                    .iter()
                    .map(|v| Rational::from_bigint(v.clone()))
                    .collect(),
            },
        ));
    }
    Ok(components)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HypersimplexError {
    #[error("entry {party} = {value} outside [0, 1]")]
    EntryOutOfRange { party: usize, value: Rational },
    #[error("entries sum to {sum}, expected house {house}")]
    WrongSum { sum: Rational, house: u64 },
}

/// Decomposes `v` in the hypersimplex (entries in `[0, 1]` summing to
/// `house`) into a convex combination of at most `n` subsets of exactly
/// `house` indices, each avoiding zero entries of `v`, recombining exactly.
///
/// Greedy peeling: keep a residual `r` and remaining mass `mu`; each round
/// selects the `house` largest residuals (ties by lowest index) and
/// subtracts the largest weight that keeps `0 <= r_i <= mu` for all `i`.
/// Each round zeroes a coordinate or pins one to the remaining mass.
pub fn hypersimplex_decompose(
    v: &[Rational],
    house: u64,
) -> Result<Vec<(Rational, BTreeSet<usize>)>, HypersimplexError> {
    for (party, value) in v.iter().enumerate() {
        if value.is_negative() || *value > Rational::one() {
            return Err(HypersimplexError::EntryOutOfRange {
                party,
                value: value.clone(),
            });
        }
    }
    let sum: Rational = v.iter().sum();
    if sum != Rational::from(house) {
        return Err(HypersimplexError::WrongSum { sum, house });
    }

    let mut residual = v.to_vec();
    let mut mass = Rational::one();
    let mut out = Vec::new();
    while mass.is_positive() {
        let mut order: Vec<usize> = (0..residual.len()).collect();
        order.sort_by(|&a, &b| residual[b].cmp(&residual[a]).then(a.cmp(&b)));
        let chosen: BTreeSet<usize> = order[..house as usize].iter().copied().collect();

        let mut weight = mass.clone();
        for &i in &chosen {
            weight = weight.min(residual[i].clone());
        }
        for (j, r) in residual.iter().enumerate() {
            if !chosen.contains(&j) {
                weight = weight.min(&mass - r);
            }
        }
        debug_assert!(weight.is_positive(), "stalled hypersimplex peel");
        for &i in &chosen {
            residual[i] -= &weight;
        }
        mass -= &weight;
        out.push((weight, chosen));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_arc_net() -> CapacitatedNetwork {
        let mut net = CapacitatedNetwork::new("o", "d");
        net.add_arc(0, 1, rat!(0), rat!(1));
        net
    }

    #[test]
    fn single_arc_flow() {
        let net = single_arc_net();
        let flow = feasible_flow(&net, &rat!(1)).unwrap().feasible().unwrap();
        assert_eq!(flow.values, vec![rat!(1)]);
    }

    #[test]
    fn lower_bound_forces_infeasibility() {
        let mut net = CapacitatedNetwork::new("o", "d");
        let mid = net.add_node("m");
        net.add_arc(0, mid, rat!(0), rat!(1 / 2));
        net.add_arc(mid, 1, rat!(3 / 4), rat!(1));
        let outcome = feasible_flow(&net, &rat!(1)).unwrap();
        let witness = match outcome {
            FlowOutcome::Infeasible(w) => w,
            FlowOutcome::Feasible(_) => panic!("expected infeasible"),
        };
        assert!(witness.lower_into_cut > witness.upper_out_of_cut);
    }

    /// Exhaustive Hoffman check used as the independent oracle: a feasible
    /// flow of the given value exists iff no node subset has more lower
    /// bound entering than capacity leaving, with the return arc included.
    pub(crate) fn hoffman_feasible(net: &CapacitatedNetwork, value: &Rational) -> bool {
        let n = net.nodes.len();
        assert!(n <= 20, "oracle is exponential in node count");
        for mask in 0u32..(1 << n) {
            let inside = |x: usize| mask >> x & 1 == 1;
            let mut lower_in = Rational::zero();
            let mut upper_out = Rational::zero();
            let mut consider = |tail: usize, head: usize, lo: &Rational, hi: &Rational| {
                if !inside(tail) && inside(head) {
                    lower_in += lo;
                }
                if inside(tail) && !inside(head) {
                    upper_out += hi;
                }
            };
            for arc in &net.arcs {
                consider(arc.tail, arc.head, &arc.lower, &arc.upper);
            }
            consider(net.dest, net.origin, value, value);
            if lower_in > upper_out {
                return false;
            }
        }
        true
    }

    #[test]
    fn solver_matches_hoffman_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let extra = rng.gen_range(1..4usize);
            let mut net = CapacitatedNetwork::new("o", "d");
            for k in 0..extra {
                net.add_node(format!("m{k}"));
            }
            let nodes = net.nodes.len();
            let arcs = rng.gen_range(2..9usize);
            for _ in 0..arcs {
                let tail = rng.gen_range(0..nodes);
                let mut head = rng.gen_range(0..nodes);
                if head == tail {
                    head = (head + 1) % nodes;
                }
                let denom = rng.gen_range(1..6i64);
                let a = rng.gen_range(0..4i64);
                let b = rng.gen_range(0..4i64);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                net.add_arc(
                    tail,
                    head,
                    Rational::new(lo, denom),
                    Rational::new(hi, denom),
                );
            }
            let value = Rational::new(rng.gen_range(0..3), rng.gen_range(1..3));
            let outcome = feasible_flow(&net, &value).unwrap();
            assert_eq!(
                outcome.is_feasible(),
                hoffman_feasible(&net, &value),
                "solver and cut oracle disagree on {net:?} value {value}"
            );
            match outcome {
                FlowOutcome::Feasible(f) => {
                    assert!(f.is_feasible(&net));
                    assert_eq!(f.value(&net), value);
                }
                FlowOutcome::Infeasible(w) => {
                    assert!(w.lower_into_cut > w.upper_out_of_cut);
                }
            }
        }
    }

    #[test]
    fn decompose_already_integral() {
        let net = single_arc_net();
        let flow = Flow {
            values: vec![rat!(1)],
        };
        let parts = decompose_integral(&net, &flow).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].0, rat!(1));
        assert_eq!(parts[0].1, flow);
    }

    #[test]
    fn decompose_two_step_even_split() {
        // Two steps of (1/2, 1/2): proportional flow splits into the two
        // alternating seat orders with weight 1/2 each.
        let mut net = CapacitatedNetwork::new("o", "d");
        let u1 = net.add_node("u1");
        let u2 = net.add_node("u2");
        let w11 = net.add_node("w11");
        let w12 = net.add_node("w12");
        let w21 = net.add_node("w21");
        let w22 = net.add_node("w22");
        net.add_arc(0, u1, rat!(0), rat!(1));
        net.add_arc(0, u2, rat!(0), rat!(1));
        let a11 = net.add_arc(u1, w11, rat!(0), rat!(1));
        net.add_arc(u1, w12, rat!(0), rat!(1));
        net.add_arc(u2, w21, rat!(0), rat!(1));
        net.add_arc(u2, w22, rat!(0), rat!(1));
        net.add_arc(w11, w21, rat!(0), rat!(1));
        net.add_arc(w12, w22, rat!(0), rat!(1));
        net.add_arc(w21, 1, rat!(1), rat!(1));
        net.add_arc(w22, 1, rat!(1), rat!(1));
        let f = Flow {
            values: vec![
                rat!(1),
                rat!(1),
                rat!(1 / 2),
                rat!(1 / 2),
                rat!(1 / 2),
                rat!(1 / 2),
                rat!(1 / 2),
                rat!(1 / 2),
                rat!(1),
                rat!(1),
            ],
        };
        assert!(f.is_feasible(&net));
        let parts = decompose_integral(&net, &f).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, rat!(1 / 2));
        assert_eq!(parts[1].0, rat!(1 / 2));
        // The two components take opposite branches at the first step.
        assert_ne!(parts[0].1.values[a11], parts[1].1.values[a11]);
        recombines(&net, &f, &parts);
    }

    fn recombines(net: &CapacitatedNetwork, f: &Flow, parts: &[(Rational, Flow)]) {
        let total: Rational = parts.iter().map(|(w, _)| w.clone()).sum();
        assert_eq!(total, rat!(1));
        for (w, h) in parts {
            assert!(w.is_positive());
            assert!(h.is_integral());
            assert!(h.is_feasible(net));
        }
        for e in 0..net.arcs.len() {
            let mixed: Rational = parts.iter().map(|(w, h)| w * &h.values[e]).sum();
            assert_eq!(mixed, f.values[e], "arc {e} fails to recombine");
        }
    }

    #[test]
    fn decompose_random_fractional_flows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            // Random integral-bound network; derive a fractional feasible
            // flow by mixing integral flows found via the solver.
            let mut net = CapacitatedNetwork::new("o", "d");
            let m = net.add_node("m");
            let m2 = net.add_node("m2");
            for (tail, head) in [(0, m), (0, m2), (m, m2), (m, 1), (m2, 1)] {
                let hi = rng.gen_range(1..3i64);
                net.add_arc(tail, head, rat!(0), Rational::from_int(hi));
            }
            let value = Rational::from_int(rng.gen_range(1..3i64));
            let Some(base) = feasible_flow(&net, &value).unwrap().feasible() else {
                continue;
            };
            // Perturb along a cycle: mix with a second flow if any.
            let parts = decompose_integral(&net, &base).unwrap();
            recombines(&net, &base, &parts);
            assert!(parts.len() <= net.arcs.len() + 1);
        }
    }

    #[test]
    fn hypersimplex_singletons() {
        let parts = hypersimplex_decompose(&[rat!(3 / 5), rat!(3 / 10), rat!(1 / 10)], 1).unwrap();
        let mut weights: Vec<(BTreeSet<usize>, Rational)> =
            parts.into_iter().map(|(w, s)| (s, w)).collect();
        weights.sort();
        assert_eq!(
            weights,
            vec![
                (BTreeSet::from([0]), rat!(3 / 5)),
                (BTreeSet::from([1]), rat!(3 / 10)),
                (BTreeSet::from([2]), rat!(1 / 10)),
            ]
        );
    }

    #[test]
    fn hypersimplex_pairs() {
        let v = vec![rat!(1 / 2); 4];
        let parts = hypersimplex_decompose(&v, 2).unwrap();
        assert!(parts.len() <= 4);
        check_hypersimplex(&v, 2, &parts);
    }

    #[test]
    fn hypersimplex_integral_input() {
        let parts = hypersimplex_decompose(&[rat!(1), rat!(0), rat!(1)], 2).unwrap();
        assert_eq!(parts, vec![(rat!(1), BTreeSet::from([0, 2]))]);
    }

    #[test]
    fn hypersimplex_rejects_bad_input() {
        assert!(matches!(
            hypersimplex_decompose(&[rat!(3 / 2)], 1),
            Err(HypersimplexError::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            hypersimplex_decompose(&[rat!(1 / 2), rat!(1 / 4)], 1),
            Err(HypersimplexError::WrongSum { .. })
        ));
    }

    fn check_hypersimplex(v: &[Rational], house: u64, parts: &[(Rational, BTreeSet<usize>)]) {
        let total: Rational = parts.iter().map(|(w, _)| w.clone()).sum();
        assert_eq!(total, rat!(1));
        assert!(parts.len() <= v.len());
        for (w, s) in parts {
            assert!(w.is_positive());
            assert_eq!(s.len() as u64, house);
            for &i in s {
                assert!(v[i].is_positive(), "zero entry {i} selected");
            }
        }
        for i in 0..v.len() {
            let mixed: Rational = parts
                .iter()
                .filter(|(_, s)| s.contains(&i))
                .map(|(w, _)| w.clone())
                .sum();
            assert_eq!(mixed, v[i], "coordinate {i} fails to recombine");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn hypersimplex_recombines(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..7usize);
            let house = rng.gen_range(0..=n as u64);
            let q = rng.gen_range(1..30u64);
            // Random point of the hypersimplex with denominator q.
            let mut units = vec![0u64; n];
            let mut placed = 0;
            while placed < house * q {
                let i = rng.gen_range(0..n);
                if units[i] < q {
                    units[i] += 1;
                    placed += 1;
                }
            }
            let v: Vec<Rational> = units
                .into_iter()
                .map(|u| Rational::from_big(u.into(), q.into()))
                .collect();
            let parts = hypersimplex_decompose(&v, house).unwrap();
            check_hypersimplex(&v, house, &parts);
        }
    }
}
