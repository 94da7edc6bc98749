//! Online dependent rounding for multidimensional multi-stage hypergraph
//! covering.
//!
//! A fractional solution assigns `y(u, i, t)` units of each resource `i` to
//! each vertex `u` per stage, meeting cumulative edge demands `D(i, t)` and
//! binding per-vertex capacities `C(u, t)`. Rounding happens online, stage
//! by stage: per vertex, the fractional parts of the stage form a vote
//! vector and an apportionment method picks which cells round up.
//!
//! Near-feasible mode runs the greedy method per vertex: capacities hold
//! with equality and cumulative coverage is short by at most `d(n-1)/2`
//! (at most `d-1` for three resources). Min-cost mode scales by the
//! resource-augmentation factor `alpha = max (d + D - 1)/D` and runs the
//! randomized three-resource method per vertex: coverage is never violated,
//! capacities stay within `ceil(alpha C)`, and expected cost is exactly the
//! cost of the scaled fractional solution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::greedy::greedy_step;
use crate::instance::{Instance, VoteVector};
use crate::randmethod::{BuildError, NetworkFlowMethod};
use crate::rational::Rational;

/// A `d`-uniform hypergraph covering instance with per-stage capacities and
/// cumulative demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringInstance {
    /// Hyperedge size `d`.
    pub edge_size: usize,
    /// Number of resource types `n`.
    pub resources: usize,
    /// Number of stages `T`.
    pub horizon: usize,
    /// Number of vertices.
    pub vertices: usize,
    pub hyperedges: Vec<Vec<usize>>,
    /// `capacity[u][t]`, a non-negative integer per vertex and stage.
    pub capacity: Vec<Vec<u64>>,
    /// `demand[i][t]`, non-decreasing in `t` per resource.
    pub demand: Vec<Vec<Rational>>,
    /// Optional linear cost coefficients `cost[u][i][t]`.
    pub cost: Option<Vec<Vec<Vec<Rational>>>>,
}

/// Fractional solution values `y[u][i][t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalSolution {
    pub y: Vec<Vec<Vec<Rational>>>,
}

/// Integral solution values `Y[u][i][t]`.
pub type IntegralSolution = Vec<Vec<Vec<u64>>>;

#[derive(Debug, thiserror::Error)]
pub enum MmhscError {
    #[error("instance shape error: {0}")]
    Shape(String),
    #[error("demand[{resource}][{t}] decreases")]
    DecreasingDemand { resource: usize, t: usize },
    #[error("y[{vertex}][{resource}][{t}] = {value} is negative")]
    NegativeValue {
        vertex: usize,
        resource: usize,
        t: usize,
        value: Rational,
    },
    #[error("covering constraint violated by the fractional input at edge {edge}, resource {resource}, stage {t}: {total} < {demand}")]
    FractionalCoverageShort {
        edge: usize,
        resource: usize,
        t: usize,
        total: Rational,
        demand: Rational,
    },
    #[error("capacity not binding at vertex {vertex}, stage {t}: allocation {total} vs capacity {capacity}")]
    NotBinding {
        vertex: usize,
        t: usize,
        total: Rational,
        capacity: u64,
    },
    #[error("min-cost rounding needs exactly 3 resources, got {resources}")]
    WrongResourceCount { resources: usize },
    #[error("demand[{resource}][{t}] is zero; the augmentation factor is undefined")]
    ZeroDemand { resource: usize, t: usize },
    #[error("scaled capacity alpha*C = {value} at vertex {vertex}, stage {t} is not integral")]
    NonIntegralScaledCapacity {
        vertex: usize,
        t: usize,
        value: Rational,
    },
    #[error("randomized method failed: {0}")]
    Method(#[from] BuildError),
    #[error("internal: {0}")]
    Internal(String),
}

impl CoveringInstance {
    /// Structural validation plus the covering and binding checks of a
    /// fractional solution against this instance.
    pub fn validate(&self, sol: &FractionalSolution) -> Result<(), MmhscError> {
        let shape = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(MmhscError::Shape(what.to_string()))
            }
        };
        shape(self.edge_size >= 1, "edge size must be at least 1")?;
        shape(!self.hyperedges.is_empty(), "no hyperedges")?;
        for (e, edge) in self.hyperedges.iter().enumerate() {
            shape(
                edge.len() == self.edge_size,
                &format!("hyperedge {e} has wrong size"),
            )?;
            shape(
                edge.iter().all(|&u| u < self.vertices),
                &format!("hyperedge {e} references a missing vertex"),
            )?;
        }
        shape(self.capacity.len() == self.vertices, "capacity rows")?;
        shape(
            self.capacity.iter().all(|row| row.len() == self.horizon),
            "capacity columns",
        )?;
        shape(self.demand.len() == self.resources, "demand rows")?;
        shape(
            self.demand.iter().all(|row| row.len() == self.horizon),
            "demand columns",
        )?;
        if let Some(cost) = &self.cost {
            shape(cost.len() == self.vertices, "cost rows")?;
            shape(
                cost.iter().all(|per_vertex| {
                    per_vertex.len() == self.resources
                        && per_vertex.iter().all(|row| row.len() == self.horizon)
                }),
                "cost shape",
            )?;
        }
        shape(sol.y.len() == self.vertices, "solution rows")?;
        shape(
            sol.y.iter().all(|per_vertex| {
                per_vertex.len() == self.resources
                    && per_vertex.iter().all(|row| row.len() == self.horizon)
            }),
            "solution shape",
        )?;
        for (i, row) in self.demand.iter().enumerate() {
            for t in 1..self.horizon {
                if row[t] < row[t - 1] {
                    return Err(MmhscError::DecreasingDemand { resource: i, t });
                }
            }
        }
        for (u, per_vertex) in sol.y.iter().enumerate() {
            for (i, row) in per_vertex.iter().enumerate() {
                for (t, value) in row.iter().enumerate() {
                    if value.is_negative() {
                        return Err(MmhscError::NegativeValue {
                            vertex: u,
                            resource: i,
                            t,
                            value: value.clone(),
                        });
                    }
                }
            }
        }
        // Covering: cumulative allocation on every edge meets the demand.
        for (e, edge) in self.hyperedges.iter().enumerate() {
            for i in 0..self.resources {
                let mut cum = Rational::zero();
                for t in 0..self.horizon {
                    for &u in edge {
                        cum += &sol.y[u][i][t];
                    }
                    if cum < self.demand[i][t] {
                        return Err(MmhscError::FractionalCoverageShort {
                            edge: e,
                            resource: i,
                            t,
                            total: cum,
                            demand: self.demand[i][t].clone(),
                        });
                    }
                }
            }
        }
        // Binding capacities: no spare capacity at any vertex and stage.
        for u in 0..self.vertices {
            for t in 0..self.horizon {
                let total: Rational = (0..self.resources).map(|i| sol.y[u][i][t].clone()).sum();
                if total != Rational::from(self.capacity[u][t]) {
                    return Err(MmhscError::NotBinding {
                        vertex: u,
                        t,
                        total,
                        capacity: self.capacity[u][t],
                    });
                }
            }
        }
        Ok(())
    }

    /// Cumulative coverage of `edge` for `resource` through stage `t`
    /// (0-based) under an integral solution.
    pub fn coverage(
        &self,
        solution: &IntegralSolution,
        edge: usize,
        resource: usize,
        t: usize,
    ) -> u64 {
        self.hyperedges[edge]
            .iter()
            .map(|&u| solution[u][resource][..=t].iter().sum::<u64>())
            .sum()
    }

    /// Worst cumulative covering shortfall `D(i,t) - coverage` over all
    /// edges, resources, and stages; zero when fully covered.
    pub fn max_covering_violation(&self, solution: &IntegralSolution) -> Rational {
        let mut worst = Rational::zero();
        for e in 0..self.hyperedges.len() {
            for i in 0..self.resources {
                for t in 0..self.horizon {
                    let have = Rational::from(self.coverage(solution, e, i, t));
                    let short = &self.demand[i][t] - &have;
                    if short > worst {
                        worst = short;
                    }
                }
            }
        }
        worst
    }

    pub fn total_cost(&self, solution: &IntegralSolution) -> Option<Rational> {
        let cost = self.cost.as_ref()?;
        let mut total = Rational::zero();
        for u in 0..self.vertices {
            for i in 0..self.resources {
                for t in 0..self.horizon {
                    total += &cost[u][i][t] * &Rational::from(solution[u][i][t]);
                }
            }
        }
        Some(total)
    }
}

/// Result of near-feasible rounding.
#[derive(Debug, Clone)]
pub struct NearFeasibleRounding {
    pub solution: IntegralSolution,
    /// Worst cumulative covering shortfall; guaranteed at most
    /// `d(n-1)/2`, and at most `d-1` when `n = 3`.
    pub max_covering_violation: Rational,
    pub violation_bound: Rational,
}

/// Rounds online with the greedy method per vertex: every capacity holds
/// with equality and cumulative coverage falls short by at most `d(n-1)/2`.
pub fn round_near_feasible(
    ci: &CoveringInstance,
    sol: &FractionalSolution,
) -> Result<NearFeasibleRounding, MmhscError> {
    ci.validate(sol)?;
    let mut solution: IntegralSolution = vec![vec![vec![0; ci.horizon]; ci.resources]; ci.vertices];
    for u in 0..ci.vertices {
        let mut cum_votes = vec![Rational::zero(); ci.resources];
        let mut cum_seats = vec![0u64; ci.resources];
        for t in 0..ci.horizon {
            let entries: Vec<Rational> =
                (0..ci.resources).map(|i| sol.y[u][i][t].fract()).collect();
            let votes = VoteVector::new(entries)
                .map_err(|e| MmhscError::Internal(format!("vertex {u} stage {t}: {e}")))?;
            let chosen = greedy_step(&cum_votes, &cum_seats, &votes)
                .map_err(|e| MmhscError::Internal(format!("vertex {u} stage {t}: {e}")))?;
            for i in 0..ci.resources {
                let floor = u64::try_from(sol.y[u][i][t].floor_int())
                    .expect("validated non-negative value");
                let up = u64::from(chosen.contains(&i));
                solution[u][i][t] = floor + up;
                cum_votes[i] += votes.entry(i);
                cum_seats[i] += up;
            }
        }
    }
    // Capacity equality is forced by the binding assumption; keep the audit
    // as a cheap runtime cross-check.
    for u in 0..ci.vertices {
        for t in 0..ci.horizon {
            let total: u64 = (0..ci.resources).map(|i| solution[u][i][t]).sum();
            debug_assert_eq!(total, ci.capacity[u][t]);
        }
    }
    let bound = Rational::from(ci.edge_size as u64) * Rational::new(ci.resources as i64 - 1, 2);
    Ok(NearFeasibleRounding {
        max_covering_violation: ci.max_covering_violation(&solution),
        solution,
        violation_bound: bound,
    })
}

/// Prepared min-cost rounder: the scaled three-resource instances and their
/// exact per-vertex randomized methods, ready to draw integral solutions.
#[derive(Debug)]
pub struct MinCostRounder {
    resources: usize,
    horizon: usize,
    vertices: usize,
    alpha: Rational,
    floors: Vec<Vec<Vec<u64>>>,
    methods: Vec<NetworkFlowMethod>,
    scaled_fractional: Vec<Vec<Vec<Rational>>>,
}

impl MinCostRounder {
    /// Computes the augmentation factor, scales the fractional solution,
    /// and builds the per-vertex randomized methods. Requires three
    /// resources, strictly positive demands, and integral scaled
    /// capacities.
    pub fn new(ci: &CoveringInstance, sol: &FractionalSolution) -> Result<Self, MmhscError> {
        ci.validate(sol)?;
        if ci.resources != 3 {
            return Err(MmhscError::WrongResourceCount {
                resources: ci.resources,
            });
        }
        let mut alpha = Rational::zero();
        for i in 0..ci.resources {
            for t in 0..ci.horizon {
                let demand = &ci.demand[i][t];
                if !demand.is_positive() {
                    return Err(MmhscError::ZeroDemand { resource: i, t });
                }
                let factor =
                    (Rational::from(ci.edge_size as u64) + demand - Rational::one()) / demand;
                if factor > alpha {
                    alpha = factor;
                }
            }
        }
        let mut floors = vec![vec![vec![0u64; ci.horizon]; ci.resources]; ci.vertices];
        let mut scaled = vec![vec![vec![Rational::zero(); ci.horizon]; ci.resources]; ci.vertices];
        let mut methods = Vec::with_capacity(ci.vertices);
        for u in 0..ci.vertices {
            for t in 0..ci.horizon {
                let cap = &alpha * &Rational::from(ci.capacity[u][t]);
                if !cap.is_integer() {
                    return Err(MmhscError::NonIntegralScaledCapacity {
                        vertex: u,
                        t,
                        value: cap,
                    });
                }
            }
            let mut rows = Vec::with_capacity(ci.horizon);
            for t in 0..ci.horizon {
                let mut row = Vec::with_capacity(ci.resources);
                for i in 0..ci.resources {
                    let value = &alpha * &sol.y[u][i][t];
                    floors[u][i][t] =
                        u64::try_from(value.floor_int()).expect("non-negative scaled value");
                    row.push(value.fract());
                    scaled[u][i][t] = value;
                }
                rows.push(row);
            }
            let inst = Instance::new(ci.resources, rows);
            methods.push(NetworkFlowMethod::run(&inst)?);
        }
        Ok(MinCostRounder {
            resources: ci.resources,
            horizon: ci.horizon,
            vertices: ci.vertices,
            alpha,
            floors,
            methods,
            scaled_fractional: scaled,
        })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// Exact expected cost of a sampled solution: each cell contributes its
    /// floor plus its fractional part in expectation.
    pub fn expected_cost(&self, ci: &CoveringInstance) -> Option<Rational> {
        let cost = ci.cost.as_ref()?;
        let mut total = Rational::zero();
        for u in 0..self.vertices {
            for i in 0..self.resources {
                for t in 0..self.horizon {
                    total += &cost[u][i][t] * &self.scaled_fractional[u][i][t];
                }
            }
        }
        Some(total)
    }

    /// Draws one integral solution; per-vertex trajectories use independent
    /// substreams of the seed, and identical `(seed, trial)` pairs give
    /// identical output.
    pub fn sample(&self, seed: u64, trial: u64) -> IntegralSolution {
        let mut solution = vec![vec![vec![0u64; self.horizon]; self.resources]; self.vertices];
        for u in 0..self.vertices {
            let stream = trial
                .wrapping_mul(self.vertices as u64)
                .wrapping_add(u as u64);
            let traj = self.methods[u].sample(seed, stream);
            for (t, (_, chosen)) in traj.steps().enumerate() {
                for i in 0..self.resources {
                    solution[u][i][t] = self.floors[u][i][t] + u64::from(chosen.contains(&i));
                }
            }
        }
        solution
    }

    /// Capacity audit under resource augmentation: per-stage totals must
    /// stay within `ceil(alpha * C)`.
    pub fn capacity_within_augmented(
        &self,
        ci: &CoveringInstance,
        solution: &IntegralSolution,
    ) -> bool {
        for u in 0..self.vertices {
            for t in 0..self.horizon {
                let total: u64 = (0..self.resources).map(|i| solution[u][i][t]).sum();
                let limit = (&self.alpha * &Rational::from(ci.capacity[u][t])).ceil();
                if Rational::from(total) > limit {
                    return false;
                }
            }
        }
        true
    }
}

/// File format for covering instances and their fractional solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringFile {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub vertices: usize,
    pub hyperedges: Vec<Vec<usize>>,
    #[serde(rename = "C")]
    pub capacity: Vec<Vec<u64>>,
    #[serde(rename = "D")]
    pub demand: Vec<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<Vec<Vec<Rational>>>>,
    pub y_star: Vec<Vec<Vec<Rational>>>,
}

impl CoveringFile {
    pub fn split(self) -> (CoveringInstance, FractionalSolution) {
        (
            CoveringInstance {
                edge_size: self.d,
                resources: self.n,
                horizon: self.horizon,
                vertices: self.vertices,
                hyperedges: self.hyperedges,
                capacity: self.capacity,
                demand: self.demand,
                cost: self.cost,
            },
            FractionalSolution { y: self.y_star },
        )
    }

    pub fn join(ci: CoveringInstance, sol: FractionalSolution) -> Self {
        CoveringFile {
            d: ci.edge_size,
            n: ci.resources,
            horizon: ci.horizon,
            vertices: ci.vertices,
            hyperedges: ci.hyperedges,
            capacity: ci.capacity,
            demand: ci.demand,
            cost: ci.cost,
            y_star: sol.y,
        }
    }
}

/// Demand profile for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandShape {
    /// `D(i, t)` equals the tight coverage minimum of the generated
    /// fractional solution.
    Tight,
    /// `D(i, t)` is the floor of the tight coverage minimum. Integral
    /// demands are what turn the strict three-resource deviation bound
    /// into a covering shortfall of at most `d - 1`.
    TightInteger,
    /// `D(i, t) = 1` for every resource and stage (requires the generator
    /// to place at least one unit per edge and stage).
    Unit,
    /// `D(i, t) = t`, growing one unit per stage.
    Staircase,
}

/// Random binding covering instance plus a feasible fractional solution.
/// With [`DemandShape::Unit`] or [`DemandShape::Staircase`] the demands are
/// integral and positive, as the min-cost rounder requires.
pub fn random_covering<R: Rng>(
    rng: &mut R,
    edge_size: usize,
    resources: usize,
    vertices: usize,
    horizon: usize,
    shape: DemandShape,
    with_cost: bool,
) -> (CoveringInstance, FractionalSolution) {
    assert!(edge_size >= 1 && vertices >= edge_size);
    let denom = rng.gen_range(2..8u64);
    let edges: usize = rng.gen_range(1..=3.min(vertices));
    let mut hyperedges = Vec::with_capacity(edges);
    for _ in 0..edges {
        let mut pool: Vec<usize> = (0..vertices).collect();
        let mut edge = Vec::with_capacity(edge_size);
        for _ in 0..edge_size {
            let k = rng.gen_range(0..pool.len());
            edge.push(pool.swap_remove(k));
        }
        edge.sort_unstable();
        hyperedges.push(edge);
    }
    // Base units guarantee one full unit per cell for the non-tight
    // demand shapes, keeping every edge covered stage by stage.
    let base = match shape {
        DemandShape::Tight | DemandShape::TightInteger => 0,
        DemandShape::Unit | DemandShape::Staircase => denom,
    };
    let mut y = vec![vec![vec![Rational::zero(); horizon]; resources]; vertices];
    let mut capacity = vec![vec![0u64; horizon]; vertices];
    for u in 0..vertices {
        for t in 0..horizon {
            let mut units: Vec<u64> = vec![base; resources];
            for _ in 0..rng.gen_range(0..2 * denom * resources as u64) {
                let i = rng.gen_range(0..resources);
                units[i] += 1;
            }
            // Pad to a multiple of the denominator so the capacity is a
            // non-negative integer and the solution is binding.
            let total: u64 = units.iter().sum();
            let short = (denom - total % denom) % denom;
            units[rng.gen_range(0..resources)] += short;
            for i in 0..resources {
                y[u][i][t] = Rational::from_big(units[i].into(), denom.into());
            }
            capacity[u][t] = units.iter().sum::<u64>() / denom;
        }
    }
    let tight = |floored: bool| -> Vec<Vec<Rational>> {
        (0..resources)
            .map(|i| {
                (0..horizon)
                    .map(|t| {
                        let min = hyperedges
                            .iter()
                            .map(|edge| {
                                edge.iter()
                                    .map(|&u| y[u][i][..=t].iter().sum::<Rational>())
                                    .sum::<Rational>()
                            })
                            .min()
                            .expect("at least one hyperedge");
                        if floored {
                            min.floor()
                        } else {
                            min
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let demand: Vec<Vec<Rational>> = match shape {
        DemandShape::Tight => tight(false),
        DemandShape::TightInteger => tight(true),
        DemandShape::Unit => vec![vec![Rational::one(); horizon]; resources],
        DemandShape::Staircase => (0..resources)
            .map(|_| (1..=horizon).map(|t| Rational::from(t as u64)).collect())
            .collect(),
    };
    let cost = with_cost.then(|| {
        (0..vertices)
            .map(|_| {
                (0..resources)
                    .map(|_| {
                        (0..horizon)
                            .map(|_| Rational::new(rng.gen_range(0..40), 8))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    });
    (
        CoveringInstance {
            edge_size,
            resources,
            horizon,
            vertices,
            hyperedges,
            capacity,
            demand,
            cost,
        },
        FractionalSolution { y },
    )
}
