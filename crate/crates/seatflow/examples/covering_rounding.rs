//! Online dependent rounding for multi-stage hypergraph covering: the
//! near-feasible greedy mode and the min-cost randomized mode under
//! resource augmentation.
//!
//! ```text
//! cargo run --example covering_rounding
//! ```

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seatflow::mmhsc::{random_covering, round_near_feasible, DemandShape, MinCostRounder};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    // Near-feasible: exact capacities, bounded covering shortfall.
    let (ci, sol) = random_covering(&mut rng, 2, 3, 6, 10, DemandShape::Tight, false);
    let rounded = round_near_feasible(&ci, &sol).expect("valid binding solution");
    println!(
        "near-feasible: d = {}, n = {}, {} vertices, {} stages",
        ci.edge_size, ci.resources, ci.vertices, ci.horizon
    );
    println!(
        "  max covering shortfall {} (bound {})",
        rounded.max_covering_violation, rounded.violation_bound
    );
    let u = 0;
    println!("  vertex 0, stage totals vs capacities:");
    for t in 0..ci.horizon {
        let total: u64 = (0..ci.resources).map(|i| rounded.solution[u][i][t]).sum();
        assert_eq!(total, ci.capacity[u][t]);
    }
    println!("    equal at every stage");

    // Min-cost: three resources, scaled by alpha, zero covering violation.
    let (ci, sol) = random_covering(&mut rng, 2, 3, 4, 6, DemandShape::Unit, true);
    let rounder = MinCostRounder::new(&ci, &sol).expect("three binding resources");
    println!();
    println!("min-cost: augmentation factor alpha = {}", rounder.alpha());
    let expected = rounder.expected_cost(&ci).unwrap();
    println!(
        "  exact expected cost: {expected} ({:.4})",
        expected.to_f64()
    );
    let trials = 200u64;
    let mut mean = 0.0;
    for trial in 0..trials {
        let solution = rounder.sample(7, trial);
        assert!(ci.max_covering_violation(&solution).is_zero());
        assert!(rounder.capacity_within_augmented(&ci, &solution));
        mean += ci.total_cost(&solution).unwrap().to_f64();
    }
    mean /= trials as f64;
    println!("  mean sampled cost over {trials} trials: {mean:.4}");
    println!("  every sample covered all demands within augmented capacity");
}
