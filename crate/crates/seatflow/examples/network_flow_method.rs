//! The randomized method for three parties: exact distribution tracking,
//! per-step networks, sampling, and the correlation counterexample.
//!
//! ```text
//! cargo run --example network_flow_method
//! ```

use seatflow::instance::Instance;
use seatflow::randmethod::{
    check_negative_correlation, conditional_seat_probability, seat_probability, NetworkFlowMethod,
};
use seatflow::rational::Rational;

fn rats(pairs: &[(i64, i64)]) -> Vec<Rational> {
    pairs.iter().map(|&(n, d)| Rational::new(n, d)).collect()
}

fn main() {
    let inst = Instance::new(
        3,
        vec![
            rats(&[(3, 5), (3, 10), (1, 10)]),
            rats(&[(1, 2), (1, 5), (3, 10)]),
        ],
    );
    let method = NetworkFlowMethod::run(&inst).expect("feasible for three parties");
    for (idx, record) in method.records().iter().enumerate() {
        println!("step {}:", idx + 1);
        println!("  exact marginals: {:?}", record.marginals);
        for (u, lottery) in &record.lotteries {
            println!("  from upper set {u:?}: z = {:?}", lottery.z);
            for (w, set) in &lottery.sets {
                println!("    seats {set:?} with probability {w}");
            }
        }
    }
    println!("final distribution over upper-quota sets:");
    for (u, p) in &method.final_distribution().pi {
        println!("  {u:?}: {p}");
    }

    println!();
    println!("five sampled trajectories (seed 7):");
    for trial in 0..5 {
        let traj = method.sample(7, trial);
        let seats: Vec<_> = traj.steps().map(|(_, chosen)| chosen.clone()).collect();
        println!(
            "  trial {trial}: {seats:?} (quota ok: {})",
            traj.check_global_quota().is_ok()
        );
    }

    // Negative correlation over time fails for three parties.
    let counterexample = Instance::new(
        3,
        vec![
            rats(&[(1, 2), (1, 2), (0, 1)]),
            rats(&[(0, 1), (3, 5), (2, 5)]),
            rats(&[(0, 1), (1, 5), (4, 5)]),
        ],
    );
    let method = NetworkFlowMethod::run(&counterexample).unwrap();
    let dist = method.trajectory_distribution();
    println!();
    println!("counterexample trajectory distribution:");
    for (traj, p) in &dist {
        println!("  {traj:?}: {p}");
    }
    let conditional = conditional_seat_probability(&dist, 1, 3, (1, 1, false)).unwrap();
    println!(
        "P[a^3_1 = 1 | a^1_1 = 0] = {conditional} < {} = P[a^3_1 = 1]",
        seat_probability(&dist, 1, 3)
    );
    let check = check_negative_correlation(&dist, 1, 3, 1).unwrap();
    println!(
        "negative correlation satisfied: {} (conditional {}, unconditional {})",
        check.satisfied(),
        check.conditional,
        check.unconditional
    );
}
