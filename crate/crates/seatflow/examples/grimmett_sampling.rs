//! Systematic sampling for two parties: one shared uniform offset turns
//! the cumulative shares into a quota-respecting integral allocation, and
//! integrating the offset recovers the shares exactly.
//!
//! ```text
//! cargo run --example grimmett_sampling
//! ```

use std::collections::BTreeSet;

use seatflow::instance::Instance;
use seatflow::randmethod::{grimmett_lambda_from_seed, grimmett_sample};
use seatflow::rational::Rational;

fn main() {
    let inst = Instance::repeated(vec![Rational::new(1, 3), Rational::new(2, 3)], 6);
    for lambda in [Rational::zero(), Rational::new(1, 2), Rational::new(5, 6)] {
        let traj = grimmett_sample(&inst, &lambda).unwrap();
        let seats: Vec<usize> = traj
            .steps()
            .map(|(_, chosen)| *chosen.iter().next().unwrap())
            .collect();
        println!(
            "offset {lambda}: seats to {seats:?}, quota ok: {}",
            traj.check_global_quota().is_ok()
        );
    }

    // Integrate over the finitely many offset intervals: the weighted seat
    // indicator equals the vote share at every step.
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
    println!();
    println!("offset intervals and their step-1..6 allocations for party 0:");
    let mut marginals = vec![Rational::zero(); inst.horizon()];
    for window in points.windows(2) {
        let measure = &window[1] - &window[0];
        let traj = grimmett_sample(&inst, &window[0]).unwrap();
        let pattern: Vec<u8> = traj
            .steps()
            .map(|(_, chosen)| u8::from(chosen.contains(&0)))
            .collect();
        println!(
            "  [{}, {}): measure {measure}, pattern {pattern:?}",
            window[0], window[1]
        );
        for (t, bit) in pattern.iter().enumerate() {
            if *bit == 1 {
                marginals[t] += &measure;
            }
        }
    }
    println!("per-step marginals for party 0: {marginals:?}");
    assert!(marginals.iter().all(|m| *m == Rational::new(1, 3)));

    // Seed-derived offsets give reproducible trajectories.
    let lambda = grimmett_lambda_from_seed(42, 0);
    let one = grimmett_sample(&inst, &lambda).unwrap();
    let two = grimmett_sample(&inst, &lambda).unwrap();
    assert_eq!(one, two);
    println!();
    println!("seed 42 offset: {lambda}");
}
