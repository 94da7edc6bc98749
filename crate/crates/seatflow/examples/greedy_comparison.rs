//! Run the greedy online method and compare it against the one-shot
//! largest-remainder (Hamilton) rule on the same aggregated votes.
//!
//! ```text
//! cargo run --example greedy_comparison
//! ```

use seatflow::greedy::{hamilton_allocation, run_method, GreedyMethod};
use seatflow::instance::Instance;
use seatflow::rational::Rational;

fn main() {
    // Seven repetitions of the same three-party election, one seat each.
    let votes = vec![
        Rational::new(2, 3),
        Rational::new(29, 120),
        Rational::new(11, 120),
    ];
    let inst = Instance::repeated(votes.clone(), 7);
    let state = run_method(&mut GreedyMethod, &inst).expect("valid instance");
    println!("online greedy, step by step:");
    for t in 1..=state.t() {
        let (_, chosen) = state.step(t);
        println!("  step {t}: seat to party {:?}", chosen);
    }
    println!(
        "cumulative seats after 7 steps: {:?}",
        state.cumulative_seats()
    );
    println!("max deviation: {}", state.max_deviation());

    let hamilton = hamilton_allocation(&votes, 7).expect("positive votes");
    println!("one-shot Hamilton with 7 seats: {hamilton:?}");
    println!("(the online rule never withdraws a seat, Hamilton may)");

    // The five-party instance where greedy eventually leaves global quota.
    let five = Instance::repeated(
        vec![
            Rational::new(49, 150),
            Rational::new(49, 150),
            Rational::new(49, 150),
            Rational::new(1, 100),
            Rational::new(1, 100),
        ],
        43,
    );
    let state = run_method(&mut GreedyMethod, &five).expect("valid instance");
    println!();
    println!("five-party instance, 43 steps:");
    println!("  final seats: {:?}", state.cumulative_seats());
    println!("  global quota: {:?}", state.check_global_quota());
    println!("  max deviation: {}", state.max_deviation());
}
