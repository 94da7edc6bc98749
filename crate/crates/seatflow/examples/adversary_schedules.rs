//! Drive online methods toward their worst-case deviation: the fixed
//! reference splitter schedules and the adaptive booster.
//!
//! ```text
//! cargo run --example adversary_schedules
//! ```

use seatflow::adversary::{booster, figure3_schedule, AdversaryConfig};
use seatflow::greedy::{GreedyMethod, MaxSurplusMethod};
use seatflow::instance::TrajectoryState;
use seatflow::rational::Rational;

fn main() {
    for n in [3usize, 4] {
        let (state, _) = figure3_schedule(&mut GreedyMethod, n).expect("supported size");
        println!(
            "fixed schedule, {n} parties, {} steps: max deviation {}",
            state.t(),
            state.max_deviation()
        );
    }

    println!();
    let epsilon = Rational::new(1, 20);
    for n in [2usize, 3, 4] {
        let cfg = AdversaryConfig {
            parties: (0..n).collect(),
            epsilon: epsilon.clone(),
            max_steps: Some(100_000),
        };
        let goal = Rational::new(n as i64 - 1, 2) - &epsilon;
        let out =
            booster(&mut GreedyMethod, TrajectoryState::new(n), &cfg).expect("booster terminates");
        println!(
            "booster vs greedy, {n} parties: {} steps, party {} at |s| = {} (goal {goal})",
            out.state.t(),
            out.witness,
            out.achieved
        );
    }

    // The guarantee is method independent; a deliberately bad method fares
    // no better.
    let cfg = AdversaryConfig {
        parties: vec![0, 1, 2],
        epsilon: Rational::new(1, 20),
        max_steps: Some(100_000),
    };
    let out = booster(&mut MaxSurplusMethod, TrajectoryState::new(3), &cfg).unwrap();
    println!();
    println!(
        "booster vs max-surplus, 3 parties: deviation {} in {} steps",
        out.achieved,
        out.state.t()
    );
    println!("transcript of the first three steps:");
    for entry in out.transcript.iter().take(3) {
        println!(
            "  step {} [{}] pair {:?}: votes {:?} -> seat {:?}",
            entry.step, entry.rule, entry.pair, entry.vote_vector, entry.allocation
        );
    }
}
