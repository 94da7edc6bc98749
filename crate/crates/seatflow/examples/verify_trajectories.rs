//! Trajectory auditing: serialize a run to CSV, reload it, and check
//! consistency, local feasibility, quota, and deviation bounds — the same
//! checks the `seatflow verify` subcommand runs on files.
//!
//! ```text
//! cargo run --example verify_trajectories
//! ```

use seatflow::adversary::figure3_schedule;
use seatflow::greedy::GreedyMethod;
use seatflow::instance::ParsedTrajectory;
use seatflow::rational::Rational;

fn main() {
    let (state, _) = figure3_schedule(&mut GreedyMethod, 4).unwrap();
    let csv = state.to_csv_string();
    println!("trajectory CSV ({} rows):", csv.lines().count() - 1);
    for line in csv.lines().take(5) {
        println!("  {line}");
    }
    println!("  ...");

    let parsed = ParsedTrajectory::read(csv.as_bytes()).unwrap();
    println!("consistency issues: {}", parsed.check_consistency().len());
    let rebuilt = parsed.into_state().unwrap();
    let deviation = rebuilt.max_deviation();
    println!("max deviation: {deviation}");
    println!("global quota: {:?}", rebuilt.check_global_quota());
    println!(
        "within 3/2-proportionality: {}",
        deviation <= Rational::new(3, 2)
    );

    // Tampering with a cumulative column is caught immediately.
    let tampered = csv.replacen(",1,1,", ",1,3,", 1);
    let parsed = ParsedTrajectory::read(tampered.as_bytes()).unwrap();
    let issues = parsed.check_consistency();
    println!();
    println!("after tampering with one cumulative cell:");
    for issue in issues.iter().take(3) {
        println!("  {issue}");
    }
}
