//! With the whole vote sequence known in advance, a lottery over
//! deterministic global-quota methods meets every vote share exactly in
//! expectation, for any number of parties.
//!
//! ```text
//! cargo run --example offline_lottery
//! ```

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seatflow::greedy::random_instance;
use seatflow::instance::Instance;
use seatflow::offline::offline_lottery;
use seatflow::rational::Rational;

fn main() {
    let inst = Instance::repeated(vec![Rational::new(1, 2), Rational::new(1, 2)], 2);
    let lottery = offline_lottery(&inst).expect("valid instance");
    println!("two steps of (1/2, 1/2):");
    for component in &lottery.components {
        println!("  weight {}: {:?}", component.weight, component.sets);
    }

    // A five-party instance, which no online method can keep within quota.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let inst = random_instance(&mut rng, 5, 6, 12);
    let lottery = offline_lottery(&inst).expect("valid instance");
    println!();
    println!(
        "random 5-party instance over {} steps: {} lottery components",
        inst.horizon(),
        lottery.components.len()
    );
    for (idx, component) in lottery.components.iter().enumerate() {
        let traj = lottery.component_trajectory(&inst, idx).unwrap();
        println!(
            "  component {idx}: weight {}, quota ok: {}",
            component.weight,
            traj.check_global_quota().is_ok()
        );
    }
    println!("per-step marginals equal the vote shares exactly:");
    for t in 1..=inst.horizon() {
        let marginals: Vec<Rational> = (0..inst.n).map(|i| lottery.marginal(t, i)).collect();
        assert_eq!(marginals, inst.votes[t - 1]);
    }
    println!("  verified for all {} steps", inst.horizon());
}
