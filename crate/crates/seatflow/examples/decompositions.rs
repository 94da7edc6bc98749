//! The exact decomposition toolbox: feasible flows with lower bounds,
//! convex decomposition of fractional flows into integral ones, and
//! hypersimplex decomposition of fractional vectors.
//!
//! ```text
//! cargo run --example decompositions
//! ```

use seatflow::flow::{
    decompose_integral, feasible_flow, hypersimplex_decompose, CapacitatedNetwork, FlowOutcome,
};
use seatflow::rational::Rational;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn main() {
    // Hypersimplex: a fractional vector summing to 2 becomes a lottery
    // over two-element subsets.
    let v = vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)];
    let parts = hypersimplex_decompose(&v, 2).unwrap();
    println!("(1/2, 1/2, 1/2, 1/2) with two seats:");
    for (w, s) in &parts {
        println!("  weight {w}: {s:?}");
    }

    // A network with a forced lower bound and its unique flow.
    let mut net = CapacitatedNetwork::new("o", "d");
    let mid = net.add_node("m");
    let top = net.add_node("t");
    net.add_arc(0, mid, rat(0, 1), rat(3, 4));
    net.add_arc(0, top, rat(0, 1), rat(1, 2));
    net.add_arc(mid, 1, rat(1, 2), rat(1, 1)); // lower bound 1/2
    net.add_arc(top, 1, rat(0, 1), rat(1, 2));
    println!();
    println!("flow of value 1 with a 1/2 lower bound on (m, d):");
    match feasible_flow(&net, &Rational::one()).unwrap() {
        FlowOutcome::Feasible(flow) => {
            for (arc, value) in net.arcs.iter().zip(&flow.values) {
                println!(
                    "  {} -> {}: {value} in [{}, {}]",
                    net.nodes[arc.tail], net.nodes[arc.head], arc.lower, arc.upper
                );
            }
        }
        FlowOutcome::Infeasible(w) => println!("  infeasible: {w}"),
    }

    // Asking for more than the cut allows yields a certificate.
    match feasible_flow(&net, &rat(3, 2)).unwrap() {
        FlowOutcome::Feasible(_) => println!("value 3/2 feasible"),
        FlowOutcome::Infeasible(w) => println!("value 3/2 infeasible: {w}"),
    }

    // Integral decomposition of a fractional flow on unit-capacity arcs.
    let mut net = CapacitatedNetwork::new("o", "d");
    let a = net.add_node("a");
    let b = net.add_node("b");
    net.add_arc(0, a, rat(0, 1), rat(1, 1));
    net.add_arc(0, b, rat(0, 1), rat(1, 1));
    net.add_arc(a, 1, rat(0, 1), rat(1, 1));
    net.add_arc(b, 1, rat(0, 1), rat(1, 1));
    let fractional = seatflow::flow::Flow {
        values: vec![rat(2, 3), rat(1, 3), rat(2, 3), rat(1, 3)],
    };
    let parts = decompose_integral(&net, &fractional).unwrap();
    println!();
    println!("fractional unit flow split into integral flows:");
    for (w, flow) in &parts {
        println!("  weight {w}: {:?}", flow.values);
    }
}
