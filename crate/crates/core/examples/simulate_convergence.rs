//! Runs one simulated participant and prints how the model's ranking of a
//! fixed grid converges towards the hidden utility.
//!
//! ```text
//! cargo run --release -p vibropref --example simulate_convergence -- 3
//! ```

use vibropref::simulator::{run_simulation, SimulationConfig};

fn main() -> vibropref::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let trace = run_simulation(&SimulationConfig::default().with_seed(seed))?;
    println!("round   rho     IG (nats)");
    for r in trace.rounds.iter().filter(|r| r.round % 5 == 0 || r.round == 1) {
        println!("{:>5}   {:+.3}  {:.4}", r.round, r.spearman.unwrap_or(f64::NAN), r.information_gain);
    }
    println!("IG by decile {:.4?}", trace.ig_by_decile());
    println!("held-out accuracy {:.3}", trace.holdout_accuracy);
    println!("recommendation at GT percentile {:.1}", trace.recommendation_percentile);
    Ok(())
}
