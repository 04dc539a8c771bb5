//! Runs InfoGain and EUBO against the same synthetic users and compares
//! convergence and how widely each strategy spreads its queries.
//!
//! ```text
//! cargo run --release -p vibropref --example strategy_comparison
//! ```

use vibropref::acquisition::Strategy;
use vibropref::simulator::{mean_pairwise_distance, run_batch, SimulationConfig};

fn main() -> vibropref::Result<()> {
    let seeds: Vec<u64> = (0..10).collect();
    for strategy in [Strategy::InfoGain, Strategy::Eubo, Strategy::Random] {
        let traces = run_batch(&SimulationConfig::default().with_strategy(strategy), &seeds)?;
        let n = traces.len() as f64;
        let mean = |f: &dyn Fn(&vibropref::simulator::SimulationTrace) -> f64| traces.iter().map(f).sum::<f64>() / n;
        println!("strategy {strategy}");
        println!("  mean rho(5)            {:.3}", mean(&|t| t.spearman_at(5).unwrap_or(0.0)));
        println!("  mean rho(40)           {:.3}", mean(&|t| t.final_spearman().unwrap_or(0.0)));
        println!("  mean IG rounds 1-10    {:.4}", mean(&|t| t.mean_information_gain(1, 10)));
        println!("  mean IG rounds 31-40   {:.4}", mean(&|t| t.mean_information_gain(31, 40)));
        println!("  held-out accuracy      {:.3}", mean(&|t| t.holdout_accuracy));
        println!("  rec. GT percentile     {:.1}", mean(&|t| t.recommendation_percentile));
        println!("  query spread           {:.3}", mean(&|t| mean_pairwise_distance(&t.queried_points())));
    }
    Ok(())
}
