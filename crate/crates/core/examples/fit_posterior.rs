//! Fits the preference posterior to a handful of graded comparisons and
//! prints the MAP utilities with their marginal uncertainty.
//!
//! ```text
//! cargo run -p vibropref --example fit_posterior
//! ```

use vibropref::prefmodel::{fit, ComparisonRecord, Confidence, Dataset, KernelConfig, LikelihoodConfig, Preference};
use vibropref::signal::NormalizedPoint;

fn main() -> vibropref::Result<()> {
    let p = |c: [f64; 4]| NormalizedPoint::new(c);
    let (low, mid, high) = (p([0.1, 0.5, 0.2, 0.5])?, p([0.5, 0.5, 0.5, 0.5])?, p([0.9, 0.5, 0.8, 0.5])?);
    let data = Dataset::from_records([
        ComparisonRecord::new(mid, low, Preference::First, Confidence::new(5)?),
        ComparisonRecord::new(high, mid, Preference::First, Confidence::new(3)?),
        ComparisonRecord::new(low, high, Preference::Second, Confidence::new(1)?),
    ]);
    let post = fit(&data, &KernelConfig::default(), &LikelihoodConfig::default())?;
    for (name, x) in [("low", low), ("mid", mid), ("high", high)] {
        let (mean, var) = post.predict(&x);
        println!("{name:>5}  mean {mean:+.3}  sd {:.3}", var.sqrt());
    }
    let (gap, gap_var) = post.predict_pair(&high, &low);
    println!("f(high) - f(low): {gap:+.3} ± {:.3}", gap_var.sqrt());
    Ok(())
}
