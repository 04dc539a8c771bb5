//! Picks the next comparison with each acquisition strategy from the same
//! candidate set.
//!
//! ```text
//! cargo run --release -p vibropref --example select_query
//! ```

use vibropref::acquisition::{select_pair, AcquisitionConfig, Strategy};
use vibropref::prefmodel::{fit, ComparisonRecord, Confidence, Dataset, KernelConfig, LikelihoodConfig, Preference};
use vibropref::seeding;
use vibropref::signal::{denormalize, NormalizedPoint};

fn main() -> vibropref::Result<()> {
    let a = NormalizedPoint::new([0.2, 0.4, 0.3, 0.6])?;
    let b = NormalizedPoint::new([0.7, 0.6, 0.6, 0.3])?;
    let data = Dataset::from_records([ComparisonRecord::new(a, b, Preference::Second, Confidence::new(4)?)]);
    let post = fit(&data, &KernelConfig::default(), &LikelihoodConfig::default())?;

    for strategy in [Strategy::InfoGain, Strategy::Eubo, Strategy::Random] {
        let cfg = AcquisitionConfig { strategy, ..Default::default() };
        let q = select_pair(&post, &cfg, &mut seeding::round_stream(7, 2))?;
        println!("{strategy}: score {:.4}, IG {:.4} nats", q.score, q.information_gain);
        println!("  A {:?}", denormalize(&q.a));
        println!("  B {:?}", denormalize(&q.b));
    }
    Ok(())
}
