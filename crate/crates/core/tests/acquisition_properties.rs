mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vibropref::acquisition::{
    expected_best, random_point, recommend, sample_candidates, select_pair, AcquisitionConfig, InformationGain,
    Strategy,
};
use vibropref::learner::{Learner, ModelConfig};
use vibropref::prefmodel::{fit, KernelConfig, LikelihoodConfig};
use vibropref::seeding;
use vibropref::simulator::{oracle_respond, GroundTruthUtility};

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

#[test]
fn ig_grid_matches_trapezoid_and_is_well_behaved() {
    for sigma in [1.7, 1.0] {
        let ig = InformationGain::new(sigma, 32);
        let mut worst = 0.0f64;
        for m in grid(-4.0, 4.0, 50) {
            assert_eq!(ig.score(m, 0.0), 0.0);
            for v in grid(0.0, 4.0, 50) {
                let value = ig.score(m, v);
                worst = worst.max((value - trapezoid_ig(m, v, sigma, 4096)).abs());
                assert!(value >= 0.0);
                assert!((value - ig.score(-m, v)).abs() <= 1e-9);
            }
        }
        assert!(worst < 1e-6, "sigma {sigma}: max deviation {worst:e}");
    }
}

#[test]
fn ig_non_decreasing_in_variance_at_zero_gap() {
    let ig = InformationGain::new(1.7, 32);
    let values: Vec<f64> = (0..=30).map(|i| ig.score(0.0, i as f64 * 0.1)).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
}

/// A learner driven for five rounds by a ground-truth oracle.
fn five_round_learner(seed: u64) -> Learner {
    let mut learner = Learner::new(ModelConfig::default(), seed).unwrap();
    let gt =
        GroundTruthUtility::random_mixture(&mut seeding::stream(seed, seeding::GROUND_TRUTH), 2, 0.2, 1.0).unwrap();
    for round in 1..=5 {
        let q = learner.query(round).unwrap();
        let (y, c) = oracle_respond(&gt, &q.a, &q.b, 1.0);
        learner.observe(vibropref::prefmodel::ComparisonRecord::new(q.a, q.b, y, c)).unwrap();
    }
    learner
}

#[test]
fn selected_pair_is_the_exhaustive_maximum() {
    for seed in 0..3 {
        let learner = five_round_learner(seed);
        let cfg = learner.config().acquisition;
        let candidates = sample_candidates(&mut seeding::round_stream(seed, 6), cfg.candidate_count);
        let selected = learner.query(6).unwrap();
        let ((i, j), best) = brute_force_best(learner.posterior(), &candidates, cfg.nominal_noise);
        assert!(
            selected.score >= best - 1e-9,
            "seed {seed}: selected {} < brute force {best} at ({i}, {j})",
            selected.score
        );
        assert!(candidates[i].same_as(&selected.a) && candidates[j].same_as(&selected.b));
    }
}

#[test]
fn eubo_selection_is_the_exhaustive_maximum() {
    let seed = 8;
    let learner = five_round_learner(seed);
    let post = learner.posterior();
    let cfg = AcquisitionConfig { strategy: Strategy::Eubo, ..Default::default() };
    let selected = select_pair(post, &cfg, &mut seeding::round_stream(seed, 6)).unwrap();
    let candidates = sample_candidates(&mut seeding::round_stream(seed, 6), cfg.candidate_count);
    let mut best = f64::NEG_INFINITY;
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            best = best.max(vibropref::acquisition::eubo_score(post, &candidates[i], &candidates[j]));
        }
    }
    assert!((selected.score - best).abs() < 1e-9, "{} vs {best}", selected.score);
}

#[test]
fn recommendation_survives_probe_audit() {
    for seed in 0..5 {
        let learner = five_round_learner(seed);
        let rec = learner.recommend().unwrap();
        let post = learner.posterior();
        let s = post.kernel_config().signal_variance.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let worst = (0..1000).map(|_| post.mean(&random_point(&mut rng)) - rec.posterior_mean).fold(f64::MIN, f64::max);
        assert!(worst <= 0.05 * s, "seed {seed}: probe beats recommendation by {worst}");
        for p in post.points() {
            assert!(post.mean(p) <= rec.posterior_mean);
        }
    }
}

#[test]
fn recommendation_is_seed_deterministic() {
    let learner = five_round_learner(4);
    let post = learner.posterior();
    let a = recommend(post, 4096, &mut seeding::stream(1, seeding::RECOMMENDATION)).unwrap();
    let b = recommend(post, 4096, &mut seeding::stream(1, seeding::RECOMMENDATION)).unwrap();
    assert!(a.point.same_as(&b.point));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eubo_dominates_the_larger_mean(mu_a in -5.0f64..5.0, mu_b in -5.0f64..5.0, v in 0.0f64..5.0) {
        prop_assert!(expected_best(mu_a, mu_b, v) >= mu_a.max(mu_b) - 1e-12);
    }

    #[test]
    fn eubo_of_fitted_pairs_dominates(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, 6, 10);
        let post = fit(&data, &KernelConfig::default(), &LikelihoodConfig::default()).unwrap();
        let a = random_point(&mut rng);
        let b = random_point(&mut rng);
        let score = vibropref::acquisition::eubo_score(&post, &a, &b);
        prop_assert!(score >= post.mean(&a).max(post.mean(&b)) - 1e-12);
    }
}
