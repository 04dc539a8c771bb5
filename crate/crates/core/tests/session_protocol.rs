use std::sync::Arc;

use proptest::prelude::*;
use vibropref::prefmodel::{Confidence, Preference};
use vibropref::seeding;
use vibropref::session::{
    from_json, load_session, save_session, to_json, Clock, PairTag, Phase, Progress, Session, SessionConfig, Side,
    StepClock, MAX_FAVORITES,
};
use vibropref::signal::{denormalize, SignalParams};
use vibropref::simulator::{oracle_respond, GroundTruthUtility};
use vibropref::Error;

fn clock() -> Arc<dyn Clock> {
    Arc::new(StepClock::new(1_700_000_000_000, 1500))
}

fn config(budget: usize, seed: u64) -> SessionConfig {
    SessionConfig { budget, seed: Some(seed), ..Default::default() }
}

fn conf(level: u8) -> Confidence {
    Confidence::new(level).unwrap()
}

/// Deterministic scripted participant: alternates sides, cycles confidence.
fn run_script(seed: u64, budget: usize) -> Session {
    let mut s = Session::create("scripted", config(budget, seed), clock()).unwrap();
    for i in 0..budget {
        let side = if i % 3 == 0 { Side::B } else { Side::A };
        s.submit_response(side, conf((i % 5) as u8 + 1), None).unwrap();
    }
    for (i, tag) in PairTag::ORDER.into_iter().enumerate() {
        s.submit_validation_response(tag, if i % 2 == 0 { Side::A } else { Side::B }).unwrap();
    }
    let favorites = [
        s.recommendation().unwrap().stimulus.params,
        SignalParams::new(0.6, 0.3, 1.5, 0.4).unwrap(),
        SignalParams::new(0.9, 0.8, 3.2, 0.2).unwrap(),
    ];
    for f in favorites {
        s.record_favorite(f).unwrap();
    }
    s
}

#[test]
fn scripted_sessions_produce_identical_logs() {
    let a = to_json(run_script(17, 6).state()).unwrap();
    let b = to_json(run_script(17, 6).state()).unwrap();
    assert_eq!(a, b);
    let c = to_json(run_script(18, 6).state()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn full_budget_session_reaches_validation() {
    let mut s = Session::create("full", config(40, 3), clock()).unwrap();
    for i in 0..40 {
        let progress = s.submit_response(if i % 2 == 0 { Side::A } else { Side::B }, conf(4), None).unwrap();
        if i < 39 {
            assert_eq!(progress, Progress::NextRound(i + 2));
        } else {
            assert_eq!(progress, Progress::PhaseChange(Phase::Validation));
        }
    }
    assert_eq!(s.phase(), Phase::Validation);
    assert!(s.recommendation().is_ok());
    assert_eq!(s.state().rounds.len(), 40);
}

#[test]
fn completed_log_contains_every_logged_quantity() {
    let s = run_script(5, 4);
    assert_eq!(s.phase(), Phase::Complete);
    let log: serde_json::Value = serde_json::from_str(&to_json(s.state()).unwrap()).unwrap();
    assert_eq!(log["schema_version"], 1);
    assert_eq!(log["seed"], 5);
    let rounds = log["rounds"].as_array().unwrap();
    assert_eq!(rounds.len(), 4);
    for r in rounds {
        for side in ["a", "b"] {
            for key in ["intensity", "balance", "rhythm", "grain"] {
                assert!(r[side]["params"][key].is_f64(), "round missing {side}.{key}: {r}");
            }
            assert_eq!(r[side]["point"].as_array().unwrap().len(), 4);
        }
        assert!(r["choice"] == "A" || r["choice"] == "B");
        assert!(r["y"] == 1 || r["y"] == -1);
        assert!((1..=5).contains(&r["confidence"].as_u64().unwrap()));
        assert!(r["information_gain"].as_f64().unwrap() >= 0.0);
        assert!(r["acquisition_score"].is_f64());
        assert!(r["answered_ms"].is_u64());
    }
    assert!(log["recommendation"]["stimulus"]["params"]["rhythm"].is_f64());
    assert!(log["recommendation"]["posterior_mean"].is_f64());
    let v = &log["validation"];
    assert_eq!(v["set"]["points"].as_array().unwrap().len(), 7);
    assert_eq!(v["set"]["pairs"].as_array().unwrap().len(), 4);
    assert_eq!(v["responses"].as_array().unwrap().len(), 4);
    assert!(v["accuracy"].is_f64());
    assert!(v["inconsistent"].is_boolean());
    let favorites = log["favorites"].as_array().unwrap();
    assert_eq!(favorites.len(), 3);
    for f in favorites {
        assert!(f["timestamp_ms"].is_u64());
        assert!(f["percentile"].is_f64());
    }
    assert!(log["annotations"].is_object());
}

#[test]
fn favorite_equal_to_recommendation_is_top_percentile() {
    let s = run_script(12, 5);
    assert_eq!(s.state().favorites[0].percentile, 100.0);
}

#[test]
fn out_of_range_favorite_is_rejected_by_signal_validation() {
    assert!(matches!(SignalParams::new(1.2, 0.5, 1.0, 0.3), Err(Error::OutOfRange { .. })));
    let json = r#"{"intensity":0.5,"balance":0.5,"rhythm":9.0,"grain":0.3}"#;
    assert!(serde_json::from_str::<SignalParams>(json).is_err());
}

#[test]
fn save_load_save_is_byte_identical_in_every_phase() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    let mut s = Session::create("persist", config(3, 44), clock()).unwrap();
    let check = |s: &Session| {
        save_session(s.state(), &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_session(&path).unwrap();
        save_session(&loaded, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap(), "phase {}", s.phase());
    };
    check(&s);
    for _ in 0..3 {
        s.submit_response(Side::A, conf(3), None).unwrap();
        check(&s);
    }
    for tag in PairTag::ORDER {
        s.submit_validation_response(tag, Side::B).unwrap();
        check(&s);
    }
    for _ in 0..MAX_FAVORITES {
        s.record_favorite(SignalParams::new(0.4, 0.4, 2.0, 0.5).unwrap()).unwrap();
        check(&s);
    }
}

#[test]
fn resumed_session_continues_identically() {
    let uninterrupted = run_script(23, 5);

    // Timestamps differ after each reload, so only clock-independent
    // outputs are compared.
    let mut s = Session::create("scripted", config(5, 23), clock()).unwrap();
    for i in 0..5 {
        let text = to_json(s.state()).unwrap();
        let pending = *s.pending().unwrap();
        s = Session::resume(from_json(&text).unwrap(), clock()).unwrap();
        assert_eq!(s.pending().unwrap(), &pending);
        let side = if i % 3 == 0 { Side::B } else { Side::A };
        s.submit_response(side, conf((i % 5) as u8 + 1), None).unwrap();
    }
    let a = uninterrupted.recommendation().unwrap();
    let b = s.recommendation().unwrap();
    assert!(a.stimulus.point.same_as(&b.stimulus.point));
    assert_eq!(a.posterior_mean, b.posterior_mean);
    assert_eq!(uninterrupted.state().validation.as_ref().unwrap().set, s.state().validation.as_ref().unwrap().set);
}

#[test]
fn reloaded_learner_recommends_identically() {
    let s = run_script(31, 6);
    let reloaded = Session::resume(from_json(&to_json(s.state()).unwrap()).unwrap(), clock()).unwrap();
    let original = s.learner().recommend().unwrap();
    let again = reloaded.learner().recommend().unwrap();
    assert!(original.point.same_as(&again.point));
    assert_eq!(original.posterior_mean, again.posterior_mean);
    assert!(again.point.same_as(&s.recommendation().unwrap().stimulus.point));
}

#[test]
fn refit_failure_leaves_session_untouched() {
    // A flat kernel with negligible jitter makes the gram matrix singular
    // as soon as two points exist.
    let mut cfg = config(5, 1);
    cfg.model.kernel.lengthscale = 1e200;
    cfg.model.kernel.gram_jitter = 1e-300;
    let mut s = Session::create("fragile", cfg, clock()).unwrap();
    let before = to_json(s.state()).unwrap();
    let err = s.submit_response(Side::A, conf(5), None).unwrap_err();
    assert!(matches!(err, Error::Round { round: 1, .. }), "{err}");
    assert_eq!(before, to_json(s.state()).unwrap());
    assert!(s.pending().is_ok());
}

#[test]
fn duplicate_and_out_of_order_submissions_are_rejected() {
    let mut s = Session::create("dup", config(1, 2), clock()).unwrap();
    s.submit_response(Side::A, conf(2), None).unwrap();
    assert!(matches!(s.submit_response(Side::A, conf(2), None), Err(Error::Protocol(_))));
    assert!(matches!(s.submit_validation_response(PairTag::AnchorMedium, Side::A), Err(Error::Protocol(_))));
    s.submit_validation_response(PairTag::AnchorEasy, Side::A).unwrap();
    assert!(matches!(s.submit_validation_response(PairTag::AnchorEasy, Side::A), Err(Error::Protocol(_))));
}

#[test]
fn oracle_respondent_agrees_on_anchor_easy_when_model_ranks_it_right() {
    for seed in 0..6 {
        let gt =
            GroundTruthUtility::random_mixture(&mut seeding::stream(seed, seeding::GROUND_TRUTH), 2, 0.2, 1.0).unwrap();
        let mut s = Session::create("oracle", config(12, seed), clock()).unwrap();
        while s.phase() == Phase::Learning {
            let q = *s.pending().unwrap();
            let (y, c) = oracle_respond(&gt, &q.a.point, &q.b.point, 1.0);
            s.submit_response(if y == Preference::First { Side::A } else { Side::B }, c, None).unwrap();
        }
        let (pair, a, b) = s.next_validation_pair().unwrap();
        assert_eq!(pair.tag, PairTag::AnchorEasy);
        let (y, _) = oracle_respond(&gt, &a.point, &b.point, 1.0);
        let side = if y == Preference::First { Side::A } else { Side::B };
        s.submit_validation_response(pair.tag, side).unwrap();
        let v = s.state().validation.as_ref().unwrap();
        let (best, worst) = (v.set.best, v.set.worst);
        let model_right = (v.set.means[best] - v.set.means[worst]).signum()
            == (gt.value(&v.set.points[best]) - gt.value(&v.set.points[worst])).signum();
        assert_eq!(v.responses[0].matches_model, model_right, "seed {seed}");
    }
}

#[derive(Debug, Clone)]
enum Op {
    Respond(bool, u8),
    Validate(usize, bool),
    Favorite([f64; 4]),
    Reload,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (any::<bool>(), 0u8..7).prop_map(|(a, c)| Op::Respond(a, c)),
        3 => (0usize..4, any::<bool>()).prop_map(|(t, a)| Op::Validate(t, a)),
        2 => proptest::array::uniform4(0.0f64..1.0).prop_map(Op::Favorite),
        1 => Just(Op::Reload),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random operation sequences never break phase order or the budget,
    /// and each operation succeeds exactly when the protocol allows it.
    #[test]
    fn protocol_random_walk(seed in 0u64..1000, budget in 1usize..4, ops in proptest::collection::vec(op(), 1..24)) {
        let mut s = Session::create("walk", config(budget, seed), clock()).unwrap();
        for op in ops {
            let phase = s.phase();
            let rounds = s.state().rounds.len();
            match op {
                Op::Respond(a, c) => {
                    let side = if a { Side::A } else { Side::B };
                    let result = Confidence::new(c).and_then(|c| s.submit_response(side, c, None));
                    let allowed = phase == Phase::Learning && (1..=5).contains(&c);
                    prop_assert_eq!(result.is_ok(), allowed);
                    if allowed {
                        prop_assert_eq!(s.state().rounds.len(), rounds + 1);
                    }
                }
                Op::Validate(t, a) => {
                    let tag = PairTag::ORDER[t];
                    let expected = s.state().validation.as_ref().and_then(|v| v.next_pair()).map(|p| p.tag);
                    let result = s.submit_validation_response(tag, if a { Side::A } else { Side::B });
                    prop_assert_eq!(result.is_ok(), phase == Phase::Validation && expected == Some(tag));
                }
                Op::Favorite(u) => {
                    let params = denormalize(&vibropref::signal::NormalizedPoint::new(u).unwrap());
                    let count = s.state().favorites.len();
                    let result = s.record_favorite(params);
                    prop_assert_eq!(result.is_ok(), phase == Phase::Adjustment);
                    if phase == Phase::Adjustment {
                        prop_assert_eq!(s.state().favorites.len(), count + 1);
                    }
                }
                Op::Reload => {
                    let text = to_json(s.state()).unwrap();
                    s = Session::resume(from_json(&text).unwrap(), clock()).unwrap();
                    prop_assert_eq!(to_json(s.state()).unwrap(), text);
                }
            }
            prop_assert!(s.phase() >= phase, "phase went backwards");
            prop_assert!(s.state().rounds.len() <= budget);
            prop_assert!(s.state().favorites.len() <= MAX_FAVORITES);
            prop_assert_eq!(s.state().pending.is_some(), s.phase() == Phase::Learning);
            s.state().check().unwrap();
        }
    }
}
