//! Walks a session through learning, validation and adjustment with a
//! scripted participant, then saves the log.
//!
//! ```text
//! cargo run --release -p vibropref --example session_protocol -- session.json
//! ```

use std::sync::Arc;

use vibropref::prefmodel::Confidence;
use vibropref::session::{save_session, Progress, Session, SessionConfig, Side, SystemClock};
use vibropref::signal::SignalParams;

fn main() -> vibropref::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "session.json".into());
    let cfg = SessionConfig { budget: 12, seed: Some(42), ..Default::default() };
    let mut session = Session::create("demo", cfg, Arc::new(SystemClock))?;

    // This participant likes strong signals.
    while let Ok(q) = session.pending().cloned() {
        let side = if q.a.params.intensity() >= q.b.params.intensity() { Side::A } else { Side::B };
        match session.submit_response(side, Confidence::new(4)?, None)? {
            Progress::NextRound(n) => println!("round {} answered {side:?}, next {n}", q.round),
            Progress::PhaseChange(p) => println!("round {} answered {side:?}, entering {p}", q.round),
        }
    }

    let rec = session.recommendation()?;
    println!("recommended {:?} (mean {:.3})", rec.stimulus.params, rec.posterior_mean);

    while let Ok((pair, a, b)) = session.next_validation_pair() {
        let side = if a.params.intensity() >= b.params.intensity() { Side::A } else { Side::B };
        session.submit_validation_response(pair.tag, side)?;
    }
    let validation = session.state().validation.as_ref().expect("validation ran");
    println!("validation accuracy {:?}, inconsistent {:?}", validation.accuracy, validation.inconsistent);

    for intensity in [0.9, 0.95, 1.0] {
        let fav = session.record_favorite(SignalParams::new(intensity, 0.5, 2.0, 0.3)?)?;
        println!("favorite at model percentile {:.1}", fav.percentile);
    }
    println!("phase {}", session.phase());
    save_session(session.state(), out.as_ref())?;
    println!("log written to {out}");
    Ok(())
}
