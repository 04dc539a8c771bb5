//! Loads a saved session log, refits the model from its rounds and checks
//! the logged recommendation is reproduced.
//!
//! ```text
//! cargo run --release -p vibropref --example session_protocol -- /tmp/s.json
//! cargo run --release -p vibropref --example replay_log -- /tmp/s.json
//! ```

use std::sync::Arc;

use vibropref::session::{load_session, Session, SystemClock};

fn main() -> vibropref::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "session.json".into());
    let state = load_session(path.as_ref())?;
    println!("session {} seed {} phase {} with {} rounds", state.id, state.seed, state.phase, state.rounds.len());
    let logged = state.recommendation;
    let session = Session::resume(state, Arc::new(SystemClock))?;
    let again = session.learner().recommend()?;
    println!("refit recommendation {:?} mean {:.4}", again.point.coords(), again.posterior_mean);
    match logged {
        Some(rec) => println!("matches log: {}", rec.stimulus.point.same_as(&again.point)),
        None => println!("no recommendation logged yet"),
    }
    Ok(())
}
