//! Renders a stimulus into the pulse timeline the playback client consumes.
//!
//! ```text
//! cargo run -p vibropref --example render_signal
//! ```

use vibropref::signal::{motor_strengths, normalize, pulse_timing, render_pulse_train, SignalParams};

fn main() -> vibropref::Result<()> {
    let params = SignalParams::new(0.8, 0.3, 2.0, 0.4)?;
    let (left, right) = motor_strengths(&params);
    let (on, off) = pulse_timing(params.rhythm(), params.grain())?;
    println!("params      {params:?}");
    println!("normalized  {:?}", normalize(&params).coords());
    println!("motors      left {left:.3}  right {right:.3}");
    println!("pulse       on {on:.1} ms  off {off:.1} ms");

    let timeline = render_pulse_train(&params, 3000.0)?;
    timeline.validate()?;
    println!("{} pulses over {} ms", timeline.pulses.len(), timeline.total_ms);
    println!("{}", serde_json::to_string_pretty(&timeline).expect("timeline serializes"));
    Ok(())
}
