//! Vibrotactile parameter space and pulse-train rendering.
//!
//! A signal is described by four physical parameters: intensity, motor
//! balance, rhythm and grain. The learning engine works in the unit
//! hypercube; [`normalize`] and [`denormalize`] map between the two.
//! [`render_pulse_train`] compiles a parameter set into a device-agnostic
//! timeline of rectangular pulses for a dual-motor actuator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of signal parameters.
pub const DIM: usize = 4;

/// Default rendering length of one signal.
pub const DEFAULT_DURATION_MS: f64 = 3000.0;

/// Shortest pulse the actuators can produce reliably.
pub const MIN_PULSE_MS: f64 = 20.0;

/// Shortest silence required between two pulses.
pub const MIN_GAP_MS: f64 = 45.0;

/// Closed interval of admissible values for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    fn check(&self, value: f64) -> Result<f64> {
        if value.is_finite() && self.contains(value) {
            Ok(value)
        } else {
            Err(Error::OutOfRange { name: self.name, value, min: self.min, max: self.max })
        }
    }
}

pub const INTENSITY: ParamRange = ParamRange { name: "intensity", min: 0.20, max: 1.00 };
pub const BALANCE: ParamRange = ParamRange { name: "balance", min: 0.00, max: 1.00 };
pub const RHYTHM: ParamRange = ParamRange { name: "rhythm", min: 0.60, max: 4.00 };
pub const GRAIN: ParamRange = ParamRange { name: "grain", min: 0.10, max: 0.70 };

/// Ranges in coordinate order: intensity, balance, rhythm, grain.
pub const RANGES: [ParamRange; DIM] = [INTENSITY, BALANCE, RHYTHM, GRAIN];

/// Physical vibration parameters. Always within [`RANGES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SignalParams {
    /// Overall vibration magnitude.
    intensity: f64,
    /// Share of intensity sent to the left (low-frequency) motor.
    balance: f64,
    /// Pulse frequency in Hz.
    rhythm: f64,
    /// Duty cycle of each pulse.
    grain: f64,
}

#[derive(Deserialize)]
struct RawParams {
    intensity: f64,
    balance: f64,
    rhythm: f64,
    grain: f64,
}

impl TryFrom<RawParams> for SignalParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SignalParams::new(raw.intensity, raw.balance, raw.rhythm, raw.grain)
    }
}

impl SignalParams {
    pub fn new(intensity: f64, balance: f64, rhythm: f64, grain: f64) -> Result<Self> {
        Ok(Self {
            intensity: INTENSITY.check(intensity)?,
            balance: BALANCE.check(balance)?,
            rhythm: RHYTHM.check(rhythm)?,
            grain: GRAIN.check(grain)?,
        })
    }

    pub fn from_array(values: [f64; DIM]) -> Result<Self> {
        Self::new(values[0], values[1], values[2], values[3])
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn balance(&self) -> f64 {
        self.balance
    }

    pub fn rhythm(&self) -> f64 {
        self.rhythm
    }

    pub fn grain(&self) -> f64 {
        self.grain
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [self.intensity, self.balance, self.rhythm, self.grain]
    }
}

/// A point of the unit hypercube, the model's native coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; DIM]", into = "[f64; DIM]")]
pub struct NormalizedPoint([f64; DIM]);

impl TryFrom<[f64; DIM]> for NormalizedPoint {
    type Error = Error;

    fn try_from(coords: [f64; DIM]) -> Result<Self> {
        NormalizedPoint::new(coords)
    }
}

impl From<NormalizedPoint> for [f64; DIM] {
    fn from(p: NormalizedPoint) -> Self {
        p.0
    }
}

impl NormalizedPoint {
    pub fn new(coords: [f64; DIM]) -> Result<Self> {
        for (value, range) in coords.iter().zip(RANGES.iter()) {
            if !(value.is_finite() && (0.0..=1.0).contains(value)) {
                return Err(Error::OutOfRange { name: range.name, value: *value, min: 0.0, max: 1.0 });
            }
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64; DIM] {
        &self.0
    }

    pub fn squared_distance(&self, other: &NormalizedPoint) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &NormalizedPoint) -> f64 {
        self.squared_distance(other).sqrt()
    }

    /// Exact bitwise coordinate equality, used for deduplication.
    pub fn same_as(&self, other: &NormalizedPoint) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Length of the main diagonal of the unit hypercube.
pub fn hypercube_diagonal() -> f64 {
    (DIM as f64).sqrt()
}

pub fn normalize(params: &SignalParams) -> NormalizedPoint {
    let mut coords = [0.0; DIM];
    for ((c, v), r) in coords.iter_mut().zip(params.to_array()).zip(RANGES.iter()) {
        *c = ((v - r.min) / r.width()).clamp(0.0, 1.0);
    }
    NormalizedPoint(coords)
}

pub fn denormalize(point: &NormalizedPoint) -> SignalParams {
    let mut values = [0.0; DIM];
    for ((v, x), r) in values.iter_mut().zip(point.0).zip(RANGES.iter()) {
        *v = (r.min + x * r.width()).clamp(r.min, r.max);
    }
    SignalParams { intensity: values[0], balance: values[1], rhythm: values[2], grain: values[3] }
}

/// Left and right motor magnitudes, both in [0, 1].
pub fn motor_strengths(params: &SignalParams) -> (f64, f64) {
    let left = params.intensity * params.balance;
    let right = params.intensity * (1.0 - params.balance);
    (left, right)
}

/// Period and effective pulse duration in milliseconds.
///
/// Accepts values outside the hardware ranges so that the clamp branches can
/// be exercised; only a non-positive rhythm is rejected.
pub fn pulse_timing(rhythm_hz: f64, grain: f64) -> Result<(f64, f64)> {
    if !(rhythm_hz.is_finite() && rhythm_hz > 0.0) {
        return Err(Error::InvalidInput(format!("rhythm must be positive, got {rhythm_hz}")));
    }
    let period = 1000.0 / rhythm_hz;
    let duration = (period * grain).min(MIN_PULSE_MS.max(period - MIN_GAP_MS));
    Ok((period, duration))
}

/// One rectangular pulse of a rendered signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start_ms: f64,
    pub duration_ms: f64,
    pub left: f64,
    pub right: f64,
}

impl Pulse {
    pub fn end_ms(&self) -> f64 {
        self.start_ms + self.duration_ms
    }
}

/// Wire format consumed by the playback client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTimeline {
    pub total_ms: f64,
    pub pulses: Vec<Pulse>,
}

impl PulseTimeline {
    /// Checks ordering, minimum duration and gap, and the total bound.
    pub fn validate(&self) -> Result<()> {
        let last = self.pulses.len().saturating_sub(1);
        for (i, p) in self.pulses.iter().enumerate() {
            if p.end_ms() > self.total_ms + 1e-9 {
                return Err(Error::InvalidInput(format!("pulse {i} ends past total duration")));
            }
            if i < last && p.duration_ms < MIN_PULSE_MS - 1e-9 {
                return Err(Error::InvalidInput(format!("pulse {i} is shorter than {MIN_PULSE_MS} ms")));
            }
            if !(0.0..=1.0).contains(&p.left) || !(0.0..=1.0).contains(&p.right) {
                return Err(Error::InvalidInput(format!("pulse {i} magnitude outside [0, 1]")));
            }
            if let Some(next) = self.pulses.get(i + 1) {
                if next.start_ms - p.end_ms() < MIN_GAP_MS - 1e-9 {
                    return Err(Error::InvalidInput(format!("gap after pulse {i} is below {MIN_GAP_MS} ms")));
                }
            }
        }
        Ok(())
    }
}

/// Renders `params` as pulses at 0, P, 2P, ... until `total_ms`.
///
/// A pulse straddling the end is truncated rather than dropped.
pub fn render_pulse_train(params: &SignalParams, total_ms: f64) -> Result<PulseTimeline> {
    if !(total_ms.is_finite() && total_ms > 0.0) {
        return Err(Error::InvalidInput(format!("total duration must be positive, got {total_ms}")));
    }
    let (period, duration) = pulse_timing(params.rhythm, params.grain)?;
    let (left, right) = motor_strengths(params);
    let pulses = (0..)
        .map(|k| k as f64 * period)
        .take_while(|&start| start < total_ms)
        .map(|start| Pulse { start_ms: start, duration_ms: duration.min(total_ms - start), left, right })
        .collect();
    Ok(PulseTimeline { total_ms, pulses })
}
