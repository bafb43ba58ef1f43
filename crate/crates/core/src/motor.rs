//! Motor-controller firmware emulation: accepts `HAND_CLOSE` / `HAND_OPEN`,
//! drives five servos, samples five FSR channels each tick and halts any
//! finger whose pressure crosses the threshold while closing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DomainError;
use crate::hand::{HandState, CLOSED_ANGLE, FINGER_COUNT, OPEN_ANGLE};
use crate::sensors::AdcReading;
use crate::wire::{Command, Status, WireMessage};

pub const DEFAULT_PRESSURE_THRESHOLD: u16 = 600;

/// Servo pulse at 0°, microseconds.
pub const PWM_MIN_US: f64 = 500.0;
/// Servo pulse at 180°, microseconds.
pub const PWM_MAX_US: f64 = 2500.0;
pub const PWM_FRAME_HZ: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotorMode {
    IdleOpen,
    Closing,
    Closed,
    Opening,
}

impl MotorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MotorMode::IdleOpen => "IdleOpen",
            MotorMode::Closing => "Closing",
            MotorMode::Closed => "Closed",
            MotorMode::Opening => "Opening",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorConfig {
    /// ADC counts, `1..=1023`.
    pub pressure_threshold: u16,
    /// Halt every finger as soon as any one crosses the threshold.
    pub global_stop: bool,
    /// Emit one telemetry line every N ticks; 0 disables telemetry.
    pub telemetry_every: u32,
}

impl Default for MotorConfig {
    fn default() -> Self {
        Self {
            pressure_threshold: DEFAULT_PRESSURE_THRESHOLD,
            global_stop: false,
            telemetry_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotorError {
    #[error("motor controller cannot act on `{0}`; only commands are accepted")]
    NotACommand(WireMessage),
}

/// Per-servo output registers: target angle and whether the channel is
/// frozen at its present position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoOutputs {
    pub targets: [f64; FINGER_COUNT],
    pub halted: [bool; FINGER_COUNT],
}

impl ServoOutputs {
    /// Latches these outputs onto the plant's servos.
    pub fn apply(&self, hand: &mut HandState) {
        for ((servo, target), halted) in hand.servos.iter_mut().zip(self.targets).zip(self.halted) {
            servo.commanded_angle = target;
            servo.halted = halted;
        }
    }

    /// PWM pulse width per channel, microseconds.
    pub fn pulse_widths(&self) -> [f64; FINGER_COUNT] {
        self.targets
            .map(|a| pwm_pulse_width(a.clamp(OPEN_ANGLE, CLOSED_ANGLE)).expect("clamped"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorController {
    mode: MotorMode,
    config: MotorConfig,
    stopped: [bool; FINGER_COUNT],
    outputs: ServoOutputs,
    ticks: u64,
}

impl MotorController {
    pub fn new(config: MotorConfig) -> Self {
        Self {
            mode: MotorMode::IdleOpen,
            config,
            stopped: [false; FINGER_COUNT],
            outputs: ServoOutputs {
                targets: [OPEN_ANGLE; FINGER_COUNT],
                halted: [false; FINGER_COUNT],
            },
            ticks: 0,
        }
    }

    pub fn mode(&self) -> MotorMode {
        self.mode
    }

    pub fn config(&self) -> &MotorConfig {
        &self.config
    }

    /// Fingers halted by the pressure stop in the current closing episode.
    pub fn stopped(&self) -> [bool; FINGER_COUNT] {
        self.stopped
    }

    pub fn outputs(&self) -> &ServoOutputs {
        &self.outputs
    }

    /// Applies a command received over the link. Repeating the command that
    /// is already in effect changes nothing.
    pub fn handle_command(&mut self, msg: &WireMessage) -> Result<(), MotorError> {
        let WireMessage::Command(cmd) = msg else {
            return Err(MotorError::NotACommand(*msg));
        };
        match (cmd, self.mode) {
            (Command::HandClose, MotorMode::Closing | MotorMode::Closed) => {}
            (Command::HandOpen, MotorMode::Opening | MotorMode::IdleOpen) => {}
            (Command::HandClose, _) => {
                self.mode = MotorMode::Closing;
                self.stopped = [false; FINGER_COUNT];
                self.outputs.targets = [CLOSED_ANGLE; FINGER_COUNT];
                self.outputs.halted = [false; FINGER_COUNT];
            }
            (Command::HandOpen, _) => {
                self.mode = MotorMode::Opening;
                self.stopped = [false; FINGER_COUNT];
                self.outputs.targets = [OPEN_ANGLE; FINGER_COUNT];
                self.outputs.halted = [false; FINGER_COUNT];
            }
        }
        Ok(())
    }

    /// One control period: read the ADC channels, apply the pressure stop,
    /// detect completion. Returns the messages to send upstream.
    pub fn tick(&mut self, hand: &HandState, adc: &[AdcReading; FINGER_COUNT]) -> Vec<WireMessage> {
        let mut out = Vec::new();
        match self.mode {
            MotorMode::Closing => {
                let threshold = AdcReading::new(self.config.pressure_threshold).unwrap_or(AdcReading::MAX);
                let mut any_new = false;
                for (i, reading) in adc.iter().enumerate() {
                    if !self.stopped[i] && *reading >= threshold {
                        self.halt(i, hand);
                        any_new = true;
                    }
                }
                if any_new && self.config.global_stop {
                    for i in 0..FINGER_COUNT {
                        if !self.stopped[i] {
                            self.halt(i, hand);
                        }
                    }
                }
                let done = (0..FINGER_COUNT).all(|i| self.stopped[i] || hand.servos[i].current_angle >= CLOSED_ANGLE);
                if done {
                    self.mode = MotorMode::Closed;
                    out.push(Status::Closed.into());
                }
            }
            MotorMode::Opening => {
                if hand.servos.iter().all(|s| s.current_angle <= OPEN_ANGLE) {
                    self.mode = MotorMode::IdleOpen;
                    out.push(Status::Opened.into());
                }
            }
            MotorMode::IdleOpen | MotorMode::Closed => {}
        }
        self.ticks += 1;
        let every = u64::from(self.config.telemetry_every);
        if every > 0 && self.ticks.is_multiple_of(every) {
            out.push(WireMessage::Telemetry(*adc));
        }
        out
    }

    fn halt(&mut self, finger: usize, hand: &HandState) {
        self.stopped[finger] = true;
        self.outputs.halted[finger] = true;
        self.outputs.targets[finger] = hand.servos[finger].current_angle;
    }
}

/// Servo pulse width for an angle: 500 µs at 0° to 2500 µs at 180°,
/// in a 50 Hz frame.
pub fn pwm_pulse_width(angle: f64) -> Result<f64, DomainError> {
    if !(OPEN_ANGLE..=CLOSED_ANGLE).contains(&angle) {
        return Err(DomainError::AngleOutOfRange(angle));
    }
    Ok(PWM_MIN_US + angle * (PWM_MAX_US - PWM_MIN_US) / CLOSED_ANGLE)
}
